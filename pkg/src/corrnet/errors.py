"""Exception hierarchy shared by all corrnet modules."""


class CorrnetError(Exception):
    """Base class; ``module`` names the pipeline stage that raised."""

    module = "corrnet"


class ParseError(CorrnetError, ValueError):
    """Malformed input file."""

    module = "ingest"

    def __init__(self, message, path=None, line=None):
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)
        self.path = path
        self.line = line


class DataError(CorrnetError, ValueError):
    """Input parsed fine but violates a data invariant."""

    module = "ingest"


class ComputationError(CorrnetError, ArithmeticError):
    """A quantity cannot be computed from otherwise valid input."""

    module = "ingest"
