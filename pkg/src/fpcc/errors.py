"""Exception types shared across the package."""


class FpccError(Exception):
    """Base class for all library errors."""


class InvalidInputError(FpccError, ValueError):
    """An argument violates a documented precondition."""


class OutOfRangeError(InvalidInputError):
    """A value falls outside its permitted range."""


class ParseError(FpccError):
    """Malformed content in one of the text formats.

    ``line`` is 1-based; line 0 marks a file-level problem such as a
    missing header.
    """

    def __init__(self, path, line, message):
        self.path = str(path)
        self.line = int(line)
        self.message = message
        super().__init__(f"{self.path}:{self.line}: {message}")
