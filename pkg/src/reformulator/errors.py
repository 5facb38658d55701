"""Error taxonomy shared by the library and the CLI exit-code mapping."""


class UsageError(Exception):
    """Bad command line or bad config file. CLI exit code 1."""
    exit_code = 1


class DataError(Exception):
    """Malformed or missing input data / checkpoint. CLI exit code 2."""
    exit_code = 2


class NumericError(Exception):
    """Non-finite loss or failed gradient check. CLI exit code 3."""
    exit_code = 3
