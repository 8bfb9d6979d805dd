"""Exception types shared across the package."""


class InputError(ValueError):
    """Bad or inconsistent user input: missing/unreadable files, dimension
    mismatches, out-of-range configuration values.

    The CLI maps this (and OSError) to exit code 1; any other exception is an
    internal failure and exits with code 2.
    """
