"""Exception types shared across the package."""


class ForumsimError(Exception):
    """Base class for all errors raised by forumsim."""


class InputError(ForumsimError):
    """Invalid user input: bad files, bad arguments, broken referential links."""


class ConsistencyError(ForumsimError):
    """Internal invariant violated; indicates a bug or corrupted intermediate data."""
