"""Exception hierarchy shared by all modules.

Exit-code mapping used by the CLI: InputError -> 2, CapExceeded -> 3.
"""


class AbsorbError(Exception):
    """Base class for all library errors."""


class InputError(AbsorbError):
    """Malformed or out-of-contract input (CLI exit code 2)."""


class ParseError(InputError):
    """A document failed to parse; message carries the location."""


class NotSubuniverseError(InputError):
    """The candidate subset B is not closed under the polymorphisms."""


class CapExceeded(AbsorbError):
    """A configured resource cap was exceeded (CLI exit code 3)."""


class SimplifyError(AbsorbError):
    """A formula cannot be brought to simplified form while preserving
    its evaluation."""
