class BoxlabError(Exception):
    """Base class for all library errors."""


class InputError(BoxlabError, ValueError):
    pass


class GroupError(InputError):
    """A table failed the group axioms, or generators do not generate."""


class CapExceeded(BoxlabError):
    """A construction would exceed its configured size cap."""


class VerificationError(BoxlabError):
    """A checked inequality or invariant failed; carries the counterexample."""

    def __init__(self, message: str, witness=None) -> None:
        super().__init__(message)
        self.witness = witness
