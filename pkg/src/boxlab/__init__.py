"""Finite quotients of free products of finite groups and the coarse geometry of their box spaces."""

__version__ = "0.1.0"

from .errors import BoxlabError, CapExceeded, GroupError, InputError, VerificationError
from .groups import FiniteGroupTable, FreeProduct, GeneratingSet
from .graphs import LabeledMultigraph

__all__ = [
    "BoxlabError", "CapExceeded", "GroupError", "InputError", "VerificationError",
    "FiniteGroupTable", "FreeProduct", "GeneratingSet", "LabeledMultigraph", "__version__",
]
