"""Exception hierarchy shared by every kcac module."""

from __future__ import annotations


class KcacError(Exception):
    """Base class for all errors raised by kcac."""


class InvalidGeometryError(KcacError, ValueError):
    pass


class ConfigurationError(KcacError, ValueError):
    """Raised for malformed reward, environment, schedule or experiment configs.

    ``path`` carries the dotted location of the offending field when the error
    comes from config parsing.
    """

    def __init__(self, message: str, path: str | None = None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class UndefinedSimilarityError(KcacError, ValueError):
    pass


class InvalidActionError(KcacError, ValueError):
    pass


class TransferError(KcacError):
    """Parameter blob incompatible with the receiving learner."""


class UnknownPresetError(ConfigurationError, KeyError):
    def __str__(self) -> str:  # KeyError would repr() the message
        return self.args[0] if self.args else ""
