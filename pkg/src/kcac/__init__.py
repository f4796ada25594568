"""Compound rewards, task similarity, a kinematic block world, curricula and SAC in numpy."""

from __future__ import annotations

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigurationError,
    InvalidActionError,
    InvalidGeometryError,
    KcacError,
    TransferError,
    UndefinedSimilarityError,
    UnknownPresetError,
)

__all__ = [
    "__version__",
    "ConfigurationError",
    "InvalidActionError",
    "InvalidGeometryError",
    "KcacError",
    "TransferError",
    "UndefinedSimilarityError",
    "UnknownPresetError",
]
