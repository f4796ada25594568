"""Task similarity from the structural presence of reward components."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, UndefinedSimilarityError
from .rewards import CompoundReward, RewardVector, reward_to_vector

__all__ = [
    "RewardVector",
    "SimilarityMatrix",
    "cosine_similarity",
    "task_similarity",
    "similarity_matrix",
]


def cosine_similarity(a: RewardVector, b: RewardVector) -> float:
    va, vb = a.as_array(), b.as_array()
    na2, nb2 = float(va @ va), float(vb @ vb)
    if na2 == 0.0 or nb2 == 0.0:
        raise UndefinedSimilarityError("cosine similarity is undefined for an all-zero reward vector")
    # sqrt of the product keeps self-similarity exactly 1 for integer flag counts
    return float(va @ vb) / math.sqrt(na2 * nb2)


def task_similarity(a: CompoundReward, b: CompoundReward) -> float:
    return cosine_similarity(reward_to_vector(a), reward_to_vector(b))


@dataclass(frozen=True, eq=False)
class SimilarityMatrix:
    task_names: tuple[str, ...]
    values: np.ndarray

    def __getitem__(self, pair: tuple[str, str]) -> float:
        i, j = (self.task_names.index(n) for n in pair)
        return float(self.values[i, j])

    def to_csv(self, precision: int | None = None) -> str:
        """Header row of names, then one row per task led by its name."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["task", *self.task_names])
        for name, row in zip(self.task_names, self.values):
            cells = [repr(float(v)) if precision is None else f"{v:.{precision}f}" for v in row]
            w.writerow([name, *cells])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> SimilarityMatrix:
        rows = list(csv.reader(io.StringIO(text)))
        names = tuple(rows[0][1:])
        if [r[0] for r in rows[1:]] != list(names):
            raise ValueError("row labels do not match the header")
        return cls(names, np.array([[float(x) for x in r[1:]] for r in rows[1:]]))


def similarity_matrix(tasks: Sequence[tuple[str, CompoundReward]]) -> SimilarityMatrix:
    if not tasks:
        raise ConfigurationError("similarity_matrix needs at least one task")
    names = [n for n, _ in tasks]
    dupes = sorted({n for n in names if names.count(n) > 1})
    if dupes:
        raise ConfigurationError(f"duplicate task names: {dupes}")
    vecs = [reward_to_vector(r) for _, r in tasks]
    n = len(vecs)
    values = np.eye(n)
    for i in range(n):
        values[i, i] = cosine_similarity(vecs[i], vecs[i])
        for j in range(i + 1, n):
            values[i, j] = values[j, i] = cosine_similarity(vecs[i], vecs[j])
    return SimilarityMatrix(tuple(names), values)
