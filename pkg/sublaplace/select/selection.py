""" Parameter subsets with provenance, and their plain-text export format """

import enum
import logging
import pathlib
import numpy as np
from dataclasses import dataclass, field


class SelectionError(ValueError):
    "Subset request or subset contents are invalid"


class SelectionMethod(enum.Enum):
    GRADIENT_LAPLACE = enum.auto()
    GREEDY_LAPLACE = enum.auto()
    SUBNET_DIAGONAL = enum.auto()
    LAST_K = enum.auto()
    NEURAL_LINEAR = enum.auto()
    EXPLICIT = enum.auto()

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def from_label(cls, label: str) -> "SelectionMethod":
        try:
            return cls[label.strip().upper().replace("-", "_")]
        except KeyError:
            raise SelectionError(f"unknown selection method {label!r}")


@dataclass(frozen=True)
class SubsetSelection:
    """Ordered set of distinct parameter indices. Only Greedy-Laplace keeps a non-ascending (selection) order"""

    indices: tuple[int, ...]
    method: SelectionMethod = SelectionMethod.EXPLICIT
    k: int = field(default=-1)
    pool_policy: str | None = None

    def __post_init__(self):
        indices = tuple(int(i) for i in np.asarray(self.indices, dtype=np.int64).reshape(-1))
        if len(indices) == 0:
            raise SelectionError("a subset needs at least one index")
        if len(set(indices)) != len(indices):
            raise SelectionError("subset contains duplicate indices")
        if min(indices) < 0:
            raise SelectionError("subset contains negative indices")
        k = len(indices) if self.k == -1 else self.k
        if k != len(indices):
            raise SelectionError(f"k={k} does not match {len(indices)} indices")
        object.__setattr__(self, "indices", indices)
        object.__setattr__(self, "k", k)

    @property
    def sorted_indices(self) -> tuple[int, ...]:
        return tuple(sorted(self.indices))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.indices, dtype=np.int64)

    def validate(self, p: int) -> np.ndarray:
        """Index array after checking every index is below p"""
        idx = self.as_array()
        if idx.max() >= p:
            raise SelectionError(f"subset index {int(idx.max())} out of range for p={p}")
        return idx


def export_selection(
    selection: SubsetSelection, path: str | pathlib.Path, seed: int | None = None
) -> pathlib.Path:
    """One global index per line, after a header comment recording method, k, seed and pool policy"""
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        f.write(
            f"# method={selection.method.label} k={selection.k} seed={seed} pool={selection.pool_policy or 'none'}\n"
        )
        for index in selection.indices:
            f.write(f"{index}\n")
    logging.info(f"{selection.method.label} selection with k={selection.k} exported to {path}")
    return path


def load_selection(path: str | pathlib.Path) -> SubsetSelection:
    header: dict[str, str] = {}
    indices = []
    with open(path, "r") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for item in line.lstrip("#").split():
                    key, _, value = item.partition("=")
                    header[key] = value
                continue
            indices.append(int(line))
    method = SelectionMethod.from_label(header.get("method", "explicit"))
    pool = header.get("pool")
    return SubsetSelection(tuple(indices), method, len(indices), None if pool in (None, "none") else pool)
