"""Shared domain types: datasets, model terms, term sets and selection settings.

Predictor indices are 0-based throughout the package, so ``Term.main(0)``
refers to the first column of ``x`` (``X1`` in the usual 1-based notation).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple, Optional, Sequence

import numpy as np


class SodaError(Exception):
    """Base class for errors raised by this package."""


class DataError(SodaError, ValueError):
    """Input data violates a structural requirement."""


class DimensionMismatch(SodaError, ValueError):
    pass


class IndexOutOfRange(SodaError, IndexError):
    pass


MAIN = 0
INTERACTION = 1


class Term(NamedTuple):
    """A main effect ``X_j`` or a second-order term ``X_i * X_j`` (i <= j).

    Tuple ordering (kind, i, j) puts every main effect before every
    interaction, which is what gives term sets a deterministic order.
    """

    kind: int
    i: int
    j: int

    @classmethod
    def main(cls, j: int) -> "Term":
        j = int(j)
        if j < 0:
            raise IndexOutOfRange(f"negative predictor index {j}")
        return cls(MAIN, j, j)

    @classmethod
    def pair(cls, i: int, j: int) -> "Term":
        i, j = int(i), int(j)
        if i < 0 or j < 0:
            raise IndexOutOfRange(f"negative predictor index in ({i}, {j})")
        if i > j:
            i, j = j, i
        return cls(INTERACTION, i, j)

    @property
    def is_main(self) -> bool:
        return self.kind == MAIN

    @property
    def is_interaction(self) -> bool:
        return self.kind == INTERACTION

    @property
    def predictors(self) -> tuple[int, ...]:
        if self.kind == MAIN or self.i == self.j:
            return (self.j,)
        return (self.i, self.j)

    def label(self, names: Optional[Sequence[str]] = None) -> str:
        def nm(k):
            return names[k] if names is not None else f"X{k + 1}"

        if self.kind == MAIN:
            return nm(self.j)
        if self.i == self.j:
            return f"{nm(self.i)}^2"
        return f"{nm(self.i)}*{nm(self.j)}"

    def __repr__(self) -> str:
        if self.kind == MAIN:
            return f"Main({self.j})"
        return f"Int({self.i},{self.j})"

    def to_list(self) -> list:
        return ["main", self.j] if self.kind == MAIN else ["int", self.i, self.j]

    @classmethod
    def from_list(cls, item: Sequence) -> "Term":
        if item[0] == "main":
            return cls.main(item[1])
        if item[0] == "int":
            return cls.pair(item[1], item[2])
        raise ValueError(f"unknown term kind {item[0]!r}")


class TermSet:
    """Immutable, sorted, duplicate-free collection of :class:`Term`."""

    __slots__ = ("_terms", "_members")

    def __init__(self, terms: Iterable[Term] = ()):
        members = frozenset(terms)
        self._members = members
        self._terms = tuple(sorted(members))

    @classmethod
    def of_mains(cls, indices: Iterable[int]) -> "TermSet":
        return cls(Term.main(j) for j in indices)

    def __iter__(self) -> Iterator[Term]:
        return iter(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def __contains__(self, term) -> bool:
        return term in self._members

    def __getitem__(self, k):
        return self._terms[k]

    def __eq__(self, other) -> bool:
        if isinstance(other, TermSet):
            return self._members == other._members
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self._members)

    def __repr__(self) -> str:
        return "TermSet({" + ", ".join(map(repr, self._terms)) + "})"

    def __or__(self, other: Iterable[Term]) -> "TermSet":
        return self.union(other)

    def union(self, other: Iterable[Term]) -> "TermSet":
        return TermSet(self._members.union(other))

    def add(self, term: Term) -> "TermSet":
        return TermSet(self._members | {term})

    def remove(self, term: Term) -> "TermSet":
        return TermSet(self._members - {term})

    def difference(self, other: Iterable[Term]) -> "TermSet":
        return TermSet(self._members.difference(other))

    @property
    def terms(self) -> tuple[Term, ...]:
        return self._terms

    @property
    def mains(self) -> "TermSet":
        return TermSet(t for t in self._terms if t.is_main)

    @property
    def interactions(self) -> "TermSet":
        return TermSet(t for t in self._terms if t.is_interaction)

    def max_index(self) -> int:
        return max((t.j for t in self._terms), default=-1)

    def labels(self, names: Optional[Sequence[str]] = None) -> list[str]:
        return [t.label(names) for t in self._terms]


def induced_term_set(preliminary_mains: Iterable[Term], c: Iterable[int]) -> TermSet:
    """Terms induced by a predictor set: the preliminary mains, every main
    effect in ``c`` and every pair (including squares) drawn from ``c``."""
    c = sorted(set(int(j) for j in c))
    terms = set(preliminary_mains)
    for a, i in enumerate(c):
        terms.add(Term.main(i))
        for j in c[a:]:
            terms.add(Term.pair(i, j))
    return TermSet(terms)


def predictors_of(s: Iterable[Term]) -> frozenset[int]:
    """Indices of every predictor that appears in some term of ``s``."""
    out: set[int] = set()
    for t in s:
        out.update(t.predictors)
    return frozenset(out)


@dataclass(frozen=True, eq=False)
class Dataset:
    """An ``n x p`` predictor matrix with a categorical or continuous response.

    Categorical responses are stored as integer codes ``0..K-1``; the last
    class (``K-1``) is the logistic baseline.  ``class_labels`` keeps the
    user-facing label of each code.
    """

    x: np.ndarray
    y: np.ndarray
    column_names: tuple[str, ...] = ()
    categorical: bool = True
    class_labels: tuple = ()

    def __post_init__(self):
        x = np.ascontiguousarray(np.asarray(self.x, dtype=float))
        if x.ndim != 2:
            raise DataError("x must be a 2-D array")
        n, p = x.shape
        if p < 1 or n < 1:
            raise DataError("x must have at least one row and one column")
        if not np.all(np.isfinite(x)):
            bad = np.argwhere(~np.isfinite(x))[0]
            raise DataError(f"non-finite predictor value at row {bad[0]}, column {bad[1]}")
        y = np.asarray(self.y)
        if y.shape != (n,):
            raise DimensionMismatch(f"response has shape {y.shape}, expected ({n},)")
        names = tuple(self.column_names) or tuple(f"X{j + 1}" for j in range(p))
        if len(names) != p:
            raise DimensionMismatch(f"{len(names)} column names for {p} columns")

        if self.categorical:
            y = y.astype(np.int64)
            if y.min() < 0:
                raise DataError("class codes must be non-negative")
            k = len(self.class_labels) or int(y.max()) + 1
            if y.max() >= k:
                raise DataError(f"class code {int(y.max())} outside 0..{k - 1}")
            counts = np.bincount(y, minlength=k)
            if k < 2:
                raise DataError("a categorical response needs at least two classes")
            if np.any(counts == 0):
                missing = np.flatnonzero(counts == 0).tolist()
                raise DataError(f"classes {missing} have no observations")
            if n < k + 1:
                raise DataError(f"n={n} is too small for K={k} classes")
            labels = tuple(self.class_labels) or tuple(range(1, k + 1))
            if len(labels) != k:
                raise DimensionMismatch(f"{len(labels)} class labels for K={k}")
        else:
            y = y.astype(float)
            if not np.all(np.isfinite(y)):
                raise DataError(f"non-finite response at row {int(np.argmax(~np.isfinite(y)))}")
            labels = ()
        x.setflags(write=False)
        y = np.ascontiguousarray(y)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "column_names", names)
        object.__setattr__(self, "class_labels", labels)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.class_labels) if self.categorical else 0

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows)
        y = self.y[rows]
        if self.categorical:
            # A class missing from the subset raises DataError.
            return Dataset(self.x[rows], y, self.column_names, True, self.class_labels)
        return Dataset(self.x[rows], y, self.column_names, False)

    def with_labels(self, codes: np.ndarray, class_labels: Sequence = ()) -> "Dataset":
        return Dataset(self.x, codes, self.column_names, True, tuple(class_labels))


@dataclass(frozen=True)
class NewtonOptions:
    tol: float = 1e-8
    max_iter: int = 100
    max_halvings: int = 30
    ridge: float = 1e-8
    coef_cap: float = 30.0


@dataclass(frozen=True)
class SelectionConfig:
    """Settings for the stepwise selector.

    ``max_forward=None`` resolves to ``min(n // 4, 50)`` at run time.
    With ``per_class_penalty`` the EBIC size of a term set is
    ``|S| * (K - 1)``, the number of free coefficients; otherwise it is
    ``|S|``.  The two agree for two classes.
    ``separation`` decides what a fit does when a standardised coefficient
    reaches ``newton.coef_cap``: ``"raise"`` rejects the candidate,
    ``"boundary"`` scores it with the log-likelihood reached at the cap.
    ``n_jobs`` only controls how many candidate fits run concurrently; it
    never changes the result.
    """

    gamma: float = 0.5
    p_f: int = 3
    max_forward: Optional[int] = None
    continue_stage1: bool = True
    continue_stage2: bool = True
    newton: NewtonOptions = field(default_factory=NewtonOptions)
    n_jobs: int = 1
    per_class_penalty: bool = True
    separation: str = "raise"

    def __post_init__(self):
        if self.separation not in ("raise", "boundary"):
            raise ValueError(f"separation must be 'raise' or 'boundary', got {self.separation!r}")
        if not np.isfinite(self.gamma) or self.gamma < 0:
            raise ValueError(f"gamma must be a finite value >= 0, got {self.gamma}")
        if int(self.p_f) != self.p_f or self.p_f < 0:
            raise ValueError(f"p_f must be a non-negative integer, got {self.p_f}")
        if self.max_forward is not None and self.max_forward < 1:
            raise ValueError("max_forward must be positive")
        if self.n_jobs < 1:
            raise ValueError("n_jobs must be positive")

    def resolved_max_forward(self, n: int) -> int:
        if self.max_forward is not None:
            return int(self.max_forward)
        return max(1, min(n // 4, 50))
