"""Fitness-level partitions, population vectors and transition-bound matrices.

Storage convention for every bound matrix: rows are source level sets
``A_0..A_m`` and columns are the target sets ``H_1..H_m`` (the column for
``H_0``, which is identically one, is never stored).
"""
from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

MONOTONE_TOL = 1e-12


class Kind(str, enum.Enum):
    LOWER = "lower"
    UPPER = "upper"
    EXACT = "exact"


class NotMonotoneError(ValueError):
    """Raised when a routine needs a monotone matrix and does not get one."""

    def __init__(self, violations, what="matrix"):
        self.violations = list(violations)
        i, j = self.violations[0]
        super().__init__(
            f"{what} is not monotone: entry({i - 1},{j}) > entry({i},{j})"
            f" ({len(self.violations)} violation(s) in total)"
        )


def all_genotypes(n: int) -> np.ndarray:
    """Every bitstring of length ``n`` as a ``(2**n, n)`` uint8 array."""
    if n > 24:
        raise ValueError("exhaustive enumeration limited to n <= 24")
    codes = np.arange(2 ** n, dtype=np.int64)
    return ((codes[:, None] >> np.arange(n)) & 1).astype(np.uint8)


# ---------------------------------------------------------------------------
# Level partition
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LevelPartition:
    """Thresholds ``phi_0 < ... < phi_m`` and a fitness function.

    ``classify(g)`` returns ``i`` with ``phi_i <= phi(g) < phi_{i+1}`` (level
    ``m`` for ``phi(g) >= phi_m``). ``nonempty`` records which level sets are
    known to be non-empty, or ``None`` when this was not established.
    """

    thresholds: tuple
    fitness: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    nonempty: Optional[tuple] = None

    def __post_init__(self):
        th = tuple(float(x) for x in self.thresholds)
        if len(th) < 2:
            raise ValueError("need at least two thresholds (m >= 1)")
        if any(b <= a for a, b in zip(th, th[1:])):
            raise ValueError("thresholds must be strictly increasing")
        object.__setattr__(self, "thresholds", th)
        if self.nonempty is not None:
            ne = tuple(bool(x) for x in self.nonempty)
            if len(ne) != len(th):
                raise ValueError("nonempty flags must have m+1 entries")
            object.__setattr__(self, "nonempty", ne)

    @property
    def m(self) -> int:
        return len(self.thresholds) - 1

    @property
    def all_nonempty(self) -> bool:
        return self.nonempty is not None and all(self.nonempty)

    def classify(self, genotypes) -> np.ndarray:
        f = np.asarray(self.fitness(np.asarray(genotypes, dtype=np.uint8)), dtype=float)
        lev = np.searchsorted(np.asarray(self.thresholds), f, side="right") - 1
        if np.any(lev < 0):
            raise ValueError("fitness below phi_0; phi_0 must be the minimum fitness")
        return lev

    def in_h(self, genotypes, j: int) -> np.ndarray:
        return self.classify(genotypes) >= j

    def with_enumerated_nonempty(self, n: int) -> "LevelPartition":
        levels = self.classify(all_genotypes(n))
        flags = tuple(bool(np.any(levels == i)) for i in range(self.m + 1))
        return LevelPartition(self.thresholds, self.fitness, flags)


# ---------------------------------------------------------------------------
# Population vector
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PopulationVector:
    """Proportions ``z_1..z_m`` of a population lying in ``H_1..H_m``.

    ``lam`` is the population size for an exact vector and ``None`` for an
    expected (real-valued) one.
    """

    values: np.ndarray
    lam: Optional[int] = None

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(-1)
        if v.size == 0:
            raise ValueError("population vector needs m >= 1 components")
        if np.any(v < -1e-12) or np.any(v > 1 + 1e-12):
            raise ValueError("components must lie in [0, 1]")
        if np.any(np.diff(v) > 1e-12):
            raise ValueError("components must be non-increasing")
        if self.lam is not None:
            if self.lam < 1:
                raise ValueError("lam must be positive")
            scaled = v * self.lam
            if np.any(np.abs(scaled - np.round(scaled)) > 1e-9):
                raise ValueError(f"components are not multiples of 1/{self.lam}")
        v = np.clip(v, 0.0, 1.0)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def m(self) -> int:
        return self.values.size

    @property
    def exact(self) -> bool:
        return self.lam is not None

    @classmethod
    def zeros(cls, m: int) -> "PopulationVector":
        return cls(np.zeros(m))

    @classmethod
    def from_levels(cls, levels, m: int) -> "PopulationVector":
        """Exact vector of a population given the level index of each member."""
        levels = np.asarray(levels).reshape(-1)
        z = (levels[:, None] >= np.arange(1, m + 1)).mean(axis=0)
        return cls(z, lam=levels.size)

    @classmethod
    def from_level_distribution(cls, p) -> "PopulationVector":
        """Cumulative tail ``z_j = sum_{k>=j} p_k`` of a distribution over levels 0..m."""
        p = np.asarray(p, dtype=float)
        return cls(np.cumsum(p[::-1])[::-1][1:])

    def level_distribution(self) -> np.ndarray:
        """``p_i = z_i - z_{i+1}`` with ``z_0 = 1`` and ``z_{m+1} = 0``."""
        z = np.concatenate(([1.0], self.values, [0.0]))
        return np.clip(z[:-1] - z[1:], 0.0, None)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["i\\j"] + [str(j) for j in range(1, self.m + 1)])
        w.writerow(["z"] + [repr(float(x)) for x in self.values])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, lam: Optional[int] = None) -> "PopulationVector":
        rows = list(csv.reader(io.StringIO(text)))
        return cls([float(x) for x in rows[1][1:]], lam=lam)


def selection_probability(z, s: int, j: int) -> float:
    """Probability that ``s``-tournament selection returns a member of ``H_j``."""
    if s < 1:
        raise ValueError("tournament size must be >= 1")
    zv = z.values if isinstance(z, PopulationVector) else np.asarray(z, dtype=float)
    if not 1 <= j <= zv.size:
        raise ValueError("level index out of range 1..m")
    return 1.0 - (1.0 - float(zv[j - 1])) ** s


def selection_probability_level(z, s: int, i: int) -> float:
    """Probability that the tournament winner lies in ``A_i``, ``i = 0..m``."""
    if s < 1:
        raise ValueError("tournament size must be >= 1")
    zv = z.values if isinstance(z, PopulationVector) else np.asarray(z, dtype=float)
    ext = np.concatenate(([1.0], zv, [0.0]))
    if not 0 <= i <= zv.size:
        raise ValueError("level index out of range 0..m")
    return (1.0 - ext[i + 1]) ** s - (1.0 - ext[i]) ** s


# ---------------------------------------------------------------------------
# Bound matrices
# ---------------------------------------------------------------------------


def _is_rational(x) -> bool:
    return isinstance(x, (Rational, Fraction)) and not isinstance(x, bool)


@dataclass(frozen=True, eq=False)
class BoundMatrix:
    """An ``(m+1) x m`` matrix of cumulative transition bounds.

    ``entries[i, j-1]`` bounds ``Pr{Mut(g) in H_j}`` for ``g`` in ``A_i``.
    When the matrix was built from rationals, ``rational`` keeps the exact
    values and monotonicity is decided exactly.
    """

    entries: np.ndarray
    kind: Kind = Kind.LOWER
    rational: Optional[tuple] = field(default=None, repr=False)

    def __post_init__(self):
        e = np.array(self.entries, dtype=float)
        if e.ndim != 2 or e.shape[0] != e.shape[1] + 1 or e.shape[1] < 1:
            raise ValueError(f"bound matrix must have shape (m+1, m), got {e.shape}")
        if np.any(e < -1e-12) or np.any(e > 1 + 1e-12):
            raise ValueError("bound matrix entries must lie in [0, 1]")
        e = np.clip(e, 0.0, 1.0)
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.kind is Kind.EXACT:
            bad = self.row_violations()
            if bad:
                i, j = bad[0]
                raise ValueError(
                    f"exact matrix must be non-increasing along rows: "
                    f"entry({i},{j}) < entry({i},{j + 1})"
                )

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence], kind=Kind.LOWER) -> "BoundMatrix":
        rows = [list(r) for r in rows]
        rational = None
        if all(_is_rational(x) for r in rows for x in r):
            rational = tuple(tuple(Fraction(x) for x in r) for r in rows)
        return cls(np.array([[float(x) for x in r] for r in rows]), kind, rational)

    @classmethod
    def zeros(cls, m: int, kind=Kind.LOWER) -> "BoundMatrix":
        return cls.from_rows([[0] * m for _ in range(m + 1)], kind)

    @classmethod
    def ones(cls, m: int, kind=Kind.UPPER) -> "BoundMatrix":
        return cls.from_rows([[1] * m for _ in range(m + 1)], kind)

    @property
    def m(self) -> int:
        return self.entries.shape[1]

    def entry(self, i: int, j: int) -> float:
        """Entry with the conceptual column ``j = 0`` equal to one."""
        return 1.0 if j <= 0 else float(self.entries[i, j - 1])

    def row_violations(self) -> list:
        """Pairs ``(i, j)`` where ``entry(i, j) < entry(i, j+1)``."""
        out = []
        if self.rational is not None:
            for i, r in enumerate(self.rational):
                out += [(i, j + 1) for j in range(len(r) - 1) if r[j] < r[j + 1]]
            return out
        d = self.entries[:, :-1] - self.entries[:, 1:]
        for i, j in zip(*np.nonzero(d < -MONOTONE_TOL)):
            out.append((int(i), int(j) + 1))
        return out

    def monotone_violations(self) -> list:
        """Pairs ``(i, j)``, ``i, j >= 1``, where ``entry(i-1, j) > entry(i, j)``."""
        if self.rational is not None:
            r = self.rational
            return [
                (i, j + 1)
                for i in range(1, len(r))
                for j in range(len(r[0]))
                if r[i - 1][j] > r[i][j]
            ]
        d = self.entries[1:] - self.entries[:-1]
        return [(int(i) + 1, int(j) + 1) for i, j in zip(*np.nonzero(d < -MONOTONE_TOL))]

    def require_monotone(self, what="matrix") -> None:
        bad = self.monotone_violations()
        if bad:
            raise NotMonotoneError(bad, what)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["i\\j"] + [str(j) for j in range(1, self.m + 1)])
        for i, row in enumerate(self.entries):
            w.writerow([str(i)] + [repr(float(x)) for x in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, kind=Kind.LOWER) -> "BoundMatrix":
        rows = list(csv.reader(io.StringIO(text)))
        return cls(np.array([[float(x) for x in r[1:]] for r in rows[1:]]), kind)

    def to_config(self) -> dict:
        """Flat string mapping suitable for a configparser section."""
        out = {"kind": self.kind.value, "m": str(self.m)}
        for i, row in enumerate(self.entries):
            out[f"row{i}"] = ", ".join(repr(float(x)) for x in row)
        return out

    @classmethod
    def from_config(cls, section) -> "BoundMatrix":
        m = int(section["m"])
        rows = [[float(x) for x in section[f"row{i}"].split(",")] for i in range(m + 1)]
        return cls(np.array(rows), Kind(section["kind"]))


def is_monotone(matrix: BoundMatrix) -> bool:
    """True iff ``entry(i-1, j) <= entry(i, j)`` for all ``i, j`` in ``1..m``."""
    return not matrix.monotone_violations()


@dataclass(frozen=True)
class BoundPairReport:
    valid: bool
    violations: tuple
    lower_monotone: bool
    upper_monotone: bool
    level_based: bool

    def __str__(self):
        state = "valid" if self.valid else f"invalid at {list(self.violations)[:5]}"
        return (
            f"bound pair {state}; lower monotone={self.lower_monotone}, "
            f"upper monotone={self.upper_monotone}, level-based={self.level_based}"
        )


def validate_bound_pair(lower: BoundMatrix, upper: BoundMatrix) -> BoundPairReport:
    if lower.entries.shape != upper.entries.shape:
        raise ValueError(
            f"dimension mismatch: {lower.entries.shape} vs {upper.entries.shape}"
        )
    if lower.rational is not None and upper.rational is not None:
        viol = [
            (i, j + 1)
            for i, (a, b) in enumerate(zip(lower.rational, upper.rational))
            for j in range(len(a))
            if a[j] > b[j]
        ]
        equal = lower.rational == upper.rational
    else:
        d = lower.entries - upper.entries
        viol = [(int(i), int(j) + 1) for i, j in zip(*np.nonzero(d > MONOTONE_TOL))]
        equal = bool(np.all(np.abs(d) <= MONOTONE_TOL))
    return BoundPairReport(
        valid=not viol,
        violations=tuple(viol),
        lower_monotone=is_monotone(lower),
        upper_monotone=is_monotone(upper),
        level_based=equal,
    )


def matrix_from_function(m: int, fn: Callable[[int, int], object], kind=Kind.LOWER) -> BoundMatrix:
    """Build a matrix from ``fn(i, j)`` for ``i = 0..m``, ``j = 1..m``."""
    return BoundMatrix.from_rows([[fn(i, j) for j in range(1, m + 1)] for i in range(m + 1)], kind)


def as_vector(z: "PopulationVector | Iterable[float]") -> np.ndarray:
    if isinstance(z, PopulationVector):
        return np.array(z.values, dtype=float)
    return np.asarray(list(z) if not isinstance(z, np.ndarray) else z, dtype=float)
