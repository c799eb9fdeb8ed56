"""Mutation operators and their cumulative transition matrices.

Every sampler works on arrays of genotypes of shape ``(..., n)`` with dtype
uint8 and draws from a caller-supplied ``numpy.random.Generator``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from numbers import Rational
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from .levels import BoundMatrix, Kind

Sampler = Callable[[np.ndarray, np.random.Generator], np.ndarray]


@dataclass(frozen=True)
class MutationKernel:
    name: str
    sampler: Sampler = field(repr=False)
    gamma: Optional[BoundMatrix] = field(default=None, repr=False)
    params: Mapping = field(default_factory=dict)

    def sample(self, g, rng: np.random.Generator) -> np.ndarray:
        return self.sampler(np.asarray(g, dtype=np.uint8), rng)

    def with_gamma(self, gamma: BoundMatrix) -> "MutationKernel":
        if gamma.kind is not Kind.EXACT:
            raise ValueError("attached gamma must be an exact matrix")
        return replace(self, gamma=gamma)


def _check_prob(name, x):
    if not 0 <= x <= 1:
        raise ValueError(f"{name} must lie in [0, 1], got {x}")


def _rational(*xs) -> bool:
    return all(isinstance(x, Rational) and not isinstance(x, bool) for x in xs)


# ---------------------------------------------------------------------------
# Cumulative transition matrices
# ---------------------------------------------------------------------------


def point_mutation_gamma(n: int, q) -> BoundMatrix:
    """Gamma of point mutation on OneMax with the canonical partition (m = n).

    With probability ``q`` the genotype is kept, otherwise one uniformly chosen
    gene is flipped. Passing ``q`` as a ``Fraction`` yields an exactly
    represented matrix.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    _check_prob("q", q)
    one = Fraction(1) if _rational(q) else 1.0
    q = Fraction(q) if _rational(q) else float(q)

    def up(i):
        return (one - q) * (n - i) / n

    def gamma(i, j):
        if j <= i - 1:
            return one
        if j == i:
            return q if i == n else q + up(i)
        if j == i + 1:
            return up(i)
        return 0 * one

    rows = [[gamma(i, j) for j in range(1, n + 1)] for i in range(n + 1)]
    return BoundMatrix.from_rows(rows, Kind.EXACT)


def _block_gamma_rows(d, r, rt, comb, one):
    # P[k'][k]: k' blocks without the property yield k blocks with it
    # Q[i][l] for l = 0..i: at least l of i property blocks survive (l <= 0 -> 1)
    P = [[comb(kp, k) * rt ** k * (one - rt) ** (kp - k) for k in range(kp + 1)] for kp in range(d + 1)]
    Q = []
    for i in range(d + 1):
        terms = [comb(i, nu) * (one - r) ** nu * r ** (i - nu) for nu in range(i + 1)]
        # Q(i, l) = sum_{nu=0}^{i-l} terms[nu]
        cum, acc = [], 0 * one
        for t in terms:
            acc = acc + t
            cum.append(acc)
        Q.append(cum)

    def q_at(i, l):
        if l > i:
            return 0 * one
        return Q[i][min(i, i - l)]

    rows = []
    for i in range(d + 1):
        row = []
        for j in range(1, d + 1):
            acc = 0 * one
            for k in range(d - i + 1):
                if j - k > i:
                    continue
                acc = acc + P[d - i][k] * q_at(i, j - k)
            row.append(acc)
        rows.append(row)
    return rows


def block_gamma(d: int, r, r_tilde) -> BoundMatrix:
    """Gamma for a fitness that counts blocks carrying a property.

    A block with the property keeps it with probability ``r``; a block without
    it gains it with probability ``r_tilde``; blocks mutate independently.
    ``gamma[i, j]`` is the probability of ending with ``j`` or more property
    blocks when starting from ``i``.

    For ``d <= 64`` the sums are evaluated in exact rational arithmetic
    (floats are converted exactly), otherwise in floating point with
    log-space binomial weights.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    _check_prob("r", r)
    _check_prob("r_tilde", r_tilde)
    if d <= 64:
        rows = _block_gamma_rows(d, Fraction(r), Fraction(r_tilde), math.comb, Fraction(1))
        return BoundMatrix.from_rows(rows, Kind.EXACT)
    lg = math.lgamma

    def comb(a, b):
        return math.exp(lg(a + 1) - lg(b + 1) - lg(a - b + 1))

    rows = _block_gamma_rows(d, float(r), float(r_tilde), comb, 1.0)
    return BoundMatrix(np.array(rows, dtype=float), Kind.EXACT)


def bitwise_onemax_gamma(n: int, p_m) -> BoundMatrix:
    """Gamma of bitwise mutation on OneMax: each bit is its own block."""
    one = Fraction(1) if _rational(p_m) else 1.0
    return block_gamma(n, one - p_m, p_m)


def vcp_block_params(p_m):
    """Keep/gain probabilities ``(r, r_tilde)`` of a triangle block under bitwise mutation.

    A triangle's three edge genes cover it redundantly exactly when they are
    all equal, so a redundant block becomes optimal unless all or none of
    its genes flip, and an optimal block turns redundant when exactly the odd
    gene or exactly the two equal genes flip.
    """
    _check_prob("p_m", p_m)
    p = p_m
    r_tilde = 1 - p ** 3 - (1 - p) ** 3
    r = 1 - p * (1 - p) ** 2 - p ** 2 * (1 - p)
    return r, r_tilde


# ---------------------------------------------------------------------------
# Samplers
# ---------------------------------------------------------------------------


def bitwise_mutation_sample(g, p_m: float, rng: np.random.Generator) -> np.ndarray:
    g = np.asarray(g, dtype=np.uint8)
    return g ^ (rng.random(g.shape) < p_m).astype(np.uint8)


def _flip_one(g: np.ndarray, rng: np.random.Generator, mask=None) -> np.ndarray:
    lead, n = g.shape[:-1], g.shape[-1]
    pos = rng.integers(0, n, size=lead)
    out = g.copy()
    cur = np.take_along_axis(out, pos[..., None], axis=-1)
    flip = np.ones_like(cur) if mask is None else mask[..., None].astype(np.uint8)
    np.put_along_axis(out, pos[..., None], cur ^ flip, axis=-1)
    return out


def point_mutation_sample(g, q: float, rng: np.random.Generator) -> np.ndarray:
    g = np.asarray(g, dtype=np.uint8)
    change = rng.random(g.shape[:-1]) >= q
    return _flip_one(g, rng, change)


def rls_mutation_sample(g, fitness, rng: np.random.Generator) -> np.ndarray:
    """Flip one uniformly chosen gene; keep the result only on strict improvement."""
    g = np.asarray(g, dtype=np.uint8)
    y = _flip_one(g, rng)
    better = np.asarray(fitness(y)) > np.asarray(fitness(g))
    return np.where(better[..., None], y, g)


@dataclass(frozen=True, eq=False)
class Cnf:
    """CNF formula in DIMACS literal convention (``+k`` / ``-k`` for variable ``k``)."""

    n_vars: int
    clauses: tuple

    def __post_init__(self):
        cl = tuple(tuple(int(x) for x in c) for c in self.clauses)
        for c in cl:
            if not c or any(x == 0 or abs(x) > self.n_vars for x in c):
                raise ValueError(f"bad clause {c}")
        object.__setattr__(self, "clauses", cl)
        width = max((len(c) for c in cl), default=1)
        # unit clauses repeat their literal so every row has the same width
        lits = np.array([c + (c[-1],) * (width - len(c)) for c in cl], dtype=np.int64).reshape(-1, width)
        object.__setattr__(self, "_var", np.abs(lits) - 1)
        object.__setattr__(self, "_want", (lits > 0).astype(np.uint8))

    @property
    def max_width(self) -> int:
        return self._var.shape[1]

    def clause_satisfied(self, g) -> np.ndarray:
        """Boolean array ``(..., n_clauses)``."""
        g = np.asarray(g, dtype=np.uint8)
        vals = g[..., self._var]
        return np.any(vals == self._want, axis=-1)

    def satisfied(self, g) -> np.ndarray:
        return np.all(self.clause_satisfied(g), axis=-1)


def sat_walk_sample(g, formula: Cnf, rng: np.random.Generator) -> np.ndarray:
    """Flip a random variable of a random unsatisfied clause; satisfied inputs stay."""
    if formula.max_width > 2:
        raise ValueError("the walk operator is defined for clauses of at most two literals")
    g = np.asarray(g, dtype=np.uint8)
    unsat = ~formula.clause_satisfied(g)
    if unsat.shape[-1] == 0:
        return g.copy()
    keys = np.where(unsat, rng.random(unsat.shape), -1.0)
    c = np.argmax(keys, axis=-1)
    k = rng.integers(0, formula.max_width, size=c.shape)
    var = formula._var[c, k]
    active = unsat.any(axis=-1)
    out = g.copy()
    cur = np.take_along_axis(out, var[..., None], axis=-1)
    np.put_along_axis(out, var[..., None], cur ^ active[..., None].astype(np.uint8), axis=-1)
    return out


# ---------------------------------------------------------------------------
# Kernel factories
# ---------------------------------------------------------------------------


def point_mutation(q, gamma: Optional[BoundMatrix] = None) -> MutationKernel:
    _check_prob("q", q)
    qf = float(q)
    return MutationKernel("point", lambda g, rng: point_mutation_sample(g, qf, rng), gamma, {"q": q})


def bitwise_mutation(p_m, gamma: Optional[BoundMatrix] = None) -> MutationKernel:
    _check_prob("p_m", p_m)
    pf = float(p_m)
    return MutationKernel("bitwise", lambda g, rng: bitwise_mutation_sample(g, pf, rng), gamma, {"p_m": p_m})


def rls_mutation(fitness) -> MutationKernel:
    return MutationKernel("rls", lambda g, rng: rls_mutation_sample(g, fitness, rng))


def sat_walk(formula: Cnf) -> MutationKernel:
    return MutationKernel("sat-walk", lambda g, rng: sat_walk_sample(g, formula, rng), params={"clauses": len(formula.clauses)})


# ---------------------------------------------------------------------------
# Lower-bound presets
# ---------------------------------------------------------------------------


def lower_bounds_for_kernel(kind: str, **params) -> BoundMatrix:
    """Monotone lower-bound matrix for one of the analysed operator settings.

    ``rls-unimodal`` (``n``, ``ell``), ``sat-walk`` (``m``) and
    ``balas-point`` (``n``, ``q``, ``top``). For ``balas-point`` the top-level
    stay probability is ``q + (1 - q)/2`` with ``top="safe"`` (monotone for
    ``q >= 1/(n+1)``) and ``q`` with ``top="pessimistic"``, which is not
    monotone but is dominated entrywise by the safe matrix.
    """
    half = Fraction(1, 2)
    if kind == "rls-unimodal":
        n, ell = int(params["n"]), int(params["ell"])
        if ell < 2 or n < 1:
            raise ValueError("need n >= 1 and ell >= 2")
        m, up = ell - 1, Fraction(1, n)
        rows = [[1 if j <= i else (up if j == i + 1 else 0) for j in range(1, m + 1)] for i in range(m + 1)]
        return BoundMatrix.from_rows(rows, Kind.LOWER)
    if kind == "sat-walk":
        m = int(params["m"])
        if m < 1:
            raise ValueError("need m >= 1")

        def a(i, j):
            if j < i:
                return 1
            if j == i:
                return 1 if i == m else half
            return half if j == i + 1 else 0

        return BoundMatrix.from_rows([[a(i, j) for j in range(1, m + 1)] for i in range(m + 1)], Kind.LOWER)
    if kind == "balas-point":
        n, q = int(params["n"]), params["q"]
        if n < 4 or n % 2:
            raise ValueError("balas-point needs an even n >= 4")
        _check_prob("q", q)
        top = params.get("top", "safe")
        if top not in ("safe", "pessimistic"):
            raise ValueError("top must be 'safe' or 'pessimistic'")
        exact = _rational(q)
        one = Fraction(1) if exact else 1.0
        q = Fraction(q) if exact else float(q)
        m = n // 2

        def a(i, j):
            if j <= i - 1:
                return one
            if j == i:
                if i < m:
                    return q + (one - q) * (n - i) / n
                return q if top == "pessimistic" else q + (one - q) / 2
            if j == i + 1:
                return (one - q) * (n - i) / n
            return 0 * one

        return BoundMatrix.from_rows([[a(i, j) for j in range(1, m + 1)] for i in range(m + 1)], Kind.LOWER)
    raise ValueError(f"unknown operator preset {kind!r}")
