"""Benchmark instances wired to their level partitions and bound matrices."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from . import kernels as K
from .levels import BoundMatrix, Kind, LevelPartition


@dataclass(frozen=True)
class ProblemInstance:
    name: str
    n: int
    fitness: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    partition: LevelPartition = field(repr=False)
    optimum_test: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    info: dict = field(default_factory=dict, repr=False)

    @property
    def m(self) -> int:
        return self.partition.m

    def classify(self, g) -> np.ndarray:
        return self.partition.classify(g)


@dataclass(frozen=True)
class Preset:
    """A problem together with its mutation operator and bound matrices."""

    problem: ProblemInstance
    kernel: K.MutationKernel
    lower: BoundMatrix
    upper: BoundMatrix
    gamma: Optional[BoundMatrix] = None


def _leading_ones(g: np.ndarray) -> np.ndarray:
    return np.cumprod(g, axis=-1).sum(axis=-1)


# ---------------------------------------------------------------------------
# OneMax
# ---------------------------------------------------------------------------


def onemax(n: int) -> ProblemInstance:
    if n < 1:
        raise ValueError("n must be >= 1")

    def fitness(g):
        return np.asarray(g).sum(axis=-1)

    part = LevelPartition(tuple(range(n + 1)), fitness, (True,) * (n + 1))
    return ProblemInstance(
        f"onemax:n={n}", n, fitness, part, lambda g: np.asarray(g).sum(axis=-1) == n
    )


# ---------------------------------------------------------------------------
# Vertex cover on disjoint triangles, edge-based encoding
# ---------------------------------------------------------------------------


def vcp_cover_size(g) -> np.ndarray:
    """Size of the vertex cover encoded by edge genes on disjoint triangles.

    Triangle ``k`` has vertices ``a, b, c`` and edges ``ab, bc, ca`` carried by
    genes ``3k, 3k+1, 3k+2``; gene value 1 picks the first endpoint.
    """
    g = np.asarray(g, dtype=np.uint8)
    t = g.reshape(g.shape[:-1] + (-1, 3))
    e_ab, e_bc, e_ca = t[..., 0], t[..., 1], t[..., 2]
    a = (e_ab == 1) | (e_ca == 0)
    b = (e_ab == 0) | (e_bc == 1)
    c = (e_bc == 0) | (e_ca == 1)
    return (a.astype(int) + b + c).sum(axis=-1)


def vcp_triangles(m_triangles: int, p_m=Fraction(1, 10)):
    """VCP on ``G(m)`` with bitwise mutation; returns ``(problem, kernel)``.

    Fitness is ``|V| - |C(g)|``, the number of optimally covered triangles.
    """
    if m_triangles < 1:
        raise ValueError("need at least one triangle")
    n_vertices = 3 * m_triangles

    def fitness(g):
        return n_vertices - vcp_cover_size(g)

    part = LevelPartition(tuple(range(m_triangles + 1)), fitness, (True,) * (m_triangles + 1))
    prob = ProblemInstance(
        f"vcp:m={m_triangles},pm={float(p_m)}",
        3 * m_triangles,
        fitness,
        part,
        lambda g: fitness(g) == m_triangles,
        {"triangles": m_triangles},
    )
    r, rt = K.vcp_block_params(p_m)
    kernel = K.bitwise_mutation(p_m, K.block_gamma(m_triangles, r, rt))
    return prob, kernel


# ---------------------------------------------------------------------------
# Unimodal functions with ell fitness values
# ---------------------------------------------------------------------------


def unimodal_path(n: int, ell: int) -> ProblemInstance:
    """``min(LeadingOnes(g), ell - 1)``: ell distinct values, every non-optimum improvable by one flip."""
    if not 2 <= ell <= n + 1:
        raise ValueError("need 2 <= ell <= n + 1")

    def fitness(g):
        return np.minimum(_leading_ones(np.asarray(g)), ell - 1)

    part = LevelPartition(tuple(range(ell)), fitness, (True,) * ell)
    return ProblemInstance(
        f"unimodal:n={n},ell={ell}", n, fitness, part, lambda g: fitness(g) == ell - 1
    )


# ---------------------------------------------------------------------------
# 2-SAT with a planted assignment
# ---------------------------------------------------------------------------


def two_sat_instance(n: int, clauses, planted) -> ProblemInstance:
    """2-SAT instance whose analysis fitness measures closeness to ``planted``.

    Fitness is ``n - dist(g, planted)``, raised to ``n`` on every satisfying
    assignment (the walk stops there, so all of them belong to the top level).
    The walk operator never looks at this fitness.
    """
    formula = clauses if isinstance(clauses, K.Cnf) else K.Cnf(n, tuple(clauses))
    if formula.max_width > 2:
        raise ValueError("clauses must have at most two literals")
    star = np.asarray(planted, dtype=np.uint8)
    if star.shape != (n,) or not formula.satisfied(star):
        raise ValueError("planted assignment must satisfy the formula")

    def fitness(g):
        g = np.asarray(g, dtype=np.uint8)
        close = n - (g != star).sum(axis=-1)
        return np.where(formula.satisfied(g), n, close)

    part = LevelPartition(tuple(range(n + 1)), fitness, (True,) * (n + 1))
    return ProblemInstance(
        f"2sat:n={n}", n, fitness, part, formula.satisfied, {"formula": formula, "planted": star}
    )


def planted_two_sat(n: int, n_clauses: Optional[int] = None, seed: int = 0) -> ProblemInstance:
    """Random 2-CNF over distinct variable pairs, every clause satisfied by a random planted assignment."""
    if n < 2:
        raise ValueError("n must be >= 2")
    rng = np.random.default_rng(seed)
    n_clauses = 2 * n if n_clauses is None else n_clauses
    star = rng.integers(0, 2, n).astype(np.uint8)
    clauses = []
    while len(clauses) < n_clauses:
        a, b = rng.choice(n, 2, replace=False)
        sa, sb = rng.integers(0, 2, 2)
        if (star[a] == sa) or (star[b] == sb):
            clauses.append(((a + 1) if sa else -(a + 1), (b + 1) if sb else -(b + 1)))
    inst = two_sat_instance(n, clauses, star)
    return ProblemInstance(
        f"2sat:n={n},seed={seed}", n, inst.fitness, inst.partition, inst.optimum_test, inst.info
    )


# ---------------------------------------------------------------------------
# Balas set cover B(n, n/2)
# ---------------------------------------------------------------------------


def balas_scp(n: int, R: Optional[Callable] = None, L: Optional[Callable] = None) -> ProblemInstance:
    """B(n, n/2) in unitation form: ``R(|g|)`` on covers, ``L(|g|)`` otherwise.

    ``R`` must decrease, ``L`` increase and ``L(n/2 - 1) < R(n)``. Level ``i < m``
    holds genotypes with ``i`` ones and level ``m = n/2`` holds every cover,
    so ``phi_m = R(n)``. Optimal covers are those with exactly ``n/2`` ones.
    """
    if n < 4 or n % 2:
        raise ValueError("n must be even and >= 4")
    m = n // 2
    R = R or (lambda x: n - x)
    L = L or (lambda x: x - n)
    if not L(m - 1) < R(n):
        raise ValueError("need L(n/2 - 1) < R(n)")
    r_tab = np.array([R(x) if x >= m else 0 for x in range(n + 1)], dtype=float)
    l_tab = np.array([L(x) if x < m else 0 for x in range(n + 1)], dtype=float)

    def fitness(g):
        u = np.asarray(g).sum(axis=-1)
        return np.where(u >= m, r_tab[u], l_tab[u])

    thresholds = tuple(float(L(i)) for i in range(m)) + (float(R(n)),)
    part = LevelPartition(thresholds, fitness, (True,) * (m + 1))
    return ProblemInstance(
        f"balas:n={n}", n, fitness, part, lambda g: np.asarray(g).sum(axis=-1) == m, {"level_m": "covers"}
    )


def balas_ground_set(n: int):
    """Explicit B(n, n/2): one element per ``(n/2+1)``-subset ``N_i`` of ``U``.

    Returns ``(masks, fitness)``; ``masks[i]`` is the bitmask of ``N_i`` and
    ``fitness`` is ``n - |J|`` on covers and minus the number of uncovered
    elements otherwise.
    """
    if n < 4 or n % 2 or n > 16:
        raise ValueError("ground-set form supported for even 4 <= n <= 16")
    from itertools import combinations

    size = n - n // 2 + 1
    masks = np.array([sum(1 << j for j in c) for c in combinations(range(n), size)], dtype=np.int64)
    weights = 1 << np.arange(n, dtype=np.int64)

    def fitness(g):
        g = np.asarray(g, dtype=np.int64)
        code = g @ weights
        uncovered = ((code[..., None] & masks) == 0).sum(axis=-1)
        return np.where(uncovered == 0, n - g.sum(axis=-1), -uncovered)

    return masks, fitness


# ---------------------------------------------------------------------------
# Presets by name
# ---------------------------------------------------------------------------


def _parse_number(text: str):
    text = text.strip()
    if "/" in text:
        return Fraction(text)
    try:
        return int(text)
    except ValueError:
        return Fraction(text) if len(text) < 12 else float(text)


def parse_preset(spec: str):
    """``"vcp:m=8,pm=0.1"`` -> ``("vcp", {"m": 8, "pm": Fraction(1, 10)})``."""
    name, _, rest = spec.partition(":")
    params = {}
    for item in filter(None, (x.strip() for x in rest.split(","))):
        key, eq, val = item.partition("=")
        if not eq:
            raise ValueError(f"malformed preset parameter {item!r}")
        params[key.strip()] = _parse_number(val)
    return name.strip().lower(), params


def preset(spec: str) -> Preset:
    """Build a named preset: ``onemax``, ``vcp``, ``unimodal``, ``2sat`` or ``balas``."""
    name, p = parse_preset(spec)
    if name == "onemax":
        n = int(p["n"])
        prob = onemax(n)
        if "pm" in p:
            gamma = K.bitwise_onemax_gamma(n, p["pm"])
            kern = K.bitwise_mutation(p["pm"], gamma)
        else:
            q = p.get("q", Fraction(1, n + 1))
            gamma = K.point_mutation_gamma(n, q)
            kern = K.point_mutation(q, gamma)
        return Preset(prob, kern, gamma, gamma, gamma)
    if name == "vcp":
        prob, kern = vcp_triangles(int(p["m"]), p.get("pm", Fraction(1, 10)))
        return Preset(prob, kern, kern.gamma, kern.gamma, kern.gamma)
    if name == "unimodal":
        n, ell = int(p["n"]), int(p["ell"])
        prob = unimodal_path(n, ell)
        A = K.lower_bounds_for_kernel("rls-unimodal", n=n, ell=ell)
        return Preset(prob, K.rls_mutation(prob.fitness), A, BoundMatrix.ones(ell - 1))
    if name == "2sat":
        n = int(p["n"])
        prob = planted_two_sat(n, p.get("clauses"), int(p.get("seed", 0)))
        A = K.lower_bounds_for_kernel("sat-walk", m=n)
        return Preset(prob, K.sat_walk(prob.info["formula"]), A, BoundMatrix.ones(n))
    if name == "balas":
        n = int(p["n"])
        q = p.get("q", Fraction(1, n + 1))
        prob = balas_scp(n)
        A = K.lower_bounds_for_kernel("balas-point", n=n, q=q)
        return Preset(prob, K.point_mutation(q), A, balas_upper_bounds(n, q))
    raise ValueError(f"unknown problem preset {name!r}")


def balas_upper_bounds(n: int, q) -> BoundMatrix:
    """Upper bounds for point mutation on B(n, n/2).

    Below the top level transitions are exact; a cover may stay a cover with
    probability one (when it has spare ones), so the top row is all ones.
    """
    A = K.lower_bounds_for_kernel("balas-point", n=n, q=q)
    rows = [list(r) for r in A.rational] if A.rational is not None else A.entries.tolist()
    rows[-1] = [1] * len(rows[-1])
    return BoundMatrix.from_rows(rows, Kind.UPPER)
