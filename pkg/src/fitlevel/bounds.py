"""Bound recursions on expected population vectors, plus the matrix tools they need."""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .levels import MONOTONE_TOL, BoundMatrix, Kind, NotMonotoneError, PopulationVector, as_vector

CLAMP_TOL = 1e-15
AGREEMENT_TOL = 1e-10


class TrajectoryKind(str, enum.Enum):
    LOWER_LINEAR = "lower_linear"
    LOWER_CHAIN = "lower_chain"
    UPPER_JENSEN = "upper_jensen"
    INFINITE_POPULATION = "infinite_population"
    ONE_COMMA_LAMBDA = "one_comma_lambda"


@dataclass(frozen=True, eq=False)
class BoundTrajectory:
    """Vectors over ``H_1..H_m`` for ``t = 0..T``; ``values[t, j-1]``."""

    kind: TrajectoryKind
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "kind", TrajectoryKind(self.kind))

    @property
    def t_max(self) -> int:
        return self.values.shape[0] - 1

    @property
    def m(self) -> int:
        return self.values.shape[1]

    @property
    def iterations(self):
        return [(t, self.values[t]) for t in range(self.values.shape[0])]

    def at(self, t: int) -> np.ndarray:
        return self.values[t]

    def level(self, j: int) -> np.ndarray:
        """Series of component ``j`` (1-based) over all iterations."""
        return self.values[:, j - 1]

    def rows(self):
        for t in range(self.values.shape[0]):
            for j in range(1, self.m + 1):
                yield t, j, float(self.values[t, j - 1]), self.kind.value


# ---------------------------------------------------------------------------
# Matrix tools
# ---------------------------------------------------------------------------


def build_w_and_alpha(A: BoundMatrix):
    """``W[i-1, j-1] = a_ij - a_{i-1,j}`` for ``i, j = 1..m`` and ``alpha`` = row 0."""
    if A.kind is Kind.UPPER:
        raise ValueError("W and alpha are built from a lower (or exact) matrix")
    e = A.entries
    return e[1:] - e[:-1], e[0].copy()


def matrix_norm_inf(W, convention: str = "row") -> float:
    """Max absolute row sum (``"row"``) or column sum (``"column"``).

    With row vectors multiplied from the left, the row convention is the norm
    induced by the vector 1-norm and the column convention the one induced by
    the max-norm; both are valid certificates that ``W^t -> 0``.
    """
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ValueError("matrix must be square")
    if W.size == 0:
        return 0.0
    axis = {"row": 1, "column": 0}[convention]
    return float(np.abs(W).sum(axis=axis).max())


def _power_iteration(M: np.ndarray, tol: float, max_iter: int) -> float:
    """Largest eigenvalue of a symmetric positive semidefinite matrix."""
    n = M.shape[0]
    x = np.random.default_rng(12345).random(n) + 1.0
    x /= np.linalg.norm(x)
    lam_old, diff_old = None, None
    for _ in range(max_iter):
        y = M @ x
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return 0.0
        x = y / ny
        lam = float(x @ M @ x)
        if lam_old is not None:
            diff = abs(lam - lam_old)
            if diff == 0.0:
                return lam
            if diff_old:
                ratio = min(diff / diff_old, 0.999999)
                # remaining error ~ diff * ratio / (1 - ratio)
                if diff * ratio / (1.0 - ratio) <= tol * max(1.0, lam):
                    return lam
            diff_old = diff
        lam_old = lam
    warnings.warn("power iteration did not reach the requested tolerance", RuntimeWarning)
    return lam_old


def matrix_norm_2(W, tol: float = 1e-12, max_iter: int = 200_000) -> float:
    """Spectral norm as ``sqrt`` of the top eigenvalue of ``W W^T`` (power iteration)."""
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ValueError("matrix must be square")
    if W.size == 0:
        return 0.0
    return math.sqrt(max(_power_iteration(W @ W.T, tol * 1e-2, max_iter), 0.0))


def certify_convergence(W):
    """First norm (in order inf-row, inf-column, 2) below one, as ``(name, value)``.

    Returns ``None`` when none of them certifies ``||W^t|| -> 0``; this is
    inconclusive, not a proof of divergence.
    """
    for name, fn in (
        ("inf-row", lambda: matrix_norm_inf(W, "row")),
        ("inf-column", lambda: matrix_norm_inf(W, "column")),
        ("2", lambda: matrix_norm_2(W)),
    ):
        val = fn()
        if val < 1.0:
            return name, val
    return None


def toeplitz_tridiagonal_spectrum(n: int, delta: float, sigma: float, tau: float) -> np.ndarray:
    """Eigenvalues of the ``n x n`` tridiagonal Toeplitz matrix, descending.

    ``delta`` on the diagonal, ``sigma`` below it and ``tau`` above it.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if sigma * tau < 0:
        raise ValueError("sigma * tau < 0 gives a complex spectrum; not supported")
    h = np.arange(1, n + 1)
    return delta + 2.0 * math.sqrt(sigma * tau) * np.cos(h * math.pi / (n + 1))


# ---------------------------------------------------------------------------
# Associated Markov chain
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class AssociatedChain:
    """Level chain of the (1,1) EA whose cumulative transitions equal the lower bounds."""

    T: np.ndarray
    L: np.ndarray
    clamped: tuple = ()

    @property
    def m(self) -> int:
        return self.T.shape[0] - 1

    def distribution(self, p0, t: int) -> np.ndarray:
        return np.asarray(p0, dtype=float) @ np.linalg.matrix_power(self.T, t)

    def sample_next(self, levels: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Draw the next level for each entry of ``levels`` (the surrogate mutation)."""
        cdf = np.cumsum(self.T[levels], axis=-1)
        u = rng.random(levels.shape)[..., None]
        return np.minimum((u >= cdf).sum(axis=-1), self.m)


def associated_chain(A: BoundMatrix) -> AssociatedChain:
    m = A.m
    full = np.concatenate([np.ones((m + 1, 1)), A.entries], axis=1)
    T = np.empty((m + 1, m + 1))
    T[:, :m] = full[:, :m] - full[:, 1:]
    T[:, m] = full[:, m]
    neg = np.argwhere(T < 0)
    if np.any(T < -CLAMP_TOL):
        i, j = np.argwhere(T < -CLAMP_TOL)[0]
        raise ValueError(
            f"lower-bound row {i} is increasing at column {j + 1}; "
            "the associated chain would have a negative transition"
        )
    T = np.clip(T, 0.0, None)
    L = np.tril(np.ones((m + 1, m + 1)))
    return AssociatedChain(T, L, tuple(map(tuple, neg.tolist())))


def level_distribution(z0) -> np.ndarray:
    """``p_i = z_i - z_{i+1}`` for ``i = 0..m`` from an expected population vector."""
    if isinstance(z0, PopulationVector):
        return z0.level_distribution()
    return PopulationVector(as_vector(z0)).level_distribution()


# ---------------------------------------------------------------------------
# Recursions
# ---------------------------------------------------------------------------


def _lower(A: BoundMatrix, what: str, dominating: Optional[BoundMatrix] = None):
    """Check the hypotheses of the lower-bound recursions.

    A non-monotone ``A`` is accepted when a monotone ``dominating`` matrix with
    entries no smaller is supplied: the recursion map grows with every entry on
    non-increasing vectors, so iterates under ``A`` stay below those under the
    dominating matrix, which are valid bounds.
    """
    if A.kind is Kind.UPPER:
        raise ValueError(f"{what} needs a lower or exact matrix")
    if dominating is None or not A.monotone_violations():
        A.require_monotone("lower-bound matrix")
        return
    if dominating.kind is Kind.UPPER or dominating.entries.shape != A.entries.shape:
        raise ValueError("dominating matrix must be a lower matrix of the same shape")
    dominating.require_monotone("dominating lower-bound matrix")
    if np.any(dominating.entries < A.entries - MONOTONE_TOL):
        raise ValueError("dominating matrix is smaller than A somewhere")


def lower_bound_linear(A: BoundMatrix, z0, t: int, *, dominating: Optional[BoundMatrix] = None) -> BoundTrajectory:
    """Lower bounds on ``E[z^(0..t)]`` from ``u <- alpha + u W``.

    The iterates are cross-checked against the closed form
    ``z0 W^t + v (I - W^t)`` with ``v = alpha (I - W)^{-1}``; the largest
    discrepancy is kept in ``meta["closed_form_gap"]``.
    """
    _lower(A, "the linear lower bound", dominating)
    W, alpha = build_w_and_alpha(A)
    m = A.m
    u = as_vector(z0)
    if u.shape != (m,):
        raise ValueError(f"z0 must have {m} components")
    cert = certify_convergence(W)
    if cert is None:
        warnings.warn(
            "no available norm certifies ||W^t|| -> 0; the closed form is not guaranteed",
            RuntimeWarning,
        )
    out = np.empty((t + 1, m))
    out[0] = u
    for k in range(1, t + 1):
        u = alpha + u @ W
        out[k] = u

    meta = {"certificate": cert}
    I = np.eye(m)
    try:
        if np.linalg.cond(I - W) > 1e12:
            raise np.linalg.LinAlgError("I - W is numerically singular")
        v = np.linalg.solve((I - W).T, alpha)
    except np.linalg.LinAlgError:
        warnings.warn("I - W is singular; closed form skipped", RuntimeWarning)
        meta.update(limit=None, closed_form_gap=None)
    else:
        z0v = out[0]
        closed = np.empty_like(out)
        for k in range(t + 1):
            Wk = np.linalg.matrix_power(W, k)
            closed[k] = z0v @ Wk + v - v @ Wk
        gap = float(np.max(np.abs(closed - out)))
        if gap > AGREEMENT_TOL:
            warnings.warn(f"closed form and iteration differ by {gap:.3g}", RuntimeWarning)
        meta.update(limit=v, closed_form=closed, closed_form_gap=gap)
    return BoundTrajectory(TrajectoryKind.LOWER_LINEAR, out, meta)


def lower_bound_chain(
    A: BoundMatrix, p0, t: int, *, all_levels_nonempty: bool, dominating: Optional[BoundMatrix] = None
) -> BoundTrajectory:
    """Lower bounds ``p0 T^t L`` from the associated chain (components 1..m).

    ``p0`` is a distribution over levels ``0..m`` or a ``PopulationVector``.
    """
    if not all_levels_nonempty:
        raise ValueError("the chain bound requires every level set A_0..A_m to be non-empty")
    _lower(A, "the chain lower bound", dominating)
    chain = associated_chain(A)
    p = level_distribution(p0) if isinstance(p0, PopulationVector) else np.asarray(p0, dtype=float)
    if p.shape != (A.m + 1,) or abs(p.sum() - 1.0) > 1e-12 or np.any(p < 0):
        raise ValueError("p0 must be a probability vector over levels 0..m")
    out = np.empty((t + 1, A.m))
    for k in range(t + 1):
        out[k] = (p @ chain.L)[1:]
        p = p @ chain.T
    return BoundTrajectory(TrajectoryKind.LOWER_CHAIN, out, {"chain": chain})


def _jensen_step(B: np.ndarray, u: np.ndarray, s: float) -> np.ndarray:
    D = B[1:] - B[:-1]
    return B[-1] - ((1.0 - u) ** s) @ D


def upper_bound_jensen(B: BoundMatrix, z0, s: int, t: int) -> BoundTrajectory:
    if B.kind is Kind.LOWER:
        raise ValueError("the upper bound needs an upper (or exact) matrix")
    if s < 1:
        raise ValueError("tournament size must be >= 1")
    B.require_monotone("upper-bound matrix")
    u = as_vector(z0)
    if u.shape != (B.m,):
        raise ValueError(f"z0 must have {B.m} components")
    out = np.empty((t + 1, B.m))
    out[0] = u
    for k in range(1, t + 1):
        u = _jensen_step(B.entries, u, s)
        out[k] = u
    return BoundTrajectory(TrajectoryKind.UPPER_JENSEN, out, {"s": s})


def infinite_population_recursion(Gamma: BoundMatrix, u0, s: int, t: int) -> BoundTrajectory:
    """Expected population vector of the EA in the limit of infinite population."""
    if Gamma.kind is not Kind.EXACT:
        raise ValueError("the infinite-population recursion needs an exact matrix")
    if s < 1:
        raise ValueError("tournament size must be >= 1")
    Gamma.require_monotone("cumulative transition matrix")
    u = as_vector(u0)
    out = np.empty((t + 1, Gamma.m))
    out[0] = u
    for k in range(1, t + 1):
        u = _jensen_step(Gamma.entries, u, s)
        out[k] = u
    return BoundTrajectory(TrajectoryKind.INFINITE_POPULATION, out, {"s": s})


def one_comma_lambda_recursion(Gamma: BoundMatrix, P0, lam: int, t: int) -> BoundTrajectory:
    """Exact ``Pr{b^(t) in H_j}`` of the (1,lambda) EA under a monotone mutation."""
    if Gamma.kind is not Kind.EXACT:
        raise ValueError("the (1,lambda) recursion needs an exact matrix")
    if lam < 1:
        raise ValueError("lambda must be >= 1")
    Gamma.require_monotone("cumulative transition matrix")
    C = (1.0 - Gamma.entries) ** lam
    base, M = 1.0 - C[0], C[:-1] - C[1:]
    P = as_vector(P0)
    out = np.empty((t + 1, Gamma.m))
    out[0] = P
    for k in range(1, t + 1):
        P = base + P @ M
        out[k] = P
    return BoundTrajectory(TrajectoryKind.ONE_COMMA_LAMBDA, out, {"lam": lam})


# ---------------------------------------------------------------------------
# Closed forms for the worked applications
# ---------------------------------------------------------------------------


def rls_unimodal_norm_2(n: int, ell: int) -> float:
    """Spectral norm obtained from the tridiagonal Toeplitz spectrum."""
    return math.sqrt(1.0 - 2.0 * (n - 1) / n ** 2 * (1.0 - math.cos(math.pi / ell)))


def closed_form_lower_bound_unimodal(n: int, ell: int, t: float) -> float:
    """Lower bound on the expected proportion of optima after ``t`` iterations."""
    base = 1.0 - 2.0 * (n - 1) / n ** 2 * (1.0 - math.cos(math.pi / ell))
    return 1.0 - math.sqrt(ell - 1) * base ** (t / 2.0)


def unimodal_tail_bound(n: int, ell: int, t: float) -> float:
    """Probability bound that RLS needs more than ``t`` iterations (exponential tail)."""
    return math.exp(0.5 * (math.log(ell - 1) - t * (math.pi ** 2 - 20.0 / ell) / (ell ** 2 * n)))


def markov_tail_bound(n: int, ell: int, t: float) -> float:
    """``n (ell - 1) / t`` from the expected RLS runtime and Markov's inequality."""
    return math.inf if t <= 0 else n * (ell - 1) / t


def balas_linear_system(n: int, printed_last_row: bool = False):
    """Linear system ``M v = b`` characterising ``alpha (I - W)^{-1}`` for the set-cover chain.

    ``printed_last_row`` swaps in the coefficient ``(n-1)/n`` for ``v_m`` in the
    final equation in place of ``(3n+2)/(2n)``, which is what the point
    mutation bounds actually give.
    """
    if n < 4 or n % 2:
        raise ValueError("n must be even and >= 4")
    m = n // 2
    M = np.zeros((m, m))
    b = np.zeros(m)
    M[0, 0], M[0, 1] = (n + 1) / n, -1.0 / n
    b[0] = 1.0
    for i in range(2, m):
        M[i - 1, i - 2] = -(n - i + 1) / n
        M[i - 1, i - 1] = (n + 1) / n
        M[i - 1, i] = -i / n
    M[m - 1, m - 2] = -(n + 2) / (2 * n)
    M[m - 1, m - 1] = (n - 1) / n if printed_last_row else (3 * n + 2) / (2 * n)
    return M, b


def balas_stationary_exact(n: int) -> list:
    """Exact ``v_i``, ``i = 1..n/2``: tail sums of the folded Ehrenfest distribution.

    Folding unitation ``k`` with ``n - k`` doubles every state mass except the
    middle one, so ``v_i = sum_{l=i}^{n/2-1} C(n,l)/2^(n-1) + C(n,n/2)/2^n``.
    """
    if n < 4 or n % 2:
        raise ValueError("n must be even and >= 4")
    m = n // 2
    mass = [Fraction(math.comb(n, l), 2 ** (n - 1)) for l in range(m)] + [Fraction(math.comb(n, m), 2 ** n)]
    return [sum(mass[i:], Fraction(0)) for i in range(1, m + 1)]


def balas_stationary_vector(n: int, validate: bool = True, tol: float = 1e-10) -> np.ndarray:
    v = np.array([float(x) for x in balas_stationary_exact(n)])
    if validate:
        M, b = balas_linear_system(n)
        res = float(np.max(np.abs(M @ v - b)))
        if res > tol:
            raise ArithmeticError(f"stationary equations violated, residual {res:.3g}")
        from .kernels import lower_bounds_for_kernel

        A = lower_bounds_for_kernel("balas-point", n=n, q=Fraction(1, n + 1), top="pessimistic")
        W, alpha = build_w_and_alpha(A)
        direct = np.linalg.solve((np.eye(n // 2) - W).T, alpha)
        if np.max(np.abs(direct - v)) > tol:
            raise ArithmeticError("closed form disagrees with alpha (I - W)^-1")
    return v
