"""Monte-Carlo engines for the non-elitist EA and its single-trajectory relatives.

Runs are simulated in batches of ``BATCH`` independent runs, vectorised over
the batch. Batch ``b`` draws from ``SeedSequence(seed, spawn_key=(b,))``, so
results depend only on ``(config, seed)`` and never on the worker count.
"""
from __future__ import annotations

import csv
import enum
import math
import multiprocessing as mp
import os
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .bounds import AssociatedChain
from .kernels import MutationKernel, _flip_one
from .levels import PopulationVector
from .problems import ProblemInstance

BATCH = 250
Z95 = 1.959963984540054


class Variant(str, enum.Enum):
    EA = "ea"
    ONE_COMMA_LAMBDA = "one_comma_lambda"
    ONE_PLUS_ONE = "one_plus_one"
    RLS = "rls"


@dataclass(frozen=True, eq=False)
class AlgorithmConfig:
    """One algorithm setting.

    ``init`` is ``"zeros"``, ``"uniform"`` (independent uniform genotypes),
    ``"uniform_shared"`` (one uniform genotype copied to every slot) or an
    explicit genotype. ``level`` selects the set ``H_level`` whose membership
    is recorded; it defaults to the top level.
    """

    variant: Variant
    problem: ProblemInstance
    kernel: Optional[MutationKernel] = None
    lam: int = 1
    s: int = 1
    init: Union[str, Sequence[int]] = "zeros"
    t_max: int = 100
    seed: int = 0
    level: Optional[int] = None
    record_z: bool = False

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if self.lam < 1 or self.s < 1:
            raise ValueError("lam and s must be >= 1")
        if self.t_max < 0:
            raise ValueError("t_max must be >= 0")
        if self.variant is Variant.EA and self.lam == 1:
            # a tournament over a single individual has no effect
            object.__setattr__(self, "s", 1)
        if self.variant is not Variant.RLS and self.kernel is None:
            raise ValueError(f"variant {self.variant.value} needs a mutation kernel")
        if isinstance(self.init, str):
            if self.init not in ("zeros", "uniform", "uniform_shared"):
                raise ValueError(f"unknown init rule {self.init!r}")
        else:
            g = np.asarray(self.init, dtype=np.uint8)
            if g.shape != (self.problem.n,):
                raise ValueError("explicit init genotype has the wrong length")
            object.__setattr__(self, "init", tuple(int(x) for x in g))
        lvl = self.problem.m if self.level is None else self.level
        if not 0 <= lvl <= self.problem.m:
            raise ValueError("level out of range")
        object.__setattr__(self, "level", lvl)

    @property
    def population_size(self) -> int:
        return self.lam if self.variant is Variant.EA else 1


@dataclass(frozen=True, eq=False)
class RunStatistics:
    """Per-run records.

    ``levels[r, t]`` is the level of the tracked individual at iteration ``t``
    (``g_1`` for the EA, the current point otherwise). ``hit_time[r]`` is the
    first iteration whose population holds an optimum, ``-1`` if none did
    within ``t_max``. ``z`` holds population vectors ``(runs, t_max+1, m)``
    when requested.
    """

    config: AlgorithmConfig = field(repr=False)
    levels: np.ndarray
    hit_time: np.ndarray
    z: Optional[np.ndarray] = None

    @property
    def runs(self) -> int:
        return self.levels.shape[0]

    @property
    def seed(self) -> int:
        return self.config.seed

    def run_seed(self, r: int) -> tuple:
        """Seed-sequence key of the batch that produced run ``r``."""
        return (self.config.seed, r // BATCH)

    def indicator(self, level: Optional[int] = None) -> np.ndarray:
        j = self.config.level if level is None else level
        return self.levels >= j

    def hit_by(self, t: int) -> np.ndarray:
        return (self.hit_time >= 0) & (self.hit_time <= t)

    def to_csv(self, fh, level: Optional[int] = None) -> None:
        """Long format ``run_id,t,indicator,hit_time`` with the seed in a comment header."""
        cfg = self.config
        fh.write(
            f"# seed={cfg.seed} variant={cfg.variant.value} problem={cfg.problem.name} "
            f"lam={cfg.lam} s={cfg.s} level={cfg.level if level is None else level}\n"
        )
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["run_id", "t", "indicator", "hit_time"])
        ind = self.indicator(level).astype(int)
        for r in range(self.runs):
            h = int(self.hit_time[r])
            for t in range(ind.shape[1]):
                w.writerow([r, t, ind[r, t], h])


# ---------------------------------------------------------------------------
# Engines (one batch)
# ---------------------------------------------------------------------------


def _initial(cfg: AlgorithmConfig, b: int, k: int, rng: np.random.Generator) -> np.ndarray:
    n = cfg.problem.n
    if cfg.init == "zeros":
        return np.zeros((b, k, n), dtype=np.uint8)
    if cfg.init == "uniform":
        return rng.integers(0, 2, (b, k, n), dtype=np.uint8)
    if cfg.init == "uniform_shared":
        one = rng.integers(0, 2, (b, 1, n), dtype=np.uint8)
        return np.repeat(one, k, axis=1)
    return np.broadcast_to(np.asarray(cfg.init, dtype=np.uint8), (b, k, n)).copy()


class _Recorder:
    def __init__(self, cfg: AlgorithmConfig, b: int):
        self.cfg = cfg
        self.levels = np.empty((b, cfg.t_max + 1), dtype=np.int32)
        self.hit = np.full(b, -1, dtype=np.int64)
        m = cfg.problem.m
        self.z = np.empty((b, cfg.t_max + 1, m), dtype=np.float32) if cfg.record_z else None
        self._cols = np.arange(1, m + 1)

    def record(self, t: int, pop: np.ndarray, fit: np.ndarray) -> None:
        """``pop`` is ``(b, k, n)``; ``fit`` its fitness ``(b, k)``; slot 0 is tracked."""
        part = self.cfg.problem.partition
        lev = np.searchsorted(np.asarray(part.thresholds), fit, side="right") - 1
        self.levels[:, t] = lev[:, 0]
        opt = np.asarray(self.cfg.problem.optimum_test(pop)).any(axis=1)
        self.hit[(self.hit < 0) & opt] = t
        if self.z is not None:
            self.z[:, t] = (lev[:, :, None] >= self._cols).mean(axis=1)


def _tournament(fit: np.ndarray, s: int, rng: np.random.Generator) -> np.ndarray:
    """Indices ``(b, lam)`` of parents chosen by best-of-``s`` draws with replacement."""
    b, lam = fit.shape
    if s == 1:
        return rng.integers(0, lam, (b, lam))
    cand = rng.integers(0, lam, (b, lam, s))
    cf = np.take_along_axis(fit[:, None, :].repeat(lam, axis=1), cand, axis=2)
    return np.take_along_axis(cand, np.argmax(cf, axis=2)[..., None], axis=2)[..., 0]


def _batch_ea(cfg: AlgorithmConfig, b: int, rng: np.random.Generator) -> _Recorder:
    rec = _Recorder(cfg, b)
    fitness = cfg.problem.fitness
    pop = _initial(cfg, b, cfg.lam, rng)
    fit = np.asarray(fitness(pop), dtype=float)
    rec.record(0, pop, fit)
    for t in range(1, cfg.t_max + 1):
        idx = _tournament(fit, cfg.s, rng)
        parents = np.take_along_axis(pop, idx[..., None], axis=1)
        pop = cfg.kernel.sample(parents, rng)
        fit = np.asarray(fitness(pop), dtype=float)
        rec.record(t, pop, fit)
    return rec


def _best_uniform(fit: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Index of a maximal entry per row, ties broken uniformly."""
    top = fit == fit.max(axis=1, keepdims=True)
    return np.argmax(np.where(top, rng.random(fit.shape), -1.0), axis=1)


def _batch_one_comma_lambda(cfg: AlgorithmConfig, b: int, rng: np.random.Generator) -> _Recorder:
    rec = _Recorder(cfg, b)
    fitness = cfg.problem.fitness
    x = _initial(cfg, b, 1, rng)
    rec.record(0, x, np.asarray(fitness(x), dtype=float))
    for t in range(1, cfg.t_max + 1):
        kids = cfg.kernel.sample(np.repeat(x, cfg.lam, axis=1), rng)
        kf = np.asarray(fitness(kids), dtype=float)
        best = _best_uniform(kf, rng)
        x = np.take_along_axis(kids, best[:, None, None], axis=1)
        fx = np.take_along_axis(kf, best[:, None], axis=1)
        rec.record(t, x, fx)
        # an optimal offspring counts as generated even if not selected
        opt = np.asarray(cfg.problem.optimum_test(kids)).any(axis=1)
        rec.hit[(rec.hit < 0) & opt] = t
    return rec


def _batch_single(cfg: AlgorithmConfig, b: int, rng: np.random.Generator, accept_ties: bool) -> _Recorder:
    rec = _Recorder(cfg, b)
    fitness = cfg.problem.fitness
    x = _initial(cfg, b, 1, rng)
    fx = np.asarray(fitness(x), dtype=float)
    rec.record(0, x, fx)
    for t in range(1, cfg.t_max + 1):
        y = _flip_one(x, rng) if cfg.kernel is None else cfg.kernel.sample(x, rng)
        fy = np.asarray(fitness(y), dtype=float)
        take = fy >= fx if accept_ties else fy > fx
        x = np.where(take[..., None], y, x)
        fx = np.where(take, fy, fx)
        rec.record(t, x, fx)
    return rec


def _run_batch(cfg: AlgorithmConfig, bidx: int, size: int) -> _Recorder:
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(bidx,)))
    v = cfg.variant
    if v is Variant.EA:
        return _batch_ea(cfg, size, rng)
    if v is Variant.ONE_COMMA_LAMBDA:
        return _batch_one_comma_lambda(cfg, size, rng)
    if v is Variant.ONE_PLUS_ONE:
        return _batch_single(cfg, size, rng, accept_ties=False)
    return _batch_single(cfg, size, rng, accept_ties=True)


_ACTIVE: Optional[AlgorithmConfig] = None


def _worker(job):
    bidx, size = job
    rec = _run_batch(_ACTIVE, bidx, size)
    return rec.levels, rec.hit, rec.z


def simulate(cfg: AlgorithmConfig, runs: int, workers: int = 1) -> RunStatistics:
    """Run ``runs`` independent runs; ``workers > 1`` uses forked processes."""
    global _ACTIVE
    if runs < 1:
        raise ValueError("runs must be >= 1")
    jobs = [(b, min(BATCH, runs - b * BATCH)) for b in range(math.ceil(runs / BATCH))]
    if workers > 1 and len(jobs) > 1 and "fork" in mp.get_all_start_methods():
        _ACTIVE = cfg
        try:
            with mp.get_context("fork").Pool(min(workers, len(jobs))) as pool:
                parts = pool.map(_worker, jobs)
        finally:
            _ACTIVE = None
    else:
        parts = []
        for bidx, size in jobs:
            rec = _run_batch(cfg, bidx, size)
            parts.append((rec.levels, rec.hit, rec.z))
    levels = np.concatenate([p[0] for p in parts])
    hit = np.concatenate([p[1] for p in parts])
    z = np.concatenate([p[2] for p in parts]) if cfg.record_z else None
    return RunStatistics(cfg, levels, hit, z)


def _expect(cfg: AlgorithmConfig, variant: Variant):
    if cfg.variant is not variant:
        raise ValueError(f"config variant is {cfg.variant.value}, expected {variant.value}")


def run_ea(cfg: AlgorithmConfig, runs: int = 1, workers: int = 1) -> RunStatistics:
    _expect(cfg, Variant.EA)
    return simulate(cfg, runs, workers)


def run_one_comma_lambda(cfg: AlgorithmConfig, runs: int = 1, workers: int = 1) -> RunStatistics:
    _expect(cfg, Variant.ONE_COMMA_LAMBDA)
    return simulate(cfg, runs, workers)


def run_one_plus_one(cfg: AlgorithmConfig, runs: int = 1, workers: int = 1) -> RunStatistics:
    _expect(cfg, Variant.ONE_PLUS_ONE)
    return simulate(cfg, runs, workers)


def run_rls(cfg: AlgorithmConfig, runs: int = 1, workers: int = 1) -> RunStatistics:
    """RLS: flip one uniform gene, accept when the fitness does not drop."""
    _expect(cfg, Variant.RLS)
    return simulate(cfg, runs, workers)


def run_level_chain(chain: AssociatedChain, p0, t_max: int, runs: int, seed: int = 0) -> np.ndarray:
    """Sample level paths ``(runs, t_max+1)`` of the associated (1,1) chain."""
    p0 = np.asarray(p0, dtype=float)
    out = np.empty((runs, t_max + 1), dtype=np.int32)
    for bidx in range(math.ceil(runs / BATCH)):
        lo, hi = bidx * BATCH, min(runs, (bidx + 1) * BATCH)
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(bidx,)))
        lev = rng.choice(p0.size, size=hi - lo, p=p0 / p0.sum())
        out[lo:hi, 0] = lev
        for t in range(1, t_max + 1):
            lev = chain.sample_next(lev, rng)
            out[lo:hi, t] = lev
    return out


# ---------------------------------------------------------------------------
# Estimation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProportionEstimate:
    """Normal-approximation estimates; ``degenerate`` marks ``p`` equal to 0 or 1."""

    t: np.ndarray
    p: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    degenerate: np.ndarray
    n: int

    @property
    def half_width(self) -> np.ndarray:
        return (self.hi - self.lo) / 2


def binomial_ci(successes, n: int, z: float = Z95):
    """``(p, lo, hi, degenerate)`` with ``p +- z sqrt(p(1-p)/n)``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    k = np.asarray(successes, dtype=float)
    p = k / n
    hw = z * np.sqrt(p * (1 - p) / n)
    return p, p - hw, p + hw, (k == 0) | (k == n)


def wilson_ci(successes, n: int, z: float = Z95):
    """Wilson score interval, usable when the normal approximation degenerates."""
    k = np.asarray(successes, dtype=float)
    p = k / n
    den = 1 + z * z / n
    mid = (p + z * z / (2 * n)) / den
    hw = z * np.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    return mid - hw, mid + hw


def bonferroni_z(k: int, level: float = 0.95) -> float:
    """Two-sided normal quantile giving family-wise coverage ``level`` over ``k`` intervals."""
    from statistics import NormalDist

    return NormalDist().inv_cdf(1 - (1 - level) / (2 * max(k, 1)))


def proportion_series(indicators: np.ndarray, iterations: Optional[Iterable[int]] = None, z: float = Z95) -> ProportionEstimate:
    """Per-iteration proportion estimate from a ``(runs, T)`` boolean array."""
    ind = np.asarray(indicators, dtype=bool)
    ts = np.arange(ind.shape[1]) if iterations is None else np.asarray(list(iterations), dtype=int)
    p, lo, hi, deg = binomial_ci(ind[:, ts].sum(axis=0), ind.shape[0], z)
    return ProportionEstimate(ts, p, lo, hi, deg, ind.shape[0])


def estimate_level_probability(
    cfg: AlgorithmConfig, runs: int, level: Optional[int] = None, iterations=None, workers: int = 1
) -> ProportionEstimate:
    """Estimate ``Pr{tracked individual in H_level}`` per iteration with a 95% CI."""
    if runs < 30:
        raise ValueError("need at least 30 runs for a normal-approximation interval")
    stats = simulate(cfg, runs, workers)
    return proportion_series(stats.indicator(level), iterations)


def hit_time_tail(stats: RunStatistics, ts, z: float = Z95) -> ProportionEstimate:
    """Empirical ``Pr{T > t}`` for each ``t`` in ``ts``."""
    ts = np.asarray(list(np.atleast_1d(ts)), dtype=int)
    if np.any(ts > stats.config.t_max):
        raise ValueError("threshold beyond the simulated budget")
    h = stats.hit_time
    late = (h[:, None] < 0) | (h[:, None] > ts[None, :])
    p, lo, hi, deg = binomial_ci(late.sum(axis=0), stats.runs, z)
    return ProportionEstimate(ts, p, lo, hi, deg, stats.runs)


def estimate_hit_time_tail(cfg: AlgorithmConfig, runs: int, t, workers: int = 1) -> ProportionEstimate:
    return hit_time_tail(simulate(cfg, runs, workers), t)


def population_vectors(stats: RunStatistics, t: int):
    """Exact population vectors of every run at iteration ``t``."""
    if stats.z is None:
        raise ValueError("run with record_z=True to keep population vectors")
    lam = stats.config.population_size
    return [PopulationVector(np.round(zz * lam) / lam, lam=lam) for zz in stats.z[:, t].astype(float)]


def default_workers() -> int:
    return max(1, min(4, os.cpu_count() or 1))
