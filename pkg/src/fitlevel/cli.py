"""Command line front end: ``fitlevel {bounds,simulate,experiment,verify}``.

Exit codes: 0 success, 1 validation error, 2 acceptance failure.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import io
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import acceptance
from . import bounds as B
from . import problems as P
from . import simulator as S
from .levels import BoundMatrix, Kind, NotMonotoneError

EXIT_OK, EXIT_INVALID, EXIT_ACCEPTANCE = 0, 1, 2
BOUND_KINDS = ("lower", "chain", "upper", "infinite", "one_comma")
CONFIG_KEYS = ("preset", "variant", "lambda", "s", "bounds", "runs", "t_max", "t_step", "seed", "init", "level", "plot")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentSpec:
    name: str
    preset: str
    variant: str = "ea"
    lambdas: List[int] = field(default_factory=lambda: [1])
    s_values: List[int] = field(default_factory=lambda: [1])
    bounds: List[str] = field(default_factory=list)
    runs: int = 1000
    t_max: int = 100
    t_step: int = 1
    seed: int = acceptance.DEFAULT_SEED
    init: str = "zeros"
    level: Optional[int] = None
    plot: bool = True

    def validate(self, min_runs: int = 30):
        if self.variant not in {v.value for v in S.Variant}:
            raise ConfigError(f"[{self.name}] unknown variant {self.variant!r}")
        bad = [k for k in self.bounds if k not in BOUND_KINDS]
        if bad:
            raise ConfigError(f"[{self.name}] unknown bound kinds {bad}; choose from {BOUND_KINDS}")
        if self.runs < min_runs:
            raise ConfigError(f"[{self.name}] runs must be >= {min_runs}, got {self.runs}")
        if self.t_max < 0 or self.t_step < 1:
            raise ConfigError(f"[{self.name}] need t_max >= 0 and t_step >= 1")
        if any(x < 1 for x in self.lambdas + self.s_values):
            raise ConfigError(f"[{self.name}] lambda and s values must be >= 1")
        return self

    @property
    def grid(self) -> np.ndarray:
        g = np.arange(0, self.t_max + 1, self.t_step)
        return g if g[-1] == self.t_max else np.append(g, self.t_max)


def _ints(text: str) -> List[int]:
    return [int(x) for x in text.replace(",", " ").split()]


def _words(text: str) -> List[str]:
    return [x for x in text.replace(",", " ").split() if x]


def load_config(path) -> List[ExperimentSpec]:
    cp = configparser.ConfigParser()
    if not cp.read(path):
        raise ConfigError(f"cannot read config {path}")
    specs = []
    for sec in cp.sections():
        c = cp[sec]
        if "preset" not in c:
            raise ConfigError(f"[{sec}] missing 'preset'")
        unknown = sorted(set(c) - set(CONFIG_KEYS))
        if unknown:
            raise ConfigError(f"[{sec}] unknown keys {unknown}")
        try:
            spec = ExperimentSpec(
                name=sec,
                preset=c["preset"],
                variant=c.get("variant", "ea"),
                lambdas=_ints(c.get("lambda", "1")),
                s_values=_ints(c.get("s", "1")),
                bounds=_words(c.get("bounds", "")),
                runs=c.getint("runs", 1000),
                t_max=c.getint("t_max", 100),
                t_step=c.getint("t_step", 1),
                seed=c.getint("seed", acceptance.DEFAULT_SEED),
                init=c.get("init", "zeros"),
                level=c.getint("level") if "level" in c else None,
                plot=c.getboolean("plot", True),
            )
        except ValueError as exc:
            raise ConfigError(f"[{sec}] {exc}") from exc
        specs.append(spec.validate(min_runs=1))
    if not specs:
        raise ConfigError(f"config {path} defines no sections")
    return specs


# ---------------------------------------------------------------------------
# Bounds
# ---------------------------------------------------------------------------


def _initial_vector(spec: ExperimentSpec, pr: P.Preset) -> np.ndarray:
    m = pr.lower.m
    if spec.init == "zeros":
        return np.zeros(m)
    if spec.init == "worst":
        return np.zeros(m)
    if spec.init in ("uniform", "uniform_shared"):
        # level membership of a uniform genotype, by enumeration when small
        n = pr.problem.n
        if n > 20:
            raise ConfigError("bounds from a uniform start need n <= 20")
        from .levels import all_genotypes

        lev = pr.problem.classify(all_genotypes(n))
        return (lev[:, None] >= np.arange(1, m + 1)).mean(axis=0)
    raise ConfigError(f"unsupported init for bounds: {spec.init!r}")


def compute_bounds(spec: ExperimentSpec):
    """``{(kind, param): BoundTrajectory}`` for the requested kinds."""
    pr = P.preset(spec.preset)
    z0 = _initial_vector(spec, pr)
    out = {}
    for kind in spec.bounds:
        if kind == "lower":
            out[(kind, None)] = B.lower_bound_linear(pr.lower, z0, spec.t_max)
        elif kind == "chain":
            p0 = np.concatenate(([1.0], z0)) - np.concatenate((z0, [0.0]))
            out[(kind, None)] = B.lower_bound_chain(
                pr.lower, p0, spec.t_max, all_levels_nonempty=pr.problem.partition.all_nonempty
            )
        elif kind == "upper":
            for s in spec.s_values:
                out[(kind, s)] = B.upper_bound_jensen(pr.upper, z0, s, spec.t_max)
        elif kind in ("infinite", "one_comma"):
            if pr.gamma is None:
                raise ConfigError(f"[{spec.name}] preset {spec.preset} has no exact transition matrix")
            if kind == "infinite":
                for s in spec.s_values:
                    out[(kind, s)] = B.infinite_population_recursion(pr.gamma, z0, s, spec.t_max)
            else:
                for lam in spec.lambdas:
                    out[(kind, lam)] = B.one_comma_lambda_recursion(pr.gamma, z0, lam, spec.t_max)
    return out


def _bound_file(spec, kind, param) -> str:
    tag = "" if param is None else (f"_lam{param}" if kind == "one_comma" else f"_s{param}")
    return f"{spec.name}_{kind}{tag}.csv"


def write_trajectory_csv(traj: B.BoundTrajectory, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "j", "value", "kind"])
        for t, j, v, k in traj.rows():
            w.writerow([t, j, repr(v), k])


def cmd_bounds(specs, out: Path) -> int:
    out.mkdir(parents=True, exist_ok=True)
    for spec in specs:
        for (kind, param), traj in compute_bounds(spec).items():
            path = out / _bound_file(spec, kind, param)
            write_trajectory_csv(traj, path)
            print(f"wrote {path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Simulation and experiments
# ---------------------------------------------------------------------------


def _config(spec: ExperimentSpec, pr: P.Preset, lam: int, s: int, seed: int) -> S.AlgorithmConfig:
    kernel = None if spec.variant == "rls" else pr.kernel
    init = spec.init
    if init == "worst":
        # start at level 0: the complement of the planted assignment, or all zeros
        planted = pr.problem.info.get("planted")
        init = 1 - planted if planted is not None else "zeros"
    return S.AlgorithmConfig(
        spec.variant, pr.problem, kernel, lam=lam, s=s, init=init, t_max=spec.t_max, seed=seed, level=spec.level
    )


def _grid_points(spec: ExperimentSpec):
    if spec.variant == "ea":
        return [(lam, s) for lam in spec.lambdas for s in spec.s_values]
    if spec.variant == "one_comma_lambda":
        return [(lam, 1) for lam in spec.lambdas]
    return [(1, 1)]


def run_experiment(spec: ExperimentSpec, workers: int = 1):
    """Long-format rows ``(preset, lambda, s, t, series, value, ci_lo, ci_hi)``."""
    pr = P.preset(spec.preset)
    level = pr.problem.m if spec.level is None else spec.level
    grid = spec.grid
    rows = []
    for k, (lam, s) in enumerate(_grid_points(spec)):
        cfg = _config(spec, pr, lam, s, spec.seed + k)
        stats = S.simulate(cfg, spec.runs, workers)
        est = S.proportion_series(stats.indicator(level), grid)
        for t, p, lo, hi in zip(est.t, est.p, est.lo, est.hi):
            rows.append((spec.preset, lam, cfg.s, int(t), "empirical", p, max(lo, 0.0), min(hi, 1.0)))
    for (kind, param), traj in compute_bounds(spec).items():
        lam = param if kind == "one_comma" else ""
        s = param if kind in ("upper", "infinite") else ""
        vals = traj.level(level)
        for t in grid:
            rows.append((spec.preset, lam, s, int(t), kind, float(vals[t]), "", ""))
    return rows


def write_experiment_csv(rows, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["preset", "lambda", "s", "t", "series", "value", "ci_lo", "ci_hi"])
        for r in rows:
            w.writerow([x if not isinstance(x, float) else repr(float(x)) for x in r])


def plot_experiment_csv(csv_path: Path, svg_path: Path, title: str = "") -> None:
    """Render the merged CSV; the figure depends only on the file contents."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "fitlevel"
    series = {}
    with open(csv_path, newline="") as fh:
        for r in csv.DictReader(fh):
            key = (r["series"], r["lambda"], r["s"])
            series.setdefault(key, []).append(
                (int(r["t"]), float(r["value"]), r["ci_lo"] and float(r["ci_lo"]), r["ci_hi"] and float(r["ci_hi"]))
            )
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for (name, lam, s), pts in sorted(series.items()):
        pts.sort()
        t = [p[0] for p in pts]
        v = [p[1] for p in pts]
        label = name + (f" lambda={lam}" if lam else "") + (f" s={s}" if s else "")
        if name == "empirical":
            line = ax.plot(t, v, "--", lw=1.2, label=label)[0]
            ax.fill_between(t, [p[2] for p in pts], [p[3] for p in pts], color=line.get_color(), alpha=0.15, lw=0)
        else:
            ax.plot(t, v, "-", lw=1.6, label=label)
    ax.set_xlabel("iteration t")
    ax.set_ylabel("proportion in top level")
    if title:
        ax.set_title(title)
    ax.set_ylim(0, 1)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(svg_path, format="svg", metadata={"Date": None})
    plt.close(fig)


def cmd_experiment(specs, out: Path, workers: int = 1) -> int:
    out.mkdir(parents=True, exist_ok=True)
    for spec in specs:
        path = out / f"{spec.name}.csv"
        write_experiment_csv(run_experiment(spec, workers), path)
        print(f"wrote {path}")
        if spec.plot:
            svg = out / f"{spec.name}.svg"
            plot_experiment_csv(path, svg, f"{spec.name}: {spec.preset}")
            print(f"wrote {svg}")
    return EXIT_OK


def cmd_simulate(spec: ExperimentSpec, out: Optional[Path], workers: int = 1) -> int:
    pr = P.preset(spec.preset)
    buf = io.StringIO()
    for k, (lam, s) in enumerate(_grid_points(spec)):
        stats = S.simulate(_config(spec, pr, lam, s, spec.seed + k), spec.runs, workers)
        stats.to_csv(buf)
    text = buf.getvalue()
    if out is None:
        sys.stdout.write(text)
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)
        print(f"wrote {out}")
    return EXIT_OK


def cmd_verify(quick: bool, seed: int, only=None, inject: Optional[BoundMatrix] = None, workers: int = 1, out=None) -> int:
    lines = []

    def echo(line):
        print(line, flush=True)
        lines.append(line)

    results = acceptance.run_all(quick=quick, seed=seed, only=only, inject=inject, workers=workers, echo=echo)
    failed = [r.number for r in results if not r.passed]
    summary = f"{len(results) - len(failed)}/{len(results)} criteria passed" + (
        f"; failing: {', '.join(f'AC{k}' for k in failed)}" if failed else ""
    )
    echo(summary)
    if out is not None:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text("\n".join(lines) + "\n")
    return EXIT_ACCEPTANCE if failed else EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fitlevel", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        p.add_argument("--config", type=Path, help="INI file with one section per experiment")
        p.add_argument("--seed", type=int, help="override the seed of every section")
        p.add_argument("--runs", type=int, help="override the run count of every section")
        p.add_argument("--out", type=Path, help="output directory or file")
        p.add_argument("--quick", action="store_true", help="reduced run counts")
        p.add_argument("--workers", type=int, default=1, help="worker processes for simulation")
        p.add_argument("--preset", help="problem preset, e.g. vcp:m=8,pm=0.1 (instead of --config)")
        p.add_argument("--variant", default="ea", help="ea, one_comma_lambda, one_plus_one or rls")
        p.add_argument("--lam", default="1", help="offspring counts, comma separated")
        p.add_argument("-s", "--tournament", default="1", help="tournament sizes, comma separated")
        p.add_argument("--t-max", type=int, default=100)
        p.add_argument("--init", default="zeros")
        p.add_argument("--level", type=int)

    p = sub.add_parser("bounds", help="write bound trajectories as CSV")
    common(p)
    p.add_argument("--kinds", default=None, help=f"comma separated subset of {','.join(BOUND_KINDS)}")
    p = sub.add_parser("simulate", help="write per-run records as CSV")
    common(p)
    p = sub.add_parser("experiment", help="simulate, merge with bounds, write CSV and SVG")
    common(p)
    p.add_argument("--kinds", default=None)
    p = sub.add_parser("verify", help="run the acceptance criteria")
    p.add_argument("--seed", type=int, default=acceptance.DEFAULT_SEED)
    p.add_argument("--quick", action="store_true", help="reduced run counts with correspondingly wider intervals")
    p.add_argument("--only", default=None, help="comma separated criterion numbers")
    p.add_argument("--inject-gamma", type=Path, help="CSV matrix added to the monotonicity check")
    p.add_argument("--out", type=Path, help="write the report here too")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--config", type=Path, help=argparse.SUPPRESS)
    p.add_argument("--runs", type=int, help=argparse.SUPPRESS)
    return ap


def _specs_from_args(args) -> List[ExperimentSpec]:
    if args.config:
        specs = load_config(args.config)
    elif args.preset:
        specs = [
            ExperimentSpec(
                name=args.preset.split(":")[0],
                preset=args.preset,
                variant=args.variant,
                lambdas=_ints(args.lam),
                s_values=_ints(args.tournament),
                t_max=args.t_max,
                init=args.init,
                level=args.level,
            )
        ]
    else:
        raise ConfigError("give --config or --preset")
    for spec in specs:
        if args.seed is not None:
            spec.seed = args.seed
        if args.runs is not None:
            spec.runs = args.runs
        if args.quick:
            spec.runs = max(30, spec.runs // 10)
        if getattr(args, "kinds", None) is not None:
            spec.bounds = _words(args.kinds)
        # confidence intervals need a minimal sample; raw per-run output does not
        spec.validate(1 if args.command == "simulate" else 30)
    return specs


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            only = set(_ints(args.only)) if args.only else None
            inject = None
            if args.inject_gamma:
                inject = BoundMatrix.from_csv(args.inject_gamma.read_text(), Kind.EXACT)
            return cmd_verify(args.quick, args.seed, only, inject, args.workers, args.out)
        specs = _specs_from_args(args)
        if args.command == "bounds":
            return cmd_bounds(specs, args.out or Path("out"))
        if args.command == "experiment":
            return cmd_experiment(specs, args.out or Path("out"), args.workers)
        return cmd_simulate(specs[0], args.out, args.workers)
    except (ConfigError, NotMonotoneError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
