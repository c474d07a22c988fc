"""Command-line front end.

    oscue <density|corr2|gap|count|sample|verify> --config FILE [--out PATH] [--seed U64] [--threads K]

Configs are JSON.  Every CSV starts with a ``# config:`` comment carrying the
full (seed-resolved) config, and identical invocations produce identical bytes.

Exit codes: 0 ok, 2 config error, 3 numerical failure, 4 verification failure.
"""

from __future__ import annotations

import argparse
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import fredholm, sampler
from .correlation import corr_limit_general
from .errors import OscueError
from .fredholm import ArcSet
from .kernel import KernelContext, density_of_states
from .potential import TWO_PI, PotentialSpec, Weight
from .verify import run_suite

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VERIFY = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """Parsed command configuration; unknown keys stay in ``params``."""

    potential: PotentialSpec
    N: int | None = None
    Lambda: int | None = None
    n: int | None = None
    lam: int | None = None
    seed: int = 0
    params: dict[str, Any] = field(default_factory=dict)
    raw: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def parse(cls, data: dict[str, Any], seed: int | None = None) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        data = dict(data)
        if seed is not None:
            data["seed"] = seed
        try:
            potential = PotentialSpec.from_dict(data.get("potential", {"kind": "zero"}))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad potential: {exc}") from exc
        ints = {}
        for key in ("N", "Lambda", "n", "lambda"):
            if key in data:
                value = data[key]
                if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                    raise ConfigError(f"{key} must be an integer >= 1")
                ints[key] = value
        s = data.get("seed", 0)
        if not isinstance(s, int) or not 0 <= s < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        known = {"potential", "N", "Lambda", "n", "lambda", "seed"}
        params = {k: v for k, v in data.items() if k not in known}
        return cls(potential, ints.get("N"), ints.get("Lambda"), ints.get("n"), ints.get("lambda"), s, params, data)

    def require(self, *names: str):
        for name in names:
            attr = {"lambda": "lam"}.get(name, name)
            if getattr(self, attr) is None:
                raise ConfigError(f"config needs {name!r}")

    def header(self) -> str:
        return "# config: " + json.dumps(self.raw, sort_keys=True) + "\n"


def _x_grid(cfg: RunConfig) -> np.ndarray:
    spec = cfg.params.get("x", {"start": -2.0, "stop": 2.0, "num": 401})
    try:
        return np.linspace(float(spec["start"]), float(spec["stop"]), int(spec["num"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad x grid: {exc}") from exc


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def cmd_density(cfg: RunConfig) -> str:
    """Density of states: finite (N, Lambda) on a theta grid, or the scaled (n, lambda) profile in x."""
    buf = io.StringIO()
    buf.write(cfg.header())
    if cfg.N is not None:
        cfg.require("Lambda")
        ctx = KernelContext.build(cfg.potential, cfg.N, cfg.Lambda)
        theta = None
        if "grid" in cfg.params:
            g = int(cfg.params["grid"])
            theta = TWO_PI * np.arange(g) / g
        prof = density_of_states(ctx, theta)
        buf.write(prof.to_csv())
        return buf.getvalue()
    cfg.require("n", "lambda")
    ctx = KernelContext.build(cfg.potential, cfg.n, cfg.lam)
    x = _x_grid(cfg)
    rho = ctx.diagonal(TWO_PI * x) / cfg.n
    rho0 = float(ctx.diagonal(np.array([0.0]))[0]) / cfg.n
    buf.write("x,rho_raw,rho_height_adjusted\n")
    for xi, r in zip(x, rho):
        buf.write(f"{_fmt(xi)},{_fmt(r)},{_fmt(r / rho0)}\n")
    return buf.getvalue()


def corr2_table(potential: PotentialSpec, n: int, lam: int, x: np.ndarray) -> np.ndarray:
    """Columns x, R2_raw, R2_height_adjusted, rho_raw, rho_height_adjusted at xi = (0, 2 pi x)."""
    ctx = KernelContext.build(potential, n, lam)
    R1_0 = float(ctx.diagonal(np.array([0.0]))[0])
    rho0 = R1_0 / n
    rows = []
    for xi in x:
        R2 = corr_limit_general(ctx, [0.0, TWO_PI * xi])
        rho = float(ctx.diagonal(np.array([TWO_PI * xi]))[0]) / n
        rows.append((xi, R2, R2 / R1_0**2, rho, rho / rho0))
    return np.array(rows)


def cmd_corr2(cfg: RunConfig) -> str:
    cfg.require("n", "lambda")
    table = corr2_table(cfg.potential, cfg.n, cfg.lam, _x_grid(cfg))
    buf = io.StringIO()
    buf.write(cfg.header())
    buf.write("x,R2_raw,R2_height_adjusted,rho_raw,rho_height_adjusted\n")
    for row in table:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def _arcs(cfg: RunConfig, default: str) -> ArcSet:
    Lam = cfg.lam * cfg.N
    if "arcs" in cfg.params:
        try:
            return ArcSet(tuple(tuple(a) for a in cfg.params["arcs"]), "custom")
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad arcs: {exc}") from exc
    if "epsilon" not in cfg.params:
        raise ConfigError("config needs 'epsilon' or 'arcs'")
    eps = float(cfg.params["epsilon"])
    try:
        return ArcSet.gamma_eps(eps, Lam) if default == "gamma" else ArcSet.j_eps(eps, Lam)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _potentials(cfg: RunConfig) -> list[PotentialSpec]:
    if "t_values" not in cfg.params:
        return [cfg.potential]
    return [PotentialSpec.cosine(float(t)) for t in cfg.params["t_values"]]


def _probability_report(cfg: RunConfig, spec: PotentialSpec, kind: str) -> dict[str, Any]:
    arcs = _arcs(cfg, kind)
    ctx = KernelContext.build(spec, cfg.N, cfg.lam * cfg.N)
    sys_ = fredholm.solve_nystrom(ctx, arcs)
    P = fredholm.count_distribution_from_eigenvalues(sys_.eigenvalues)
    counts = np.zeros(cfg.N + 1)
    counts[: len(P)] = P
    report: dict[str, Any] = {
        "potential": spec.to_dict(),
        "gap_prob": float(np.clip(fredholm.fredholm_det(sys_, -1.0).real, 0.0, 1.0)),
        "counts": [float(p) for p in counts],
        "trace": sys_.trace,
        "nodes_used": sys_.n_nodes,
        "converged": sys_.converged,
    }
    if kind == "gamma":
        tb = fredholm.trace_bound_check(ctx, arcs)
        report["trace_bound"] = {"lhs": tb.lhs, "rhs": tb.rhs, "tau": tb.tau, "holds": tb.holds}
    if cfg.params.get("series_check"):
        order = int(cfg.params.get("series_order", 4))
        Ms = [fredholm.series_Mm(ctx, arcs, m) for m in range(1, order + 2)]
        truncated = fredholm.alternating_series(Ms[:order])
        first_omitted = Ms[order] / float(np.prod(np.arange(1, order + 2)))
        report["series"] = {
            "M": Ms[:order],
            "alternating_sum": truncated,
            "nystrom_det": report["gap_prob"],
            "difference": abs(truncated - report["gap_prob"]),
            "first_omitted_term": first_omitted,
            "agrees": abs(truncated - report["gap_prob"]) <= max(1e-6, first_omitted),
        }
    return report


def _probability_command(cfg: RunConfig, kind: str, threads: int) -> str:
    cfg.require("N", "lambda")
    specs = _potentials(cfg)
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        reports = list(pool.map(lambda s: _probability_report(cfg, s, kind), specs))
    out = reports[0] if "t_values" not in cfg.params else {"sweep": reports}
    out = {"config": cfg.raw, **out}
    return json.dumps(out, indent=2, sort_keys=True) + "\n"


def cmd_gap(cfg: RunConfig, threads: int = 1) -> str:
    return _probability_command(cfg, "gamma", threads)


def cmd_count(cfg: RunConfig, threads: int = 1) -> str:
    return _probability_command(cfg, "J", threads)


def cmd_sample(cfg: RunConfig, out: Path | None) -> tuple[str, str, str]:
    """Returns (samples CSV, histogram CSV, JSON summary)."""
    cfg.require("N", "Lambda")
    n_samples = int(cfg.params.get("n_samples", 1000))
    method = cfg.params.get("method", "dpp")
    bins = int(cfg.params.get("bins", 16))
    if method not in ("dpp", "mcmc", "both"):
        raise ConfigError("method must be dpp, mcmc or both")
    weight = Weight(cfg.potential, cfg.Lambda)
    summary: dict[str, Any] = {"config": cfg.raw}
    dpp = mcmc = None
    if method in ("dpp", "both"):
        ctx = KernelContext.build(cfg.potential, cfg.N, cfg.Lambda)
        dpp = sampler.DppSampler(ctx).sample_many(n_samples, cfg.seed)
    if method in ("mcmc", "both"):
        run = sampler.run_mcmc(
            weight, cfg.N, n_samples, sampler.child_seed(cfg.seed, 2**32),
            burn_in_sweeps=int(cfg.params.get("burn_in_sweeps", sampler.BURN_IN_SWEEPS)),
        )
        mcmc = run.samples
        summary["mcmc"] = {"acceptance_rate": run.acceptance_rate, "step": run.step}
    samples = (dpp or []) + (mcmc or [])
    period = TWO_PI / cfg.Lambda if cfg.params.get("fold") else TWO_PI
    stats = sampler.empirical_statistics(samples, bins=bins, period=period)
    if dpp and mcmc:
        edges = np.linspace(0.0, TWO_PI, bins + 1)
        ha = np.histogram(np.concatenate([s.angles for s in dpp]), edges)[0]
        hb = np.histogram(np.concatenate([s.angles for s in mcmc]), edges)[0]
        stat, dof, p = sampler.chi2_two_sample(ha, hb)
        summary["chi2_dpp_vs_mcmc"] = {"statistic": stat, "dof": dof, "p_value": p, "pass_1pct": p > 0.01}
    summary["n_samples"] = len(samples)
    return (
        cfg.header() + sampler.samples_csv(samples),
        cfg.header() + stats.histogram_csv(),
        json.dumps(summary, indent=2, sort_keys=True) + "\n",
    )


def cmd_verify(suite: str) -> tuple[str, bool]:
    checks = run_suite(suite)
    lines = [c.line() for c in checks]
    ok = all(c.passed for c in checks)
    lines.append(f"{sum(c.passed for c in checks)}/{len(checks)} checks passed")
    return "\n".join(lines) + "\n", ok


def _emit(text: str, out: Path | None):
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="oscue", description=__doc__.split("\n\n")[0])
    p.add_argument("command", choices=["density", "corr2", "gap", "count", "sample", "verify"])
    p.add_argument("suite", nargs="?", help="verification suite (verify only)")
    p.add_argument("--config", type=Path)
    p.add_argument("--out", type=Path)
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int, default=int(os.environ.get("OSCUE_THREADS", "1")))
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            suite = args.suite
            if args.config is not None:
                suite = json.loads(args.config.read_text()).get("suite", suite)
            report, ok = cmd_verify(suite or "all")
            _emit(report, args.out)
            return EXIT_OK if ok else EXIT_VERIFY
        if args.config is None:
            raise ConfigError("--config is required")
        try:
            data = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        cfg = RunConfig.parse(data, args.seed)
        if args.command == "density":
            _emit(cmd_density(cfg), args.out)
        elif args.command == "corr2":
            _emit(cmd_corr2(cfg), args.out)
        elif args.command == "gap":
            _emit(cmd_gap(cfg, args.threads), args.out)
        elif args.command == "count":
            _emit(cmd_count(cfg, args.threads), args.out)
        else:
            samples, hist, summary = cmd_sample(cfg, args.out)
            if args.out is None:
                sys.stdout.write(samples)
            else:
                args.out.write_text(samples)
                args.out.with_name(args.out.stem + "_hist.csv").write_text(hist)
            sys.stdout.write(summary)
    except (ConfigError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OscueError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
