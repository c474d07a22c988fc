"""Sampling N eigenangles from the ensemble, two independent ways.

``sample_dpp`` runs the sequential projection-DPP chain on the orthonormal
functions kappa_l pi_l sqrt(w).  ``run_mcmc`` is a Metropolis random walk on
the joint density itself and never touches the polynomials.

Seeds: a run with seed s uses ``numpy.random.Generator(Philox(s))``.  Batches
derive the seed of item i as ``SeedSequence(s, spawn_key=(i,))`` reduced to
one uint64, so item i of a batch can be regenerated on its own.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg, stats

from .errors import GridTooCoarse
from .fredholm import ArcSet
from .kernel import KernelContext
from .potential import TWO_PI, Weight, eval_potential

DPP_GRID = 4096
MASS_TOL = 1e-6
BURN_IN_SWEEPS = 10_000
TARGET_ACCEPTANCE = 0.3


@dataclass(frozen=True)
class EigenSample:
    angles: np.ndarray
    seed: int
    method: str  # "dpp" | "mcmc"

    def __post_init__(self):
        a = np.sort(np.mod(np.asarray(self.angles, dtype=float), TWO_PI))
        object.__setattr__(self, "angles", a)

    @property
    def N(self) -> int:
        return len(self.angles)


def child_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=(index,)).generate_state(1, np.uint64)[0])


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


class DppSampler:
    """Sequential sampler for the projection DPP of a kernel context."""

    def __init__(self, ctx: KernelContext, grid_size: int | None = None):
        self.ctx = ctx
        G = grid_size or DPP_GRID * max(1, -(-ctx.Lambda // ctx.N))
        self.h = TWO_PI / G
        self.grid = self.h * (np.arange(G) + 0.5)
        self.phi = ctx.orthonormal(self.grid)

    def sample(self, seed: int) -> EigenSample:
        rng = _rng(seed)
        N = self.ctx.N
        B = np.eye(N, dtype=complex)
        points = []
        for r in range(N, 0, -1):
            dens = np.sum(np.abs(self.phi @ B) ** 2, axis=1) / r
            mass = float(np.sum(dens) * self.h)
            if abs(mass - 1.0) > MASS_TOL:
                raise GridTooCoarse(f"conditional density mass {mass:.8f} != 1")
            cdf = np.cumsum(dens)
            cell = int(np.searchsorted(cdf, rng.uniform() * cdf[-1], side="right"))
            cell = min(cell, len(cdf) - 1)
            x = self.grid[cell] + self.h * (rng.uniform() - 0.5)
            points.append(x)
            if r > 1:
                v = self.ctx.orthonormal(np.array([x]))[0] @ B
                B = B @ linalg.null_space(v[None, :])
        return EigenSample(np.array(points), seed, "dpp")

    def sample_many(self, n: int, seed: int) -> list[EigenSample]:
        return [self.sample(child_seed(seed, i)) for i in range(n)]


def sample_dpp(ctx: KernelContext, seed: int) -> EigenSample:
    return DppSampler(ctx).sample(seed)


@dataclass(frozen=True)
class McmcRun:
    samples: list[EigenSample]
    acceptance_rate: float
    step: float


def _log_pair(d):
    return np.log(np.abs(np.sin(0.5 * d)) + 1e-300)


def run_mcmc(
    weight: Weight,
    N: int,
    n_samples: int,
    seed: int,
    *,
    n_chains: int | None = None,
    burn_in_sweeps: int = BURN_IN_SWEEPS,
    thin_sweeps: int | None = None,
) -> McmcRun:
    """Metropolis single-site random walk on log p = 2 sum log|e^{ia}-e^{ib}| - sum V_Lambda.

    Chains run in lockstep (vectorized).  The step size is tuned towards 30%
    acceptance during burn-in and frozen afterwards; one configuration per
    chain is recorded every ``thin_sweeps`` sweeps (default N).
    """
    n_chains = n_chains or min(n_samples, 256)
    thin = thin_sweeps or N
    rng = _rng(seed)

    def V(x):
        return eval_potential(weight.spec, weight.multiplier, x)

    X = rng.uniform(0.0, TWO_PI, size=(n_chains, N))
    step = min(1.0, TWO_PI / (N * weight.multiplier))
    others = [np.array([b for b in range(N) if b != a], dtype=np.intp) for a in range(N)]

    def sweep(step):
        accepted = 0
        for a in range(N):
            x = X[:, a]
            prop = x + step * rng.standard_normal(n_chains)
            rest = X[:, others[a]]
            dlog = 2.0 * np.sum(_log_pair(prop[:, None] - rest) - _log_pair(x[:, None] - rest), axis=1)
            dlog -= V(prop) - V(x)
            ok = np.log(rng.uniform(size=n_chains)) < dlog
            X[ok, a] = np.mod(prop[ok], TWO_PI)
            accepted += int(ok.sum())
        return accepted / (N * n_chains)

    block = 50
    for start in range(0, burn_in_sweeps, block):
        acc = np.mean([sweep(step) for _ in range(min(block, burn_in_sweeps - start))])
        step = float(np.clip(step * math.exp(acc - TARGET_ACCEPTANCE), 1e-6, math.pi))

    per_chain = -(-n_samples // n_chains)
    acc_total = 0.0
    records = []
    for _ in range(per_chain):
        acc_total += sum(sweep(step) for _ in range(thin))
        records.append(X.copy())
    acceptance = acc_total / (per_chain * thin)
    samples = [
        EigenSample(records[r][c], seed, "mcmc") for c in range(n_chains) for r in range(per_chain)
    ][:n_samples]
    return McmcRun(samples, acceptance, step)


def sample_mcmc(weight: Weight, N: int, steps: int, seed: int) -> EigenSample:
    """Final state of one chain after ``steps`` sweeps (used as burn-in)."""
    return run_mcmc(weight, N, 1, seed, n_chains=1, burn_in_sweeps=steps).samples[0]


# --- statistics ---------------------------------------------------------------


def _in_arcs(theta: np.ndarray, arcs: ArcSet) -> np.ndarray:
    mask = np.zeros(theta.shape, dtype=bool)
    for a, b in arcs.arcs:
        mask |= np.mod(theta - a, TWO_PI) <= b - a
    return mask


@dataclass(frozen=True)
class EmpiricalStats:
    n_samples: int
    edges: np.ndarray
    density: np.ndarray
    density_se: np.ndarray
    pair_density: np.ndarray
    pair_density_se: np.ndarray
    counts: np.ndarray | None = None
    counts_se: np.ndarray | None = None
    mean_count: float | None = None
    mean_count_se: float | None = None

    def histogram_csv(self) -> str:
        buf = io.StringIO()
        buf.write("bin_lo,bin_hi,density,se\n")
        for lo, hi, d, s in zip(self.edges[:-1], self.edges[1:], self.density, self.density_se):
            buf.write(f"{lo:.17g},{hi:.17g},{d:.17g},{s:.17g}\n")
        return buf.getvalue()


def empirical_statistics(
    samples: list[EigenSample],
    arcs: ArcSet | None = None,
    bins: int = 16,
    pair_bins: int = 16,
    period: float = TWO_PI,
) -> EmpiricalStats:
    """Binned 1-point density, binned 2-point density and counts in ``arcs``, with MC standard errors.

    ``period`` folds angles modulo a period before binning (e.g. 2 pi / Lambda).
    """
    if len(samples) < 2:
        raise ValueError("need at least two samples")
    n = len(samples)
    edges = np.linspace(0.0, period, bins + 1)
    width = period / bins
    per_sample = np.array([np.histogram(np.mod(s.angles, period), edges)[0] for s in samples]) / width
    density = per_sample.mean(axis=0)
    density_se = per_sample.std(axis=0, ddof=1) / math.sqrt(n)

    pedges = np.linspace(0.0, TWO_PI, pair_bins + 1)
    pwidth = TWO_PI / pair_bins
    pair = np.empty((n, pair_bins, pair_bins))
    for i, s in enumerate(samples):
        a, b = np.meshgrid(s.angles, s.angles, indexing="ij")
        off = ~np.eye(len(s.angles), dtype=bool)
        pair[i] = np.histogram2d(a[off], b[off], bins=[pedges, pedges])[0] / pwidth**2
    pair_density = pair.mean(axis=0)
    pair_se = pair.std(axis=0, ddof=1) / math.sqrt(n)

    counts = counts_se = mean_count = mean_count_se = None
    if arcs is not None:
        N = samples[0].N
        k = np.array([int(_in_arcs(s.angles, arcs).sum()) for s in samples])
        onehot = (k[:, None] == np.arange(N + 1)[None, :]).astype(float)
        counts = onehot.mean(axis=0)
        counts_se = onehot.std(axis=0, ddof=1) / math.sqrt(n)
        mean_count = float(k.mean())
        mean_count_se = float(k.std(ddof=1) / math.sqrt(n))
    return EmpiricalStats(
        n, edges, density, density_se, pair_density, pair_se, counts, counts_se, mean_count, mean_count_se
    )


def chi2_two_sample(counts_a, counts_b) -> tuple[float, int, float]:
    """Two-sample chi-square homogeneity test on histogram counts: (statistic, dof, p-value)."""
    table = np.vstack([np.asarray(counts_a, float), np.asarray(counts_b, float)])
    table = table[:, table.sum(axis=0) > 0]
    stat, p, dof, _ = stats.chi2_contingency(table, correction=False)
    return float(stat), int(dof), float(p)


def samples_csv(samples: list[EigenSample]) -> str:
    buf = io.StringIO()
    N = samples[0].N if samples else 0
    buf.write("seed,method," + ",".join(f"theta_{j}" for j in range(N)) + "\n")
    for s in samples:
        buf.write(f"{s.seed},{s.method}," + ",".join(f"{a:.17g}" for a in s.angles) + "\n")
    return buf.getvalue()
