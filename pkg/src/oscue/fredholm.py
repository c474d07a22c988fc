"""Gap and counting probabilities on arc sets via Fredholm determinants.

The production route is a Nystrom discretization of K restricted to the arcs.
Because K is a rank-N projection kernel, K(theta_i, theta_j) sqrt(w_i w_j) =
(F F^H)_{ij} with F[i, l] = sqrt(w_i) phi_l(theta_i), and the nonzero spectrum
of the nodes x nodes Nystrom matrix is that of the N x N Gram matrix F^H F.
The M_m series (multiple integrals of kernel determinants) is the independent
check.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import integrate

from .errors import CostCap, ProbabilityOutOfRange
from .kernel import KernelContext, sinc
from .potential import TWO_PI, PotentialSpec, Weight, bessel_moment_oracle, compute_moments

log = logging.getLogger(__name__)

CLAMP_TOL = 1e-6
MAX_SERIES_ORDER = 6
MAX_SERIES_TUPLES = 20_000_000
_SERIES_NODES = {1: 96, 2: 64, 3: 40, 4: 24, 5: 16, 6: 10}
# per panel; the well integrals use up to three panels
_WELL_NODES = {1: 96, 2: 64, 3: 40, 4: 32, 5: 24, 6: 16}


@dataclass(frozen=True)
class ArcSet:
    """Finite union of disjoint arcs (start, end) with end - start <= 2 pi.

    ``period`` > 1 records that the set is invariant under rotation by
    2 pi / period and that arc j is arc 0 shifted by 2 pi j / period.
    """

    arcs: tuple[tuple[float, float], ...] = ()
    label: str = "custom"
    eps: float | None = None
    period: int = 1

    def __post_init__(self):
        arcs = tuple((float(a), float(b)) for a, b in self.arcs)
        object.__setattr__(self, "arcs", arcs)
        for a, b in arcs:
            if not b > a:
                raise ValueError(f"arc ({a}, {b}) must have end > start")
            if b - a > TWO_PI + 1e-12:
                raise ValueError("an arc cannot exceed a full turn")
        if self.measure > TWO_PI + 1e-12:
            raise ValueError("total arc measure exceeds 2 pi")
        if len(arcs) > 1:
            starts = sorted((a % TWO_PI, a % TWO_PI + (b - a)) for a, b in arcs)
            for (a0, b0), (a1, _) in zip(starts, starts[1:] + [(starts[0][0] + TWO_PI, 0.0)]):
                if b0 > a1 + 1e-12:
                    raise ValueError("arcs overlap modulo 2 pi")

    @property
    def measure(self) -> float:
        return float(sum(b - a for a, b in self.arcs))

    @property
    def is_empty(self) -> bool:
        return not self.arcs

    @classmethod
    def empty(cls) -> "ArcSet":
        return cls((), "empty")

    @classmethod
    def full(cls) -> "ArcSet":
        return cls(((0.0, TWO_PI),), "full")

    @classmethod
    def gamma_eps(cls, eps: float, Lambda: int) -> "ArcSet":
        """Complement of the eps/Lambda-neighbourhoods of the Lambda wells 2 pi j / Lambda."""
        if not 0 < eps < np.pi:
            raise ValueError("eps must lie in (0, pi)")
        arcs = tuple(((TWO_PI * j + eps) / Lambda, (TWO_PI * (j + 1) - eps) / Lambda) for j in range(Lambda))
        return cls(arcs, "gamma", eps, Lambda)

    @classmethod
    def j_eps(cls, eps: float, Lambda: int) -> "ArcSet":
        """The arc |theta| <= 2 pi eps / Lambda around the well at 0."""
        if not 0 < eps < 0.5:
            raise ValueError("eps must lie in (0, 1/2)")
        half = TWO_PI * eps / Lambda
        return cls(((-half, half),), "J", eps, 1)

    def to_dict(self) -> dict:
        return {"arcs": [list(a) for a in self.arcs], "label": self.label, "eps": self.eps}

    def quadrature(self, n_per_arc: int) -> tuple[np.ndarray, np.ndarray]:
        """Gauss-Legendre nodes and weights, n_per_arc on each arc."""
        if self.is_empty:
            return np.empty(0), np.empty(0)
        x, gw = np.polynomial.legendre.leggauss(n_per_arc)
        if self.period > 1:
            a, b = self.arcs[0]
            base = 0.5 * (b - a) * x + 0.5 * (a + b)
            nodes = (base[None, :] + TWO_PI * np.arange(self.period)[:, None] / self.period).ravel()
            weights = np.tile(0.5 * (b - a) * gw, self.period)
            return nodes, weights
        nodes = np.concatenate([0.5 * (b - a) * x + 0.5 * (a + b) for a, b in self.arcs])
        weights = np.concatenate([0.5 * (b - a) * gw for a, b in self.arcs])
        return nodes, weights


@dataclass(frozen=True, eq=False)
class NystromSystem:
    """Nystrom discretization of K 1_J with symmetrized weights."""

    ctx: KernelContext
    arcs: ArcSet
    nodes: np.ndarray
    weights: np.ndarray
    converged: bool = True
    _factor: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        F = self.ctx.orthonormal(self.nodes) * np.sqrt(self.weights)[:, None]
        # conjugating phase: makes the assembled matrix the real kernel K
        F = F * np.exp(-0.5j * (self.ctx.N - 1) * self.nodes)[:, None]
        object.__setattr__(self, "_factor", F)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @cached_property
    def matrix(self) -> np.ndarray:
        """A[i, j] = sqrt(w_i w_j) K(theta_i, theta_j) (real symmetric)."""
        F = self._factor
        return np.real(np.conj(F) @ F.T)

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        """The N eigenvalues of the Gram matrix (all other eigenvalues of A vanish)."""
        if self.n_nodes == 0:
            return np.zeros(0)
        F = self._factor
        gram = F.conj().T @ F
        return np.linalg.eigvalsh(0.5 * (gram + gram.conj().T))

    @property
    def trace(self) -> float:
        return float(np.sum(np.abs(self._factor) ** 2))


def build_nystrom(ctx: KernelContext, arcs: ArcSet, n_per_arc: int = 48) -> NystromSystem:
    nodes, weights = arcs.quadrature(n_per_arc)
    return NystromSystem(ctx, arcs, nodes, weights)


def fredholm_det(sys: NystromSystem, z: complex) -> complex:
    """det(1 + z K 1_J) = prod_i (1 + z e_i)."""
    return complex(np.prod(1.0 + z * sys.eigenvalues))


def count_distribution_from_eigenvalues(eigs) -> np.ndarray:
    """P(k) = [x^k] prod_i (1 + (x - 1) e_i), k = 0..len(eigs)."""
    e = np.clip(np.asarray(eigs, dtype=float), 0.0, 1.0)
    poly = np.ones(1)
    for ei in e:
        poly = np.convolve(poly, [1.0 - ei, ei])
    return poly


def solve_nystrom(
    ctx: KernelContext,
    arcs: ArcSet,
    n_start: int = 48,
    tol: float = 1e-10,
    n_max: int = 3072,
) -> NystromSystem:
    """Double the nodes per arc until the count distribution moves by <= tol."""
    if arcs.is_empty:
        return NystromSystem(ctx, arcs, np.empty(0), np.empty(0))
    n = n_start
    prev = build_nystrom(ctx, arcs, n)
    while 2 * n <= n_max:
        n *= 2
        cur = build_nystrom(ctx, arcs, n)
        pa = count_distribution_from_eigenvalues(prev.eigenvalues)
        pb = count_distribution_from_eigenvalues(cur.eigenvalues)
        if np.max(np.abs(pa - pb)) <= tol:
            return cur
        prev = cur
    log.warning("Nystrom discretization not converged at %d nodes per arc", n)
    return NystromSystem(ctx, arcs, prev.nodes, prev.weights, converged=False)


def _check_probability(value: float, what: str) -> float:
    if value < -CLAMP_TOL or value > 1 + CLAMP_TOL:
        raise ProbabilityOutOfRange(f"{what} = {value:.3e} outside [0, 1]")
    clamped = min(max(value, 0.0), 1.0)
    if clamped != value:
        log.info("%s clamped by %.2e", what, abs(clamped - value))
    return clamped


def gap_probability(ctx: KernelContext, arcs: ArcSet, **kw) -> float:
    """P(no eigenvalue in arcs) = det(1 - K 1_arcs)."""
    sys = solve_nystrom(ctx, arcs, **kw)
    return _check_probability(fredholm_det(sys, -1.0).real, "gap probability")


def count_distribution(ctx: KernelContext, arcs: ArcSet, **kw) -> np.ndarray:
    """P(exactly k eigenvalues in arcs), k = 0..N."""
    sys = solve_nystrom(ctx, arcs, **kw)
    probs = count_distribution_from_eigenvalues(sys.eigenvalues)
    out = np.zeros(ctx.N + 1)
    out[: len(probs)] = probs
    return out


def count_probability(ctx: KernelContext, arcs: ArcSet, k: int, **kw) -> float:
    if not 0 <= k <= ctx.N:
        raise ValueError("k must lie in 0..N")
    return _check_probability(float(count_distribution(ctx, arcs, **kw)[k]), f"P({k})")


# --- M_m series -----------------------------------------------------------


def _tensor_integral(nodes, weights, m, det_of_block, chunk=200_000) -> float:
    """sum over all m-tuples of nodes of prod(weights) * det_of_block(index tuple array).

    The summand is symmetric and vanishes on repeated indices, so only strictly
    increasing tuples are visited and the sum is scaled by m!.
    """
    n = len(nodes)
    if math.comb(n, m) > MAX_SERIES_TUPLES:
        raise CostCap(f"{math.comb(n, m)} quadrature tuples exceed the cap {MAX_SERIES_TUPLES}")
    total = []
    idx_iter = itertools.combinations(range(n), m)
    while True:
        block = np.array(list(itertools.islice(idx_iter, chunk)), dtype=np.intp)
        if block.size == 0:
            break
        block = block.reshape(-1, m)
        dets = det_of_block(block)
        total.append(np.sum(dets * np.prod(weights[block], axis=1)))
    return math.factorial(m) * math.fsum(total)


def _check_order(m: int):
    if m < 1:
        raise ValueError("m must be >= 1")
    if m > MAX_SERIES_ORDER:
        raise CostCap(f"M_m series capped at m = {MAX_SERIES_ORDER} (cost grows as nodes^m)")


def series_Mm(ctx: KernelContext, arcs: ArcSet, m: int, n_per_arc: int | None = None) -> float:
    """M_m = int_{J^m} det[K(theta_j, theta_k)] d theta by tensor Gauss-Legendre."""
    _check_order(m)
    if arcs.is_empty:
        return 0.0
    nodes, weights = arcs.quadrature(n_per_arc or _SERIES_NODES[m])
    K = ctx.matrix(nodes)

    def dets(block):
        return np.linalg.det(K[block[:, :, None], block[:, None, :]])

    return _tensor_integral(nodes, weights, m, dets)


def _well_weight(t: float):
    """x -> e^{t cos(2 pi x)} / w0 evaluated without overflow."""
    w0_scaled = bessel_moment_oracle(t, 0, scaled=True)
    return lambda x: np.exp(t * (np.cos(TWO_PI * x) - 1.0)) / w0_scaled


def well_quadrature(eps: float, t: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre on [-eps, eps] with a central panel of width ~8 well widths."""
    x, gw = np.polynomial.legendre.leggauss(n)
    sigma = 1.0 / (TWO_PI * math.sqrt(t)) if t > 0 else eps
    c = min(eps, 8.0 * sigma)
    edges = [-eps, -c, c, eps] if c < eps else [-eps, eps]
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        nodes.append(0.5 * (b - a) * x + 0.5 * (a + b))
        weights.append(0.5 * (b - a) * gw)
    return np.concatenate(nodes), np.concatenate(weights)


def series_Mm_closed_form(lam: int, N: int, t: float, eps: float, m: int, n_nodes: int | None = None) -> float:
    """M_m on J_eps for the cosine potential with Lambda = lam N, from the closed-form kernel.

    (2 pi / (lam N))^m int_{[-eps, eps]^m} det[sin(pi d / lam) / sin(pi d / (lam N))]
    prod_j e^{t cos(2 pi xi_j)} / w0 d xi.
    """
    _check_order(m)
    nodes, weights = well_quadrature(eps, t, n_nodes or _WELL_NODES[m])
    d = nodes[:, None] - nodes[None, :]
    den = np.sin(np.pi * d / (lam * N))
    with np.errstate(invalid="ignore", divide="ignore"):
        core = np.where(np.abs(den) < 1e-14, float(N), np.sin(np.pi * d / lam) / np.where(den == 0, 1.0, den))
    g = _well_weight(t)(nodes)
    scale = (TWO_PI / (lam * N)) ** m

    def dets(block):
        return np.linalg.det(core[block[:, :, None], block[:, None, :]])

    return scale * _tensor_integral(nodes, weights * g, m, dets)


def series_Mm_limit(lam: int, t: float, eps: float, m: int, n_nodes: int | None = None) -> float:
    """N -> infinity form: (2 pi / lam)^m int S_m^{(lam)}(xi) prod_j e^{t cos(2 pi xi_j)} / w0 d xi."""
    _check_order(m)
    nodes, weights = well_quadrature(eps, t, n_nodes or _WELL_NODES[m])
    d = nodes[:, None] - nodes[None, :]
    core = sinc(np.pi * d / lam)
    g = _well_weight(t)(nodes)

    def dets(block):
        return np.linalg.det(core[block[:, :, None], block[:, None, :]])

    return (TWO_PI / lam) ** m * _tensor_integral(nodes, weights * g, m, dets)


def alternating_series(Ms) -> float:
    """sum_m (-1)^m M_m / m!, with M_0 = 1."""
    return 1.0 + math.fsum((-1) ** m * M / math.factorial(m) for m, M in enumerate(Ms, start=1))


# --- estimates ------------------------------------------------------------


@dataclass(frozen=True)
class TraceBound:
    lhs: float
    rhs: float
    tau: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs + 1e-9


def well_trace(spec: PotentialSpec, N: int, eps: float) -> float:
    """tau = (N / w0) int_eps^{2 pi - eps} w(phi) d phi: the trace of K 1_{Gamma_eps} when N | Lambda."""
    w = Weight(spec, 1)
    w0 = compute_moments(w, 0).mu0
    val, _ = integrate.quad(lambda p: float(w(p)), eps, TWO_PI - eps, epsabs=0.0, epsrel=1e-13, limit=400)
    return N * val / w0


def trace_bound_check(ctx: KernelContext, gamma: ArcSet) -> TraceBound:
    """1 - det(1 - K 1_Gamma) against tau e^{tau + 1}.

    tau uses the closed-form weight integral when Gamma is a Gamma_eps set and
    N divides Lambda; otherwise the Nystrom trace.
    """
    if gamma.is_empty:
        return TraceBound(0.0, math.e, 0.0)
    sys = solve_nystrom(ctx, gamma)
    lhs = 1.0 - _check_probability(fredholm_det(sys, -1.0).real, "gap probability")
    if gamma.label == "gamma" and ctx.Lambda % ctx.N == 0 and gamma.period == ctx.Lambda:
        tau = well_trace(ctx.spec, ctx.N, gamma.eps)
    else:
        tau = sys.trace
    return TraceBound(lhs, tau * math.exp(tau + 1.0), tau)


@dataclass(frozen=True)
class LaplaceFit:
    t: np.ndarray
    M: np.ndarray
    slope: float


def laplace_decay_check(lam: int, eps: float, t_list, m: int = 2, n_nodes: int = 40) -> LaplaceFit:
    """Fit log M_m^{limit}(t) against log t; M_m = O(1/t) for m >= 2."""
    if m < 2:
        raise ValueError("m = 1 is excluded: M_1 tends to the constant 1/lam")
    t = np.asarray(sorted(t_list), dtype=float)
    if len(t) < 3:
        raise ValueError("need at least three t values")
    M = np.array([series_Mm_limit(lam, ti, eps, m, n_nodes) for ti in t])
    slope = float(np.polyfit(np.log(t), np.log(M), 1)[0])
    return LaplaceFit(t, M, slope)
