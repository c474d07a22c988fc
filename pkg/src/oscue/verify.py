"""Invariant suites run by ``oscue verify``."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .fredholm import ArcSet, count_distribution, gap_probability, trace_bound_check
from .kernel import KernelContext, closed_form_kernel, density_of_states, scaling_identity_check
from .opuc import build_basis, opuc_direct, opuc_lemma_assemble
from .potential import TWO_PI, PotentialSpec, Weight, bessel_moment_oracle, compute_moments


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(self.value <= self.tol)

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.value:.3e} (tol {self.tol:.1e})"


def lemma_residuals(t: float, lam: int, L: int, N_max: int = 12) -> tuple[float, float]:
    """(max coefficient difference, max relative kappa difference) between assembled and direct OPUC."""
    spec = PotentialSpec.cosine(t)
    base_deg = N_max // L
    base = opuc_direct(compute_moments(Weight(spec, lam), base_deg), base_deg)
    assembled = opuc_lemma_assemble(base, L, N_max)
    direct = build_basis(Weight(spec, lam * L), N_max, path="direct")
    coeff = max(float(np.max(np.abs(a - d))) for a, d in zip(assembled.coeffs, direct.coeffs))
    kappa = float(np.max(np.abs(assembled.kappa - direct.kappa) / direct.kappa))
    return coeff, kappa


def suite_trivial() -> list[Check]:
    zero = PotentialSpec.zero()
    out = []
    m = compute_moments(Weight(zero), 8)
    out.append(Check("zero: mu_0 = 2 pi", abs(m[0] - TWO_PI), 1e-13))
    out.append(Check("zero: mu_3 = 0", abs(m[3]), 1e-13))
    basis = build_basis(Weight(zero, 3), 8)
    out.append(
        Check(
            "zero: pi_l = z^l",
            max(float(np.max(np.abs(c - np.eye(len(c))[-1]))) for c in basis.coeffs),
            1e-13,
        )
    )
    out.append(Check("zero: kappa = (2 pi)^-1/2", float(np.max(np.abs(basis.kappa - TWO_PI**-0.5))), 1e-13))
    ctx = KernelContext.build(zero, 8, 1)
    d = np.linspace(0.1, 6.0, 25)
    dirichlet = np.sin(8 * d / 2) / (TWO_PI * np.sin(d / 2))
    out.append(Check("zero: CD kernel = Dirichlet kernel", float(np.max(np.abs(ctx(d, 0.0) - dirichlet))), 1e-12))
    out.append(Check("zero: K(theta, theta) = N / 2 pi", float(np.max(np.abs(ctx.diagonal(d) - 8 / TWO_PI))), 1e-12))
    out.append(Check("zero: full-circle gap = 0", gap_probability(ctx, ArcSet.full()), 1e-8))
    P = count_distribution(ctx, ArcSet.full())
    out.append(Check("zero: full-circle P(N) = 1", abs(P[-1] - 1.0), 1e-8))
    out.append(Check("zero: empty-arc gap = 1", abs(gap_probability(ctx, ArcSet.empty()) - 1.0), 0.0))
    return out


def suite_lemma() -> list[Check]:
    out = []
    for t in (0.5, 2.0):
        for lam in range(1, 7):
            for L in range(1, 7 // lam + 1):
                if lam * L > 6:
                    continue
                coeff, kappa = lemma_residuals(t, lam, L)
                out.append(Check(f"lemma t={t} lam={lam} L={L}: coefficients", coeff, 1e-9))
                out.append(Check(f"lemma t={t} lam={lam} L={L}: kappa (rel)", kappa, 1e-9))
    return out


def suite_scaling(seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed)
    out = []
    for n, lam, L in ((1, 1, 4), (2, 1, 3), (1, 2, 2)):
        for t in (0.1, 1.0):
            xi = rng.uniform(0, TWO_PI, 50)
            eta = rng.uniform(0, TWO_PI, 50)
            res = scaling_identity_check(PotentialSpec.cosine(t), n, lam, L, xi, eta)
            out.append(Check(f"scaling n={n} lam={lam} L={L} t={t}", res, 1e-9))
    return out


def suite_closed_form(seed: int = 1) -> list[Check]:
    rng = np.random.default_rng(seed)
    out = []
    for t in (0.1, 1.0, 5.0):
        spec = PotentialSpec.cosine(t)
        w0 = bessel_moment_oracle(t, 0, scaled=True)
        for lam, L in ((1, 4), (2, 3), (3, 2)):
            ctx = KernelContext.build(spec, L, lam * L, path="direct")
            xi = rng.uniform(0, TWO_PI, 40)
            eta = rng.uniform(0, TWO_PI, 40)
            res = float(np.max(np.abs(ctx(xi / L, eta / L) - closed_form_kernel(spec, lam, L, xi, eta, w0=w0))))
            out.append(Check(f"closed form t={t} lam={lam} L={L}", res, 1e-9))
    return out


def suite_shift(seed: int = 2) -> list[Check]:
    rng = np.random.default_rng(seed)
    out = []
    for spec, N, Lam in (
        (PotentialSpec.cosine(1.0), 6, 3),
        (PotentialSpec.fourier([(1, 0.3, -0.2), (2, 0.1, 0.4)]), 5, 2),
        (PotentialSpec.cosine(2.0), 4, 8),
    ):
        ctx = KernelContext.build(spec, N, Lam)
        th = rng.uniform(0, TWO_PI, 100)
        ph = rng.uniform(0, TWO_PI, 100)
        shift = TWO_PI / Lam
        out.append(Check(f"kernel shift N={N} Lambda={Lam}", float(np.max(np.abs(ctx(th + shift, ph + shift) - ctx(th, ph)))), 1e-10))
        prof = density_of_states(ctx, th)
        shifted = density_of_states(ctx, th + shift)
        out.append(Check(f"density periodic N={N} Lambda={Lam}", float(np.max(np.abs(prof.rho - shifted.rho))), 1e-10))
    return out


def suite_trace_bound(seed: int = 3, n_configs: int = 20) -> list[Check]:
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n_configs):
        N = int(rng.integers(1, 9))
        lam = int(rng.integers(1, 3))
        t = float(rng.uniform(10, 100))
        eps = float(rng.uniform(0.1, 1.0))
        ctx = KernelContext.build(PotentialSpec.cosine(t), N, lam * N)
        tb = trace_bound_check(ctx, ArcSet.gamma_eps(eps, lam * N))
        out.append(Check(f"trace bound N={N} lam={lam} t={t:.1f} eps={eps:.2f}", tb.lhs - tb.rhs, 1e-9))
    return out


SUITES: dict[str, Callable[[], list[Check]]] = {
    "trivial": suite_trivial,
    "lemma": suite_lemma,
    "scaling": suite_scaling,
    "closed_form": suite_closed_form,
    "shift": suite_shift,
    "trace_bound": suite_trace_bound,
}


def run_suite(name: str) -> list[Check]:
    if name == "all":
        return [c for suite in SUITES.values() for c in suite()]
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {sorted(SUITES) + ['all']}")
    return SUITES[name]()
