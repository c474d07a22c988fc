"""m-point correlation functions: finite N, their large-L limits, and the well-localized regime."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .kernel import KernelContext, sinc
from .potential import PotentialSpec, Weight, compute_moments

log = logging.getLogger(__name__)

MAX_POINTS = 12
NEGATIVE_TOL = 1e-10


def _det(matrix: np.ndarray, what: str) -> float:
    """Determinant of a (numerically) PSD matrix, small negatives clamped to 0."""
    value = float(np.linalg.det(matrix))
    if value < 0:
        scale = float(np.prod(np.clip(np.diag(matrix), 0, None))) or 1.0
        if value < -NEGATIVE_TOL * max(scale, 1.0):
            log.warning("%s: determinant %.3e below the clamp tolerance", what, value)
        else:
            log.debug("%s: clamping determinant %.3e to 0", what, value)
        return 0.0
    return value


def _points(values, m_max=MAX_POINTS) -> np.ndarray:
    pts = np.atleast_1d(np.asarray(values, dtype=float))
    if pts.ndim != 1 or not 1 <= len(pts) <= m_max:
        raise ValueError(f"need between 1 and {m_max} points")
    return pts


def corr_finite(ctx: KernelContext, thetas) -> float:
    """R_m^{N, Lambda}(theta_1..theta_m) = det[K(theta_a, theta_b)]."""
    pts = _points(thetas)
    return _det(ctx.matrix(pts), "corr_finite")


def corr_limit_general(ctx_small: KernelContext, xis) -> float:
    """Large-L limit of L^{-m} R_m^{nL, lam L}(xi/L): det[sinc((xi_a - xi_b)/2) K_{n,lam}(xi_a, xi_b)].

    ``ctx_small`` is the kernel context for (n, lam).
    """
    pts = _points(xis)
    d = pts[:, None] - pts[None, :]
    return _det(sinc(0.5 * d) * ctx_small.matrix(pts), "corr_limit_general")


def corr_limit_simple(spec: PotentialSpec, lam: int, xis, w0: float | None = None) -> float:
    """n = 1 limit: prod_j w(lam xi_j) / w0^m times det[sinc((xi_a - xi_b)/2)].

    ``w0`` refers to the weight normalized to peak 1.
    """
    pts = _points(xis)
    w = Weight(spec, 1)
    if w0 is None:
        w0 = compute_moments(w, 0).mu0
    d = pts[:, None] - pts[None, :]
    factor = float(np.prod(w(lam * pts) / w0))
    return factor * _det(sinc(0.5 * d), "corr_limit_simple")


def sine_det_factor(lam: float, ells) -> float:
    """S_m^{(lam)}(l_1..l_m) = det[sinc(pi (l_a - l_b) / lam)]; l may be non-integer."""
    pts = _points(ells)
    d = pts[:, None] - pts[None, :]
    value = _det(sinc(np.pi * d / lam), "sine_det_factor")
    return min(value, 1.0)


@dataclass(frozen=True)
class WellComparison:
    finite: float
    limit: float

    @property
    def error(self) -> float:
        return abs(self.finite - self.limit)


def gaussian_well_limit(lam: int, ells, us, N: int, t: float) -> WellComparison:
    """Compare (N sqrt(t))^{-m} R_m^{N, lam N} at well-centred points with its Gaussian limit.

    The points are theta_j = 2 pi l_j / (lam N) + u_j / (lam N sqrt(t)) and the
    limit is (2 pi)^{-m/2} exp(-|u|^2 / 2) S_m^{(lam)}(l).
    """
    ells = _points(ells)
    us = _points(us)
    if len(ells) != len(us):
        raise ValueError("ells and us must have the same length")
    m = len(ells)
    Lam = lam * N
    thetas = 2 * np.pi * ells / Lam + us / (Lam * np.sqrt(t))
    ctx = KernelContext.build(PotentialSpec.cosine(t), N, Lam)
    finite = corr_finite(ctx, thetas) / (N * np.sqrt(t)) ** m
    limit = (2 * np.pi) ** (-m / 2) * np.exp(-0.5 * np.sum(us**2)) * sine_det_factor(lam, ells)
    return WellComparison(finite, float(limit))
