"""Finite-N Christoffel-Darboux kernel, density of states and scaling identities.

All kernel values returned here are the *conjugated* kernel

    K(theta, phi) = e^{i(N-1)theta/2} Kcal(theta, phi) e^{-i(N-1)phi/2},

with Kcal = sum_{l<N} kappa_l^2 conj(pi_l(e^{i theta})) pi_l(e^{i phi}) sqrt(w(theta) w(phi)).
K is real and symmetric.  Determinants of kernel matrices are the same for K
and Kcal.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import OutOfRegime
from .opuc import OpucBasis, build_basis
from .potential import TWO_PI, PotentialSpec, Weight, compute_moments

# below this |sin((theta - phi)/2)| the CD quotient is replaced by the sum form
DIAGONAL_SWITCH = 1e-5
GRID_PER_PERIOD = 256


def sin_ratio(x, L):
    """sin(x/2) / sin(x/(2L)), continued by its limit where the denominator vanishes."""
    x = np.asarray(x, dtype=float)
    num = np.sin(0.5 * x)
    den = np.sin(0.5 * x / L)
    small = np.abs(den) < 1e-8
    safe = np.where(small, 1.0, den)
    # L'Hopital at x = 2 pi L j
    limit = L * np.cos(0.5 * x) / np.cos(0.5 * x / L)
    return np.where(small, limit, num / safe)


def sinc(x):
    """sin(x)/x with a Taylor branch near 0."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-4
    safe = np.where(small, 1.0, x)
    x2 = x * x
    return np.where(small, 1.0 - x2 / 6.0 + x2 * x2 / 120.0, np.sin(x) / safe)


@dataclass(frozen=True, eq=False)
class KernelContext:
    """Everything needed to evaluate K_{N,Lambda} at arbitrary angles."""

    N: int
    weight: Weight
    basis: OpucBasis

    @classmethod
    def build(
        cls,
        spec: PotentialSpec,
        N: int,
        Lambda: int = 1,
        *,
        path: str = "auto",
        log_offset: float | None = None,
    ) -> "KernelContext":
        if N < 1:
            raise ValueError("N must be >= 1")
        weight = Weight(spec, Lambda, log_offset)
        return cls(N, weight, build_basis(weight, N, path))

    def __post_init__(self):
        if self.basis.N_max < self.N:
            raise ValueError("basis must reach degree N")

    @property
    def Lambda(self) -> int:
        return self.weight.multiplier

    @property
    def spec(self) -> PotentialSpec:
        return self.weight.spec

    @cached_property
    def _coeff(self) -> np.ndarray:
        # columns: kappa_l * pi_l for l < N
        return self.basis.coefficient_matrix(self.N) * self.basis.kappa[: self.N][None, :]

    @cached_property
    def _psi_coeff(self) -> np.ndarray:
        return self.basis.kappa[self.N] * self.basis.coeffs[self.N]

    def orthonormal(self, theta) -> np.ndarray:
        """Array (..., N) of kappa_l pi_l(e^{i theta}) sqrt(w(theta))."""
        theta = np.asarray(theta, dtype=float)
        powers = np.exp(1j * theta[..., None] * np.arange(self.N))
        return (powers @ self._coeff) * self.weight.sqrt(theta)[..., None]

    def psi(self, theta):
        """Psi_N(e^{i theta}) = kappa_N pi_N(e^{i theta}) sqrt(w(theta))."""
        theta = np.asarray(theta, dtype=float)
        z = np.exp(1j * theta)
        return np.polynomial.polynomial.polyval(z, self._psi_coeff) * self.weight.sqrt(theta)

    def kernel_sum(self, theta, phi):
        """Conjugated kernel from the finite sum, complex-valued (imaginary part is roundoff)."""
        theta, phi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float))
        a = self.orthonormal(theta)
        b = self.orthonormal(phi)
        raw = np.sum(np.conj(a) * b, axis=-1)
        return np.exp(0.5j * (self.N - 1) * (theta - phi)) * raw

    def kernel_cd(self, theta, phi):
        """Christoffel-Darboux quotient; undefined on the diagonal."""
        theta, phi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float))
        d = theta - phi
        b = np.exp(-0.5j * self.N * d) * self.psi(theta) * np.conj(self.psi(phi))
        return np.imag(b) / np.sin(0.5 * d)

    def __call__(self, theta, phi):
        """Real kernel K(theta, phi): CD form off the diagonal, sum form near it."""
        theta, phi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float))
        near = np.abs(np.sin(0.5 * (theta - phi))) < DIAGONAL_SWITCH
        out = np.empty(theta.shape)
        if np.any(near):
            out[near] = np.real(self.kernel_sum(theta[near], phi[near]))
        far = ~near
        if np.any(far):
            out[far] = self.kernel_cd(theta[far], phi[far])
        return out if out.ndim else float(out)

    def diagonal(self, theta):
        """K(theta, theta) = sum_l |kappa_l pi_l|^2 w."""
        return np.sum(np.abs(self.orthonormal(theta)) ** 2, axis=-1)

    def matrix(self, thetas, phis=None) -> np.ndarray:
        """Kernel matrix K(theta_a, phi_b) from the sum form (exactly PSD when phis is None)."""
        thetas = np.asarray(thetas, dtype=float)
        phis = thetas if phis is None else np.asarray(phis, dtype=float)
        a = self.orthonormal(thetas) * np.exp(-0.5j * (self.N - 1) * thetas)[:, None]
        b = self.orthonormal(phis) * np.exp(-0.5j * (self.N - 1) * phis)[:, None]
        return np.real(np.conj(a) @ b.T)

    def trace(self, tol: float = 1e-12) -> float:
        """int_0^{2 pi} K(theta, theta) d theta by the periodic trapezoid rule."""
        n = 1 << max(6, int(4 * (self.N + self.Lambda * max(self.spec.bandwidth, 1))).bit_length())
        prev = None
        while n <= 2**18:
            theta = TWO_PI * np.arange(n) / n
            val = float(TWO_PI * np.mean(self.diagonal(theta)))
            if prev is not None and abs(val - prev) <= tol * max(1.0, abs(val)):
                return val
            prev = val
            n *= 2
        return prev

    def w0(self) -> float:
        """int w over one full turn, for the stored (offset) base weight."""
        return compute_moments(self.weight.base(), 0).mu0


def cd_kernel(ctx: KernelContext, theta, phi):
    return ctx(theta, phi)


@dataclass(frozen=True)
class DensityProfile:
    theta: np.ndarray
    rho: np.ndarray
    N: int
    Lambda: int
    spec: PotentialSpec

    def to_csv(self, fh=None) -> str:
        buf = io.StringIO()
        buf.write(f"# N={self.N} Lambda={self.Lambda} potential={json.dumps(self.spec.to_dict())}\n")
        buf.write("theta,rho\n")
        for th, r in zip(self.theta, self.rho):
            buf.write(f"{th:.17g},{r:.17g}\n")
        text = buf.getvalue()
        if fh is not None:
            fh.write(text)
        return text


def density_of_states(ctx: KernelContext, theta=None) -> DensityProfile:
    """rho(theta) = K(theta, theta) / N on a grid (256 points per period by default)."""
    if theta is None:
        n = GRID_PER_PERIOD * ctx.Lambda
        theta = TWO_PI * np.arange(n) / n
    theta = np.asarray(theta, dtype=float)
    return DensityProfile(theta, ctx.diagonal(theta) / ctx.N, ctx.N, ctx.Lambda, ctx.spec)


def closed_form_kernel(spec: PotentialSpec, lam: int, L: int, xi, eta, w0: float | None = None, log_offset=None):
    """Closed form of K_{L, lam L}(e^{i xi/L}, e^{i eta/L}).

    ``w0`` must refer to the same normalization as the weight (offset
    ``log_offset``, default min V); it is integrated if not given.
    """
    w = Weight(spec, 1, log_offset)
    if w0 is None:
        w0 = compute_moments(w, 0).mu0
    xi, eta = np.asarray(xi, float), np.asarray(eta, float)
    return sin_ratio(xi - eta, L) * w.sqrt(lam * xi) * w.sqrt(lam * eta) / w0


def scaling_identity_check(
    spec: PotentialSpec,
    n: int,
    lam: int,
    L: int,
    xi,
    eta,
    *,
    path: str = "direct",
    contexts: tuple[KernelContext, KernelContext] | None = None,
) -> float:
    """max |K_{nL, lam L}(xi/L, eta/L) - sin_ratio(xi - eta, L) K_{n, lam}(xi, eta)|.

    Both kernels are built independently (``path="direct"`` by default, so the
    large one does not go through the polynomial assembly).
    """
    if contexts is None:
        big = KernelContext.build(spec, n * L, lam * L, path=path)
        small = KernelContext.build(spec, n, lam, path=path)
    else:
        big, small = contexts
    xi, eta = np.asarray(xi, float), np.asarray(eta, float)
    lhs = big(xi / L, eta / L)
    rhs = sin_ratio(xi - eta, L) * small(xi, eta)
    return float(np.max(np.abs(lhs - rhs)))


def equilibrium_density_cosine(t: float, theta):
    """Equilibrium density for W = -t cos(theta), valid while the support is the full circle."""
    if not 0 <= t <= 1:
        raise OutOfRegime("equilibrium density formula needs 0 <= t <= 1 (full support)")
    return (1.0 + t * np.cos(np.asarray(theta, dtype=float))) / TWO_PI


def small_lambda_limit_check(t: float, n: int, x=None, Lambda: int = 2) -> float:
    """sup_x |rho_{N, Lambda}(x / Lambda) - rho_eq(x)| for weight exp(-n W(Lambda theta)), N = n Lambda."""
    if x is None:
        x = TWO_PI * np.arange(64) / 64
    x = np.asarray(x, dtype=float)
    ctx = KernelContext.build(PotentialSpec.cosine(t).scaled(n), n * Lambda, Lambda)
    rho = ctx.diagonal(x / Lambda) / ctx.N
    return float(np.max(np.abs(rho - equilibrium_density_cosine(t, x))))
