"""Monic orthogonal polynomials on the unit circle (OPUC).

Construction routes:

* :func:`opuc_direct` solves the Toeplitz moment systems of the periodized
  weight with a Cholesky factorization.
* :func:`opuc_from_weight` obtains the same Cholesky factor from a QR of the
  sqrt-weighted Fourier matrix, which halves the loss of digits.
* :func:`opuc_lemma_assemble` builds the polynomials for ``w_{lambda L}`` from
  those of ``w_lambda`` via ``pi_{nL+k}(z) = z^k pi_n(z^L)``, with the
  normalizers copied over.  This reduces degree-N work to degree N/L work and
  is the production route (:func:`build_basis`).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy import linalg

from .errors import DegreeOutOfRange, IllConditioned, NotPositiveDefinite
from .potential import MomentTable, PotentialSpec, Weight, compute_moments

CONDITION_CAP = 1e12
# cond of the sqrt-weighted Fourier matrix; its square is cond of the Toeplitz matrix
FACTOR_CONDITION_CAP = 1e8


@dataclass(frozen=True)
class OpucBasis:
    """Monic OPUC pi_0..pi_{N_max} for a weight, with normalizers kappa_l.

    ``coeffs[l]`` holds the coefficients of pi_l in ascending powers; the last
    one is exactly 1.  ``kappa`` refers to the stored (offset) weight.
    """

    weight: Weight
    coeffs: tuple[np.ndarray, ...]
    kappa: np.ndarray
    path: str  # "direct" | "lemma"

    @property
    def N_max(self) -> int:
        return len(self.coeffs) - 1

    @property
    def Lambda(self) -> int:
        return self.weight.multiplier

    def coefficient_matrix(self, n: int | None = None) -> np.ndarray:
        """Square matrix C with C[j, l] = coefficient of z^j in pi_l, l < n."""
        n = self.N_max + 1 if n is None else n
        C = np.zeros((n, n), dtype=complex)
        for ell in range(n):
            C[: ell + 1, ell] = self.coeffs[ell]
        return C

    def to_dict(self) -> dict[str, Any]:
        return {
            "V": self.weight.spec.to_dict(),
            "Lambda": self.Lambda,
            "log_offset": self.weight.log_offset,
            "degrees": self.N_max,
            "coeffs": [[[c.real, c.imag] for c in vec] for vec in self.coeffs],
            "kappa": [float(k) for k in self.kappa],
            "path": self.path,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "OpucBasis":
        weight = Weight(PotentialSpec.from_dict(data["V"]), int(data["Lambda"]), data.get("log_offset"))
        coeffs = tuple(np.array([complex(re, im) for re, im in vec]) for vec in data["coeffs"])
        if len(coeffs) != data["degrees"] + 1:
            raise ValueError("coefficient list does not match 'degrees'")
        return cls(weight, coeffs, np.asarray(data["kappa"], dtype=float), data["path"])


def opuc_direct(moments: MomentTable, N_max: int) -> OpucBasis:
    """OPUC up to degree ``N_max`` from the Toeplitz moment matrix.

    With T[m, j] = mu_{m-j} the monic coefficients c of pi_l satisfy
    T_l c = kappa_l^{-2} e_last.  The Cholesky factor of the largest matrix
    contains those of all leading blocks, so one factorization serves every
    degree, and kappa_l = 1 / L[l, l].
    """
    if N_max < 0:
        raise ValueError("N_max must be >= 0")
    T = moments.toeplitz(N_max + 1)
    eig = linalg.eigvalsh(T)
    if eig[0] <= 0:
        # a negative eigenvalue at roundoff scale means the matrix is numerically singular
        if abs(eig[0]) <= 1e-13 * len(eig) * eig[-1]:
            raise IllConditioned("Toeplitz matrix is numerically singular; reduce N or t")
        raise NotPositiveDefinite("moment matrix is not positive definite")
    cond = eig[-1] / eig[0]
    if cond > CONDITION_CAP:
        raise IllConditioned(f"Toeplitz condition number {cond:.3g} exceeds {CONDITION_CAP:g}; reduce N or t")
    try:
        L = linalg.cholesky(T, lower=True)
    except linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from exc
    diag = np.real(np.diag(L))
    coeffs = []
    for ell in range(N_max + 1):
        rhs = np.zeros(ell + 1, dtype=complex)
        rhs[-1] = 1.0
        Lb = L[: ell + 1, : ell + 1]
        y = linalg.solve_triangular(Lb, rhs, lower=True)
        x = linalg.solve_triangular(Lb, y, lower=True, trans="C")
        c = x / x[-1]
        c[-1] = 1.0
        coeffs.append(c)
    return OpucBasis(moments.weight, tuple(coeffs), 1.0 / diag, "direct")


def opuc_from_weight(weight: Weight, N_max: int, n_nodes: int | None = None) -> OpucBasis:
    """OPUC from a QR factorization of the sqrt-weighted Fourier matrix.

    On an M-point trapezoid grid, A[g, j] = sqrt(2 pi w(theta_g) / M) e^{i j theta_g}
    satisfies A^H A = T (the moment matrix of trapezoid moments), so the R
    factor of A is the Cholesky factor of T without ever forming T.  The
    accuracy then scales with cond(A) = sqrt(cond(T)).  Only for smooth
    weights; piecewise weights go through :func:`opuc_direct`.
    """
    if not weight.spec.smooth:
        return opuc_direct(compute_moments(weight, N_max, direct=True), N_max)
    if N_max < 0:
        raise ValueError("N_max must be >= 0")
    resolved = compute_moments(weight, N_max, direct=True).n_nodes
    M = max(resolved, 4 * (N_max + 1), n_nodes or 0)
    M = 1 << (M - 1).bit_length()
    theta = 2.0 * np.pi * np.arange(M) / M
    A = np.sqrt(2.0 * np.pi / M * weight(theta))[:, None] * np.exp(1j * np.outer(theta, np.arange(N_max + 1)))
    R = linalg.qr(A, mode="r")[0][: N_max + 1]
    sv = linalg.svdvals(R)
    if sv[-1] <= 0:
        raise NotPositiveDefinite("weighted Fourier matrix is rank deficient")
    cond = sv[0] / sv[-1]
    if cond > FACTOR_CONDITION_CAP:
        raise IllConditioned(
            f"weighted Fourier matrix condition {cond:.3g} exceeds {FACTOR_CONDITION_CAP:g}; reduce N or t"
        )
    diag = np.diag(R)
    C = linalg.solve_triangular(R, np.eye(N_max + 1, dtype=complex)) * diag[None, :]
    coeffs = []
    for ell in range(N_max + 1):
        c = C[: ell + 1, ell].copy()
        c[-1] = 1.0
        coeffs.append(c)
    return OpucBasis(weight, tuple(coeffs), 1.0 / np.abs(diag), "direct")


def opuc_lemma_assemble(base: OpucBasis, L: int, N_max: int) -> OpucBasis:
    """OPUC for ``w_{lambda L}`` from the basis of ``w_lambda``.

    Degree n*L + k (0 <= k < L) is z^k pi_n(z^L); kappa is inherited from
    degree n of the base.
    """
    if L < 1:
        raise ValueError("L must be >= 1")
    if N_max // L > base.N_max:
        raise ValueError(f"base basis needs degree >= {N_max // L}, has {base.N_max}")
    coeffs = []
    kappa = np.empty(N_max + 1)
    for deg in range(N_max + 1):
        n, k = divmod(deg, L)
        vec = np.zeros(deg + 1, dtype=complex)
        vec[k::L] = base.coeffs[n]
        coeffs.append(vec)
        kappa[deg] = base.kappa[n]
    weight = base.weight.with_multiplier(base.Lambda * L)
    return OpucBasis(weight, tuple(coeffs), kappa, "lemma")


def build_basis(weight: Weight, N_max: int, path: str = "auto") -> OpucBasis:
    """OPUC basis for ``weight`` up to ``N_max``.

    ``path="auto"`` (or ``"lemma"``) factorizes for the base weight only, to
    degree N_max // Lambda, and assembles the rest.  ``path="direct"``
    integrates the periodized weight and solves the full Toeplitz system;
    it is the independent route used to check the assembly.
    """
    Lam = weight.multiplier
    if path == "direct":
        moments = compute_moments(weight, N_max, direct=True)
        return opuc_direct(moments, N_max)
    if path not in ("auto", "lemma"):
        raise ValueError(f"unknown construction path {path!r}")
    base_deg = N_max // Lam
    base = opuc_from_weight(weight.base(), base_deg)
    if Lam == 1:
        return base
    return opuc_lemma_assemble(base, Lam, N_max)


def eval_poly(basis: OpucBasis, ell: int, z, *, check_circle: bool = True):
    """Evaluate pi_ell at z (Horner).  z should lie on the unit circle."""
    if ell < 0 or ell > basis.N_max:
        raise DegreeOutOfRange(f"degree {ell} outside 0..{basis.N_max}")
    z = np.asarray(z, dtype=complex)
    if check_circle and np.any(np.abs(np.abs(z) - 1.0) > 1e-12):
        raise ValueError("eval_poly expects points on the unit circle")
    return np.polynomial.polynomial.polyval(z, basis.coeffs[ell])


def rotation_check(basis: OpucBasis, k: int, ell: int, theta_samples) -> float:
    """Max |e^{-2 pi i ell k / Lambda} pi_ell(z e^{2 pi i k / Lambda}) - pi_ell(z)|."""
    Lam = basis.Lambda
    z = np.exp(1j * np.asarray(theta_samples, dtype=float))
    if Lam == 1:
        # the rotation is by a full turn; the identity is exact
        return 0.0
    phase = np.exp(2j * np.pi * k / Lam)
    lhs = np.exp(-2j * np.pi * ell * k / Lam) * eval_poly(basis, ell, z * phase, check_circle=False)
    return float(np.max(np.abs(lhs - eval_poly(basis, ell, z))))


def orthogonality_residuals(basis: OpucBasis, moments: MomentTable) -> np.ndarray:
    """|int e^{-im theta} pi_ell w d theta| for all m < ell, as a lower-triangular array."""
    n = basis.N_max + 1
    out = np.zeros((n, n))
    for ell in range(n):
        c = basis.coeffs[ell]
        for m in range(ell):
            out[ell, m] = abs(sum(c[j] * moments[m - j] for j in range(ell + 1)))
    return out
