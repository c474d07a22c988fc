"""Potentials and weights on the unit circle, and their trigonometric moments.

A potential ``V`` is a real function of the angle.  For a period count
``Lambda`` the periodized potential is ``V(Lambda * theta)`` and the weight is
``exp(-V(Lambda * theta))``.  Weights are stored with a constant offset so that
their maximum is 1; every quantity computed downstream is invariant under a
constant rescaling of the weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
from scipy import optimize

from .errors import InsufficientResolution, OutOfRegime, OverflowRisk

TWO_PI = 2.0 * np.pi

# exp(-V) may span at most exp(400) before normalization (t <= 200 for cosines)
MAX_OSCILLATION = 400.0
MAX_NODES = 2**20
PIECEWISE_GL_POINTS = 64

_KINDS = ("zero", "cosine", "fourier", "piecewise")


@dataclass(frozen=True)
class PotentialSpec:
    """Description of a real potential V(e^{i theta}).

    Use the constructors :meth:`zero`, :meth:`cosine`, :meth:`fourier` and
    :meth:`piecewise` rather than filling the fields by hand.  The cosine
    family is ``V = -t cos(theta)``, so its wells sit at ``theta = 0``.
    """

    kind: str
    t: float = 0.0
    terms: tuple[tuple[int, float, float], ...] = ()
    breaks: tuple[float, ...] = ()
    values: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown potential kind {self.kind!r}")
        if self.kind == "cosine" and not self.t >= 0:
            raise ValueError("cosine potential needs t >= 0")
        if self.kind == "fourier":
            for k, a, b in self.terms:
                if int(k) != k or k < 1:
                    raise ValueError("fourier terms need integer k >= 1")
                if not (np.isfinite(a) and np.isfinite(b)):
                    raise ValueError("fourier coefficients must be finite reals")
        if self.kind == "piecewise":
            br = np.asarray(self.breaks, dtype=float)
            if len(br) == 0 or len(br) != len(self.values):
                raise ValueError("piecewise potential needs equally many breaks and values")
            if np.any(np.diff(br) <= 0) or br[0] < 0 or br[-1] >= TWO_PI:
                raise ValueError("breakpoints must be strictly increasing within [0, 2pi)")
            if not np.all(np.isfinite(self.values)):
                raise ValueError("piecewise values must be finite")

    # constructors -------------------------------------------------------
    @classmethod
    def zero(cls) -> "PotentialSpec":
        return cls("zero")

    @classmethod
    def cosine(cls, t: float) -> "PotentialSpec":
        return cls("cosine", t=float(t))

    @classmethod
    def fourier(cls, terms: Sequence[Sequence[float]]) -> "PotentialSpec":
        return cls("fourier", terms=tuple((int(k), float(a), float(b)) for k, a, b in terms))

    @classmethod
    def piecewise(cls, breaks: Sequence[float], values: Sequence[float]) -> "PotentialSpec":
        return cls("piecewise", breaks=tuple(map(float, breaks)), values=tuple(map(float, values)))

    # evaluation ---------------------------------------------------------
    def __call__(self, theta):
        theta = np.asarray(theta, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(theta)
        if self.kind == "cosine":
            return -self.t * np.cos(theta)
        if self.kind == "fourier":
            out = np.zeros_like(theta)
            for k, a, b in self.terms:
                out = out + a * np.cos(k * theta) + b * np.sin(k * theta)
            return out
        phase = np.mod(theta, TWO_PI)
        idx = np.searchsorted(np.asarray(self.breaks), phase, side="right") - 1
        # angles before the first break belong to the last (wrapping) piece
        return np.asarray(self.values)[idx]

    @property
    def smooth(self) -> bool:
        return self.kind != "piecewise"

    @property
    def bandwidth(self) -> int:
        """Highest Fourier mode present in V (0 for constant potentials)."""
        if self.kind == "cosine":
            return 1 if self.t > 0 else 0
        if self.kind == "fourier":
            return max((k for k, _, _ in self.terms), default=0)
        return 0

    def scaled(self, factor: float) -> "PotentialSpec":
        """The potential ``factor * V``."""
        if self.kind == "zero":
            return self
        if self.kind == "cosine":
            return PotentialSpec.cosine(factor * self.t)
        if self.kind == "fourier":
            return PotentialSpec.fourier([(k, factor * a, factor * b) for k, a, b in self.terms])
        return PotentialSpec.piecewise(self.breaks, [factor * v for v in self.values])

    def extrema(self) -> tuple[float, float]:
        """(min V, max V) over the circle."""
        if self.kind == "zero":
            return 0.0, 0.0
        if self.kind == "cosine":
            return -self.t, self.t
        if self.kind == "piecewise":
            return min(self.values), max(self.values)
        n = 64 * max(self.bandwidth, 1)
        grid = np.linspace(0.0, TWO_PI, n, endpoint=False)
        vals = self(grid)
        h = TWO_PI / n

        def polish(sign):
            i = int(np.argmin(sign * vals))
            res = optimize.minimize_scalar(
                lambda x: sign * float(self(x)),
                bounds=(grid[i] - h, grid[i] + h),
                method="bounded",
                options={"xatol": 1e-12},
            )
            return min(sign * vals[i], res.fun) * sign

        return polish(1.0), polish(-1.0)

    # serialization ------------------------------------------------------
    def to_dict(self) -> dict[str, Any]:
        if self.kind == "zero":
            return {"kind": "zero"}
        if self.kind == "cosine":
            return {"kind": "cosine", "t": self.t}
        if self.kind == "fourier":
            return {"kind": "fourier", "terms": [list(term) for term in self.terms]}
        return {"kind": "piecewise", "breaks": list(self.breaks), "values": list(self.values)}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "PotentialSpec":
        kind = data.get("kind")
        if kind == "zero":
            return cls.zero()
        if kind == "cosine":
            return cls.cosine(data["t"])
        if kind == "fourier":
            return cls.fourier(data["terms"])
        if kind == "piecewise":
            return cls.piecewise(data["breaks"], data["values"])
        raise ValueError(f"unknown potential kind {kind!r}")


def eval_potential(spec: PotentialSpec, Lambda: int, theta):
    """V_Lambda(e^{i theta}) = V(e^{i Lambda theta})."""
    if Lambda < 1:
        raise ValueError("Lambda must be >= 1")
    return spec(Lambda * np.asarray(theta, dtype=float))


@dataclass(frozen=True)
class Weight:
    """The weight exp(-V(Lambda theta) - log_offset).

    ``log_offset`` defaults to ``min V`` so the stored weight peaks at 1.
    Pass an explicit value to emulate multiplying the weight by a constant.
    """

    spec: PotentialSpec
    multiplier: int = 1
    log_offset: float | None = None
    _range: tuple[float, float] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if int(self.multiplier) != self.multiplier or self.multiplier < 1:
            raise ValueError("period multiplier Lambda must be an integer >= 1")
        lo, hi = self.spec.extrema()
        if hi - lo > MAX_OSCILLATION:
            raise OutOfRegime(
                f"potential oscillation {hi - lo:.1f} exceeds {MAX_OSCILLATION}; "
                "refusing (t > 200 for the cosine family)"
            )
        object.__setattr__(self, "_range", (lo, hi))
        if self.log_offset is None:
            object.__setattr__(self, "log_offset", float(lo))

    @property
    def Lambda(self) -> int:
        return self.multiplier

    def with_multiplier(self, Lambda: int) -> "Weight":
        return Weight(self.spec, Lambda, self.log_offset)

    def base(self) -> "Weight":
        return self.with_multiplier(1)

    def __call__(self, theta):
        return np.exp(-(eval_potential(self.spec, self.multiplier, theta) - self.log_offset))

    def sqrt(self, theta):
        return np.exp(-0.5 * (eval_potential(self.spec, self.multiplier, theta) - self.log_offset))


def eval_weight(w: Weight, theta):
    return w(theta)


@dataclass(frozen=True)
class MomentTable:
    """Moments mu_k = int_0^{2pi} e^{-ik theta} w(theta) d theta, |k| <= max_order.

    Values refer to the stored (offset) weight; :meth:`raw` undoes the offset.
    """

    weight: Weight
    max_order: int
    mu: np.ndarray
    error_estimate: float = 0.0
    n_nodes: int = 0

    def __getitem__(self, k: int) -> complex:
        if abs(k) > self.max_order:
            raise IndexError(f"moment order {k} beyond table ({self.max_order})")
        return complex(self.mu[k + self.max_order])

    @property
    def mu0(self) -> float:
        return float(self.mu[self.max_order].real)

    def raw(self, k: int) -> complex:
        return self[k] * math.exp(-self.weight.log_offset)

    def nonnegative(self) -> np.ndarray:
        """mu_0, mu_1, ..., mu_max_order."""
        return self.mu[self.max_order:]

    def toeplitz(self, size: int) -> np.ndarray:
        """Hermitian Toeplitz matrix T[m, j] = mu_{m-j} of the given size."""
        if size - 1 > self.max_order:
            raise IndexError("moment table too short for requested Toeplitz size")
        idx = np.arange(size)
        return self.mu[(idx[:, None] - idx[None, :]) + self.max_order]


def _hermitian_table(nonneg: np.ndarray) -> np.ndarray:
    nonneg = np.array(nonneg, dtype=complex)
    nonneg[0] = nonneg[0].real
    return np.concatenate([np.conj(nonneg[:0:-1]), nonneg])


def _trapezoid_moments(w: Weight, max_order: int, n: int) -> np.ndarray:
    theta = TWO_PI * np.arange(n) / n
    spectrum = np.fft.fft(w(theta))
    return (TWO_PI / n) * spectrum[: max_order + 1]


def _piecewise_moments(w: Weight, max_order: int, panels_per_piece: int) -> np.ndarray:
    spec = w.spec
    breaks = np.append(np.asarray(spec.breaks), spec.breaks[0] + TWO_PI)
    values = np.asarray(spec.values)
    x, gw = np.polynomial.legendre.leggauss(PIECEWISE_GL_POINTS)
    Lam = w.multiplier
    k = np.arange(max_order + 1)
    total = np.zeros(max_order + 1, dtype=complex)
    # theta-space pieces of the periodized weight, one period at a time
    for period in range(Lam):
        for i in range(len(values)):
            a = (breaks[i] + TWO_PI * period) / Lam
            b = (breaks[i + 1] + TWO_PI * period) / Lam
            height = math.exp(-(values[i] - w.log_offset))
            edges = np.linspace(a, b, panels_per_piece + 1)
            for lo, hi in zip(edges[:-1], edges[1:]):
                nodes = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
                total += height * 0.5 * (hi - lo) * (np.exp(-1j * np.outer(k, nodes)) @ gw)
    return total


def compute_moments(
    w: Weight,
    max_order: int,
    n_nodes: int | None = None,
    *,
    direct: bool = False,
    tol: float = 1e-13,
) -> MomentTable:
    """Trigonometric moments of ``w`` up to ``max_order``.

    Smooth weights use the periodic trapezoid rule, doubling the node count
    until two successive tables agree to ``tol * mu_0``.  Piecewise-constant
    weights use panelled Gauss-Legendre with the same doubling check.

    For ``Lambda > 1`` the moments of the base weight are placed at indices in
    ``Lambda * Z`` (all others vanish identically).  ``direct=True`` integrates
    the periodized weight instead; it is kept as an independent check.
    """
    if max_order < 0:
        raise ValueError("max_order must be >= 0")
    Lam = w.multiplier
    if Lam > 1 and not direct:
        base = compute_moments(w.base(), max_order // Lam, n_nodes, tol=tol)
        nonneg = np.zeros(max_order + 1, dtype=complex)
        nonneg[::Lam] = base.nonnegative()
        return MomentTable(w, max_order, _hermitian_table(nonneg), base.error_estimate, base.n_nodes)

    if w.spec.smooth:
        n = max(64, 4 * (max_order + Lam * w.spec.bandwidth), n_nodes or 0)
        n = 1 << (n - 1).bit_length()
        prev = _trapezoid_moments(w, max_order, n)
        while True:
            if 2 * n > MAX_NODES:
                raise InsufficientResolution(f"moments not converged with {MAX_NODES} nodes")
            n *= 2
            cur = _trapezoid_moments(w, max_order, n)
            err = float(np.max(np.abs(cur - prev)))
            if err <= tol * abs(cur[0]):
                return MomentTable(w, max_order, _hermitian_table(cur), err, n)
            prev = cur

    panels = max(1, (max_order + 1) // 16)
    prev = _piecewise_moments(w, max_order, panels)
    for _ in range(8):
        panels *= 2
        cur = _piecewise_moments(w, max_order, panels)
        err = float(np.max(np.abs(cur - prev)))
        if err <= tol * abs(cur[0]):
            nodes = panels * PIECEWISE_GL_POINTS * len(w.spec.values) * Lam
            return MomentTable(w, max_order, _hermitian_table(cur), err, nodes)
        prev = cur
    raise InsufficientResolution("piecewise moments did not converge")


def bessel_moment_oracle(t: float, k: int, *, scaled: bool = False) -> float:
    """2*pi*I_k(t) from the power series, summed in log scale.

    ``scaled=True`` returns ``2*pi*I_k(t)*exp(-t)``, the moment of the cosine
    weight normalized to peak 1.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    if t > 700:
        raise OverflowRisk("t > 700: I_k(t) overflows double precision")
    k = abs(int(k))
    if t == 0:
        return TWO_PI if k == 0 else 0.0
    log_half = math.log(t / 2.0)
    logs = []
    m = 0
    peak = -math.inf
    while True:
        lt = (2 * m + k) * log_half - math.lgamma(m + 1) - math.lgamma(m + k + 1)
        logs.append(lt)
        peak = max(peak, lt)
        if m > t / 2 and lt < peak - 50:
            break
        m += 1
    total = math.fsum(math.exp(lt - peak) for lt in logs)
    log_value = peak + math.log(total) - (t if scaled else 0.0)
    return TWO_PI * math.exp(log_value)
