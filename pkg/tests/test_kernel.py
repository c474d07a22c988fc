import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oscue.errors import OutOfRegime
from oscue.kernel import (
    KernelContext,
    cd_kernel,
    closed_form_kernel,
    density_of_states,
    equilibrium_density_cosine,
    scaling_identity_check,
    sin_ratio,
    sinc,
    small_lambda_limit_check,
)
from oscue.potential import TWO_PI, PotentialSpec, bessel_moment_oracle


@pytest.fixture(scope="module")
def ctx():
    return KernelContext.build(PotentialSpec.fourier([(1, 0.5, -0.3), (2, 0.2, 0.4)]), 7, 3)


def test_zero_potential_dirichlet():
    c = KernelContext.build(PotentialSpec.zero(), 8)
    assert cd_kernel(c, 0.3, 0.0) == pytest.approx(np.sin(8 * 0.3 / 2) / (TWO_PI * np.sin(0.15)), abs=1e-14)
    assert c.diagonal(1.1) == pytest.approx(8 / TWO_PI, rel=1e-14)


def test_sum_form_is_real(ctx, rng):
    th, ph = rng.uniform(0, TWO_PI, (2, 200))
    assert np.max(np.abs(np.imag(ctx.kernel_sum(th, ph)))) <= 1e-12


def test_cd_and_sum_forms_agree(ctx, rng):
    th, ph = rng.uniform(0, TWO_PI, (2, 200))
    keep = np.abs(np.sin(0.5 * (th - ph))) > 1e-3
    assert np.max(np.abs(ctx.kernel_cd(th[keep], ph[keep]) - np.real(ctx.kernel_sum(th[keep], ph[keep])))) < 1e-9


def test_diagonal_branch_is_continuous(ctx):
    for th in (0.0, 1.0, 4.0):
        assert abs(ctx(th, th) - ctx(th, th + 1e-6)) <= 1e-3 * ctx.N
        assert abs(ctx(th, th + 2e-5) - np.real(ctx.kernel_sum(th, th + 2e-5))) < 1e-9


def test_symmetry(ctx, rng):
    th, ph = rng.uniform(-10, 10, (2, 100))
    assert np.allclose(ctx(th, ph), ctx(ph, th), atol=1e-12)


def test_shift_symmetry(ctx, rng):
    th, ph = rng.uniform(0, TWO_PI, (2, 100))
    s = TWO_PI / ctx.Lambda
    assert np.max(np.abs(ctx(th + s, ph + s) - ctx(th, ph))) <= 1e-10


def test_nonnegative_diagonal_and_trace(ctx):
    assert np.all(ctx.diagonal(np.linspace(0, TWO_PI, 500)) >= 0)
    assert ctx.trace() == pytest.approx(ctx.N, abs=1e-8)


def test_reproducing_property(ctx, rng):
    n = 512
    sigma = TWO_PI * np.arange(n) / n
    th, ph = rng.uniform(0, TWO_PI, (2, 5))
    lhs = np.array([TWO_PI * np.mean(ctx(a, sigma) * ctx(sigma, b)) for a, b in zip(th, ph)])
    assert np.max(np.abs(lhs - ctx(th, ph))) <= 1e-7


@given(st.floats(1e-3, 1e3))
def test_weight_rescaling_invariance(c):
    spec = PotentialSpec.cosine(1.5)
    a = KernelContext.build(spec, 5, 2)
    b = KernelContext.build(spec, 5, 2, log_offset=a.weight.log_offset - np.log(c))
    th = np.linspace(0, TWO_PI, 13)
    assert np.max(np.abs(a(th, th[::-1]) - b(th, th[::-1]))) < 1e-10


def test_matrix_matches_pointwise(ctx, rng):
    th = rng.uniform(0, TWO_PI, 6)
    K = ctx.matrix(th)
    assert np.allclose(K, ctx(th[:, None], th[None, :]), atol=1e-12)
    assert np.min(np.linalg.eigvalsh(K)) > -1e-12


def test_closed_form_single_point():
    spec = PotentialSpec.cosine(0.1)
    c = KernelContext.build(spec, 4, 4, path="direct")
    xi, eta = 0.2, 1.1
    assert c(xi / 4, eta / 4) == pytest.approx(float(closed_form_kernel(spec, 1, 4, xi, eta)), abs=1e-10)


def test_scaling_identity_trivial_and_examples(rng):
    spec = PotentialSpec.cosine(1.0)
    xi, eta = rng.uniform(0, TWO_PI, (2, 50))
    assert scaling_identity_check(spec, 2, 1, 1, xi, eta) == 0.0
    assert scaling_identity_check(PotentialSpec.cosine(0.1), 1, 1, 4, 0.2, 1.1) <= 1e-10
    assert scaling_identity_check(spec, 2, 1, 3, xi, eta, path="auto") <= 1e-9


def test_sin_ratio_and_sinc_branches():
    assert sin_ratio(0.0, 5) == 5.0
    assert sin_ratio(1e-12, 3) == pytest.approx(3.0)
    assert sin_ratio(1.0, 1) == 1.0
    x = np.array([0.0, 1e-6, 1e-4, 0.3])
    assert np.allclose(sinc(x), np.sinc(x / np.pi), rtol=1e-15, atol=0)


def test_density_examples(rng):
    zero = density_of_states(KernelContext.build(PotentialSpec.zero(), 5, 2))
    assert np.allclose(zero.rho, 1 / TWO_PI, rtol=1e-13)
    assert len(zero.theta) == 256 * 2
    t, lam, L = 2.0, 3, 2
    c = KernelContext.build(PotentialSpec.cosine(t), L, lam * L)
    xi = rng.uniform(0, TWO_PI, 20)
    exact = np.exp(t * np.cos(lam * xi)) / bessel_moment_oracle(t, 0)
    assert np.allclose(density_of_states(c, xi / L).rho, exact, atol=1e-12)


def test_density_profile_mean_and_csv(ctx):
    prof = density_of_states(ctx)
    assert prof.rho.mean() == pytest.approx(1 / TWO_PI, abs=1e-8)
    text = prof.to_csv()
    head = text.splitlines()
    assert head[0].startswith("# N=7 Lambda=3 potential={")
    assert head[1] == "theta,rho"
    assert len(head) == 2 + len(prof.theta)


def test_equilibrium_density():
    assert equilibrium_density_cosine(0, 1.0) == pytest.approx(1 / TWO_PI)
    assert equilibrium_density_cosine(1, np.pi) == pytest.approx(0.0, abs=1e-16)
    assert equilibrium_density_cosine(0.5, 0.0) == pytest.approx(1.5 / TWO_PI)
    with pytest.raises(OutOfRegime):
        equilibrium_density_cosine(1.5, 0.0)


def test_equilibrium_density_solves_variational_problem():
    # Fourier oracle: 2 int log|e^{ix}-e^{iy}| rho(y) dy - W(x) const on the support
    t = 0.7
    n = 2048
    y = TWO_PI * np.arange(n) / n
    rho = equilibrium_density_cosine(t, y)
    x = y[:16] + 0.5 * TWO_PI / n
    pot = np.array([2 * TWO_PI * np.mean(np.log(np.abs(2 * np.sin(0.5 * (xi - y)))) * rho) for xi in x])
    total = pot + t * np.cos(x)
    assert np.ptp(total) < 1e-3


def test_small_lambda_limit():
    assert small_lambda_limit_check(0.0, 4) < 1e-12
    assert small_lambda_limit_check(0.5, 32) < small_lambda_limit_check(0.5, 8)
