"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line."""

import math
from pathlib import Path

import numpy as np
import pytest

from oscue import cli
from oscue.correlation import corr_finite, corr_limit_general
from oscue.fredholm import (
    ArcSet,
    count_distribution,
    count_probability,
    fredholm_det,
    laplace_decay_check,
    series_Mm,
    series_Mm_closed_form,
    solve_nystrom,
    well_trace,
)
from oscue.kernel import KernelContext, closed_form_kernel, density_of_states, small_lambda_limit_check
from oscue.potential import TWO_PI, PotentialSpec, Weight, bessel_moment_oracle, compute_moments
from oscue.sampler import DppSampler, chi2_two_sample, empirical_statistics, run_mcmc
from oscue.verify import lemma_residuals, suite_trace_bound

ROOT = Path(__file__).resolve().parent.parent
GOLDEN = ROOT / "tests" / "golden"
CURVES = ("cue_n1_lam1", "cos01_n1_lam1", "cos01_n1_lam10", "cos01_n2_lam1")


def test_criterion_01_lemma_identity(report):
    for t in (0.5, 2.0):
        for lam in range(1, 7):
            for L in range(1, 6 // lam + 1):
                coeff, kappa = lemma_residuals(t, lam, L, N_max=12)
                report.check(f"t={t} lam={lam} L={L} coeff {coeff:.1e}", coeff <= 1e-9)
                report.check(f"t={t} lam={lam} L={L} kappa {kappa:.1e}", kappa <= 1e-9)
    report.finish()


def test_criterion_02_scaling_identity(report, rng):
    from oscue.kernel import scaling_identity_check

    for n, lam, L in ((1, 1, 4), (2, 1, 3), (1, 2, 2)):
        for t in (0.1, 1.0):
            xi = rng.uniform(0, TWO_PI, 50)
            eta = rng.uniform(0, TWO_PI, 50)
            res = scaling_identity_check(PotentialSpec.cosine(t), n, lam, L, xi, eta)
            report.check(f"(n,lam,L)=({n},{lam},{L}) t={t} residual {res:.1e}", res <= 1e-9)
    report.finish()


def test_criterion_03_closed_form_kernel(report, rng):
    for t in (0.1, 1.0, 5.0, 20.0):
        spec = PotentialSpec.cosine(t)
        w0 = bessel_moment_oracle(t, 0, scaled=True)
        mu0 = compute_moments(Weight(spec), 0).mu0
        report.check(f"t={t} w0 rel {abs(mu0 / w0 - 1):.1e}", abs(mu0 / w0 - 1) <= 1e-10)
        for lam, L in ((1, 2), (1, 4), (2, 3), (3, 2), (1, 8)):
            ctx = KernelContext.build(spec, L, lam * L, path="direct")
            xi = rng.uniform(0, TWO_PI * L, 60)
            eta = rng.uniform(0, TWO_PI * L, 60)
            res = float(np.max(np.abs(ctx(xi / L, eta / L) - closed_form_kernel(spec, lam, L, xi, eta, w0=w0))))
            report.check(f"t={t} lam={lam} L={L} residual {res:.1e}", res <= 1e-9)
    report.finish()


def test_criterion_04_density_of_states(report, rng):
    cases = [
        (PotentialSpec.cosine(1.0), 6, 3),
        (PotentialSpec.cosine(5.0), 8, 16),
        (PotentialSpec.fourier([(1, 0.4, -0.3), (3, 0.2, 0.1)]), 5, 2),
        (PotentialSpec.zero(), 7, 5),
    ]
    for spec, N, Lam in cases:
        ctx = KernelContext.build(spec, N, Lam)
        th = rng.uniform(0, TWO_PI, 100)
        per = float(np.max(np.abs(density_of_states(ctx, th + TWO_PI / Lam).rho - density_of_states(ctx, th).rho)))
        report.check(f"N={N} Lambda={Lam} periodicity {per:.1e}", per <= 1e-10)
        tr = abs(ctx.trace() - N)
        report.check(f"N={N} Lambda={Lam} trace {tr:.1e}", tr <= 1e-8)
    for t in (0.1, 1.0, 5.0):
        spec = PotentialSpec.cosine(t)
        w0 = bessel_moment_oracle(t, 0, scaled=True)
        for lam, L in ((1, 3), (2, 4), (5, 2)):
            ctx = KernelContext.build(spec, L, lam * L)
            xi = rng.uniform(0, TWO_PI * L, 100)
            rho = ctx.diagonal(xi / L) / L
            exact = np.exp(t * (np.cos(lam * xi) - 1.0)) / w0
            err = float(np.max(np.abs(rho - exact)))
            report.check(f"n=1 t={t} lam={lam} L={L} vs w/w0 {err:.1e}", err <= 1e-9)
    report.finish()


def test_criterion_05_moments_vs_bessel(report):
    # elementwise relative 1e-12 where |mu_k| >= 1e-3 mu_0, mu_0-relative below (roundoff floor)
    for t in (0.1, 1.0, 5.0, 20.0):
        table = compute_moments(Weight(PotentialSpec.cosine(t)), 16)
        mu0 = table.mu0
        worst = 0.0
        for k in range(-16, 17):
            exact = bessel_moment_oracle(t, k, scaled=True)
            err = abs(table[k] - exact)
            scale = abs(exact) if abs(exact) >= 1e-3 * mu0 else mu0
            worst = max(worst, err / scale)
        report.check(f"t={t} worst relative {worst:.1e}", worst <= 1e-12)
    report.finish()


def test_criterion_06_limiting_correlation_convergence(report):
    spec = PotentialSpec.cosine(0.1)
    x = np.linspace(-2.0, 2.0, 64)
    small = KernelContext.build(spec, 1, 1)
    limit = np.array([corr_limit_general(small, [0.0, TWO_PI * xi]) for xi in x])
    errors = {}
    for L in (8, 16, 32):
        ctx = KernelContext.build(spec, L, L)
        finite = np.array([corr_finite(ctx, [0.0, TWO_PI * xi / L]) for xi in x]) / L**2
        errors[L] = float(np.max(np.abs(finite - limit)))
    report.check(f"err16/err8 {errors[16] / errors[8]:.3f} <= 0.55", errors[16] <= 0.55 * errors[8])
    report.check(f"err32/err16 {errors[32] / errors[16]:.3f} <= 0.55", errors[32] <= 0.55 * errors[16])
    report.finish()


def test_criterion_07_occupancy(report):
    N, eps = 8, 0.25
    for lam in (1, 2):
        arcs = ArcSet.j_eps(eps, lam * N)
        dev = {}
        for t in (80.0, 160.0):
            ctx = KernelContext.build(PotentialSpec.cosine(t), N, lam * N)
            dev[t] = abs(count_probability(ctx, arcs, 1) - 1.0 / lam)
        report.check(f"lam={lam} ratio {dev[160.0] / dev[80.0]:.3f} <= 0.7", dev[160.0] <= 0.7 * dev[80.0])
        report.check(f"lam={lam} |P1-1/lam| at t=160 {dev[160.0]:.1e} <= 0.05", dev[160.0] <= 0.05)
    report.finish()


def test_criterion_08_fredholm_cross_validation(report):
    eps = 0.25
    for N, lam, t in ((6, 1, 40.0), (6, 2, 40.0), (3, 1, 10.0), (4, 2, 20.0)):
        spec = PotentialSpec.cosine(t)
        ctx = KernelContext.build(spec, N, lam * N)
        arcs = ArcSet.j_eps(eps, lam * N)
        sys_ = solve_nystrom(ctx, arcs)
        det = fredholm_det(sys_, -1.0).real
        Ms = [series_Mm(ctx, arcs, m) for m in range(1, 6)]
        series = 1.0 + math.fsum((-1) ** m * Ms[m - 1] / math.factorial(m) for m in range(1, 5))
        omitted = Ms[4] / math.factorial(5)
        diff = abs(det - series)
        report.check(f"N={N} lam={lam} t={t} |det-series| {diff:.1e}", diff <= max(1e-6, omitted))
        for m in range(1, 5):
            Mc = series_Mm_closed_form(lam, N, t, eps, m)
            # 1e-12 relative slack: M_1 equals 1/lam up to e^{-ct} ~ 1e-18 at t=40
            bound = lam**-m * (1.0 + 1e-12)
            report.check(f"N={N} lam={lam} M_{m}={Ms[m - 1]:.4g} <= lam^-m", Ms[m - 1] <= bound)
            report.check(f"N={N} lam={lam} closed-form M_{m}={Mc:.4g} <= lam^-m", Mc <= bound)
        P = count_distribution(ctx, arcs)
        report.check(f"N={N} lam={lam} sum P - 1 = {P.sum() - 1:.1e}", abs(P.sum() - 1.0) <= 1e-10)
        G = ArcSet.gamma_eps(0.5, lam * N)
        Pg = count_distribution(ctx, G)
        report.check(f"N={N} lam={lam} Gamma sum P - 1 = {Pg.sum() - 1:.1e}", abs(Pg.sum() - 1.0) <= 1e-10)
    report.finish()


def test_criterion_09_trace_bound(report):
    checks = suite_trace_bound(seed=3, n_configs=20)
    report.check(f"{len(checks)} random configurations", len(checks) == 20)
    for c in checks:
        report.check(f"{c.name}: lhs-rhs {c.value:.1e}", c.passed)
    for eps in (0.25, 0.5, 1.0):
        for t in (20.0, 40.0):
            a = well_trace(PotentialSpec.cosine(t), 4, eps)
            b = well_trace(PotentialSpec.cosine(2 * t), 4, eps)
            report.check(f"eps={eps} t={t} tau(2t)/tau(t) {b / a:.2e}", b <= a * math.exp(-(eps**2) * t / 8))
    report.finish()


def test_criterion_10_laplace_decay(report):
    fit = laplace_decay_check(2, 0.25, [40.0, 80.0, 160.0])
    report.check(f"slope {fit.slope:.3f} in [-1.3, -0.8]", -1.3 <= fit.slope <= -0.8)
    report.finish()


@pytest.mark.slow
def test_criterion_11_sampler_consistency(report):
    N, Lam, eps, n = 4, 4, 0.25, 1000
    arcs = ArcSet.j_eps(eps, Lam)
    edges = np.linspace(0.0, TWO_PI, 17)
    for t in (0.0, 2.0):
        spec = PotentialSpec.cosine(t)
        ctx = KernelContext.build(spec, N, Lam)
        dpp = DppSampler(ctx).sample_many(n, seed=2024)
        run = run_mcmc(Weight(spec, Lam), N, n, seed=4048)
        report.check(f"t={t} MCMC acceptance {run.acceptance_rate:.2f}", 0.1 <= run.acceptance_rate <= 0.7)
        ha = np.histogram(np.concatenate([s.angles for s in dpp]), edges)[0]
        hb = np.histogram(np.concatenate([s.angles for s in run.samples]), edges)[0]
        _, _, p = chi2_two_sample(ha, hb)
        report.check(f"t={t} DPP vs MCMC chi2 p={p:.3f}", p > 0.01)
        sys_ = solve_nystrom(ctx, arcs)
        trace = sys_.trace
        P1 = count_probability(ctx, arcs, 1)
        for name, samples in (("dpp", dpp), ("mcmc", run.samples)):
            st = empirical_statistics(samples, arcs)
            z_mean = abs(st.mean_count - trace) / st.mean_count_se
            z_p1 = abs(st.counts[1] - P1) / st.counts_se[1]
            report.check(f"t={t} {name} mean count z={z_mean:.2f}", z_mean <= 3)
            report.check(f"t={t} {name} P(1) z={z_p1:.2f}", z_p1 <= 3)
    report.finish()


def test_criterion_12_equilibrium_regime(report):
    e8 = small_lambda_limit_check(0.5, 8)
    e32 = small_lambda_limit_check(0.5, 32)
    report.check(f"sup error n=32 {e32:.1e} < n=8 {e8:.1e}", e32 < e8)
    report.check(f"sup error n=32 {e32:.1e} <= 0.02/(2 pi)", e32 <= 0.02 / TWO_PI)
    report.finish()


def _read_csv(text: str):
    lines = text.splitlines()
    header, columns = lines[0], lines[1].split(",")
    data = np.array([[float(v) for v in line.split(",")] for line in lines[2:]])
    return header, columns, data


def test_criterion_13_curve_reproduction(report, tmp_path):
    for fig in CURVES:
        for command in ("corr2", "density"):
            out = tmp_path / f"{command}_{fig}.csv"
            code = cli.main([command, "--config", str(ROOT / "configs" / f"{fig}.json"), "--out", str(out)])
            report.check(f"{command} {fig} exit code {code}", code == 0)
            again = tmp_path / f"{command}_{fig}_again.csv"
            cli.main([command, "--config", str(ROOT / "configs" / f"{fig}.json"), "--out", str(again)])
            report.check(f"{command} {fig} byte-identical rerun", out.read_bytes() == again.read_bytes())
            h_new, c_new, d_new = _read_csv(out.read_text())
            h_old, c_old, d_old = _read_csv((GOLDEN / f"{command}_{fig}.csv").read_text())
            same_shape = h_new == h_old and c_new == c_old and d_new.shape == d_old.shape
            report.check(f"{command} {fig} golden header/shape", same_shape)
            if same_shape:
                dev = float(np.max(np.abs(d_new - d_old) / np.maximum(np.abs(d_old), 1e-300)))
                report.check(f"{command} {fig} golden deviation {dev:.1e}", dev <= 1e-10)

    _, cols, data = _read_csv((tmp_path / "corr2_cue_n1_lam1.csv").read_text())
    x = data[:, 0]
    r2 = data[:, cols.index("R2_height_adjusted")]
    exact = 1.0 - np.sinc(x) ** 2
    err = float(np.max(np.abs(r2 - exact)))
    report.check(f"zero panel vs 1 - sinc^2 {err:.1e}", err <= 1e-10)

    # t = 1/10 panel: proportional to w(1) w(e^{2 pi i x}) (1 - sinc^2)
    _, cols, data = _read_csv((tmp_path / "corr2_cos01_n1_lam1.csv").read_text())
    x = data[:, 0]
    r2 = data[:, cols.index("R2_raw")]
    shape = np.exp(np.cos(TWO_PI * x) / 10) * (1.0 - np.sinc(x) ** 2)
    mask = shape > 1e-3
    ratio = r2[mask] / shape[mask]
    spread = float(np.ptp(ratio) / np.mean(ratio))
    report.check(f"t=0.1 R2 shape spread {spread:.1e}", spread <= 1e-10)
    _, cols, data = _read_csv((tmp_path / "density_cos01_n1_lam1.csv").read_text())
    ratio = data[:, cols.index("rho_raw")] / np.exp(np.cos(TWO_PI * data[:, 0]) / 10)
    spread = float(np.ptp(ratio) / np.mean(ratio))
    report.check(f"t=0.1 density shape spread {spread:.1e}", spread <= 1e-10)
    report.finish()
