"""Acceptance gate: one test per criterion, each recording a pass/fail line.

The recorded lines are printed in the terminal summary under
"acceptance criteria".
"""

import math

import numpy as np
import pytest

from purfid import channels, matcore, metrics, noise, perturb
from purfid.harness import cli, report, slopes
from purfid.noise import AveragingSpec

from .conftest import PREDICTOR_LAW_TOL, random_hermitian, random_state, record_acceptance

KET0 = matcore.bloch_to_density([0, 0, 1])
ION_CONTROLS = (1.0, 0.3)
SIGMAS = (0.02, 0.04, 0.06, 0.08, 0.10)


def gate(label: str, ok: bool, detail: str) -> None:
    record_acceptance(f"[{'PASS' if ok else 'FAIL'}] {label}: {detail}")
    assert ok, detail


@pytest.fixture(scope="module")
def ion_sweep():
    """Quadrature metrics and closed-form predictions on the sigma ladder."""
    ch = channels.ion_trap_channel()
    rows = []
    for s in SIGMAS:
        model = noise.gaussian([s, s])
        rep = metrics.evaluate(ch, KET0, ION_CONTROLS, model, AveragingSpec("gauss_hermite", order=20))
        pred = perturb.ion_trap_predict(KET0, *ION_CONTROLS, model)
        generic = perturb.predict(ch, KET0, ION_CONTROLS, model)
        rows.append((s, rep, pred, generic))
    return rows


def _random_case(rng):
    kind = rng.choice(["ion_trap", "depolarizing", "unitary"])
    if kind == "ion_trap":
        ch = channels.ion_trap_channel()
        lam = rng.uniform(-math.pi, math.pi, 2)
    elif kind == "depolarizing":
        ch = channels.depolarizing_channel()
        lam = rng.dirichlet(np.ones(4))
    else:
        dim = int(rng.integers(2, 4))
        ch = channels.unitary_generator_channel(random_hermitian(rng, dim))
        lam = rng.uniform(-2, 2, 1)
    rho = random_state(rng, ch.dim)
    n = ch.arity
    if rng.integers(2):
        model = noise.shift(rng.normal(size=n) * rng.uniform(0, 0.3))
    else:
        g = rng.normal(size=(n, n)) * rng.uniform(0.01, 0.3)
        mean = rng.normal(size=n) * 0.05 if rng.integers(2) else None
        model = noise.gaussian(cov=g @ g.T, mean=mean)
    if ch.affine_in_controls and rng.integers(2):
        spec = AveragingSpec("affine_exact")
    else:
        spec = AveragingSpec("gauss_hermite", order=4 if ch.affine_in_controls else 12)
    return kind, ch, rho, lam, model, spec


def test_c01_exact_residual_identity():
    rng = np.random.default_rng(20240101)
    worst, kinds = 0.0, set()
    for _ in range(200):
        kind, ch, rho, lam, model, spec = _random_case(rng)
        kinds.add((kind, model.kind, spec.method))
        rep = metrics.evaluate(ch, rho, lam, model, spec)
        worst = max(worst, abs(rep.residual - rep.residual_identity))
    gate("C1 residual identity", worst <= 1e-12,
         f"200 random cases ({len(kinds)} channel/noise/method combinations), worst gap {worst:.2e} <= 1e-12")


def test_c02_depolarizing_closed_form():
    ch = channels.depolarizing_channel()
    worst, residuals = 0.0, []
    epsilons = (1e-1, 1e-2, 1e-3)
    for eps in epsilons:
        rep = metrics.evaluate(ch, KET0, [1, 0, 0, 0], noise.shift([-eps, eps, 0, 0]),
                               AveragingSpec("affine_exact"))
        worst = max(worst, abs(rep.p - ((1 - eps) ** 2 + eps**2)), abs(rep.f - (1 - eps)),
                    abs(rep.residual + eps**2))
        residuals.append((eps, rep.residual))
    fit = slopes.fit_slope(residuals, 1e-13)
    ok = worst <= 1e-12 and abs(fit.slope - 2.0) <= 0.02
    gate("C2 depolarizing closed form", ok,
         f"worst deviation {worst:.2e} <= 1e-12, residual slope {fit.slope:.4f} in 2.00 +/- 0.02")


@pytest.mark.parametrize("case", ["identity_baseline", "mixed_baseline"])
def test_c03_biased_law_order(case):
    ch = channels.depolarizing_channel()
    if case == "identity_baseline":
        rho, p, direction = KET0, np.array([1.0, 0, 0, 0]), np.array([-1.0, 1, 0, 0])
    else:
        rho = matcore.bloch_to_density([0.3, -0.2, 0.6])
        p, direction = np.array([0.7, 0.1, 0.1, 0.1]), np.array([-0.6, 0.3, 0.2, 0.1])
    points = []
    for eps in (0.1, 0.05, 0.025, 0.0125):
        rep = metrics.evaluate(ch, rho, p, noise.shift(eps * direction), AveragingSpec("affine_exact"))
        points.append((eps, abs(rep.f - (rep.p + rep.p0) / 2) / abs(rep.f - rep.p0)))
    fit = slopes.fit_slope(points)
    gate(f"C3 biased law order ({case})", abs(fit.slope - 1.0) <= 0.1,
         f"ratio slope {fit.slope:.4f} in 1.0 +/- 0.1")


def test_c04_zero_mean_law_order(ion_sweep):
    res = slopes.fit_slope([(s, rep.residual) for s, rep, _, _ in ion_sweep], 1e-13)
    dec = slopes.fit_slope([(s, rep.p0 - rep.p) for s, rep, _, _ in ion_sweep], 1e-13)
    ok = abs(res.slope - 4.0) <= 0.7 and abs(dec.slope - 2.0) <= 0.3
    gate("C4 zero-mean law order", ok,
         f"|residual| slope {res.slope:.4f} in 4.0 +/- 0.7, (P0 - P) slope {dec.slope:.4f} in 2.0 +/- 0.3")


def test_c05_predictor_cross_validation():
    ch = channels.ion_trap_channel()
    rng = np.random.default_rng(55)
    states = [("pure", matcore.pure_state([0.6, 0.8j])), ("mixed", random_state(rng, pure=False))]
    # correlated second moments exercise every coefficient, including the cross term
    model = noise.gaussian(cov=[[1.0, 0.3], [0.3, 0.5]])
    worst = 0.0
    for theta in np.linspace(0.2, 3.0, 5):
        for phi in np.arange(5) * 2 * math.pi / 5:
            for _, rho in states:
                closed = perturb.ion_trap_predict(rho, theta, phi, model).correction_term
                fd = perturb.predict(ch, rho, [theta, phi], model, h2=1e-3).correction_term
                worst = max(worst, abs(closed - fd))
    gate("C5 predictor cross-validation", worst <= 1e-6,
         f"5x5 grid x pure/mixed, worst |closed - finite difference| {worst:.2e} <= 1e-6")


def test_c06_predictor_accuracy(ion_sweep):
    closed = slopes.fit_slope([(s, rep.f - pred.f_pred) for s, rep, pred, _ in ion_sweep], 1e-13)
    generic = slopes.fit_slope([(s, rep.f - g.f_pred) for s, rep, _, g in ion_sweep], 1e-13)
    ok = closed.slope >= 3.5 and generic.slope >= 3.5
    gate("C6 predictor accuracy", ok,
         f"|F - f_pred| slope {closed.slope:.4f} (closed form), {generic.slope:.4f} (generic), both >= 3.5")


def test_c07_structural_law(predictor_law_stats):
    rng = np.random.default_rng(7)
    before = predictor_law_stats["calls"]
    worst = 0.0
    for _ in range(50):
        _, ch, rho, lam, model, _ = _random_case(rng)
        outs = [perturb.predict(ch, rho, lam, model)]
        if ch.kind == "depolarizing":
            outs.append(perturb.depolarizing_predict(rho, lam, noise.moments(model)[0]))
        if ch.kind == "ion_trap":
            zero_mean = noise.gaussian(cov=model.cov + np.eye(2) * 1e-3)
            outs.append(perturb.ion_trap_predict(rho, lam[0], lam[1], zero_mean))
        for out in outs:
            worst = max(worst, abs(out.f_pred - (out.p_pred + out.p0) / 2))
    calls = predictor_law_stats["calls"] - before
    ok = worst <= PREDICTOR_LAW_TOL and predictor_law_stats["violations"] == 0
    gate("C7 structural predictor law", ok,
         f"{calls} invocations here, worst gap {worst:.2e} <= 1e-14; "
         "every invocation in the session is also checked by a fixture")


def test_c08_unitarity_and_g0():
    ch = channels.ion_trap_channel()
    rng = np.random.default_rng(8)
    worst_purity = worst_g0 = 0.0
    for _ in range(100):
        theta, phi = rng.uniform(-2 * math.pi, 2 * math.pi, 2)
        rho = random_state(rng)
        out = ch.apply(rho, [theta, phi])
        worst_purity = max(worst_purity, abs(matcore.hs_product(out, out) - matcore.purity(rho)))
        g0 = perturb.ion_trap_expansion(rho, theta, phi, np.zeros((2, 2))).g0
        worst_g0 = max(worst_g0, float(np.max(np.abs(g0 - out))))
    ok = worst_purity <= 1e-12 and worst_g0 <= 1e-12
    gate("C8 unitarity and G0", ok,
         f"100 random cases, purity drift {worst_purity:.2e}, |G0 - apply| {worst_g0:.2e}, both <= 1e-12")


MC_CONFIG = """\
channel.kind = ion_trap
controls = 1.0, 0.3
state.bloch = 0, 0, 1
noise.kind = gaussian
noise.sigma = 1, 1
average.method = monte_carlo
average.samples = 200000
average.seed = 424242
sweep = 0.1
output.format = csv
"""


def test_c09_monte_carlo_consistency(ion_sweep, tmp_path):
    quad = ion_sweep[-1][1]
    cfg = tmp_path / "mc.cfg"
    cfg.write_text(MC_CONFIG)
    outputs = [tmp_path / "a.csv", tmp_path / "b.csv"]
    codes = [cli.main(["run", str(cfg), "--out", str(path), "--threads", "1"]) for path in outputs]
    (row,) = report.read_csv(outputs[0].read_text())
    dp, df = abs(row["p"] - quad.p), abs(row["f"] - quad.f)
    identical = outputs[0].read_bytes() == outputs[1].read_bytes()
    ok = codes == [0, 0] and dp <= 5 * row["stderr_p"] and df <= 5 * row["stderr_f"] and identical
    gate("C9 Monte Carlo consistency", ok,
         f"n=2e5: |dP| = {dp / row['stderr_p']:.2f} stderr_p, |dF| = {df / row['stderr_f']:.2f} stderr_f "
         f"(<= 5), rerun byte-identical: {identical}")


def test_c10_small_angle_series():
    ch = channels.ion_trap_channel()
    rng = np.random.default_rng(10)
    models = [noise.gaussian([0.1, 0.1]), noise.gaussian(cov=[[0.02, 0.004], [0.004, 0.01]])]
    worst = 0.0
    for rho in (KET0, random_state(rng, pure=False), random_state(rng, pure=True)):
        for phi in (0.0, 0.3, 2.0):
            for model in models:
                closed = perturb.ion_trap_predict(rho, 1e-6, phi, model)
                generic = perturb.predict(ch, rho, [1e-6, phi], model)
                worst = max(worst, abs(closed.p_pred - generic.p_pred), abs(closed.f_pred - generic.f_pred))
    gate("C10 small-angle series branch", worst <= 1e-6,
         f"theta0 = 1e-6, worst |closed - generic| {worst:.2e} <= 1e-6")
