"""Acceptance suite: one recorded pass/fail line per criterion."""

import math
import time

import numpy as np
import pytest

from qirange import ChannelParams, closed_form_error, error_probability, error_ratio, snr
from qirange.cli import run
from qirange.integration_time import PROSE_NOTE, snr_match_residual, snr_qi1_kappa, time_budget
from qirange.montecarlo import DelayEstimationConfig, delay_estimation_experiment, run_oracle_campaign
from qirange.range_delay import DelayWindow, zzb, zzb_kernel_integral, zzb_ratio

GRID_SEED = 20240611


def random_grid(n=1000, seed=GRID_SEED):
    rng = np.random.default_rng(seed)
    n_b = rng.uniform(0.0, 0.1, n)
    n_b[n_b == 0.0] = 0.05
    modes = np.exp(rng.uniform(math.log(2.0), math.log(1e4), n))
    eta = rng.uniform(0.0, 1.0, n)
    eta[eta == 0.0] = 0.5
    return [ChannelParams(float(a), float(b), float(c)) for a, b, c in zip(n_b, modes, eta)]


def test_criterion_1_closed_form_identity(record_criterion):
    grid = random_grid()
    start = time.perf_counter()
    worst = 0.0
    for params in grid:
        for protocol in ("qi1", "qi2"):
            diff = abs(closed_form_error(protocol, params) - error_probability(protocol, params).p_err)
            worst = max(worst, diff)
    elapsed = time.perf_counter() - start
    passed = worst <= 1e-15 and elapsed < 1.0
    record_criterion(1, "closed-form identity", passed, f"max abs diff {worst:.2e}, {elapsed:.3f} s")
    assert worst <= 1e-15
    assert elapsed < 1.0


def test_criterion_2_snr_reproduction(record_criterion):
    start = time.perf_counter()
    p = ChannelParams(0.01, 100, 0.1)
    qi1, qi2 = snr("qi1", p), snr("qi2", p)
    rel1 = abs(qi1 - 1000.9) / 1000.9
    rel2 = abs(qi2 - 1.00000009e7) / 1.00000009e7
    bad = []
    for params in random_grid():
        s = {k: snr(k, params) for k in ("ci1", "ci2", "qi1", "qi2")}
        if not (s["qi2"] > s["qi1"] > s["ci1"] and s["qi2"] > s["ci2"]):
            bad.append(params)
    elapsed = time.perf_counter() - start
    passed = rel1 <= 1e-12 and rel2 <= 1e-12 and not bad and elapsed < 1.0
    record_criterion(
        2, "SNR reproduction", passed,
        f"qi1 {qi1:.6f} (rel {rel1:.1e}), qi2 {qi2:.8e} (rel {rel2:.1e}), {len(bad)} ordering violations, {elapsed:.3f} s",
    )
    assert rel1 <= 1e-12 and rel2 <= 1e-12
    assert not bad
    assert elapsed < 1.0


@pytest.mark.slow
def test_criterion_3_monte_carlo_oracle(record_criterion):
    start = time.perf_counter()
    cases = run_oracle_campaign(seed=7)
    elapsed = time.perf_counter() - start
    status = [c.status for c in cases]
    fails = [c for c in cases if c.status == "fail"]
    under = [c for c in cases if c.status == "undersampled"]
    # every undersampled case really is out of reach of the cap, and none carries a verdict
    honest = all(c.outcome is None and c.expected * 1e8 < 100 for c in under)
    sampled_ok = all(c.outcome.positives >= 0 and c.expected * c.trials >= 100 or c.expected in (0.0, 1.0)
                     for c in cases if c.outcome is not None)
    passed = not fails and honest and sampled_ok and elapsed <= 150
    record_criterion(
        3, "Monte Carlo oracle equivalence", passed,
        f"{status.count('pass')} pass, {len(fails)} fail, {len(under)} undersampled (reported), {elapsed:.1f} s",
    )
    assert not fails, [(c.protocol, c.params, c.hypothesis, c.z) for c in fails]
    assert honest and sampled_ok
    assert elapsed <= 150


def test_criterion_4_zzb(record_criterion):
    start = time.perf_counter()
    p = ChannelParams(0.01, 100, 0.1)
    worst_quad = 0.0
    for dt in (1e-9, 1e-6, 1e-3, 1.0):
        window = DelayWindow(10.0 * dt, 11.0 * dt)
        for protocol in ("qi1", "qi2"):
            c = error_probability(protocol, p).p_err
            quad = zzb(protocol, p, window, lambda t, c=c: c, quadrature=True).mean_square_error
            exact = c * zzb_kernel_integral(window.delta_tau)
            worst_quad = max(worst_quad, abs(quad - exact) / exact)
    worst_ratio = 0.0
    above_one = []
    w1, w2 = DelayWindow(1e-5, 1.05e-5), DelayWindow(3e-4, 3.2e-4)
    for params in random_grid(200):
        r = zzb_ratio(params, w1)
        rq = zzb_ratio(params, w1, quadrature=True)
        if not r < 1.0:
            above_one.append(params)
        e = error_ratio(params)
        worst_ratio = max(worst_ratio, abs(r - e) / e, abs(rq - e) / e, abs(zzb_ratio(params, w2) - r) / r)
    for eta in (0.1, 0.5, 1.0):
        if not zzb_ratio(ChannelParams(0.01, 100, eta), w1) < 1.0:
            above_one.append(eta)
    elapsed = time.perf_counter() - start
    passed = worst_quad <= 1e-8 and worst_ratio <= 1e-10 and not above_one and elapsed < 5
    record_criterion(
        4, "ZZB closed form and ratio", passed,
        f"quadrature rel {worst_quad:.1e}, ratio rel {worst_ratio:.1e}, {elapsed:.2f} s",
    )
    assert worst_quad <= 1e-8
    assert worst_ratio <= 1e-10
    assert not above_one
    assert elapsed < 5


def test_criterion_5_integration_time(record_criterion, tmp_path, capsys):
    start = time.perf_counter()
    rng = np.random.default_rng(GRID_SEED + 5)
    worst = 0.0
    for _ in range(1000):
        n_b = float(rng.uniform(1e-4, 0.1))
        m_prime = float(np.exp(rng.uniform(0.0, math.log(1e6)))) / n_b
        kappa = float(rng.uniform(1e-3, 1.0))
        scale = snr_qi1_kappa(m_prime, n_b, kappa)
        worst = max(worst, abs(snr_match_residual(m_prime, n_b, kappa)) / scale)
    tb = time_budget(100.0, 1e6, 0.01)
    tb1 = time_budget(100.0, 1e6, 1.0)
    elapsed = time.perf_counter() - start
    out = tmp_path / "tb.csv"
    assert run(["timebudget", "--t1", "100", "--bandwidth", "1e6", "--nb", "0.01", "--out", str(out)]) == 0
    capsys.readouterr()
    noted = PROSE_NOTE in tb.notes and PROSE_NOTE in (tmp_path / "tb.csv.manifest").read_text()
    values_ok = (
        math.isclose(tb.t2, 1e-3, rel_tol=1e-15)
        and math.isclose(tb.reduction_factor, 1e-5, rel_tol=1e-15)
        and math.isclose(tb1.t2, 1e-2, rel_tol=1e-15)
    )
    passed = worst <= 1e-12 and values_ok and noted and elapsed < 1
    record_criterion(
        5, "integration-time identity", passed,
        f"max relative residual {worst:.1e}, t2 {tb.t2:.3e} s, factor {tb.reduction_factor:.3e}, t2(N_B=1) {tb1.t2:.3e} s, "
        f"{elapsed:.3f} s",
    )
    assert worst <= 1e-12
    assert values_ok and noted
    assert elapsed < 1


def test_criterion_6_zzb_lower_bound(record_criterion):
    start = time.perf_counter()
    params = ChannelParams(0.01, 100, 0.9)
    window = DelayWindow(1e-5, 1.1e-5)
    details, ok = [], True
    for m in (1, 10, 50):
        cfg = DelayEstimationConfig(window, 16, m, "qi2", params, 10_000, seed=1000 + m)
        est = delay_estimation_experiment(cfg)
        bound = math.sqrt(zzb("qi2", params, window, shots=m).mean_square_error)
        margin = est.rmse - (bound - 2.0 * est.rmse_se)
        ok &= margin >= 0.0
        details.append(f"m={m}: rmse {est.rmse:.3e} vs zzb {bound:.3e}, se {est.rmse_se:.1e}")
    elapsed = time.perf_counter() - start
    passed = ok and elapsed < 30
    record_criterion(6, "ZZB lower-bound property", passed, "; ".join(details) + f"; {elapsed:.1f} s")
    assert ok, details
    assert elapsed < 30


def _outputs(tmp_path, argv, workers):
    out = tmp_path / f"w{workers}.csv"
    assert run(argv + ["--workers", str(workers), "--out", str(out)]) == 0
    return out.read_bytes()


def test_criterion_7_determinism(record_criterion, tmp_path, capsys):
    runs = {
        "mc coincidence": ["mc", "--protocol", "all", "--trials", "600000", "--seed", "11", "--nb", "0.05"],
        "mc perr": ["mc", "--kind", "perr", "--protocol", "qi1", "--trials", "600000", "--seed", "12"],
        "mc delay": ["mc", "--kind", "delay", "--protocol", "qi2", "--eta", "0.5", "--shots", "3",
                     "--trials", "300000", "--seed", "13", "--tau-min", "1e-5", "--tau-max", "1.05e-5"],
        "sweep": ["sweep", "--axis", "nb:0.001:0.05:3:log", "--axis", "eta:0.1:1:2", "--ops", "mc,perr,zzb_ratio",
                  "--protocol", "qi1,ci1", "--trials", "300000", "--seed", "14",
                  "--tau-min", "1e-5", "--tau-max", "1.05e-5"],
    }
    mismatched = []
    for name, argv in runs.items():
        outputs = {w: _outputs(tmp_path / name.replace(" ", "_"), argv, w) for w in (1, 2, 8)
                   if (tmp_path / name.replace(" ", "_")).mkdir(exist_ok=True) is None}
        if not outputs[1] == outputs[2] == outputs[8]:
            mismatched.append(name)
    capsys.readouterr()
    record_criterion(
        7, "determinism across worker counts", not mismatched,
        f"{len(runs) - len(mismatched)}/{len(runs)} commands byte-identical for workers 1, 2, 8",
    )
    assert not mismatched
