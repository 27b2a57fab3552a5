"""Exit criteria for the package, one test per criterion.

Each test appends a PASS/FAIL line that is printed in the pytest terminal
summary. Running this file directly prints the same lines.
"""
import time

import numpy as np
import pytest

from mppc_nrf import dataio
from mppc_nrf.cli import main as cli_main
from mppc_nrf.detector import DetectorParams, build_response_matrix
from mppc_nrf.fitting import NRFDataset, fit, nrf_model
from mppc_nrf.fock import choose_k_max, make_state
from mppc_nrf.metrics import apply_detectors, effective_efficiency, nrf_curve
from mppc_nrf.montecarlo import simulate

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:
    ACCEPTANCE_LINES = []

COH_FIT = DetectorParams(0.163, 0.28, 3)
SV_FIT = DetectorParams(0.145, 0.30, 3)


def record(cid, title, checks):
    """``checks`` is a list of ``(ok, detail)``; the criterion passes if all hold."""
    ok = all(c for c, _ in checks)
    line = f"[{'PASS' if ok else 'FAIL'}] C{cid} {title}: " + "; ".join(d for _, d in checks)
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_c1_coherent_limit():
    t0 = time.perf_counter()
    value = nrf_model(1e-5, 0.163, 0.28, 10, "coherent")
    elapsed = time.perf_counter() - t0
    target = (1 + 3 * 0.28) / (1 + 0.28)
    record(1, "low-intensity coherent limit", [
        (abs(value - target) <= 1e-3, f"NRF={value:.6f} vs {target:.6f} (tol 1e-3)"),
        (elapsed < 1.0, f"{elapsed:.3f}s < 1s"),
    ])


def test_c2_sv_limit():
    t0 = time.perf_counter()
    value = nrf_model(1e-5, 0.145, 0.30, 10, "sv")
    elapsed = time.perf_counter() - t0
    target = (1 + 3 * 0.30) / (1 + 0.30) - (1 + 0.30) * 0.145
    record(2, "low-intensity SV limit", [
        (abs(value - target) <= 1e-3, f"NRF={value:.6f} vs {target:.6f} (tol 1e-3)"),
        (abs(value - 1.273077) <= 1e-3, "also within 1e-3 of 1.273077"),
        (elapsed < 1.0, f"{elapsed:.3f}s < 1s"),
    ])


def test_c3_effective_efficiency():
    coh = effective_efficiency(0.163, 0.28)
    sv = effective_efficiency(0.145, 0.30)
    record(3, "effective efficiency", [
        (0.20 <= coh <= 0.22, f"coherent {coh:.5f} in [0.20, 0.22]"),
        (0.18 <= sv <= 0.20, f"SV {sv:.5f} in [0.18, 0.20]"),
    ])


def test_c4_ideal_detectors():
    means = [0.1, 1.0, 5.0]
    k_max = max(choose_k_max(mu) for mu in means)
    ideal = DetectorParams(1.0, 0.0, 10 * k_max)
    sv = [v for _, v in nrf_curve("sv", ideal, ideal, means)]
    coh = [v for _, v in nrf_curve("coherent", ideal, ideal, means)]
    record(4, "ideal-detector squeezing", [
        (max(sv) < 1e-10, f"max SV NRF {max(sv):.2e} < 1e-10"),
        (max(abs(v - 1) for v in coh) <= 1e-10,
         f"max |coherent NRF - 1| {max(abs(v - 1) for v in coh):.2e} <= 1e-10"),
    ])


def test_c5_loss_only():
    worst = 0.0
    for eta in (0.1, 0.5, 0.9):
        params = DetectorParams(eta, 0.0, 10 ** 6)
        for _, v in nrf_curve("sv", params, params, [0.01, 1.0]):
            worst = max(worst, abs(v - (1 - eta)))
    record(5, "loss-only squeezing law", [(worst <= 1e-6, f"max |NRF - (1 - eta)| {worst:.2e} <= 1e-6")])


def test_c6_oracle_equivalence():
    t0 = time.perf_counter()
    checks = []
    seeds = iter(range(6001, 6007))
    for kind, params in (("coherent", COH_FIT), ("sv", SV_FIT)):
        for mu in (0.2, 1.0, 4.0):
            state = make_state(kind, mu)
            r = build_response_matrix(params, state.k_max)
            q = apply_detectors(state, r, r).q
            analytic = nrf_model(mu, params.eta, params.p_ct, params.n_max, kind)
            rep = simulate(kind, mu, params, n_pulses=1_000_000, seed=next(seeds))
            emp = np.zeros_like(q)
            e = rep.empirical_pmf()
            emp[:e.shape[0], :e.shape[1]] = e
            tv = 0.5 * np.abs(emp - q).sum()
            z = abs(rep.nrf_estimate - analytic) / rep.nrf_std_error
            checks.append((tv < 5e-3, f"{kind} mu={mu}: TV {tv:.1e}"))
            checks.append((z < 3, f"|dNRF|/SE {z:.2f}"))
    elapsed = time.perf_counter() - t0
    checks.append((elapsed < 60, f"{elapsed:.1f}s < 60s"))
    record(6, "Monte Carlo oracle equivalence", checks)


def test_c7_fig2_shape():
    grid = np.linspace(0.5, 5, 19)
    coh = np.array([v for _, v in nrf_curve("coherent", COH_FIT, COH_FIT, grid)])
    sv_on_coh = np.array([v for _, v in nrf_curve("sv", COH_FIT, COH_FIT, grid)])
    sv = np.array([v for _, v in nrf_curve("sv", SV_FIT, SV_FIT, grid)])
    coh_on_sv = np.array([v for _, v in nrf_curve("coherent", SV_FIT, SV_FIT, grid)])
    record(7, "NRF curve shape (n_max=3)", [
        (np.all(np.diff(coh) < 0), "coherent decreasing"),
        (np.all(np.diff(sv) < 0), "SV decreasing"),
        (np.all(sv_on_coh < coh) and np.all(sv < coh_on_sv), "SV below coherent at every point"),
    ])


def test_c8_fit_round_trip():
    means = np.linspace(0.05, 5, 20)
    rng = np.random.default_rng(8)
    y = nrf_model(means, 0.163, 0.28, 3, "coherent") + rng.normal(0, 0.005, means.size)
    t0 = time.perf_counter()
    res = fit(NRFDataset(tuple(zip(means, y)), "coherent"))
    elapsed = time.perf_counter() - t0
    record(8, "fit round trip", [
        (abs(res.eta_hat - 0.163) <= 0.01, f"eta {res.eta_hat:.4f}"),
        (abs(res.p_hat - 0.28) <= 0.01, f"P {res.p_hat:.4f}"),
        (res.n_max_hat == 3, f"n_max {res.n_max_hat}"),
        (res.r_squared > 0.999, f"R^2 {res.r_squared:.5f} > 0.999"),
        (elapsed < 30, f"{elapsed:.2f}s < 30s"),
    ])


def test_c9_pipeline_determinism(tmp_path):
    rep = simulate("sv", 1.0, SV_FIT, n_pulses=200_000, seed=9, keep_pulses=True)
    pulses = tmp_path / "pulses.csv"
    dataio.emit_pulses_csv(*rep.pulses, pulses)
    value, _, _ = dataio.compute_nrf_from_records(dataio.ingest_counts_csv(pulses))
    diff = abs(value - rep.nrf_estimate)

    means = np.linspace(0.05, 5, 12)
    data = tmp_path / "data.csv"
    dataio.emit_dataset_csv(NRFDataset(tuple(zip(means, nrf_model(means, 0.163, 0.28, 3,
                                                                   "coherent"))), "coherent"), data)
    commands = [
        ["simulate", "--state", "sv", "--mean", "1", "--pulses", "20000", "--seed", "9",
         "--output", "{d}/sim.csv", "--summary", "{d}/sim.json"],
        ["curve", "--state", "coherent", "--output", "{d}/curve.csv", "--summary", "{d}/curve.json"],
        ["fit", "--input", str(data), "--nmax-candidates", "2-4", "--output", "{d}/fit.json"],
    ]
    outputs = []
    codes = []
    d = tmp_path / "run"
    d.mkdir()
    for _ in range(2):
        for cmd in commands:
            codes.append(cli_main([c.format(d=d) for c in cmd]))
        outputs.append({p.name: p.read_bytes() for p in sorted(d.iterdir())})
    identical = outputs[0] == outputs[1]
    record(9, "end-to-end determinism", [
        (diff <= 1e-12, f"|NRF(ingest) - NRF(report)| {diff:.1e} <= 1e-12"),
        (all(c == 0 for c in codes), "CLI exit codes 0"),
        (identical, f"{len(outputs[0])} output files byte-identical across runs"),
    ])


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
