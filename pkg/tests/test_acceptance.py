"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""
import math
import time

import numpy as np
import pytest

from altwave.bottom import K_closed, expand_Lambda_series, solve_Lambda
from altwave.corrector import CorrectorParams, verify_corrector
from altwave.experiments import ExperimentConfig, _eigfn_point, cmd_band, cmd_resolvent, default_config
from altwave.fem import CellConfig, converge_eigs
from altwave.homogenized import Lambda_n, eigen_residual
from altwave.layers import (X_closed, X_grad, X_series, Y_closed, Z_at_origin, Z_series, theta,
                            theta_taylor, SeriesTruncation)
from altwave.params import eta_log_from, zeta_odd

SCHEDULE = [(0.4, 1e-3), (0.2, 1e-8), (0.1, 1e-14)]


@pytest.fixture
def report(capsys):
    def emit(name, ok, detail=""):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        return ok
    return emit


def _lap(f, a, b, h=1e-3):
    return (f(a + h, b) + f(a - h, b) + f(a, b + h) + f(a, b - h) - 4 * f(a, b)) / h**2


def test_criterion_1_homogenized(report):
    t = time.perf_counter()
    res = max(abs(eigen_residual(mu, Lambda_n(mu, n))) for mu in (0, .01, .1, 1, 10) for n in range(1, 6))
    exact = Lambda_n(0.0, 1) == 0.25
    ratios = [(Lambda_n(mu, 1) - 0.25 - 2 * mu / math.pi) / mu**2 for mu in (1e-2, 1e-3, 1e-4)]
    stable = np.ptp(ratios) <= 0.1 * min(abs(r) for r in ratios)
    dt = time.perf_counter() - t
    ok = res <= 1e-12 and exact and stable and dt < 1.0
    assert report("1 homogenized eigenvalues", ok,
                  f"residual={res:.2e} Lambda1(0)={Lambda_n(0.0, 1)} ratios={np.round(ratios, 5).tolist()} t={dt:.2f}s")


def test_criterion_2_theta(report):
    t = time.perf_counter()
    bs = np.linspace(-1, 1, 50)
    cross = max(abs(theta(b).value - theta_taylor(b, 30)) for b in bs)
    zero = abs(theta(0.0, SeriesTruncation(tol=1e-15)).value + zeta_odd(1) / 8)
    ident = max(abs(Z_at_origin(b).value - b**2 * theta(b**2).value) for b in (0.1, 0.5, 1.0, 1.5))
    dt = time.perf_counter() - t
    ok = cross <= 1e-10 and zero <= 1e-12 and ident <= 1e-10 and dt < 1.0
    assert report("2 theta identities", ok, f"taylor={cross:.2e} theta0={zero:.2e} origin={ident:.2e} t={dt:.2f}s")


def test_criterion_3_layers(report):
    t = time.perf_counter()
    rng = np.random.default_rng(3)
    a = rng.uniform(-1.5, 1.5, 40)
    b = rng.uniform(0.1, 3.0, 40)
    ser = np.max(np.abs(X_series(a, b).value - X_closed(a, b)))
    s = rng.uniform(-1.5, 1.5, 40)
    s = s[np.abs(s) > 1e-3]
    neu = np.all(np.asarray(X_grad(s, np.zeros_like(s))[1]) == -1.0)
    dirich = np.all(np.asarray(Y_closed(rng.uniform(-1, 1, 40), 0.0)) == 0.0)
    hb = rng.uniform(0.3, 3.0, 40)
    harm = max(np.max(np.abs(_lap(X_closed, a, hb))), np.max(np.abs(_lap(Y_closed, 3 * a, hb + 0.2))))
    beta = 1.0
    fz = lambda u, v: Z_series(u, v, beta).value
    zres = max(abs(_lap(fz, u, v) + beta**2 * (fz(u, v) + X_closed(u, v)))
               for u, v in zip(rng.uniform(-1.5, 1.5, 5), rng.uniform(0.2, 2.0, 5)))
    dt = time.perf_counter() - t
    ok = ser <= 1e-11 and neu and dirich and harm <= 1e-4 and zres <= 1e-3 and dt < 5.0
    assert report("3 layer functions", ok, f"series={ser:.2e} neumann={neu} dirichlet={dirich} "
                  f"harmonic={harm:.2e} Z_pde={zres:.2e} t={dt:.2f}s")


def test_criterion_4_series(report):
    t = time.perf_counter()
    zeros, rel = 0.0, 0.0
    for mu in (0.05, 0.2, 0.5):
        ex = expand_Lambda_series(mu, 8)
        zeros = max(zeros, *ex.structural_zeros)
        for j in range(3, 9):
            c = K_closed(j, mu)
            rel = max(rel, abs(ex.K[j] - c) / abs(c) if c else abs(ex.K[j]))
    # roundoff in the root limits the observable slope; use points where the
    # truncation error stays well above it
    E = [0.1, 0.05, 0.025]
    orders = {}
    for mu, J in [(0.05, 3), (0.2, 3), (0.5, 3), (1.0, 3), (0.5, 4), (1.0, 4), (0.5, 5), (1.0, 5)]:
        ex = expand_Lambda_series(mu, 8)
        err = [abs(ex.partial_sum(e, J) - solve_Lambda(e, mu)) for e in E]
        orders[(mu, J)] = float(np.polyfit(np.log(E), np.log(err), 1)[0])
    order_ok = all(p >= J + 0.8 for (mu, J), p in orders.items())
    h = 1e-5
    dmu = (solve_Lambda(0.2, h) - solve_Lambda(0.2, -h)) / (2 * h)
    dt = time.perf_counter() - t
    ok = zeros <= 1e-10 and rel <= 1e-8 and order_ok and abs(dmu - 2 / math.pi) <= 1e-6 and dt < 5.0
    worst = min(p - J for (mu, J), p in orders.items())
    assert report("4 series expansion", ok, f"zeros={zeros:.1e} K_rel={rel:.1e} min(order-J)={worst:.2f} "
                  f"dLambda/dmu-2/pi={dmu - 2 / math.pi:.1e} t={dt:.2f}s")


def test_criterion_5_corrector(report):
    t = time.perf_counter()
    worst = {"dirichlet": 0.0, "neumann": 0.0, "external": 0.0, "harmonic": 0.0, "junction": 0.0}
    for eps, eta in [(0.1, 1e-14), (0.2, 1e-8), (0.4, 1e-3)]:
        d = verify_corrector(CorrectorParams.from_eta(eps, eta, 0.75)).as_dict()
        worst["dirichlet"] = max(worst["dirichlet"], d["dirichlet_residual"])
        worst["neumann"] = max(worst["neumann"], d["neumann_residual"])
        worst["external"] = max(worst["external"], d["external_identity"])
        worst["harmonic"] = max(worst["harmonic"], d["harmonic_external"], d["harmonic_internal"])
        worst["junction"] = max(worst["junction"], abs(d["junction_exponent"] - 0.5))
    dt = time.perf_counter() - t
    ok = (worst["dirichlet"] <= 1e-12 and worst["neumann"] <= 1e-10 and worst["external"] <= 1e-12
          and worst["harmonic"] <= 1e-4 and worst["junction"] <= 0.05 and dt < 10.0)
    assert report("5 corrector", ok, " ".join(f"{k}={v:.1e}" for k, v in worst.items()) + f" t={dt:.2f}s")


def test_criterion_6_calibration(report):
    cases = [("full-dirichlet", CellConfig.full_dirichlet(0.1), 1.0, 1e-3),
             ("neumann-bottom", CellConfig.neumann_bottom(0.1), 0.25, 1e-3),
             ("full-dirichlet tau=0.5", CellConfig.full_dirichlet(0.1, 0.5), 26.0, 3e-2)]
    ok, parts = True, []
    for name, cfg, target, tol in cases:
        t = time.perf_counter()
        v = float(converge_eigs(cfg, 1, 4, first_level=0).extrapolated[0])
        dt = time.perf_counter() - t
        ok &= abs(v - target) <= tol and dt < 60.0
        parts.append(f"{name}: {v:.8f} ({dt:.1f}s)")
    assert report("6 FEM calibration", ok, "; ".join(parts))


def test_criterion_7_band_trend(report):
    t = time.perf_counter()
    rep = cmd_band(default_config("band"))
    grid = cmd_band(ExperimentConfig(command="band", epsilon=[0.2], eta=[1e-8], kappa=0.2,
                                     tau=[-0.8, -0.4, 0.0, 0.4, 0.8], levels=3))
    dt = time.perf_counter() - t
    diffs = [p["diff_homogenized"] for p in rep.summary["points"]]
    argmin = grid.summary["points"][0].get("tau_argmin")
    ok = (not rep.failures and not grid.failures and rep.checks.get("homogenized_trend", False)
          and rep.checks["bracketing"] and grid.checks.get("tau_argmin_zero", False) and dt < 600)
    assert report("7 band trend", ok, f"diffs={[f'{d:.3e}' for d in diffs]} bracketing={rep.checks['bracketing']} "
                  f"tau_argmin={argmin} t={dt:.0f}s")


def test_criterion_8_resolvent(report):
    t = time.perf_counter()
    rep = cmd_resolvent(default_config("resolvent"))
    dt = time.perf_counter() - t
    disc = [p["discrepancy"] for p in rep.summary["points"]]
    worst = {k: max(p["bound_ratios"][k] for p in rep.summary["points"]) for k in rep.summary["points"][0]["bound_ratios"]}
    ok = (not rep.failures and default_config("resolvent").n_random == 100
          and rep.checks.get("discrepancy_trend", False) and rep.checks["bounds"] and dt < 600)
    assert report("8 resolvent trend", ok, f"discrepancy={[f'{d:.3e}' for d in disc]} "
                  + " ".join(f"{k}={v:.2f}" for k, v in worst.items()) + f" t={dt:.0f}s")


def test_criterion_9_eigenfunction(report):
    mu = 0.3
    cfg = ExperimentConfig(command="band", epsilon=[0.4], eta=[1e-3], levels=3)
    plain, ext, gaps = [], [], []
    refine_ok = True
    for eps in (0.4, 0.2, 0.1):
        eta_ln = eta_log_from(eps, mu)
        d = _eigfn_point(cfg, eps, eta_ln)
        refine_ok &= d["refinement_decreasing"]
        plain.append(d["l2"][-1])
        ext.append(d["l2_extrapolated"][-1])
        lam = float(converge_eigs(CellConfig(eps, eta_ln), 1, 3).extrapolated[0])
        gaps.append((lam - solve_Lambda(eps, mu), lam - Lambda_n(mu, 1)))
    eps_ok = all(a > b for a, b in zip(ext, ext[1:]))
    assert report("9 eigenfunction comparison", refine_ok and eps_ok,
                  f"refinement_decreasing={refine_ok} extrapolated_l2={[f'{e:.2e}' for e in ext]} "
                  f"finest_l2={[f'{e:.2e}' for e in plain]} "
                  f"lambda-Lambda_eps,lambda-Lambda1={[(f'{a:.1e}', f'{b:.1e}') for a, b in gaps]}")
