import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from altwave.errors import ConfigurationError, DomainError, ResolutionError
from altwave.fem import (CellConfig, MeshControls, assemble, bracket_ok, build_mesh, converge_eigs,
                         eigfn_compare, export_spectra_csv, mesh_hierarchy, project_mean_zero, refine,
                         resolvent_discrepancy, resolvent_solve, richardson, sanity_bounds, solve_eigs)
from altwave.params import HALF_PI


def _system(cfg, level=1):
    return assemble(mesh_hierarchy(cfg, 1, first_level=level)[0], cfg)


@pytest.mark.parametrize("eta", [1e-3, 1e-6, 1e-14, 1e-40])
def test_window_mesh_invariants(eta):
    m = build_mesh(math.log(eta), epsilon=0.2)
    eta = math.exp(math.log(eta))  # the mesh is driven by ln(eta)
    bottom = m.xi[:, 1] == 0
    d = m.dirichlet_mask()
    # the window edges are nodes and every bottom node inside is Dirichlet
    assert np.any(bottom & (m.xi[:, 0] == eta)) and np.any(bottom & (m.xi[:, 0] == -eta))
    assert m.window_nodes().size == 2
    assert np.all(d[bottom & (np.abs(m.xi[:, 0]) <= eta)])
    assert not np.any(d[bottom & (np.abs(m.xi[:, 0]) > eta)])
    assert m.xi[:, 0].min() == -HALF_PI and m.xi[:, 0].max() == HALF_PI
    assert m.xi[:, 1].max() == pytest.approx(math.pi / 0.2)


def test_node_count_logarithmic_in_eta():
    n = [build_mesh(math.log(eta), epsilon=0.2).n_nodes for eta in (1e-5, 1e-10, 1e-20, 1e-40)]
    steps = np.diff(n)
    # doubling ln(1/eta) adds rings, at a cost proportional to the added decades
    assert np.all(steps > 0)
    assert steps[2] / steps[1] == pytest.approx(2.0, rel=0.2)


def test_special_meshes():
    md = build_mesh(math.log(HALF_PI), epsilon=0.1)
    assert md.kind == "dirichlet"
    assert np.all(md.dirichlet_mask()[md.xi[:, 1] == 0])
    mn = build_mesh(-math.inf, epsilon=0.1)
    assert mn.kind == "neumann"
    assert not np.any(mn.dirichlet_mask()[mn.xi[:, 1] == 0])


def test_mesh_controls_validation():
    with pytest.raises(ConfigurationError):
        MeshControls(base_div=4)
    with pytest.raises(ConfigurationError):
        MeshControls(grade_ratio=0.9)


def test_refine_keeps_coarse_nodes():
    m = build_mesh(math.log(1e-4), epsilon=0.2)
    r = refine(m)
    assert np.array_equal(r.xi[: m.n_nodes], m.xi)
    assert r.quads.shape[0] == 4 * m.quads.shape[0]


def test_assembly_symmetry():
    c0 = CellConfig(0.2, math.log(1e-6))
    S = _system(c0, 0)
    assert not np.iscomplexobj(S.A.data)
    assert abs(S.A - S.A.T).max() <= 1e-13 * abs(S.A).max()
    Sc = _system(c0.with_tau(0.3), 0)
    H = Sc.A
    assert abs(H - H.conj().T).max() <= 1e-13 * abs(H).max()
    # mass SPD; element areas span many decades, so test the diagonally scaled matrix
    d = 1 / np.sqrt(S.M.diagonal())
    Md = (sp.diags(d) @ S.M @ sp.diags(d)).toarray()
    assert np.all(np.linalg.eigvalsh(Md) > 0)


@settings(max_examples=10)
@given(st.floats(-0.5, 0.5))
def test_y1_constant_rayleigh_quotient(tau):
    cfg = CellConfig.full_dirichlet(0.2, tau)
    S = _system(cfg, 0)
    u = S.interpolate(lambda y1, x2: np.sin(x2) + 0 * y1).astype(S.A.dtype)
    qa = np.vdot(u, S.A @ u).real
    qm = np.vdot(u, S.M @ u).real
    q2 = np.vdot(u, S.S2 @ u).real
    assert qa / qm == pytest.approx(q2 / (cfg.epsilon**2 * qm) + tau**2 / cfg.epsilon**2, rel=1e-12)
    assert q2 / (cfg.epsilon**2 * qm) == pytest.approx(1.0, rel=2e-2)


def test_solve_eigs_contract():
    S = _system(CellConfig(0.2, math.log(1e-8)), 1)
    r = solve_eigs(S, 3)
    assert np.all(np.diff(r.eigenvalues) >= 0)
    assert np.all(r.residuals <= 1e-8)
    assert bracket_ok(r.eigenvalues) == [True, True, True]
    with pytest.raises(ConfigurationError):
        solve_eigs(S, S.n_dofs)


def test_tau_evenness():
    c = CellConfig(0.2, math.log(1e-8))
    a = solve_eigs(_system(c.with_tau(0.3), 0), 2).eigenvalues
    b = solve_eigs(_system(c.with_tau(-0.3), 0), 2).eigenvalues
    assert np.allclose(a, b, rtol=1e-10)


def test_richardson_synthetic():
    h = 2.0 ** -np.arange(4)
    v, p = richardson(1.0 + 0.3 * h**2)
    assert v == pytest.approx(1.0, abs=1e-14) and p == pytest.approx(2.0)
    v, p = richardson(2.0 + h**1.5)
    assert v == pytest.approx(2.0, abs=1e-12) and p == pytest.approx(1.5)
    with pytest.raises(ResolutionError):
        richardson([1.0])


def test_calibration_fast():
    st = converge_eigs(CellConfig.full_dirichlet(0.1), 1, 3, first_level=0)
    assert st.extrapolated[0] == pytest.approx(1.0, abs=1e-3)
    st = converge_eigs(CellConfig.neumann_bottom(0.1), 1, 3, first_level=0)
    assert st.extrapolated[0] == pytest.approx(0.25, abs=1e-3)


def test_resolvent_zero_and_linear():
    S = _system(CellConfig(0.2, math.log(1e-8)), 0)
    z = resolvent_solve(S, np.zeros(S.n_dofs))
    assert np.all(z.U == 0)
    f = S.interpolate(lambda y1, x2: np.cos(x2) + 0.3 * y1)
    a = resolvent_solve(S, f).U
    b = resolvent_solve(S, 2 * f).U
    assert np.allclose(b, 2 * a)


def test_resolvent_neumann_limit():
    # F = 1 with a Neumann bottom: U = (pi^2 - x2^2) / 2 up to discretization error
    ds = []
    for level in (1, 2, 3):
        S = _system(CellConfig.neumann_bottom(0.2), level)
        sol = resolvent_solve(S, lambda y1, x2: np.ones_like(x2))
        ds.append(resolvent_discrepancy(sol, lambda x2: (math.pi**2 - x2**2) / 2))
    assert ds[2] <= 5e-4
    assert ds[1] / ds[2] == pytest.approx(4.0, rel=0.1)
    rep = sanity_bounds(sol, 0.5)
    assert rep.ok and rep.ratio_U <= 4


def test_mean_zero_bound():
    eps, kappa = 0.1, 0.5
    S = _system(CellConfig(eps, math.log(1e-14)), 1)
    F = project_mean_zero(S, S.interpolate(lambda y1, x2: np.cos(2 * y1) * np.sin(x2 / 2)))
    rep = sanity_bounds(resolvent_solve(S, F), kappa, mean_zero=True)
    assert rep.ok_perp and rep.ratio_perp <= eps / math.sqrt(kappa)


def test_eigfn_compare_full_dirichlet():
    cfg = CellConfig.full_dirichlet(0.2)
    S = _system(cfg, 2)
    r = solve_eigs(S, 1)
    l2, h1 = eigfn_compare(S, r, np.sin(S.mesh.x2))
    assert l2 <= 1e-3 and h1 <= 2e-2


def test_config_validation():
    with pytest.raises(DomainError):
        CellConfig(0.0, -1.0)
    with pytest.raises(DomainError):
        CellConfig(0.1, -1.0, tau=1.0)
    assert CellConfig.from_mu(0.2, 0.3).mu == pytest.approx(0.3)
    assert CellConfig.full_dirichlet(0.1).mu == math.inf
    assert CellConfig.neumann_bottom(0.1).mu == 0.0


def test_csv_exports(tmp_path):
    cfg = CellConfig(0.4, math.log(1e-3))
    st = converge_eigs(cfg, 2, 2, first_level=0)
    p = tmp_path / "spectra.csv"
    export_spectra_csv(p, st)
    lines = p.read_text().splitlines()
    assert lines[0] == "level,dofs,lambda_1,lambda_2"
    assert float(lines[1].split(",")[2]) == st.eigenvalues[0, 0]
    m = build_mesh(cfg.eta_ln, epsilon=0.4)
    q = tmp_path / "mesh.csv"
    m.to_csv(q)
    data = np.loadtxt(q, delimiter=",", skiprows=1)
    assert data.shape == (m.n_nodes, 3)
