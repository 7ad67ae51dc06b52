"""Parameter sweeps tying the analytic modules to the finite-element oracle.

Each ``cmd_*`` takes an :class:`ExperimentConfig` and returns a
:class:`Report` holding a CSV table, a JSON-ready summary and the outcome of
the hard assertions.  A failing parameter point is recorded and the sweep
continues.
"""
from __future__ import annotations

import hashlib
import io
import itertools
import json
import math
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Callable, Sequence

import numpy as np

from .bottom import K_closed, approx_eigenfunction, expand_Lambda_series, solve_Lambda
from .corrector import CorrectorParams, verify_corrector
from .errors import ConfigurationError, FitError
from .fem import (CellConfig, MeshControls, assemble, bracket_ok, converge_eigs, eigfn_convergence,
                  mesh_hierarchy, project_mean_zero, resolvent_discrepancy, resolvent_solve,
                  sanity_bounds)
from .homogenized import (Lambda_n, Lambda_n_taylor, SampledFunction1D, eigen_residual,
                          eigenfunction, value_at_zero)
from .layers import THETA_BETA_MAX, SeriesTruncation, Z_at_origin, theta, theta_taylor
from .params import ModelParams, eta_log_from, zeta_odd

COMMANDS = ("homog", "theta", "expand", "band", "corrector", "resolvent")


# --- configuration -------------------------------------------------------------

@dataclass
class ExperimentConfig:
    command: str
    mu: list = field(default_factory=list)
    n: list = field(default_factory=lambda: [1])
    beta: list = field(default_factory=list)
    epsilon: list = field(default_factory=list)
    eta: list = field(default_factory=list)
    alpha: list = field(default_factory=lambda: [0.75])
    tau: list = field(default_factory=lambda: [0.0])
    J: int = 8
    kappa: float = 0.5
    k: int = 1
    base_div: int = 8
    grade_ratio: float = 0.5
    levels: int = 3
    first_level: int = 1
    n_random: int = 100
    seed: int = 0
    theta_tol: float = 1e-12
    calibration: bool = False
    eigfn: bool = False
    out: str | None = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigurationError(f"field 'command': unknown command {self.command!r}")
        for name in ("mu", "n", "beta", "epsilon", "eta", "alpha", "tau"):
            v = getattr(self, name)
            if not isinstance(v, list):
                raise ConfigurationError(f"field {name!r}: expected a list")
        need = {
            "homog": ("mu", "n"),
            "theta": ("beta",),
            "expand": ("mu",),
            "band": ("epsilon", "tau"),
            "corrector": ("epsilon", "eta", "alpha"),
            "resolvent": ("epsilon", "tau"),
        }[self.command]
        for name in need:
            if not getattr(self, name):
                raise ConfigurationError(f"field {name!r}: grid must be nonempty for {self.command}")
        if self.levels < 2:
            raise ConfigurationError("field 'levels': need at least 2")
        if self.first_level < 0:
            raise ConfigurationError("field 'first_level': must be >= 0")
        if self.command in ("band", "resolvent"):
            pts = self.schedule()
            for eps, eta_ln in pts:
                for t in self.tau:
                    ModelParams(eps, eta_ln, tau=t, kappa=self.kappa)
        MeshControls(self.base_div, self.grade_ratio)

    def schedule(self) -> list[tuple[float, float]]:
        """``(epsilon, ln eta)`` pairs; ``eta`` is zipped with ``epsilon``, or
        derived from ``mu`` when ``eta`` is omitted."""
        if self.eta:
            if len(self.eta) != len(self.epsilon):
                raise ConfigurationError("fields 'epsilon' and 'eta' must have equal length")
            return [(float(e), math.log(float(h))) for e, h in zip(self.epsilon, self.eta)]
        if self.mu:
            if len(self.mu) != len(self.epsilon):
                raise ConfigurationError("fields 'epsilon' and 'mu' must have equal length")
            return [(float(e), eta_log_from(float(e), float(m))) for e, m in zip(self.epsilon, self.mu)]
        raise ConfigurationError("field 'eta' or 'mu' is required with 'epsilon'")

    @property
    def controls(self) -> MeshControls:
        return MeshControls(self.base_div, self.grade_ratio)

    def to_dict(self) -> dict:
        return asdict(self)

    def digest(self) -> str:
        d = self.to_dict()
        d.pop("out", None)
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        for key in d:
            if key not in known:
                raise ConfigurationError(f"field {key!r}: unknown key")
        if "command" not in d:
            raise ConfigurationError("field 'command': missing")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigurationError(str(exc)) from exc

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
        if not isinstance(d, dict):
            raise ConfigurationError("line 1: top level must be a JSON object")
        return cls.from_dict(d)


DEFAULTS: dict[str, dict] = {
    "homog": {"mu": [0.0, 1e-4, 1e-3, 1e-2, 0.1, 1.0, 10.0], "n": [1, 2, 3, 4, 5]},
    "theta": {"beta": [-3.5, -2.0, -1.0, -0.5, 0.0, 0.01, 0.25, 0.5, 1.0, 2.0, 2.25, 3.5]},
    "expand": {"mu": [0.0, 0.05, 0.1, 0.2, 0.5, 1.0], "J": 8, "epsilon": [0.1, 0.05, 0.025]},
    "band": {"epsilon": [0.4, 0.2, 0.1], "eta": [1e-3, 1e-8, 1e-14], "tau": [0.0],
             "levels": 4, "calibration": True},
    "corrector": {"epsilon": [0.1, 0.2, 0.4], "eta": [1e-14, 1e-8, 1e-3], "alpha": [0.75]},
    "resolvent": {"epsilon": [0.4, 0.2, 0.1], "eta": [1e-3, 1e-8, 1e-14], "tau": [0.0],
                  "first_level": 1, "levels": 2},
}


def default_config(command: str) -> ExperimentConfig:
    if command not in DEFAULTS:
        raise ConfigurationError(f"unknown command {command!r}")
    return ExperimentConfig(command=command, **DEFAULTS[command])


# --- reports -------------------------------------------------------------------

@dataclass
class Report:
    command: str
    header: list[str]
    rows: list[list]
    tags: list[str]
    summary: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)   # name -> bool
    failures: list = field(default_factory=list)  # (point, message)

    @property
    def ok(self) -> bool:
        return all(self.checks.values()) and not self.failures

    def csv(self, config_hash: str) -> str:
        buf = io.StringIO()
        write_csv(buf, self.header, self.rows, self.tags, config_hash)
        return buf.getvalue()

    def json(self, config: ExperimentConfig) -> str:
        doc = {
            "command": self.command,
            "config": config.to_dict(),
            "config_sha256": config.digest(),
            "tags": self.tags,
            "summary": self.summary,
            "checks": self.checks,
            "failures": [{"point": p, "error": m} for p, m in self.failures],
            "ok": self.ok,
        }
        return json.dumps(_jsonable(doc), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "pass" if x else "fail"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "%.17g" % float(x)
    return str(x)


def write_csv(stream, header: Sequence[str], rows: Sequence[Sequence], tags: Sequence[str],
              config_hash: str) -> None:
    stream.write(f"# config_sha256={config_hash} tags={';'.join(tags)}\n")
    stream.write(",".join(header) + "\n")
    for r in rows:
        stream.write(",".join(_fmt(x) for x in r) + "\n")


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


# --- rate fits -----------------------------------------------------------------

@dataclass(frozen=True)
class RateFit:
    exponent: float
    prefactor: float
    r2: float


def fit_rate(xs: Sequence[float], ys: Sequence[float]) -> RateFit:
    """Least squares ``ln y = ln C + p ln x``."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.size < 3:
        raise FitError("need at least 3 paired points")
    if np.any(x <= 0) or np.any(y <= 0) or not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise FitError("points must be positive and finite")
    lx, ly = np.log(x), np.log(y)
    if np.ptp(lx) < 1e-12 * max(1.0, np.max(np.abs(lx))):
        raise FitError("degenerate spread in x")
    p, c = np.polyfit(lx, ly, 1)
    pred = c + p * lx
    ss_res = float(np.sum((ly - pred) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else max(0.0, min(1.0, 1.0 - ss_res / ss_tot))
    return RateFit(float(p), float(math.exp(c)), r2)


def _nonincreasing(v: Sequence[float]) -> bool:
    return all(b <= a for a, b in zip(v, v[1:]))


def _guard(report: Report, point, fn: Callable, *args):
    try:
        return fn(*args)
    except Exception as exc:  # one point never aborts the sweep
        report.failures.append((point, f"{type(exc).__name__}: {exc}"))
        return None


# --- homogenized eigenvalues -----------------------------------------------------

def cmd_homog(cfg: ExperimentConfig) -> Report:
    rep = Report("homog", ["mu", "n", "Lambda_n", "Lambda_taylor", "diff", "residual"], [],
                 ["robin-eigenvalue-equation", "first-order-mu-law"])
    worst = 0.0
    for mu, n in itertools.product(cfg.mu, cfg.n):
        def row(mu=float(mu), n=int(n)):
            L = Lambda_n(mu, n)
            Lt = Lambda_n_taylor(mu, n)
            res = abs(eigen_residual(mu, L))
            return [mu, n, L, Lt, L - Lt, res]
        r = _guard(rep, {"mu": mu, "n": n}, row)
        if r is not None:
            rep.rows.append(r)
            worst = max(worst, r[5])
    small = sorted(float(m) for m in cfg.mu if 0 < m <= 1e-2)
    ratios = {m: (Lambda_n(m, 1) - 0.25 - 2 * m / math.pi) / m**2 for m in small}
    rep.summary = {"residual_max": worst, "second_order_ratio": ratios}
    rep.checks["residual"] = worst <= 1e-12
    if len(ratios) >= 2:
        v = np.array(list(ratios.values()))
        rep.checks["second_order_stable"] = bool(np.ptp(v) <= 0.1 * np.min(np.abs(v)))
    return rep


# --- theta and the Z identity ----------------------------------------------------

def cmd_theta(cfg: ExperimentConfig) -> Report:
    rep = Report("theta", ["beta", "theta_series", "theta_bound", "theta_taylor", "series_taylor_diff",
                           "z_arg", "Z_at_origin", "identity_residual"], [],
                 ["theta-series", "theta-taylor", "boundary-layer-origin-identity"])
    trunc = SeriesTruncation(tol=cfg.theta_tol)
    cross, ident = [], []
    for beta in cfg.beta:
        def row(beta=float(beta)):
            th = theta(beta, trunc)
            tt = theta_taylor(beta, 30) if abs(beta) < 4 else None
            z_arg = zval = resid = None
            if 0 <= beta <= THETA_BETA_MAX:
                z_arg = math.sqrt(beta)
                zval = Z_at_origin(z_arg, trunc).value
                resid = abs(zval - beta * th.value)
            diff = abs(th.value - tt) if tt is not None else None
            return [beta, th.value, th.error_bound, tt, diff, z_arg, zval, resid]
        r = _guard(rep, {"beta": beta}, row)
        if r is None:
            continue
        rep.rows.append(r)
        if abs(r[0]) <= 1 and r[4] is not None:
            cross.append(r[4])
        if r[7] is not None and r[5] <= 1.5:
            ident.append(r[7])
        if r[0] == 0:
            rep.checks["theta_zero"] = abs(r[1] + zeta_odd(1) / 8) <= 1e-12
    rep.summary = {"taylor_diff_max": max(cross, default=None), "identity_max": max(ident, default=None)}
    if cross:
        rep.checks["taylor_cross"] = max(cross) <= 1e-10
    if ident:
        rep.checks["z_identity"] = max(ident) <= 1e-10
    return rep


# --- eps-expansion -----------------------------------------------------------------

def cmd_expand(cfg: ExperimentConfig) -> Report:
    rep = Report("expand", ["mu", "j", "K_series", "K_closed", "rel_diff"], [],
                 ["perturbed-eigenvalue-equation", "eps-expansion-coefficients"])
    eps_grid = [float(e) for e in (cfg.epsilon or [0.1, 0.05, 0.025])]
    per_mu = {}
    worst_rel, worst_zero = 0.0, 0.0
    for mu in cfg.mu:
        mu = float(mu)

        def point(mu=mu):
            if mu == 0:
                return {"Lambda": 0.25, "K": {}, "note": "coefficients vanish identically"}
            ex = expand_Lambda_series(mu, cfg.J)
            out = {"Lambda1": ex.Lambda1, "iterations": ex.iterations,
                   "structural_zeros": list(ex.structural_zeros), "K": {}, "spot": [], "order_fit": {}}
            for j in range(3, cfg.J + 1):
                ks = ex.K[j]
                kc = K_closed(j, mu) if j <= 8 else None
                rel = None
                if kc is not None:
                    rel = abs(ks - kc) / abs(kc) if kc != 0 else abs(ks)
                out["K"][j] = {"series": ks, "closed": kc, "rel_diff": rel}
            for e in eps_grid:
                out["spot"].append({"epsilon": e, "solve_Lambda": solve_Lambda(e, mu),
                                    "partial_sum": ex.partial_sum(e)})
            if len(eps_grid) >= 3:
                for Jp in range(3, min(cfg.J, 6) + 1):
                    errs = [abs(ex.partial_sum(e, Jp) - solve_Lambda(e, mu)) for e in eps_grid]
                    if min(errs) > 0:
                        f = fit_rate(eps_grid, errs)
                        out["order_fit"][Jp] = {"exponent": f.exponent, "r2": f.r2}
            return out

        res = _guard(rep, {"mu": mu}, point)
        if res is None:
            continue
        per_mu[mu] = res
        for j, kv in res["K"].items():
            rep.rows.append([mu, j, kv["series"], kv["closed"], kv["rel_diff"]])
            if kv["rel_diff"] is not None:
                worst_rel = max(worst_rel, kv["rel_diff"])
        if "structural_zeros" in res:
            worst_zero = max(worst_zero, max(res["structural_zeros"]))
    rep.summary = {"per_mu": per_mu, "rel_diff_max": worst_rel, "structural_zero_max": worst_zero}
    rep.checks["closed_forms"] = worst_rel <= 1e-8
    rep.checks["structural_zeros"] = worst_zero <= 1e-10
    return rep


# --- band functions ------------------------------------------------------------------

def _band_point(cfg: ExperimentConfig, eps: float, eta_ln: float):
    base = CellConfig(eps, eta_ln, 0.0, cfg.kappa)
    mu = base.mu
    rows, lam1 = [], {}
    for tau in cfg.tau:
        c = base.with_tau(float(tau))
        st = converge_eigs(c, cfg.k, cfg.levels, cfg.controls, cfg.first_level)
        sh = st.shifted
        br = bracket_ok(sh)
        lam1[float(tau)] = float(st.extrapolated[0])
        for i in range(cfg.k):
            n = i + 1
            Ln = Lambda_n(mu, n)
            Le = solve_Lambda(eps, mu) if (n == 1 and tau == 0) else None
            applies = n < 2 * math.sqrt(cfg.kappa) / eps
            rows.append([eps, eta_ln, mu, float(tau), n, float(st.extrapolated[i]), float(sh[i]),
                         float(st.exponents[i]), Ln, Le, float(sh[i]) - Ln,
                         None if Le is None else float(sh[i]) - Le, br[i] if applies else None])
    return rows, lam1


def cmd_band(cfg: ExperimentConfig) -> Report:
    rep = Report("band", ["epsilon", "ln_eta", "mu", "tau", "n", "lambda_extrapolated", "lambda_shifted",
                          "richardson_exponent", "Lambda_n", "Lambda_eps", "diff_homogenized",
                          "diff_refined", "bracket"], [],
                 ["cell-band-functions", "homogenized-eigenvalue-limit", "bracketing-quarter-to-n-squared",
                  "quasimomentum-minimum"])
    summary: dict[str, Any] = {"points": []}
    if cfg.calibration:
        eps0 = float(cfg.epsilon[0])

        def calib():
            st = converge_eigs(CellConfig.full_dirichlet(eps0, 0.0, cfg.kappa), 1, cfg.levels,
                               cfg.controls, cfg.first_level)
            return float(st.extrapolated[0])
        v = _guard(rep, {"calibration": "full-dirichlet"}, calib)
        if v is not None:
            rep.rows.append([eps0, math.log(math.pi / 2), math.inf, 0.0, 1, v, v, None, 1.0, None,
                             v - 1.0, None, None])
            summary["calibration_full_dirichlet"] = v
            rep.checks["calibration"] = abs(v - 1.0) <= 1e-3
    diffs, xs = [], []
    brackets = []
    for eps, eta_ln in cfg.schedule():
        res = _guard(rep, {"epsilon": eps, "ln_eta": eta_ln}, _band_point, cfg, eps, eta_ln)
        if res is None:
            continue
        rows, lam1 = res
        rep.rows.extend(rows)
        brackets.extend(r[-1] for r in rows if r[-1] is not None)
        mu = rows[0][2]
        pt = {"epsilon": eps, "ln_eta": eta_ln, "mu": mu}
        if len(lam1) > 1:
            arg = min(lam1, key=lam1.get)
            pt["tau_argmin"] = arg
            if 0.0 in lam1:
                rep.checks.setdefault("tau_argmin_zero", True)
                rep.checks["tau_argmin_zero"] &= arg == 0.0
        for r in rows:
            if r[3] == 0.0 and r[4] == 1:
                pt["diff_homogenized"] = r[10]
                pt["diff_refined"] = r[11]
                diffs.append(abs(r[10]))
                xs.append(math.sqrt(eps) * mu + eps)
        if cfg.eigfn:
            pt["eigfn"] = _guard(rep, {"eigfn": eps}, _eigfn_point, cfg, eps, eta_ln)
        summary["points"].append(pt)
    rep.checks["bracketing"] = all(brackets)
    if len(diffs) >= 2:
        rep.checks["homogenized_trend"] = _nonincreasing(diffs)
    if len(diffs) >= 3 and min(diffs) > 0:
        try:
            f = fit_rate(xs, diffs)
            summary["rate_fit"] = asdict(f)
        except FitError as exc:
            summary["rate_fit"] = str(exc)
    rep.summary = summary
    return rep


def _eigfn_point(cfg: ExperimentConfig, eps: float, eta_ln: float) -> dict:
    c = CellConfig(eps, eta_ln, 0.0, cfg.kappa)
    mu = c.mu
    L = solve_Lambda(eps, mu)
    ref = lambda y1, x2: approx_eigenfunction(eps * y1, x2, eps, mu, eta_ln, L)
    st = eigfn_convergence(c, ref, cfg.levels, cfg.controls, cfg.first_level)
    return {"levels": st.levels, "l2": st.l2, "h1": st.h1, "l2_extrapolated": st.l2_extrapolated,
            "refinement_decreasing": _nonincreasing(st.l2)}


# --- corrector -------------------------------------------------------------------------

def cmd_corrector(cfg: ExperimentConfig) -> Report:
    keys = ["dirichlet_residual", "neumann_residual", "external_identity", "harmonic_external",
            "harmonic_internal", "junction_exponent", "laplacian_max", "envelope_constant"]
    rep = Report("corrector", ["epsilon", "ln_eta", "alpha", "mu"] + keys, [],
                 ["corrector-boundary-conditions", "junction-square-root", "laplacian-envelope"])
    env, lap = [], []
    ok = {"dirichlet": True, "neumann": True, "external": True, "harmonic": True, "junction": True}
    pts = []
    for eps, eta, alpha in itertools.product(cfg.epsilon, cfg.eta, cfg.alpha):
        def point(eps=float(eps), eta=float(eta), alpha=float(alpha)):
            p = CorrectorParams.from_eta(eps, eta, alpha)
            return p, verify_corrector(p).as_dict()
        res = _guard(rep, {"epsilon": eps, "eta": eta, "alpha": alpha}, point)
        if res is None:
            continue
        p, d = res
        rep.rows.append([p.epsilon, p.eta_ln, p.alpha, p.mu] + [d[k] for k in keys])
        pts.append(d)
        ok["dirichlet"] &= d["dirichlet_residual"] <= 1e-12
        ok["neumann"] &= d["neumann_residual"] <= 1e-10
        ok["external"] &= d["external_identity"] <= 1e-12
        ok["harmonic"] &= max(d["harmonic_external"], d["harmonic_internal"]) <= 1e-4
        ok["junction"] &= abs(d["junction_exponent"] - 0.5) <= 0.05
        env.append(d["envelope_constant"])
        lap.append(d["laplacian_max"])
    rep.checks.update(ok)
    summary: dict[str, Any] = {"points": pts}
    if env:
        spread = max(env) / min(env)
        summary["envelope_spread"] = spread
        rep.checks["envelope_stable"] = spread <= 2.0
        if len(env) >= 3:
            bound = [l / c for l, c in zip(lap, env)]
            try:
                summary["envelope_fit"] = asdict(fit_rate(bound, lap))
            except FitError as exc:
                summary["envelope_fit"] = str(exc)
    rep.summary = summary
    return rep


# --- resolvent -------------------------------------------------------------------------

def random_field(system, rng: np.random.Generator, mean_zero: bool, n_y1: int = 4, n_x2: int = 8) -> np.ndarray:
    """Random smooth dof vector from trigonometric modes in ``y1`` and the
    Neumann-Dirichlet sine basis in ``x2``; ``mean_zero`` drops the
    ``y1``-constant modes and projects out what remains of them."""
    y1, x2 = system.mesh.y1, system.mesh.x2
    out = np.zeros_like(y1)
    for kk in range(1 if mean_zero else 0, n_y1 + 1):
        for l in range(n_x2):
            a, b = rng.normal(size=2) / (1 + kk + l)
            out += (a * np.cos(2 * kk * y1) + b * np.sin(2 * kk * y1)) * np.sin((l + 0.5) * (x2 - math.pi))
    v = np.zeros(system.n_dofs)
    sel = system.node_dof >= 0
    v[system.node_dof[sel]] = out[sel]
    return project_mean_zero(system, v) if mean_zero else v


def _resolvent_point(cfg: ExperimentConfig, eps: float, eta_ln: float, tau: float, rng) -> dict:
    c = CellConfig(eps, eta_ln, tau, cfg.kappa)
    mu = c.mu
    mesh = mesh_hierarchy(c, cfg.levels, cfg.controls, cfg.first_level)[-1]
    S = assemble(mesh, c)
    L1 = Lambda_n(mu, 1)
    sol = resolvent_solve(S, lambda y1, x2: np.broadcast_to(eigenfunction(1, mu, x2), y1.shape))
    disc = resolvent_discrepancy(sol, lambda x2: eigenfunction(1, mu, x2) / L1)
    worst = {"U": 0.0, "dU_dx2": 0.0, "dU_dx1": 0.0, "perp": 0.0, "Q0": 0.0}
    g = np.linspace(0.0, math.pi, 1025)
    for _ in range(cfg.n_random):
        r = sanity_bounds(resolvent_solve(S, random_field(S, rng, False)), cfg.kappa)
        worst["U"] = max(worst["U"], r.ratio_U / 4.0)
        worst["dU_dx2"] = max(worst["dU_dx2"], r.ratio_dx2 / 2.0)
        worst["dU_dx1"] = max(worst["dU_dx1"], r.ratio_dx1 / r.bound_dx1)
        r = sanity_bounds(resolvent_solve(S, random_field(S, rng, True)), cfg.kappa, mean_zero=True)
        worst["perp"] = max(worst["perp"], r.ratio_perp / r.bound_perp)
        coef = rng.normal(size=8) / (1 + np.arange(8))
        F = SampledFunction1D(g, sum(a * np.sin((l + 0.5) * (g - math.pi)) for l, a in enumerate(coef)))
        worst["Q0"] = max(worst["Q0"], abs(value_at_zero(F, mu)) / (5.0 * F.l2_norm()))
    return {"epsilon": eps, "ln_eta": eta_ln, "tau": tau, "mu": mu, "dofs": S.n_dofs,
            "discrepancy": disc, "bound_ratios": worst}


def cmd_resolvent(cfg: ExperimentConfig) -> Report:
    rep = Report("resolvent", ["epsilon", "ln_eta", "tau", "mu", "dofs", "discrepancy", "bound_frac_U",
                               "bound_frac_dU_dx2", "bound_frac_dU_dx1", "bound_frac_mean_zero", "bound_frac_Q0"], [],
                 ["cell-resolvent-homogenization", "coercivity-norm-bounds", "robin-green-value-at-zero"])
    rng = np.random.default_rng(cfg.seed)
    pts, disc0 = [], []
    bounds_ok = True
    for eps, eta_ln in cfg.schedule():
        for tau in cfg.tau:
            d = _guard(rep, {"epsilon": eps, "ln_eta": eta_ln, "tau": tau}, _resolvent_point,
                       cfg, eps, eta_ln, float(tau), rng)
            if d is None:
                continue
            w = d["bound_ratios"]
            rep.rows.append([eps, eta_ln, float(tau), d["mu"], d["dofs"], d["discrepancy"], w["U"],
                             w["dU_dx2"], w["dU_dx1"], w["perp"], w["Q0"]])
            bounds_ok &= all(v <= 1.0 for v in w.values())
            if tau == 0:
                disc0.append(d["discrepancy"])
            pts.append(d)
    rep.checks["bounds"] = bounds_ok
    if len(disc0) >= 2:
        rep.checks["discrepancy_trend"] = _nonincreasing(disc0)
    rep.summary = {"points": pts}
    return rep


RUNNERS: dict[str, Callable[[ExperimentConfig], Report]] = {
    "homog": cmd_homog,
    "theta": cmd_theta,
    "expand": cmd_expand,
    "band": cmd_band,
    "corrector": cmd_corrector,
    "resolvent": cmd_resolvent,
}


def run(cfg: ExperimentConfig) -> Report:
    return RUNNERS[cfg.command](cfg)
