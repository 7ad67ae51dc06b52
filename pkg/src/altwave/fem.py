"""Bilinear finite elements for the Floquet cell problem.

The cell is ``|y1| < pi/2, 0 < x2 < pi`` with ``y1 = x1 / eps``.  Meshes are
built in the isotropic fast variables ``xi = (y1, x2 / eps)``, in which the
cell form reads

    eps^-2 int |(i d_xi1 - tau) u|^2 + |d_xi2 u|^2  dxi

against the mass ``int |u|^2 dxi`` (the common Jacobian ``eps`` cancels).

Near the Dirichlet window ``|xi1| <= eta`` the mesh is a stack of geometric
rings: scaled copies of one polyline around the window, from scale
``R0 ~ 1`` down to a few ``eta``, closed by a small tensor patch whose
bottom edge has nodes exactly at ``+-eta``.  All ring elements have the same
shape at every scale, so arbitrarily small ``eta`` costs only
``O(ln(1/eta))`` elements.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConfigurationError, DomainError, ResolutionError, SolverError
from .homogenized import Lambda_n, SampledFunction1D, apply_Qmu_inverse
from .params import HALF_PI, ModelParams, mu_from_log

DENSE_MAX_DOFS = 2000


@dataclass(frozen=True)
class CellConfig:
    """Cell parameters.  ``eta_ln = -inf`` gives a pure Neumann bottom and
    ``eta_ln >= ln(pi/2)`` a pure Dirichlet bottom."""

    epsilon: float
    eta_ln: float
    tau: float = 0.0
    kappa: float = 0.5

    def __post_init__(self):
        if not self.epsilon > 0:
            raise DomainError("epsilon must be positive")
        if not -1.0 <= self.tau < 1.0:
            raise DomainError("tau must lie in [-1, 1)")
        if math.isnan(self.eta_ln):
            raise DomainError("eta_ln is NaN")

    @classmethod
    def from_params(cls, p: ModelParams) -> "CellConfig":
        return cls(p.epsilon, p.eta_ln, p.tau, p.kappa)

    @classmethod
    def from_mu(cls, epsilon, mu, tau=0.0, kappa=0.5):
        return cls(epsilon, -1.0 / (epsilon * mu), tau, kappa)

    @classmethod
    def full_dirichlet(cls, epsilon, tau=0.0, kappa=0.5):
        return cls(epsilon, math.log(HALF_PI), tau, kappa)

    @classmethod
    def neumann_bottom(cls, epsilon, tau=0.0, kappa=0.5):
        return cls(epsilon, -math.inf, tau, kappa)

    def with_tau(self, tau: float) -> "CellConfig":
        return CellConfig(self.epsilon, self.eta_ln, tau, self.kappa)

    @property
    def eta(self) -> float:
        return min(math.exp(self.eta_ln), HALF_PI)

    @property
    def kind(self) -> str:
        if self.eta_ln == -math.inf:
            return "neumann"
        if self.eta_ln >= math.log(HALF_PI):
            return "dirichlet"
        return "window"

    @property
    def mu(self) -> float:
        if self.kind == "neumann":
            return 0.0
        if self.kind == "dirichlet" or self.eta_ln >= 0:
            return math.inf
        return mu_from_log(self.epsilon, self.eta_ln)


@dataclass(frozen=True)
class MeshControls:
    base_div: int = 8
    grade_ratio: float = 0.5
    r0: float = 1.0
    growth: float = 1.5

    def __post_init__(self):
        if self.base_div < 8:
            raise ConfigurationError("base_div must be >= 8")
        if not 0.3 <= self.grade_ratio <= 0.8:
            raise ConfigurationError("grade_ratio must lie in [0.3, 0.8]")
        if not 0.2 <= self.r0 < HALF_PI:
            raise ConfigurationError("r0 must lie in [0.2, pi/2)")


@dataclass
class CellMesh:
    """Unstructured quadrilateral mesh of the cell in ``xi`` coordinates."""

    xi: np.ndarray          # (N, 2): (y1, x2/eps)
    quads: np.ndarray       # (E, 4) counter-clockwise
    epsilon: float
    eta_ln: float
    kind: str
    level: int = 0
    n_rings: int = 0

    @property
    def y1(self) -> np.ndarray:
        return self.xi[:, 0]

    @property
    def x2(self) -> np.ndarray:
        return self.xi[:, 1] * self.epsilon

    @property
    def top(self) -> float:
        return math.pi / self.epsilon

    @property
    def n_nodes(self) -> int:
        return self.xi.shape[0]

    def dirichlet_mask(self) -> np.ndarray:
        x, y = self.xi[:, 0], self.xi[:, 1]
        m = y == self.top
        if self.kind == "dirichlet":
            m |= y == 0
        elif self.kind == "window":
            m |= (y == 0) & (np.abs(x) <= math.exp(self.eta_ln))
        return m

    def min_spacing(self) -> float:
        e = self.xi[self.quads[:, [1, 2, 3, 0]]] - self.xi[self.quads]
        return float(np.min(np.hypot(e[..., 0], e[..., 1])))

    def window_nodes(self) -> np.ndarray:
        eta = math.exp(self.eta_ln) if self.kind == "window" else None
        if eta is None:
            return np.zeros(0, dtype=int)
        return np.flatnonzero((self.xi[:, 1] == 0) & (np.abs(np.abs(self.xi[:, 0]) - eta) == 0))

    def to_csv(self, path) -> None:
        data = np.column_stack([self.y1, self.x2, self.dirichlet_mask().astype(float)])
        np.savetxt(path, data, delimiter=",", fmt="%.17g", header="y1,x2,dirichlet", comments="")


def _xi2_nodes(m: int, r0: float, top: float, h_far: float, growth: float) -> np.ndarray:
    """Uniform on [0, r0] (m intervals), geometric growth, then uniform to ``top``."""
    nodes = list(np.linspace(0.0, 1.0, m + 1) * r0)
    h = r0 / m
    y = r0
    while True:
        h = min(h * growth, h_far)
        if y + h >= top - 0.5 * h or h >= h_far:
            break
        y += h
        nodes.append(y)
    rest = top - y
    if rest > 0:
        n = max(1, int(math.ceil(rest / h_far - 1e-9)))
        nodes.extend(list(y + rest * np.arange(1, n + 1) / n))
    out = np.array(nodes)
    out[-1] = top
    return out


def _tensor_quads(nx: int, ny: int, offset: int = 0) -> np.ndarray:
    idx = np.arange(nx * ny).reshape(ny, nx) + offset
    q = np.stack([idx[:-1, :-1], idx[:-1, 1:], idx[1:, 1:], idx[1:, :-1]], axis=-1)
    return q.reshape(-1, 4)


def _tensor_mesh(xs: np.ndarray, ys: np.ndarray):
    X, Y = np.meshgrid(xs, ys)
    pts = np.column_stack([X.ravel(), Y.ravel()])
    return pts, _tensor_quads(xs.size, ys.size)


def _sym_nodes(breaks: Sequence[float], h: float) -> np.ndarray:
    """Nodes on [-pi/2, pi/2] containing the (positive) ``breaks``, mirrored."""
    pos = [0.0]
    pts = sorted(b for b in breaks if 0 < b < HALF_PI) + [HALF_PI]
    for b in pts:
        a = pos[-1]
        n = max(1, int(math.ceil((b - a) / h - 1e-9)))
        seg = a + (b - a) * np.arange(1, n + 1) / n
        seg[-1] = b
        pos.extend(list(seg))
    pos = np.array(pos)
    pos[-1] = HALF_PI
    return np.concatenate([-pos[:0:-1], pos])


def _merge(pts: np.ndarray, quads: np.ndarray):
    """Identify bitwise-equal points."""
    uniq, inv = np.unique(pts, axis=0, return_inverse=True)
    q = inv.ravel()[quads]
    used = np.zeros(uniq.shape[0], dtype=bool)
    used[q.ravel()] = True
    renum = np.cumsum(used) - 1
    return uniq[used], renum[q]


def build_mesh(eta_ln: float, base_div: int = 8, grade_ratio: float = 0.5,
               epsilon: float = 0.1, controls: MeshControls | None = None) -> CellMesh:
    """Level-0 mesh of the cell for window half-width ``exp(eta_ln)``."""
    c = controls or MeshControls(base_div=base_div, grade_ratio=grade_ratio)
    top = math.pi / epsilon
    h = math.pi / c.base_div
    h_far = h / epsilon
    if eta_ln == -math.inf:
        kind = "neumann"
    elif eta_ln >= math.log(HALF_PI):
        kind = "dirichlet"
    else:
        kind = "window"
    eta = math.exp(eta_ln) if kind == "window" else 0.0
    r0 = c.r0
    m = max(2, int(math.ceil(r0 / h - 1e-9)))
    ys = _xi2_nodes(m, r0, top, h_far, c.growth)

    if kind != "window" or eta >= 0.25 * r0:
        # plain tensor mesh; the window edges (if any) are mesh nodes
        breaks = [eta] if kind == "window" else []
        if kind == "window":
            breaks += [min(2 * eta, 0.5 * (eta + HALF_PI))]
        xs = _sym_nodes(breaks, h * 0.5 if kind == "window" else h)
        pts, quads = _tensor_mesh(xs, ys)
        return CellMesh(pts, quads, epsilon, eta_ln, kind, 0, 0)

    q = c.grade_ratio
    # window rings: r0 q^k down to r_K > 2 eta (r_K <= 4 eta for q = 1/2)
    K = int(math.floor(math.log(2 * eta / r0) / math.log(q)))
    while r0 * q ** K <= 2 * eta:
        K -= 1
    K = max(K, 0)
    scales = r0 * q ** np.arange(K + 1)
    scales[0] = r0
    rK = scales[K]
    a = eta / rK
    b = 0.5 * a  # half-width of the boxes around the two junctions
    hr = 1.0 / m
    side = np.concatenate([[0.0], _lin(b, 1.0, hr)])
    top_ref = np.concatenate([
        _lin(-1.0, (-a) + (-b), hr), [-a], _lin((-a) + b, a - b, hr), [a], _lin(a + b, 1.0, hr)])
    poly = _polyline(side, top_ref)

    pts_list, quad_list = [], []
    off = 0

    def add(P, Q):
        nonlocal off
        pts_list.append(P)
        quad_list.append(Q + off)
        off += P.shape[0]

    # outer tensor grid with the hole [-r0, r0] x [0, r0]
    xs = _sym_nodes([r0], h)
    xs = np.concatenate([xs[xs < -r0 + 1e-12 * r0], top_ref[1:-1] * r0, xs[xs > r0 - 1e-12 * r0]])
    xs[np.argmin(np.abs(xs + r0))] = -r0
    xs[np.argmin(np.abs(xs - r0))] = r0
    ys_ = np.concatenate([side * r0, ys[ys > r0 * (1 + 1e-12)]])
    P, Q = _tensor_mesh(xs, ys_)
    add(P, Q[~_inside_box(P, Q, 0.0, r0, r0)])
    # geometric rings around the window
    add(*_ring_stack(poly, scales, 0.0))
    # patch of size r_K, with geometric rings around each junction (+-a, 0)
    n_junction = max(4, int(math.ceil(math.log(1e-8) / math.log(q))))
    jscales = b * q ** np.arange(n_junction + 1)
    jscales[0] = b
    jside = np.array([0.0, 1.0])
    jtop = np.array([-1.0, 0.0, 1.0])
    jpoly = _polyline(jside, jtop)
    P, Q = _tensor_mesh(top_ref, side)
    keep = ~(_inside_box(P, Q, -a, b, b) | _inside_box(P, Q, a, b, b))
    add(P * rK, Q[keep])
    for c0 in (-a, a):
        RP, RQ = _ring_stack(jpoly, jscales, c0)
        add(RP * rK, RQ)
        sK = jscales[-1]
        P, Q = _tensor_mesh(c0 + jtop * sK, jside * sK)
        add(P * rK, Q)
    pts = np.vstack(pts_list)
    quads = np.vstack(quad_list)
    pts, quads = _merge(pts, quads)
    quads = _orient(pts, quads)
    # exact window endpoints
    bottom = pts[:, 1] == 0
    for sgn in (-1.0, 1.0):
        j = np.flatnonzero(bottom & (pts[:, 0] == sgn * a * rK))
        if j.size != 1:
            raise ConfigurationError("window endpoint node not found")
        pts[j[0], 0] = sgn * eta
    return CellMesh(pts, quads, epsilon, eta_ln, kind, 0, K)


def _lin(x0: float, x1: float, h: float) -> np.ndarray:
    n = max(1, int(math.ceil((x1 - x0) / h - 1e-9)))
    out = x0 + (x1 - x0) * np.arange(n + 1) / n
    out[0], out[-1] = x0, x1
    return out


def _polyline(side: np.ndarray, top: np.ndarray) -> np.ndarray:
    """Boundary of [-1,1]x[0,1] without the bottom: up, across, down."""
    return np.concatenate([
        np.column_stack([np.full(side.size, -1.0), side]),
        np.column_stack([top[1:], np.ones(top.size - 1)]),
        np.column_stack([np.ones(side.size - 1), side[::-1][1:]]),
    ])


def _ring_stack(poly: np.ndarray, scales: np.ndarray, c0: float):
    """Quads between consecutive copies ``(c0, 0) + s * poly``."""
    npl = poly.shape[0]
    pts = np.vstack([np.column_stack([c0 + poly[:, 0] * s, poly[:, 1] * s]) for s in scales])
    i = np.arange(npl - 1)
    quads = [np.column_stack([k * npl + i, k * npl + i + 1, (k + 1) * npl + i + 1, (k + 1) * npl + i])
             for k in range(len(scales) - 1)]
    quads = np.vstack(quads) if quads else np.zeros((0, 4), dtype=int)
    return pts, quads


def _inside_box(P, Q, c0, half_w, height):
    cx = 0.5 * (P[Q[:, 0], 0] + P[Q[:, 2], 0])
    cy = 0.5 * (P[Q[:, 0], 1] + P[Q[:, 2], 1])
    return (np.abs(cx - c0) < half_w) & (cy < height)


def _orient(pts, quads):
    p = pts[quads]
    area2 = ((p[:, 0, 0] * p[:, 1, 1] - p[:, 1, 0] * p[:, 0, 1]) + (p[:, 1, 0] * p[:, 2, 1] - p[:, 2, 0] * p[:, 1, 1])
             + (p[:, 2, 0] * p[:, 3, 1] - p[:, 3, 0] * p[:, 2, 1]) + (p[:, 3, 0] * p[:, 0, 1] - p[:, 0, 0] * p[:, 3, 1]))
    q = quads.copy()
    neg = area2 < 0
    q[neg] = q[neg][:, ::-1]
    if np.any(area2 == 0):
        raise ResolutionError("degenerate quadrilateral")
    return q


def refine(mesh: CellMesh) -> CellMesh:
    """Split every quadrilateral into four (edge midpoints plus centroid)."""
    q = mesh.quads
    E = q.shape[0]
    edges = np.stack([q[:, [0, 1]], q[:, [1, 2]], q[:, [2, 3]], q[:, [3, 0]]], axis=1).reshape(-1, 2)
    key = np.sort(edges, axis=1)
    uniq, inv = np.unique(key, axis=0, return_inverse=True)
    inv = inv.ravel()
    N = mesh.n_nodes
    mid = 0.5 * (mesh.xi[uniq[:, 0]] + mesh.xi[uniq[:, 1]])
    cen = 0.25 * mesh.xi[q].sum(axis=1)
    xi = np.vstack([mesh.xi, mid, cen])
    m = (inv + N).reshape(E, 4)  # m01, m12, m23, m30
    c = N + uniq.shape[0] + np.arange(E)
    new = np.concatenate([
        np.column_stack([q[:, 0], m[:, 0], c, m[:, 3]]),
        np.column_stack([m[:, 0], q[:, 1], m[:, 1], c]),
        np.column_stack([c, m[:, 1], q[:, 2], m[:, 2]]),
        np.column_stack([m[:, 3], c, m[:, 2], q[:, 3]]),
    ])
    return CellMesh(xi, new, mesh.epsilon, mesh.eta_ln, mesh.kind, mesh.level + 1, mesh.n_rings)


def mesh_hierarchy(cfg: CellConfig, levels: int, controls: MeshControls = MeshControls(),
                   first_level: int = 0) -> list[CellMesh]:
    m = build_mesh(cfg.eta_ln, epsilon=cfg.epsilon, controls=controls)
    for _ in range(first_level):
        m = refine(m)
    out = [m]
    for _ in range(levels - 1):
        out.append(refine(out[-1]))
    return out


# --- assembly ------------------------------------------------------------------

_G = 1.0 / math.sqrt(3.0)
_GP = [(-_G, -_G), (_G, -_G), (_G, _G), (-_G, _G)]
_SN = np.array([-1.0, 1.0, 1.0, -1.0])
_TN = np.array([-1.0, -1.0, 1.0, 1.0])


def _element_matrices(xy: np.ndarray):
    """Per-element S1 (d_xi1 part), S2 (d_xi2 part), M and G = int N_a d_xi1 N_b."""
    E = xy.shape[0]
    S1 = np.zeros((E, 4, 4))
    S2 = np.zeros((E, 4, 4))
    M = np.zeros((E, 4, 4))
    G = np.zeros((E, 4, 4))
    for s, t in _GP:
        N = 0.25 * (1 + _SN * s) * (1 + _TN * t)
        dNs = 0.25 * _SN * (1 + _TN * t)
        dNt = 0.25 * _TN * (1 + _SN * s)
        xs = xy[:, :, 0] @ dNs
        xt = xy[:, :, 0] @ dNt
        ys = xy[:, :, 1] @ dNs
        yt = xy[:, :, 1] @ dNt
        det = xs * yt - xt * ys
        if np.any(det <= 0):
            raise ResolutionError("inverted or degenerate element")
        # inverse Jacobian applied to reference gradients
        dNx = (yt[:, None] * dNs[None, :] - ys[:, None] * dNt[None, :]) / det[:, None]
        dNy = (-xt[:, None] * dNs[None, :] + xs[:, None] * dNt[None, :]) / det[:, None]
        w = det[:, None, None]
        S1 += w * dNx[:, :, None] * dNx[:, None, :]
        S2 += w * dNy[:, :, None] * dNy[:, None, :]
        M += w * np.outer(N, N)[None]
        G += w * N[None, :, None] * dNx[:, None, :]
    return S1, S2, M, G


def _scatter(quads, Ke, n):
    r = np.repeat(quads, 4, axis=1).ravel()
    c = np.tile(quads, (1, 4)).ravel()
    return sp.csr_matrix((Ke.ravel(), (r, c)), shape=(n, n))


def _prolongation(mesh: CellMesh):
    """Node -> dof map merging periodic pairs and dropping Dirichlet nodes."""
    xi = mesh.xi
    n = mesh.n_nodes
    left = np.flatnonzero(xi[:, 0] == -HALF_PI)
    right = np.flatnonzero(xi[:, 0] == HALF_PI)
    lo = left[np.argsort(xi[left, 1], kind="stable")]
    ro = right[np.argsort(xi[right, 1], kind="stable")]
    if lo.size != ro.size or np.any(xi[lo, 1] != xi[ro, 1]):
        raise ResolutionError("periodic boundary nodes do not match")
    master = np.arange(n)
    master[ro] = lo
    dmask = mesh.dirichlet_mask()
    free = (~dmask) & (master == np.arange(n))
    dof_of = -np.ones(n, dtype=int)
    dof_of[free] = np.arange(free.sum())
    node_dof = dof_of[master]
    node_dof[dmask] = -1
    rows = np.flatnonzero(node_dof >= 0)
    P = sp.csr_matrix((np.ones(rows.size), (rows, node_dof[rows])), shape=(n, int(free.sum())))
    return P, node_dof


@dataclass
class CellSystem:
    mesh: CellMesh
    config: CellConfig
    A: sp.csr_matrix          # reduced stiffness (Hermitian)
    M: sp.csr_matrix          # reduced mass
    S1: sp.csr_matrix         # reduced int |d_xi1 u|^2
    S2: sp.csr_matrix         # reduced int |d_xi2 u|^2
    P: sp.csr_matrix          # node <- dof prolongation
    node_dof: np.ndarray

    @property
    def n_dofs(self) -> int:
        return self.A.shape[0]

    @property
    def shift(self) -> float:
        return self.config.tau**2 / self.config.epsilon**2

    def to_nodes(self, u: np.ndarray) -> np.ndarray:
        return self.P @ u

    def interpolate(self, f: Callable) -> np.ndarray:
        """Nodal interpolant of ``f(y1, x2)`` restricted to the dofs."""
        vals = np.asarray(f(self.mesh.y1, self.mesh.x2))
        out = np.zeros(self.n_dofs, dtype=vals.dtype)
        sel = self.node_dof >= 0
        out[self.node_dof[sel]] = vals[sel]
        return out

    def shifted_solve(self, rhs: np.ndarray) -> np.ndarray:
        """Solve ``(A - tau^2/eps^2 M) U = rhs`` with a cached LU factorization."""
        lu = self.__dict__.get("_lu")
        if lu is None:
            B = (self.A - self.shift * self.M).tocsc()
            try:
                lu = spla.splu(B)
            except RuntimeError as exc:
                raise SolverError(str(exc)) from exc
            self.__dict__["_lu"] = lu
        if np.iscomplexobj(rhs) and not np.iscomplexobj(self.A.data):
            return lu.solve(rhs.real) + 1j * lu.solve(rhs.imag)
        return lu.solve(rhs.astype(self.A.dtype) if np.iscomplexobj(self.A.data) else rhs)

    def l2(self, u) -> float:
        return float(np.sqrt(abs(np.vdot(u, self.M @ u))))


def assemble(mesh: CellMesh, config: CellConfig) -> CellSystem:
    if mesh.epsilon != config.epsilon:
        raise ConfigurationError("mesh was built for a different epsilon")
    xy = mesh.xi[mesh.quads]
    S1e, S2e, Me, Ge = _element_matrices(xy)
    n = mesh.n_nodes
    S1 = _scatter(mesh.quads, S1e, n)
    S2 = _scatter(mesh.quads, S2e, n)
    M = _scatter(mesh.quads, Me, n)
    G = _scatter(mesh.quads, Ge, n)
    P, node_dof = _prolongation(mesh)
    PT = P.T.tocsr()
    S1r = (PT @ S1 @ P).tocsr()
    S2r = (PT @ S2 @ P).tocsr()
    Mr = (PT @ M @ P).tocsr()
    tau = config.tau
    eps2 = config.epsilon**2
    if tau == 0:
        A = (S1r + S2r) / eps2
    else:
        Gr = (PT @ G @ P).tocsr()
        A = ((S1r + S2r).astype(complex) - 1j * tau * (Gr - Gr.T) + tau * tau * Mr) / eps2
    A = A.tocsr()
    return CellSystem(mesh, config, A, Mr, S1r, S2r, P, node_dof)


# --- eigenvalues ---------------------------------------------------------------

@dataclass
class SpectralResult:
    eigenvalues: np.ndarray
    vectors: np.ndarray
    mesh_level: int
    dof_count: int
    residuals: np.ndarray = field(default_factory=lambda: np.zeros(0))


def solve_eigs(system: CellSystem, k: int = 1, sigma: float | None = None) -> SpectralResult:
    n = system.n_dofs
    if k < 1 or k > max(1, n // 4):
        raise ConfigurationError("k must lie in [1, dofs/4]")
    A, M = system.A, system.M
    if sigma is None:
        sigma = system.shift
    # graded window meshes span many decades of element size, which puts the
    # top of the discrete spectrum far beyond what a dense solve can separate
    # from the bottom; those always go through shift-invert
    if n <= DENSE_MAX_DOFS and system.mesh.kind != "window":
        w, V = sla.eigh(A.toarray(), M.toarray(), subset_by_index=[0, k - 1])
    else:
        try:
            w, V = spla.eigsh(A, k=k, M=M, sigma=sigma, which="LM", tol=1e-14)
        except (spla.ArpackNoConvergence, RuntimeError) as exc:
            raise SolverError(f"shift-invert iteration failed: {exc}") from exc
    order = np.argsort(w.real)
    w = np.asarray(w.real[order])
    V = V[:, order]
    res = np.empty(k)
    for i in range(k):
        v = V[:, i]
        Mv = M @ v
        res[i] = np.linalg.norm(A @ v - w[i] * Mv) / np.linalg.norm(Mv)
    return SpectralResult(w, V, system.mesh.level, n, res)


def richardson(values: Sequence[float], ratio: float = 2.0, p_bounds=(0.5, 4.0)):
    """Extrapolate the last three values of a refinement sequence.

    The exponent is fitted from the successive differences and clipped to
    ``p_bounds``; returns ``(value, exponent)``.  With two values a second
    order rate is assumed.
    """
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        raise ResolutionError("need at least two levels")
    if v.size == 2:
        p = 2.0
    else:
        d1 = v[-2] - v[-3]
        d2 = v[-1] - v[-2]
        if d1 == 0 or d2 == 0 or d1 * d2 < 0:
            p = 2.0 if d2 != 0 else p_bounds[1]
        else:
            p = math.log(abs(d1 / d2)) / math.log(ratio)
        p = min(max(p, p_bounds[0]), p_bounds[1])
    ext = v[-1] + (v[-1] - v[-2]) / (ratio**p - 1.0)
    return float(ext), float(p)


@dataclass
class LevelStudy:
    config: CellConfig
    levels: list[int]
    dofs: list[int]
    eigenvalues: np.ndarray       # (L, k)
    extrapolated: np.ndarray      # (k,)
    exponents: np.ndarray         # (k,)
    residual_max: float
    results: list[SpectralResult] = field(default_factory=list, repr=False)
    systems: list[CellSystem] = field(default_factory=list, repr=False)

    @property
    def shifted(self) -> np.ndarray:
        return self.extrapolated - self.config.tau**2 / self.config.epsilon**2

    def to_csv_rows(self):
        rows = []
        for lvl, nd, ev in zip(self.levels, self.dofs, self.eigenvalues):
            rows.append([lvl, nd] + list(ev))
        return rows


def converge_eigs(cfg: CellConfig, k: int = 1, levels: int = 3,
                  controls: MeshControls = MeshControls(), first_level: int = 1,
                  keep: bool = False) -> LevelStudy:
    meshes = mesh_hierarchy(cfg, levels, controls, first_level)
    vals, dofs, lv = [], [], []
    res_max = 0.0
    results, systems = [], []
    for mesh in meshes:
        sysm = assemble(mesh, cfg)
        r = solve_eigs(sysm, k)
        vals.append(r.eigenvalues)
        dofs.append(r.dof_count)
        lv.append(mesh.level)
        res_max = max(res_max, float(np.max(r.residuals)))
        if keep:
            results.append(r)
            systems.append(sysm)
    vals = np.array(vals)
    ext = np.empty(k)
    ps = np.empty(k)
    for i in range(k):
        ext[i], ps[i] = richardson(vals[:, i])
    return LevelStudy(cfg, lv, dofs, vals, ext, ps, res_max, results, systems)


def bracket_ok(shifted: Sequence[float], tol: float = 1e-6) -> list[bool]:
    """``1/4 <= lambda_n - tau^2/eps^2 <= n^2`` per index."""
    return [0.25 - tol <= s <= (n + 1) ** 2 + tol for n, s in enumerate(shifted)]


@dataclass
class BandRow:
    tau: float
    extrapolated: np.ndarray
    shifted: np.ndarray
    exponents: np.ndarray
    homogenized: np.ndarray
    bracket: list[bool]


def band_function(cfg: CellConfig, tau_grid: Sequence[float], k: int = 1, levels: int = 3,
                  controls: MeshControls = MeshControls(), first_level: int = 1) -> list[BandRow]:
    rows = []
    mu = cfg.mu
    for tau in tau_grid:
        if abs(tau) > 1.0 - cfg.kappa + 1e-15:
            raise DomainError(f"tau={tau} violates |tau| <= 1 - kappa")
        st = converge_eigs(cfg.with_tau(tau), k, levels, controls, first_level)
        hom = np.array([Lambda_n(mu, n + 1) if math.isfinite(mu) else float((n + 1) ** 2)
                        for n in range(k)])
        rows.append(BandRow(tau, st.extrapolated, st.shifted, st.exponents, hom, bracket_ok(st.shifted)))
    return rows


# --- resolvent -----------------------------------------------------------------

@dataclass
class ResolventSolution:
    system: CellSystem
    U: np.ndarray
    F: np.ndarray

    @property
    def norms(self) -> dict:
        s = self.system
        eps = s.config.epsilon
        U, F = self.U, self.F
        q = lambda B, v: float(abs(np.vdot(v, B @ v))) ** 0.5
        return {
            "f": q(s.M, F),
            "U": q(s.M, U),
            "dU_dx1": q(s.S1, U) / eps,
            "dU_dx2": q(s.S2, U) / eps,
        }


def resolvent_solve(system: CellSystem, F: Callable | SampledFunction1D | np.ndarray) -> ResolventSolution:
    """Solve ``(A - tau^2/eps^2 M) U = M F``.

    ``F`` is either a dof vector, a callable ``F(y1, x2)`` or a profile in
    ``x2`` extended constantly in ``y1``.
    """
    if isinstance(F, SampledFunction1D):
        prof = F
        Fv = system.interpolate(lambda y1, x2: np.broadcast_to(prof(x2), y1.shape))
    elif callable(F):
        Fv = system.interpolate(F)
    else:
        Fv = np.asarray(F)
    U = system.shifted_solve(system.M @ Fv)
    if not np.all(np.isfinite(U)):
        raise SolverError("singular shifted system")
    return ResolventSolution(system, U, Fv)


def resolvent_discrepancy(sol: ResolventSolution, target: Callable) -> float:
    """``||U - target|| / ||F||`` with ``target(x2)`` the homogenized answer."""
    s = sol.system
    T = s.interpolate(lambda y1, x2: np.broadcast_to(target(x2), y1.shape))
    d = sol.U - T
    return s.l2(d) / s.l2(sol.F)


def homogenized_resolvent(F: Callable, mu: float, n: int = 4097) -> Callable:
    """``x2 -> (Q_mu^{-1} F)(x2)`` via the Green kernel on a fine grid."""
    prof = SampledFunction1D.from_callable(F, n)
    u = apply_Qmu_inverse(prof, mu)
    return u


@dataclass
class BoundsReport:
    ratio_U: float
    ratio_dx2: float
    ratio_dx1: float
    bound_dx1: float
    ok_U: bool
    ok_dx2: bool
    ok_dx1: bool
    ratio_perp: float | None = None
    bound_perp: float | None = None
    ok_perp: bool | None = None

    @property
    def ok(self) -> bool:
        flags = [self.ok_U, self.ok_dx2, self.ok_dx1]
        if self.ok_perp is not None:
            flags.append(self.ok_perp)
        return all(flags)


def sanity_bounds(sol: ResolventSolution, kappa: float, mean_zero: bool = False) -> BoundsReport:
    n = sol.norms
    f = n["f"]
    if f == 0:
        return BoundsReport(0, 0, 0, 2 / math.sqrt(kappa), True, True, True)
    rU, r2, r1 = n["U"] / f, n["dU_dx2"] / f, n["dU_dx1"] / f
    b1 = 2.0 / math.sqrt(kappa)
    rep = BoundsReport(rU, r2, r1, b1, rU <= 4.0, r2 <= 2.0, r1 <= b1)
    if mean_zero:
        bp = sol.system.config.epsilon / math.sqrt(kappa)
        rep.ratio_perp, rep.bound_perp, rep.ok_perp = rU, bp, rU <= bp
    return rep


def project_mean_zero(system: CellSystem, F: np.ndarray) -> np.ndarray:
    """Remove from a dof vector its M-orthogonal projection on fields constant in ``y1``.

    The projection is taken onto nodal interpolants of a sine basis in
    ``x2`` that is rich enough for smooth data.
    """
    cached = system.__dict__.get("_mean_basis")
    if cached is None:
        basis = [system.interpolate(lambda y1, x, k=k: np.broadcast_to(np.sin((k + 0.5) * (x - math.pi)), y1.shape))
                 for k in range(24)]
        Bm = np.column_stack(basis)
        MB = system.M @ Bm
        # coarse meshes cannot resolve all modes; drop the dependent directions
        w, V = np.linalg.eigh(Bm.T @ MB)
        keep = w > 1e-12 * w.max()
        cached = (Bm, MB, V[:, keep] / w[keep], V[:, keep])
        system.__dict__["_mean_basis"] = cached
    Bm, MB, Vw, V = cached
    c = Vw @ (V.T @ (MB.T @ F))
    return F - Bm @ c


# --- eigenfunction comparison ----------------------------------------------------

def eigfn_compare(system: CellSystem, result: SpectralResult, reference: np.ndarray) -> tuple[float, float]:
    """Relative L2 and H1-seminorm distances between the scaled discrete ground
    state and a reference field given by its nodal values on ``system.mesh``."""
    v = result.vectors[:, 0]
    ref = np.zeros(system.n_dofs, dtype=reference.dtype)
    sel = system.node_dof >= 0
    ref[system.node_dof[sel]] = reference[sel]
    M = system.M
    c = np.vdot(v, M @ ref) / np.vdot(v, M @ v)
    d = c * v - ref
    l2 = float(np.sqrt(abs(np.vdot(d, M @ d)) / abs(np.vdot(ref, M @ ref))))
    K = system.S1 + system.S2
    h1 = float(np.sqrt(abs(np.vdot(d, K @ d)) / max(abs(np.vdot(ref, K @ ref)), 1e-300)))
    return l2, h1


def export_spectra_csv(path, study: LevelStudy) -> None:
    k = study.eigenvalues.shape[1]
    header = "level,dofs," + ",".join(f"lambda_{i + 1}" for i in range(k))
    rows = study.to_csv_rows()
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for r in rows:
            fh.write(",".join(f"{x:.17g}" if isinstance(x, float) else str(x) for x in r) + "\n")


@dataclass
class EigfnStudy:
    levels: list[int]
    dofs: list[int]
    l2: list[float]            # plain relative L2 distance per level
    h1: list[float]            # relative H1-seminorm distance per level
    l2_extrapolated: list[float]  # distance of the Richardson-combined field, per level pair


def _scaled_ground_state(system: CellSystem, result: SpectralResult, reference: np.ndarray) -> np.ndarray:
    v = result.vectors[:, 0]
    ref = np.zeros(system.n_dofs, dtype=reference.dtype)
    sel = system.node_dof >= 0
    ref[system.node_dof[sel]] = reference[sel]
    c = np.vdot(v, system.M @ ref) / np.vdot(v, system.M @ v)
    return system.P @ (c * v)


def eigfn_convergence(cfg: CellConfig, reference: Callable, levels: int = 3,
                      controls: MeshControls = MeshControls(), first_level: int = 1,
                      rate: float = 2.0) -> EigfnStudy:
    """Distances between the discrete ground state and ``reference(y1, x2)``.

    Refinement keeps the coarse nodes first, so consecutive levels share the
    coarse node set; there the scaled nodal fields are combined as
    ``v_f + (v_f - v_c) / (2^rate - 1)`` and the distance of that combination
    is measured in the coarse mass norm.  This removes the leading
    discretization error and exposes the modelling error.
    """
    meshes = mesh_hierarchy(cfg, levels, controls, first_level)
    st = EigfnStudy([], [], [], [], [])
    prev = None
    for mesh in meshes:
        S = assemble(mesh, cfg)
        r = solve_eigs(S, 1)
        ref = np.asarray(reference(mesh.y1, mesh.x2))
        l2, h1 = eigfn_compare(S, r, ref)
        st.levels.append(mesh.level)
        st.dofs.append(S.n_dofs)
        st.l2.append(l2)
        st.h1.append(h1)
        v = _scaled_ground_state(S, r, ref)
        if prev is not None:
            Sc, vc, refc = prev
            n = Sc.mesh.n_nodes
            ext = v[:n] + (v[:n] - vc) / (2.0**rate - 1.0)
            sel = Sc.node_dof >= 0
            d = np.zeros(Sc.n_dofs, dtype=ext.dtype)
            d[Sc.node_dof[sel]] = (ext - refc)[sel]
            rd = np.zeros(Sc.n_dofs, dtype=refc.dtype)
            rd[Sc.node_dof[sel]] = refc[sel]
            st.l2_extrapolated.append(Sc.l2(d) / Sc.l2(rd))
        prev = (S, v, ref)
    return st
