"""Damped-Newton solver for the regularized prescribed-curvature problem.

The Dirichlet problem div(N_eps(u)) = H with
N_eps(u) = (grad(u) + sigma*F)/sqrt(eps^2 + |grad(u) + sigma*F|^2)
is discretized in divergence form.  Two gradient samplings are used:

* a half-node flux operator (exact difference across each face, averaged
  transverse components) whose adjoint divergence gives the reported PDE
  residual div_h N_eps(u) - H, and
* a multilinear cell operator (2^m-point Gauss per cell) whose energy
  sum_cells w * sqrt(eps^2 + |g|^2) + sum_i h^m H_i u_i
  drives the Newton iteration: the residual is the exact energy gradient,
  so the Newton matrix is symmetric positive definite for eps > 0 and
  backtracking on the energy enforces monotone descent.

A continuation driver lowers eps along a schedule (optionally raising the
boundary-data scale sigma first) and records per-stage diagnostics.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .fields import CurvatureSpec, VectorFieldSpec, scaled_field, zero_curvature
from .functional import p_area, regularized_area
from .grids import (
    BoundaryData,
    DomainSpec,
    ScalarFieldGrid,
    apply_boundary,
    build_grid,
    gradient_arrays,
    quadrature_weights,
)

__all__ = [
    "SolveConfig",
    "StageDiagnostics",
    "SolveResult",
    "FaceOperator",
    "CellOperator",
    "assemble",
    "pde_residual",
    "newton_solve",
    "continuation_solve",
    "comparison_harness",
    "ComparisonReport",
    "default_epsilon_schedule",
]


def default_epsilon_schedule(stop_exp: int = 10):
    return tuple(2.0**-k for k in range(stop_exp + 1))


@dataclass(frozen=True)
class SolveConfig:
    epsilon_schedule: tuple = dc_field(default_factory=default_epsilon_schedule)
    sigma_schedule: tuple = (1.0,)
    newton_max_iters: int = 50
    newton_tol: float = 1e-8
    damping: float = 0.5
    linear_tol: float = 1e-10
    tau_sing: Optional[float] = None
    parea_stop_tol: float = 1e-3
    direct_solver_max_unknowns: int = 400_000

    def __post_init__(self):
        eps = np.asarray(self.epsilon_schedule, dtype=float)
        if eps.size == 0 or np.any(eps <= 0) or (eps.size > 1 and np.any(np.diff(eps) >= 0)):
            raise ValueError("epsilon_schedule must be a decreasing positive sequence")
        sig = np.asarray(self.sigma_schedule, dtype=float)
        if sig.size == 0 or (sig.size > 1 and np.any(np.diff(sig) <= 0)):
            raise ValueError("sigma_schedule must be increasing")
        if min(self.newton_tol, self.damping, self.linear_tol) <= 0:
            raise ValueError("tolerances must be positive")


@dataclass
class StageDiagnostics:
    epsilon: float
    sigma: float
    iters: int
    residual: float
    sup_u: float
    sup_grad_u: float
    regularized_area: float
    p_area: float
    energy_history: list
    converged: bool

    def summary(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "sigma": self.sigma,
            "iters": self.iters,
            "residual": self.residual,
            "sup_u": self.sup_u,
            "sup_grad_u": self.sup_grad_u,
            "regularized_area": self.regularized_area,
        }


@dataclass
class SolveResult:
    grid: ScalarFieldGrid
    stages: list
    converged: bool
    failure_stage: Optional[int] = None

    def to_json(self) -> str:
        return json.dumps({"stages": [s.summary() for s in self.stages]}, sort_keys=True)


class _GradientSampler:
    """Shared energy / residual / Hessian assembly over sampled gradients.

    Subclasses provide the sparse operator G mapping valued-node values to
    stacked gradient samples, the sample points, and per-sample weights.
    """

    grid: ScalarFieldGrid
    G: sp.csr_matrix
    sample_points: np.ndarray
    sample_weights: np.ndarray
    F_samples: np.ndarray

    def _init_nodes(self, grid: ScalarFieldGrid):
        self.grid = grid
        self.h = grid.h
        self.m = grid.dim
        valued = grid.has_value
        self.valued_idx = np.argwhere(valued)
        self.n_valued = self.valued_idx.shape[0]
        node_id = -np.ones(grid.shape, dtype=np.int64)
        node_id[valued] = np.arange(self.n_valued)
        self.node_id = node_id
        self.interior_unknowns = node_id[grid.interior_mask & valued]

    def grid_values(self) -> np.ndarray:
        return self.grid.values[tuple(self.valued_idx.T)]

    def write_back(self, u_valued: np.ndarray):
        vals = self.grid.values[tuple(self.valued_idx.T)]
        vals[self.interior_unknowns] = u_valued[self.interior_unknowns]
        self.grid.values[tuple(self.valued_idx.T)] = vals

    def gradients(self, u_valued: np.ndarray) -> np.ndarray:
        g = (self.G @ u_valued).reshape(-1, self.m)
        return g + self.F_samples

    def energy(self, u_valued: np.ndarray, eps: float, H_lin: np.ndarray) -> float:
        g = self.gradients(u_valued)
        W = np.sqrt(eps * eps + np.sum(g * g, axis=1))
        return float(self.sample_weights @ W + H_lin @ u_valued)

    def residual(self, u_valued: np.ndarray, eps: float, H_lin: np.ndarray):
        g = self.gradients(u_valued)
        W = np.sqrt(eps * eps + np.sum(g * g, axis=1))
        N = g / W[:, None]
        R = self.G.T @ (self.sample_weights[:, None] * N).reshape(-1) + H_lin
        return R, g, W

    def hessian(self, g: np.ndarray, W: np.ndarray) -> sp.csr_matrix:
        N = g / W[:, None]
        ns, m = g.shape
        blocks = (np.eye(m)[None, :, :] - N[:, :, None] * N[:, None, :]) / W[:, None, None]
        blocks *= self.sample_weights[:, None, None]
        rows = np.repeat(np.arange(ns) * m, m * m) + np.tile(np.repeat(np.arange(m), m), ns)
        cols = np.repeat(np.arange(ns) * m, m * m) + np.tile(np.tile(np.arange(m), m), ns)
        D = sp.coo_matrix((blocks.reshape(-1), (rows, cols)), shape=(ns * m, ns * m)).tocsr()
        return (self.G.T @ (D @ self.G)).tocsr()

    def divergence_residual(self, u_valued: np.ndarray, eps: float, H_nodes: np.ndarray):
        """div_h N_eps(u) - H at interior nodes (physical scaling)."""
        g = self.gradients(u_valued)
        W = np.sqrt(eps * eps + np.sum(g * g, axis=1))
        with np.errstate(invalid="ignore", divide="ignore"):
            N = np.where(W[:, None] > 0, g / np.where(W[:, None] > 0, W[:, None], 1.0), 0.0)
        R_area = self.G.T @ (self.sample_weights[:, None] * N).reshape(-1)
        div_term = -R_area / self.h**self.m
        return div_term[self.interior_unknowns] - H_nodes[self.interior_unknowns]


class FaceOperator(_GradientSampler):
    """Half-node flux sampling: one gradient vector per lattice face.

    The face-normal component is the exact difference across the face; the
    transverse components average the endpoints' nodal derivatives
    (central where both neighbors carry values, one-sided at the rim).
    Face weight h^m/m tiles the volume across the m face families.
    """

    def __init__(self, grid: ScalarFieldGrid, F: VectorFieldSpec, sigma: float = 1.0):
        self._init_nodes(grid)
        valued = grid.has_value
        node_id = self.node_id
        rows, cols, vals = [], [], []
        centers = []
        stencils = [self._nodal_stencil(axis) for axis in range(self.m)]
        face_count = 0
        for axis in range(self.m):
            pair = valued & np.roll(valued, -1, axis=axis)
            sl = [slice(None)] * self.m
            sl[axis] = -1
            pair[tuple(sl)] = False
            a_idx = np.argwhere(pair)
            if a_idx.size == 0:
                continue
            b_idx = a_idx.copy()
            b_idx[:, axis] += 1
            ida = node_id[tuple(a_idx.T)]
            idb = node_id[tuple(b_idx.T)]
            nf = ida.size
            face_rows = self.m * (face_count + np.arange(nf))
            rows += [face_rows + axis, face_rows + axis]
            cols += [idb, ida]
            vals += [np.full(nf, 1.0 / self.h), np.full(nf, -1.0 / self.h)]
            for b in range(self.m):
                if b == axis:
                    continue
                st_cols, st_vals = stencils[b]
                for eid in (ida, idb):
                    for k in range(st_cols.shape[1]):
                        c = st_cols[eid, k]
                        v = 0.5 * st_vals[eid, k]
                        keep = c >= 0
                        rows.append((face_rows + b)[keep])
                        cols.append(c[keep])
                        vals.append(v[keep])
            centers.append(grid.origin + grid.h * (a_idx + 0.5 * np.eye(self.m)[axis]))
            face_count += nf
        self.n_samples = face_count
        self.G = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(self.m * face_count, self.n_valued),
        ).tocsr()
        self.sample_points = np.concatenate(centers, axis=0)
        self.F_samples = sigma * F.value(self.sample_points)
        self.sample_weights = np.full(face_count, self.h**self.m / self.m)

    def _nodal_stencil(self, axis: int):
        grid = self.grid
        valued = grid.has_value
        nid = self.node_id
        up = np.roll(nid, -1, axis=axis)
        dn = np.roll(nid, 1, axis=axis)
        up_ok = np.roll(valued, -1, axis=axis).copy()
        dn_ok = np.roll(valued, 1, axis=axis).copy()
        sl = [slice(None)] * self.m
        sl[axis] = -1
        up_ok[tuple(sl)] = False
        sl[axis] = 0
        dn_ok[tuple(sl)] = False

        cols = -np.ones((self.n_valued, 2), dtype=np.int64)
        wts = np.zeros((self.n_valued, 2))
        ids = nid[valued]
        u, d = up[valued], dn[valued]
        uo, do = up_ok[valued], dn_ok[valued]
        h = self.h
        central = uo & do
        fwd = uo & ~do
        bwd = do & ~uo
        cols[ids[central], 0] = u[central]
        wts[ids[central], 0] = 0.5 / h
        cols[ids[central], 1] = d[central]
        wts[ids[central], 1] = -0.5 / h
        cols[ids[fwd], 0] = u[fwd]
        wts[ids[fwd], 0] = 1.0 / h
        cols[ids[fwd], 1] = ids[fwd]
        wts[ids[fwd], 1] = -1.0 / h
        cols[ids[bwd], 0] = ids[bwd]
        wts[ids[bwd], 0] = 1.0 / h
        cols[ids[bwd], 1] = d[bwd]
        wts[ids[bwd], 1] = -1.0 / h
        return cols, wts


class CellOperator(_GradientSampler):
    """Multilinear cell elements with 2^m-point Gauss quadrature.

    Cells are lattice cubes whose 2^m corners all carry values; gradients
    of the multilinear interpolant are sampled at the tensor Gauss points,
    weight (h/2)^m each.  Constant flux is annihilated exactly wherever an
    interior node's full cell ring exists.
    """

    def __init__(self, grid: ScalarFieldGrid, F: VectorFieldSpec, sigma: float = 1.0):
        self._init_nodes(grid)
        m = self.m
        valued = grid.has_value
        cell_ok = valued.copy()
        for axis in range(m):
            nxt = np.roll(cell_ok, -1, axis=axis)
            sl = [slice(None)] * m
            sl[axis] = -1
            nxt[tuple(sl)] = False
            cell_ok = cell_ok & nxt
        base = np.argwhere(cell_ok)
        ncell = base.shape[0]
        if ncell == 0:
            raise ValueError("grid has no complete cells")
        corners = np.stack(
            [self.node_id[tuple((base + _bits(c, m)).T)] for c in range(2**m)], axis=1
        )
        gp1 = np.array([0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)])
        gauss = np.stack(np.meshgrid(*([gp1] * m), indexing="ij"), axis=-1).reshape(-1, m)
        ng = gauss.shape[0]
        rows, cols, vals = [], [], []
        for q in range(ng):
            ghat = gauss[q]
            for c in range(2**m):
                bits = _bits(c, m)
                for a in range(m):
                    w = (1.0 if bits[a] else -1.0) / self.h
                    for b in range(m):
                        if b == a:
                            continue
                        w *= ghat[b] if bits[b] else (1.0 - ghat[b])
                    rows.append(m * (np.arange(ncell) * ng + q) + a)
                    cols.append(corners[:, c])
                    vals.append(np.full(ncell, w))
        self.n_samples = ncell * ng
        self.G = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(m * self.n_samples, self.n_valued),
        ).tocsr()
        pts = (
            base[:, None, :].astype(float) + gauss[None, :, :]
        ).reshape(-1, m) * grid.h + grid.origin
        self.sample_points = pts
        self.F_samples = sigma * F.value(pts)
        self.sample_weights = np.full(self.n_samples, (grid.h / 2.0) ** m * (2**m / ng))


def _bits(c: int, m: int) -> np.ndarray:
    return np.array([(c >> a) & 1 for a in range(m)], dtype=int)


def _curvature_nodes(opr: _GradientSampler, H: Optional[CurvatureSpec]) -> np.ndarray:
    if H is None:
        H = zero_curvature()
    if H.bound == 0.0:
        return np.zeros(opr.n_valued)
    pts = opr.grid.all_coords()[tuple(opr.valued_idx.T)]
    return H.value(pts)


def assemble(grid: ScalarFieldGrid, F: VectorFieldSpec, H, eps: float, sigma: float = 1.0):
    """Residual and quasilinear coefficient fields of the regularized operator.

    Returns (residual, coeffs): residual is div_h N_eps(u) - H over interior
    nodes from the half-node flux operator; coeffs carries per-interior-node
    coefficient matrices a = (I (eps^2+|g|^2) - g g^T)/W^3 and the
    lower-order scalar b, evaluated on nodal gradients with sigma*F.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    opr = FaceOperator(grid, F, sigma)
    H_nodes = _curvature_nodes(opr, H)
    res = opr.divergence_residual(opr.grid_values(), eps, H_nodes)

    gu, ok = gradient_arrays(grid)
    coords = grid.all_coords()
    interior = grid.interior_mask & ok
    g = (gu + sigma * F.value(coords))[interior]
    pts = coords[interior]
    W2 = eps * eps + np.sum(g * g, axis=1)
    W3 = W2**1.5
    m = grid.dim
    a = (np.eye(m)[None] * W2[:, None, None] - g[:, :, None] * g[:, None, :]) / W3[:, None, None]
    b = np.zeros(g.shape[0])
    for k, p in enumerate(pts):
        jac = sigma * F.jacobian(p)
        b[k] = (W2[k] * np.trace(jac) - g[k] @ jac @ g[k]) / W3[k]
    coeffs = {"points": pts, "a": a, "b": b, "gradients": g, "eps": eps, "sigma": sigma}
    return res, coeffs


def pde_residual(grid, F: VectorFieldSpec, H=None, eps: float = 0.0, sigma: float = 1.0):
    """Half-node flux residual div_h N_eps(u) - H at interior nodes."""
    opr = FaceOperator(grid, F, sigma)
    H_nodes = _curvature_nodes(opr, H)
    res = opr.divergence_residual(opr.grid_values(), eps, H_nodes)
    points = grid.all_coords()[grid.interior_mask & grid.has_value]
    return res, points


def _solve_linear(K: sp.csr_matrix, rhs: np.ndarray, config: SolveConfig) -> np.ndarray:
    diag = K.diagonal()
    dead = diag <= 0
    if np.any(dead):
        # nodes decoupled from every cell (boundary slivers): pin them
        K = K.tolil()
        rhs = rhs.copy()
        for i in np.nonzero(dead)[0]:
            K.rows[i] = [i]
            K.data[i] = [1.0]
            rhs[i] = 0.0
        K = K.tocsr()
    n = K.shape[0]
    if n <= config.direct_solver_max_unknowns:
        return spla.splu(K.tocsc()).solve(rhs)
    M = sp.diags(1.0 / K.diagonal())
    sol, info = spla.cg(K, rhs, rtol=config.linear_tol, maxiter=10 * n, M=M)
    if info != 0:
        raise RuntimeError(f"conjugate gradient failed to converge (info={info})")
    return sol


def newton_solve(
    grid: ScalarFieldGrid,
    F: VectorFieldSpec,
    H,
    eps: float,
    sigma: float,
    config: SolveConfig,
) -> StageDiagnostics:
    """Damped Newton on the cell energy; boundary data must be applied.

    Interior values of the grid are updated in place; the backtracking
    acceptance rule keeps the discrete regularized area non-increasing.
    Non-convergence is reported in the diagnostics, never raised.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    opr = CellOperator(grid, F, sigma)
    H_nodes = _curvature_nodes(opr, H)
    hm = grid.h**grid.dim
    H_lin = np.zeros(opr.n_valued)
    H_lin[opr.interior_unknowns] = H_nodes[opr.interior_unknowns] * hm
    u = opr.grid_values()
    unk = opr.interior_unknowns

    energy_history = []
    converged = False
    iters = 0
    res_sup = np.inf
    for iters in range(config.newton_max_iters + 1):
        R, g, W = opr.residual(u, eps, H_lin)
        res_sup = float(np.abs(R[unk]).max() / hm) if unk.size else 0.0
        E = opr.energy(u, eps, H_lin)
        if not energy_history:
            energy_history.append(E)
        if res_sup <= config.newton_tol:
            converged = True
            break
        if iters == config.newton_max_iters:
            break
        K = opr.hessian(g, W)[unk][:, unk]
        delta = _solve_linear(K, -R[unk], config)
        slope = float(R[unk] @ delta)
        lam = 1.0
        accepted = False
        while lam > 1e-12:
            trial = u.copy()
            trial[unk] += lam * delta
            E_trial = opr.energy(trial, eps, H_lin)
            if E_trial <= E + 1e-4 * lam * slope + 1e-14 * abs(E):
                u = trial
                energy_history.append(E_trial)
                accepted = True
                break
            lam *= config.damping
        if not accepted:
            break

    opr.write_back(u)
    gu, ok = gradient_arrays(grid)
    sel = grid.interior_mask & ok
    sup_grad = float(np.linalg.norm(gu[sel], axis=-1).max()) if np.any(sel) else 0.0
    weights = quadrature_weights(grid)
    F_eff = F if sigma == 1.0 else scaled_field(F, sigma)
    return StageDiagnostics(
        epsilon=eps,
        sigma=sigma,
        iters=iters,
        residual=res_sup,
        sup_u=float(np.abs(grid.values[grid.interior_mask]).max()),
        sup_grad_u=sup_grad,
        regularized_area=regularized_area(grid, F_eff, eps, weights=weights),
        p_area=p_area(grid, F_eff, None, weights=weights),
        energy_history=energy_history,
        converged=converged,
    )


def continuation_solve(
    domain: DomainSpec,
    F: VectorFieldSpec,
    H,
    boundary: BoundaryData,
    h: float,
    config: Optional[SolveConfig] = None,
) -> SolveResult:
    """Boundary-scale then eps continuation, warm-starting every stage.

    The first eps is attempted directly from the zero initial guess; if
    that Newton run fails a sigma ladder is inserted.  Later stages reuse
    the previous stage's solution.  Stops early once the graph area
    stagnates between stages (parea_stop_tol; 0 disables).
    """
    config = config or SolveConfig()
    grid = build_grid(domain, h)
    stages = []
    eps0 = config.epsilon_schedule[0]

    apply_boundary(grid, boundary, 1.0)
    stage = newton_solve(grid, F, H, eps0, 1.0, config)
    if stage.converged:
        stages.append(stage)
    else:
        sigmas = (
            tuple(np.linspace(0.2, 1.0, 5))
            if len(config.sigma_schedule) == 1
            else config.sigma_schedule
        )
        grid = build_grid(domain, h)
        for s in sigmas:
            apply_boundary(grid, boundary, s)
            stage = newton_solve(grid, F, H, eps0, s, config)
            stages.append(stage)
            if not stage.converged:
                return SolveResult(grid, stages, False, failure_stage=len(stages) - 1)

    prev_parea = stages[-1].p_area
    for eps in config.epsilon_schedule[1:]:
        stage = newton_solve(grid, F, H, eps, 1.0, config)
        stages.append(stage)
        if not stage.converged:
            return SolveResult(grid, stages, False, failure_stage=len(stages) - 1)
        if config.parea_stop_tol > 0 and abs(stage.p_area - prev_parea) < config.parea_stop_tol:
            break
        prev_parea = stage.p_area
    return SolveResult(grid, stages, True)


@dataclass(frozen=True)
class ComparisonReport:
    max_violation: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.tolerance


def comparison_harness(
    u_result: SolveResult, v_result: SolveResult, config: Optional[SolveConfig] = None
) -> ComparisonReport:
    """Orders two solves with ordered boundary data: max(u - v) over interior."""
    gu, gv = u_result.grid, v_result.grid
    if gu.shape != gv.shape or gu.h != gv.h:
        raise ValueError("comparison requires matching grids")
    config = config or SolveConfig()
    diff = gu.values[gu.interior_mask] - gv.values[gv.interior_mask]
    return ComparisonReport(
        max_violation=float(diff.max()), tolerance=10.0 * config.newton_tol
    )
