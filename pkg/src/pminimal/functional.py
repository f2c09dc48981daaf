"""The graph-area functional, its regularization, and singular-set analysis.

Everything here acts on grid samples: quadrature of |grad(u) + F| + H*u,
the square-root regularized variant, detection of the singular set where
grad(u) + F vanishes, the two one-sided first-variation limits including
the singular-set term, and the weak-solution inequality test.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import ndimage

from .fields import CurvatureSpec, VectorFieldSpec, zero_curvature
from .grids import (
    INTERIOR,
    ScalarFieldGrid,
    gradient_arrays,
    quadrature_weights,
)

__all__ = [
    "SingularComponent",
    "SingularSet",
    "VariationReport",
    "default_singular_threshold",
    "p_area",
    "regularized_area",
    "legendrian_normal",
    "singular_set",
    "first_variation",
    "weak_solution_residual",
    "smooth_bump",
    "bump_grid",
    "random_bump_family",
    "monotone_pair_inequality",
]


def default_singular_threshold(grid: ScalarFieldGrid, F: VectorFieldSpec) -> float:
    """Detection threshold 4h(1 + |dF| estimate); shrinks with the spacing."""
    pts = grid.all_coords()[grid.interior_mask]
    if pts.shape[0] > 64:
        pts = pts[:: max(1, pts.shape[0] // 64)]
    return 4.0 * grid.h * (1.0 + F.jacobian_bound(pts))


def _grad_plus_field(grid: ScalarFieldGrid, F: VectorFieldSpec):
    """Nodal grad(u) + F arrays over the lattice (F exact at nodes)."""
    gu, ok = gradient_arrays(grid)
    coords = grid.all_coords()
    return gu + F.value(coords), ok


def p_area(
    u: ScalarFieldGrid,
    F: VectorFieldSpec,
    H: Optional[CurvatureSpec] = None,
    weights: Optional[np.ndarray] = None,
) -> float:
    """Quadrature of |grad(u) + F| + H*u over the domain.

    Midpoint rule over interior and band nodes with cut-cell weights at the
    rim; pass precomputed ``weights`` to amortize repeated evaluations.
    """
    if H is None:
        H = zero_curvature()
    g, _ = _grad_plus_field(u, F)
    w = quadrature_weights(u) if weights is None else weights
    dens = np.linalg.norm(g, axis=-1)
    if H.bound != 0.0:
        dens = dens + H.value(u.all_coords()) * u.values
    return float(np.sum(w * np.where(u.has_value, dens, 0.0)))


def regularized_area(
    u: ScalarFieldGrid,
    F: VectorFieldSpec,
    eps: float,
    weights: Optional[np.ndarray] = None,
) -> float:
    """Quadrature of sqrt(eps^2 + |grad(u) + F|^2); equals p_area(H=0) at eps=0."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    g, _ = _grad_plus_field(u, F)
    w = quadrature_weights(u) if weights is None else weights
    dens = np.sqrt(eps**2 + np.sum(g * g, axis=-1))
    return float(np.sum(w * np.where(u.has_value, dens, 0.0)))


def legendrian_normal(
    u: ScalarFieldGrid, F: VectorFieldSpec, node, tau_sing: float
) -> Optional[np.ndarray]:
    """(grad(u) + F)/|grad(u) + F| at an interior node, or None when singular."""
    from .grids import gradient as _node_gradient

    g = _node_gradient(u, F, node)
    norm = float(np.linalg.norm(g))
    if norm < tau_sing:
        return None
    return g / norm


@dataclass(frozen=True)
class SingularComponent:
    indices: np.ndarray
    points: np.ndarray
    line_point: np.ndarray
    line_direction: np.ndarray
    residual: float

    @property
    def count(self) -> int:
        return int(self.points.shape[0])


@dataclass(frozen=True)
class SingularSet:
    tau_sing: float
    h: float
    dim: int
    node_indices: np.ndarray
    node_points: np.ndarray
    components: tuple

    @property
    def count(self) -> int:
        return int(self.node_points.shape[0])

    @property
    def measure_estimate(self) -> float:
        return self.count * self.h**self.dim


def _fit_line(points: np.ndarray):
    """Total-least-squares line through 2-d points: (centroid, direction, rms residual)."""
    centroid = points.mean(axis=0)
    rel = points - centroid
    if points.shape[0] == 1:
        return centroid, np.array([1.0, 0.0]), 0.0
    _, svals, vt = np.linalg.svd(rel, full_matrices=False)
    direction = vt[0]
    resid = float(np.sqrt(np.mean((rel @ vt[-1]) ** 2))) if vt.shape[0] > 1 else 0.0
    return centroid, direction, resid


def singular_set(u: ScalarFieldGrid, F: VectorFieldSpec, tau_sing: float) -> SingularSet:
    """Exhaustive scan for interior nodes with |grad(u) + F| < tau_sing."""
    if tau_sing <= 0:
        raise ValueError("tau_sing must be positive")
    g, ok = _grad_plus_field(u, F)
    mask = u.interior_mask & ok & (np.linalg.norm(g, axis=-1) < tau_sing)
    labels, nlab = ndimage.label(mask, structure=ndimage.generate_binary_structure(u.dim, 1))
    coords_all = u.all_coords()
    comps = []
    for lab in range(1, nlab + 1):
        idx = np.argwhere(labels == lab)
        pts = coords_all[labels == lab]
        if u.dim == 2:
            cpt, cdir, resid = _fit_line(pts)
        else:
            cpt, cdir, resid = pts.mean(axis=0), np.zeros(u.dim), float("nan")
        comps.append(
            SingularComponent(
                indices=idx, points=pts, line_point=cpt, line_direction=cdir, residual=resid
            )
        )
    return SingularSet(
        tau_sing=tau_sing,
        h=u.h,
        dim=u.dim,
        node_indices=np.argwhere(mask),
        node_points=coords_all[mask],
        components=tuple(comps),
    )


@dataclass(frozen=True)
class VariationReport:
    """One-sided derivative data of the area functional along a test direction."""

    right_limit: float
    left_limit: float
    singular_term: float
    bulk_term: float
    curvature_term: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "right_limit": self.right_limit,
                "left_limit": self.left_limit,
                "singular_term": self.singular_term,
                "bulk_term": self.bulk_term,
                "curvature_term": self.curvature_term,
            },
            sort_keys=True,
        )


def _check_test_function(u: ScalarFieldGrid, phi: ScalarFieldGrid):
    if phi.shape != u.shape or phi.h != u.h:
        raise ValueError("test function must live on the same grid")
    band_vals = phi.values[u.band_mask]
    if band_vals.size and np.abs(band_vals).max() > 1e-12:
        raise ValueError("test function must vanish on the boundary band")


def variation_terms(
    u: ScalarFieldGrid,
    phi: ScalarFieldGrid,
    F: VectorFieldSpec,
    H: Optional[CurvatureSpec],
    tau_sing: float,
):
    """(singular, bulk, curvature) quadrature terms of the first variation."""
    if H is None:
        H = zero_curvature()
    g, ok = _grad_plus_field(u, F)
    gphi, _ = gradient_arrays(phi)
    norm = np.linalg.norm(g, axis=-1)
    interior = u.interior_mask & ok
    singular = interior & (norm < tau_sing)
    bulk = interior & ~singular
    hm = u.h**u.dim
    gphi_norm = np.linalg.norm(gphi, axis=-1)
    sing_term = float(np.sum(gphi_norm[singular]) * hm)
    with np.errstate(invalid="ignore", divide="ignore"):
        ndotg = np.sum(g * gphi, axis=-1) / np.where(norm > 0, norm, 1.0)
    bulk_term = float(np.sum(ndotg[bulk]) * hm)
    if H.bound != 0.0:
        curv_term = float(np.sum((H.value(u.all_coords()) * phi.values)[interior]) * hm)
    else:
        curv_term = 0.0
    return sing_term, bulk_term, curv_term


def first_variation(
    u: ScalarFieldGrid,
    phi: ScalarFieldGrid,
    F: VectorFieldSpec,
    H: Optional[CurvatureSpec],
    tau_sing: float,
) -> VariationReport:
    """Two one-sided derivatives of the area along u + eps*phi at eps = 0.

    right = +singular + bulk + curvature, left = -singular + bulk + curvature;
    the singular term carries node weight h^m over the detected set.
    """
    _check_test_function(u, phi)
    s, b, c = variation_terms(u, phi, F, H, tau_sing)
    return VariationReport(
        right_limit=s + b + c,
        left_limit=-s + b + c,
        singular_term=s,
        bulk_term=b,
        curvature_term=c,
    )


def weak_solution_residual(
    u: ScalarFieldGrid,
    F: VectorFieldSpec,
    H: Optional[CurvatureSpec],
    tau_sing: float,
    test_bumps: Sequence[ScalarFieldGrid],
) -> float:
    """Worst violation of the weak-solution inequality over a test family.

    For each bump (and its negation) the inequality demands
    singular + bulk + curvature >= 0; the violation is
    max(0, |bulk + curvature| - singular).  Returns the max over the family;
    0 means "weak solution within tolerance on this family".
    """
    if not test_bumps:
        raise ValueError("test bump family must be nonempty")
    worst = 0.0
    for phi in test_bumps:
        _check_test_function(u, phi)
        s, b, c = variation_terms(u, phi, F, H, tau_sing)
        worst = max(worst, abs(b + c) - s)
    return max(0.0, worst)


def smooth_bump(points: np.ndarray, center, radius: float) -> np.ndarray:
    """Tensor-product mollifier bump supported on the box |x - c|_inf < radius."""
    p = np.asarray(points, dtype=float)
    c = np.asarray(center, dtype=float)
    t = (p - c) / radius
    out = np.ones(p.shape[:-1])
    for a in range(p.shape[-1]):
        ta = np.clip(np.abs(t[..., a]), 0.0, 1.0)
        with np.errstate(divide="ignore", over="ignore"):
            comp = np.where(ta < 1.0, np.exp(1.0 - 1.0 / np.maximum(1.0 - ta**2, 1e-300)), 0.0)
        out *= comp
    return out


def bump_grid(like: ScalarFieldGrid, center, radius: float) -> ScalarFieldGrid:
    """Bump sampled on the lattice of an existing grid, clipped off the band."""
    phi = like.copy()
    vals = smooth_bump(phi.all_coords(), center, radius)
    vals[~phi.interior_mask] = 0.0
    phi.values = vals
    phi.has_value[...] = True
    return phi


def random_bump_family(
    like: ScalarFieldGrid,
    n: int,
    seed: int,
    singular: Optional[SingularSet] = None,
) -> list:
    """Seeded family of admissible bumps, plus bumps centered on singular components.

    Centers and radii are drawn so the support stays inside the interior
    region (the bump vanishes on the boundary band by construction).
    """
    rng = np.random.default_rng(seed)
    lo, hi = like.domain.bounding_box()
    span = float(np.min(hi - lo))
    bumps = []
    attempts = 0
    while len(bumps) < n and attempts < 50 * n:
        attempts += 1
        center = lo + rng.random(like.dim) * (hi - lo)
        radius = span * (0.08 + 0.17 * rng.random())
        corners = center[None, :] + radius * (
            np.stack(np.meshgrid(*([[-1.0, 1.0]] * like.dim), indexing="ij"), axis=-1).reshape(
                -1, like.dim
            )
        )
        if np.all(like.domain.signed_distance(corners) < -2 * like.h):
            bumps.append(bump_grid(like, center, radius))
    if singular is not None:
        for comp in singular.components:
            center = comp.points.mean(axis=0)
            radius = span * 0.2
            if like.domain.signed_distance(center) < -radius - 2 * like.h:
                bumps.append(bump_grid(like, center, radius))
    return bumps


def monotone_pair_inequality(gu, gv, fx, eps: float):
    """Both sides of the gradient-pair monotonicity inequality.

    lhs = (N_eps(u) - N_eps(v)) . (gu - gv) and
    rhs = (alpha + beta)/2 * |N_eps(u) - N_eps(v)|^2 with alpha, beta the
    norms of the eps-augmented vectors.  lhs >= rhs always; equality at
    eps = 0; for eps > 0, lhs = 0 forces gu = gv.
    """
    gu = np.asarray(gu, dtype=float)
    gv = np.asarray(gv, dtype=float)
    fx = np.asarray(fx, dtype=float)
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    a_vec = gu + fx
    b_vec = gv + fx
    alpha = np.sqrt(eps**2 + np.sum(a_vec * a_vec, axis=-1))
    beta = np.sqrt(eps**2 + np.sum(b_vec * b_vec, axis=-1))
    if np.any(alpha == 0.0) or np.any(beta == 0.0):
        raise ZeroDivisionError("eps = 0 with a vanishing augmented gradient vector")
    nu = a_vec / alpha[..., None]
    nv = b_vec / beta[..., None]
    dn = nu - nv
    lhs = np.sum(dn * (gu - gv), axis=-1)
    rhs = 0.5 * (alpha + beta) * np.sum(dn * dn, axis=-1)
    if lhs.ndim == 0:
        return float(lhs), float(rhs)
    return lhs, rhs
