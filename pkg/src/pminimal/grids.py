"""Masked uniform grids over rectangle / disc / annulus domains.

Nodes live on a uniform lattice covering the domain's bounding box plus a
one-cell margin.  Classification: a node strictly inside the open domain is
``interior``; a non-interior node with an interior axis neighbor is
``boundary-band`` (it carries Dirichlet data via its nearest boundary
point); everything else is ``exterior``.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional

import numpy as np

from .fields import VectorFieldSpec

__all__ = [
    "ResolutionError",
    "ClassificationError",
    "DomainSpec",
    "BoundaryData",
    "ScalarFieldGrid",
    "EXTERIOR",
    "BAND",
    "INTERIOR",
    "build_grid",
    "apply_boundary",
    "gradient",
    "gradient_arrays",
    "interpolate_values",
    "interpolate_gradient",
    "quadrature_weights",
    "p_convexity_certificate",
    "grid_to_csv",
]

EXTERIOR, BAND, INTERIOR = 0, 1, 2
_CLASS_NAMES = {EXTERIOR: "exterior", BAND: "band", INTERIOR: "interior"}


def _axis_slice(dim: int, axis: int, sl: slice) -> tuple:
    out = [slice(None)] * dim
    out[axis] = sl
    return tuple(out)


class ResolutionError(ValueError):
    """Grid spacing too coarse for the domain."""


class ClassificationError(ValueError):
    """Operation applied at a node with the wrong classification."""


@dataclass(frozen=True)
class DomainSpec:
    """Bounded domain: rectangle(lo, hi), disc(center, radius) or annulus."""

    shape: str
    dim: int
    lo: Optional[np.ndarray] = None
    hi: Optional[np.ndarray] = None
    center: Optional[np.ndarray] = None
    radius: float = 0.0
    r_inner: float = 0.0
    r_outer: float = 0.0

    @staticmethod
    def rectangle(lo, hi) -> "DomainSpec":
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("rectangle corners must be 1-d arrays of equal length")
        if not np.all(hi > lo):
            raise ValueError("rectangle must have positive extents")
        return DomainSpec(shape="rectangle", dim=lo.size, lo=lo, hi=hi)

    @staticmethod
    def disc(center, radius: float) -> "DomainSpec":
        center = np.asarray(center, dtype=float)
        if radius <= 0:
            raise ValueError("disc radius must be positive")
        return DomainSpec(shape="disc", dim=center.size, center=center, radius=float(radius))

    @staticmethod
    def annulus(center, r_inner: float, r_outer: float) -> "DomainSpec":
        center = np.asarray(center, dtype=float)
        if not 0 < r_inner < r_outer:
            raise ValueError("annulus needs 0 < r_inner < r_outer")
        return DomainSpec(
            shape="annulus", dim=center.size, center=center,
            r_inner=float(r_inner), r_outer=float(r_outer),
        )

    def signed_distance(self, points) -> np.ndarray:
        """Negative inside, positive outside, zero on the boundary."""
        p = np.asarray(points, dtype=float)
        if self.shape == "rectangle":
            d = np.maximum(self.lo - p, p - self.hi)
            return d.max(axis=-1)
        r = np.linalg.norm(p - self.center, axis=-1)
        if self.shape == "disc":
            return r - self.radius
        return np.maximum(self.r_inner - r, r - self.r_outer)

    def contains(self, points) -> np.ndarray:
        """Strict interior test."""
        return self.signed_distance(points) < 0.0

    def nearest_boundary(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        if self.shape == "rectangle":
            single = p.ndim == 1
            flat = np.atleast_2d(p).reshape(-1, self.dim)
            q = np.clip(flat, self.lo, self.hi)
            inside = self.signed_distance(flat) < 0
            if np.any(inside):
                # interior points project onto the nearest face
                gaps = np.concatenate([flat - self.lo, self.hi - flat], axis=1)
                k = np.argmin(gaps, axis=1)
                for row in np.nonzero(inside)[0]:
                    kk = int(k[row])
                    if kk < self.dim:
                        q[row, kk] = self.lo[kk]
                    else:
                        q[row, kk - self.dim] = self.hi[kk - self.dim]
            q = q.reshape(p.shape)
            return q[0] if single and q.ndim > p.ndim else q
        rel = p - self.center
        r = np.linalg.norm(rel, axis=-1, keepdims=True)
        safe = np.where(r > 0, r, 1.0)
        unit = np.where(r > 0, rel / safe, np.eye(self.dim)[0])
        if self.shape == "disc":
            return self.center + self.radius * unit
        target = np.where(
            np.abs(r - self.r_inner) <= np.abs(r - self.r_outer), self.r_inner, self.r_outer
        )
        return self.center + target * unit

    def boundary_angle(self, points) -> np.ndarray:
        """Polar angle of points about the center (disc / annulus only)."""
        if self.shape == "rectangle":
            raise ValueError("boundary_angle is defined for disc and annulus domains")
        rel = np.asarray(points, dtype=float) - self.center
        return np.arctan2(rel[..., 1], rel[..., 0])

    def volume(self) -> float:
        if self.shape == "rectangle":
            return float(np.prod(self.hi - self.lo))
        if self.dim != 2:
            raise ValueError("volume for curved domains implemented in 2-d only")
        if self.shape == "disc":
            return float(np.pi * self.radius**2)
        return float(np.pi * (self.r_outer**2 - self.r_inner**2))

    def bounding_box(self):
        if self.shape == "rectangle":
            return self.lo, self.hi
        r = self.radius if self.shape == "disc" else self.r_outer
        return self.center - r, self.center + r

    def anchor(self) -> np.ndarray:
        """Lattice anchor: a node lands exactly here."""
        return self.lo if self.shape == "rectangle" else self.center


@dataclass(frozen=True)
class BoundaryData:
    """Dirichlet data on the domain boundary.

    ``kind`` is "point" (evaluator takes boundary points of shape (..., m))
    or "angle" (evaluator takes the polar angle, disc/annulus domains).
    ``smoothness`` is a "C0" / "C2" tag carried as metadata.
    """

    evaluator: Callable
    kind: str = "point"
    smoothness: str = "C2"

    def values_at(self, domain: DomainSpec, boundary_points: np.ndarray) -> np.ndarray:
        if self.kind == "angle":
            theta = domain.boundary_angle(boundary_points)
            return np.asarray(self.evaluator(theta), dtype=float)
        out = np.asarray(self.evaluator(boundary_points), dtype=float)
        expected = np.asarray(boundary_points).shape[:-1]
        if out.shape != expected:
            out = np.broadcast_to(out, expected).copy()
        return out


@dataclass
class ScalarFieldGrid:
    """Scalar samples u on a masked uniform lattice.

    ``values`` and ``classification`` share the lattice shape; ``has_value``
    marks nodes whose value entry is meaningful.  Exterior nodes normally
    carry no value (solver grids) but closed-form samples may fill them.
    """

    domain: DomainSpec
    h: float
    origin: np.ndarray
    classification: np.ndarray
    values: np.ndarray
    has_value: np.ndarray

    @property
    def shape(self):
        return self.classification.shape

    @property
    def dim(self) -> int:
        return self.domain.dim

    def node_coords(self, index) -> np.ndarray:
        return self.origin + self.h * np.asarray(index, dtype=float)

    def axis_coords(self, axis: int) -> np.ndarray:
        return self.origin[axis] + self.h * np.arange(self.shape[axis])

    def all_coords(self) -> np.ndarray:
        """Coordinates of every node, shape lattice_shape + (m,)."""
        grids = np.meshgrid(*[self.axis_coords(a) for a in range(self.dim)], indexing="ij")
        return np.stack(grids, axis=-1)

    @property
    def interior_mask(self) -> np.ndarray:
        return self.classification == INTERIOR

    @property
    def band_mask(self) -> np.ndarray:
        return self.classification == BAND

    def copy(self) -> "ScalarFieldGrid":
        return ScalarFieldGrid(
            domain=self.domain,
            h=self.h,
            origin=self.origin.copy(),
            classification=self.classification.copy(),
            values=self.values.copy(),
            has_value=self.has_value.copy(),
        )

    def fill_from(self, func: Callable[[np.ndarray], np.ndarray], everywhere: bool = True):
        """Sample a closed-form function onto the lattice (all nodes by default)."""
        coords = self.all_coords()
        vals = np.asarray(func(coords), dtype=float)
        if everywhere:
            self.values[...] = vals
            self.has_value[...] = True
        else:
            mask = self.classification >= BAND
            self.values[mask] = vals[mask]
            self.has_value[mask] = True
        return self


def build_grid(domain: DomainSpec, h: float, min_nodes_per_axis: int = 2) -> ScalarFieldGrid:
    """Zero-initialized masked grid with interior / band / exterior classes.

    ``min_nodes_per_axis`` is the hard floor below which the grid is
    rejected; solver-quality runs want at least 8 interior nodes per axis.
    """
    if h <= 0:
        raise ValueError("spacing h must be positive")
    lo, hi = domain.bounding_box()
    anchor = domain.anchor()
    # lattice = anchor + h*Z^m, extended one cell beyond the bounding box
    i_lo = np.floor((lo - anchor) / h).astype(int) - 1
    i_hi = np.ceil((hi - anchor) / h).astype(int) + 1
    origin = anchor + h * i_lo
    shape = tuple((i_hi - i_lo + 1).tolist())
    grid = ScalarFieldGrid(
        domain=domain,
        h=float(h),
        origin=origin,
        classification=np.zeros(shape, dtype=np.int8),
        values=np.zeros(shape, dtype=float),
        has_value=np.zeros(shape, dtype=bool),
    )
    coords = grid.all_coords()
    sdf = domain.signed_distance(coords)
    inside = sdf < 0.0
    cls = np.where(inside, INTERIOR, EXTERIOR).astype(np.int8)
    # band: non-interior nodes within one spacing of the boundary, plus any
    # exterior node sharing a lattice cell with an interior node, so that
    # every cell incident to an interior node has a full ring of carriers
    # (a leaky rim ring lets discrete minimizers detach from the data)
    hull = inside.copy()
    for axis in range(domain.dim):
        grown = hull.copy()
        grown[_axis_slice(domain.dim, axis, slice(None, -1))] |= hull[
            _axis_slice(domain.dim, axis, slice(1, None))
        ]
        grown[_axis_slice(domain.dim, axis, slice(1, None))] |= hull[
            _axis_slice(domain.dim, axis, slice(None, -1))
        ]
        hull = grown
    cls[(~inside) & ((sdf < h) | hull)] = BAND
    grid.classification = cls

    n_int = int(np.count_nonzero(cls == INTERIOR))
    if n_int == 0:
        raise ResolutionError("no interior nodes at this spacing")
    # coarse-resolution guard: count interior nodes on the axis lines
    # through the lattice anchor (domain center; one cell in from a
    # rectangle's corner, whose own row sits on the boundary)
    anchor_idx = np.rint((anchor - origin) / h).astype(int)
    if domain.shape == "rectangle":
        anchor_idx = anchor_idx + 1
    for axis in range(domain.dim):
        line = [slice(None) if a == axis else int(anchor_idx[a]) for a in range(domain.dim)]
        count = int(np.count_nonzero(cls[tuple(line)] == INTERIOR))
        if count < min_nodes_per_axis:
            raise ResolutionError(
                f"axis {axis}: {count} interior nodes < {min_nodes_per_axis}; h too coarse"
            )
    grid.has_value[cls >= BAND] = True
    return grid


def apply_boundary(grid: ScalarFieldGrid, data: BoundaryData, sigma: float = 1.0) -> ScalarFieldGrid:
    """Pin boundary-band values to sigma * phi at the nearest boundary point."""
    band = grid.band_mask
    pts = grid.all_coords()[band]
    if pts.size:
        proj = grid.domain.nearest_boundary(pts)
        grid.values[band] = sigma * data.values_at(grid.domain, proj)
        grid.has_value[band] = True
    return grid


def _axis_diff(values, has_value, axis, h):
    """Per-node derivative along one axis: central where possible, else one-sided.

    Returns (deriv, ok) arrays; ok marks nodes with at least a one-sided stencil.
    """
    up = np.roll(values, -1, axis=axis)
    dn = np.roll(values, 1, axis=axis)
    up_ok = np.roll(has_value, -1, axis=axis)
    dn_ok = np.roll(has_value, 1, axis=axis)
    # roll wraps around; kill the wrapped border
    sl = [slice(None)] * values.ndim
    sl[axis] = -1
    up_ok[tuple(sl)] = False
    sl[axis] = 0
    dn_ok[tuple(sl)] = False

    deriv = np.zeros_like(values)
    central = up_ok & dn_ok & has_value
    fwd = up_ok & ~dn_ok & has_value
    bwd = dn_ok & ~up_ok & has_value
    deriv[central] = (up[central] - dn[central]) / (2.0 * h)
    deriv[fwd] = (up[fwd] - values[fwd]) / h
    deriv[bwd] = (values[bwd] - dn[bwd]) / h
    return deriv, central | fwd | bwd


def gradient_arrays(grid: ScalarFieldGrid):
    """Nodal gradient of u over the lattice, plus a computability mask."""
    derivs = []
    ok_all = grid.has_value.copy()
    for axis in range(grid.dim):
        d, ok = _axis_diff(grid.values, grid.has_value, axis, grid.h)
        derivs.append(d)
        ok_all &= ok
    return np.stack(derivs, axis=-1), ok_all


def gradient(grid: ScalarFieldGrid, F: VectorFieldSpec, node) -> np.ndarray:
    """grad(u) + F at an interior node, central differences plus exact F."""
    idx = tuple(int(i) for i in np.atleast_1d(node))
    if grid.classification[idx] != INTERIOR:
        raise ClassificationError(f"node {idx} is not interior")
    out = np.empty(grid.dim)
    for axis in range(grid.dim):
        up = list(idx)
        dn = list(idx)
        up[axis] += 1
        dn[axis] -= 1
        if not (grid.has_value[tuple(up)] and grid.has_value[tuple(dn)]):
            raise ClassificationError(f"node {idx} lacks a full central stencil on axis {axis}")
        out[axis] = (grid.values[tuple(up)] - grid.values[tuple(dn)]) / (2.0 * grid.h)
    return out + F.value(grid.node_coords(idx))


def quadrature_weights(grid: ScalarFieldGrid, subsamples: int = 16) -> np.ndarray:
    """Midpoint-rule node weights h^m, with cut-cell fractions near the boundary.

    A node's cell is the h-cube centered on it.  Cells wholly inside the
    domain weigh h^m; straddling cells are weighted by the inside fraction
    estimated on a subsample lattice.  Exterior-node weight is zero.
    """
    m = grid.dim
    coords = grid.all_coords()
    sdf = grid.domain.signed_distance(coords)
    w = np.zeros(grid.shape)
    half_diag = 0.5 * grid.h * np.sqrt(m)
    candidate = (grid.classification >= BAND)
    full = candidate & (sdf <= -half_diag)
    rim = candidate & ~full
    w[full] = grid.h**m
    if np.any(rim):
        offs = (np.arange(subsamples) + 0.5) / subsamples - 0.5
        sub = np.stack(np.meshgrid(*([offs] * m), indexing="ij"), axis=-1).reshape(-1, m)
        pts = coords[rim][:, None, :] + grid.h * sub[None, :, :]
        frac = grid.domain.contains(pts).mean(axis=1)
        w[rim] = grid.h**m * frac
    return w


def interpolate_values(grid: ScalarFieldGrid, points) -> np.ndarray:
    """Multilinear interpolation of nodal values at arbitrary points."""
    return _multilinear(grid, grid.values, points)


def interpolate_gradient(grid: ScalarFieldGrid, F: Optional[VectorFieldSpec], points) -> np.ndarray:
    """grad(u) + F at arbitrary points: interpolated nodal grad(u), exact F."""
    gu, _ = gradient_arrays(grid)
    parts = [_multilinear(grid, gu[..., a], points) for a in range(grid.dim)]
    out = np.stack(parts, axis=-1)
    if F is not None:
        out = out + F.value(np.asarray(points, dtype=float))
    return out


def _multilinear(grid: ScalarFieldGrid, arr: np.ndarray, points) -> np.ndarray:
    p = np.asarray(points, dtype=float)
    single = p.ndim == 1
    p2 = np.atleast_2d(p)
    rel = (p2 - grid.origin) / grid.h
    base = np.floor(rel).astype(int)
    for a in range(grid.dim):
        base[:, a] = np.clip(base[:, a], 0, grid.shape[a] - 2)
    frac = rel - base
    out = np.zeros(p2.shape[0])
    for corner in range(2**grid.dim):
        bits = [(corner >> a) & 1 for a in range(grid.dim)]
        idx = tuple(base[:, a] + bits[a] for a in range(grid.dim))
        weight = np.ones(p2.shape[0])
        for a in range(grid.dim):
            weight *= frac[:, a] if bits[a] else (1.0 - frac[:, a])
        out += weight * arr[idx]
    return out[0] if single else out.reshape(p.shape[:-1])


def p_convexity_certificate(domain: DomainSpec) -> Optional[float]:
    """Parabolic-convexity constant, or None when the domain is not certified.

    A disc of radius R fits inside the parabola with a = 1/(2R) at every
    boundary point.  The annulus fails at its concave inner boundary and a
    rectangle's flat sides admit no uniform strict constant.
    """
    if domain.shape == "disc":
        return 1.0 / (2.0 * domain.radius)
    return None


def grid_to_csv(grid: ScalarFieldGrid) -> str:
    """CSV dump: header x_1,...,x_m,class,value, lexicographic node order."""
    buf = io.StringIO()
    m = grid.dim
    buf.write(",".join(f"x_{a + 1}" for a in range(m)) + ",class,value\n")
    coords = grid.all_coords().reshape(-1, m)
    cls = grid.classification.reshape(-1)
    vals = grid.values.reshape(-1)
    has = grid.has_value.reshape(-1)
    for i in range(coords.shape[0]):
        xs = ",".join(f"{coords[i, a]:.17g}" for a in range(m))
        v = f"{vals[i]:.17g}" if has[i] else "nan"
        buf.write(f"{xs},{_CLASS_NAMES[int(cls[i])]},{v}\n")
    return buf.getvalue()
