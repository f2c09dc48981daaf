"""Characteristic rays, interface jump analysis, and minimizer verdicts.

In the plane, the unit normal N = (grad(u) + F)/|grad(u) + F| rotates by
-90 degrees to the characteristic direction; its integral curves are the
straight rays a minimizing graph is ruled by.  A candidate graph is
certified by (a) a negligible singular set, or (b) the jump condition
(N+ - N-) . nu = 0 along every interface, equivalently incident angle =
reflected angle for the rays meeting it.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional, Sequence

import numpy as np

from .catalog import ClosedFormSurface, Interface
from .fields import VectorFieldSpec
from .functional import SingularSet, default_singular_threshold, singular_set
from .grids import ScalarFieldGrid, interpolate_gradient, interpolate_values

__all__ = [
    "CharacteristicRay",
    "InterfaceSample",
    "MinimizerVerdict",
    "GradientSource",
    "as_gradient_source",
    "characteristic_direction",
    "trace_ray",
    "jump_defect",
    "angle_criterion",
    "legendrian_defect",
    "loop_obstruction",
    "minimizer_verdict",
]


def _perp(n: np.ndarray) -> np.ndarray:
    """Rotation by -90 degrees: (n1, n2) -> (n2, -n1)."""
    return np.stack([n[..., 1], -n[..., 0]], axis=-1)


class GradientSource:
    """Uniform access to u and grad(u) + F for grids and closed forms."""

    def __init__(self, value_at, grad_plus_field_at, inside, h_scale: float):
        self.value_at = value_at
        self.grad_plus_field_at = grad_plus_field_at
        self.inside = inside
        self.h_scale = h_scale


def as_gradient_source(u, F: Optional[VectorFieldSpec] = None) -> GradientSource:
    if isinstance(u, ClosedFormSurface):
        surf = u
        return GradientSource(
            value_at=lambda p: surf.u(np.asarray(p, dtype=float)),
            grad_plus_field_at=lambda p: surf.grad_plus_field(p),
            inside=lambda p: surf.natural_domain.contains(p),
            h_scale=1e-3,
        )
    if isinstance(u, ScalarFieldGrid):
        grid = u
        if F is None:
            raise ValueError("a field spec is required with a grid sample")
        return GradientSource(
            value_at=lambda p: interpolate_values(grid, p),
            grad_plus_field_at=lambda p: interpolate_gradient(grid, F, p),
            inside=lambda p: grid.domain.contains(p),
            h_scale=grid.h,
        )
    raise TypeError(f"cannot build a gradient source from {type(u)!r}")


def characteristic_direction(u, F: VectorFieldSpec, x, tau_sing: float) -> Optional[np.ndarray]:
    """Unit characteristic direction N-perp at x, or None on the singular set."""
    src = as_gradient_source(u, F)
    g = np.asarray(src.grad_plus_field_at(np.asarray(x, dtype=float)), dtype=float)
    norm = float(np.linalg.norm(g))
    if norm < tau_sing:
        return None
    return _perp(g / norm)


@dataclass
class CharacteristicRay:
    """A traced characteristic segment with its Legendrian lift."""

    base: np.ndarray
    direction: np.ndarray          # unit N-perp at the base point
    endpoints: np.ndarray          # (2, 2): backward and forward ends
    lift_slope: float              # dz/ds at the base from the contact relation
    points: np.ndarray             # polyline vertices (k, 2)
    lift: np.ndarray               # z along the polyline, from the contact relation
    deviation: float               # max angle between local N-perp and the ray

    @property
    def length(self) -> float:
        return float(np.linalg.norm(self.endpoints[1] - self.endpoints[0]))

    def oriented_from(self, point) -> np.ndarray:
        """Unit direction pointing from `point` into the ray's far side."""
        mid = 0.5 * (self.endpoints[0] + self.endpoints[1])
        d = self.direction
        if float(np.dot(mid - np.asarray(point, dtype=float), d)) < 0:
            return -d
        return d


def trace_ray(
    u,
    F: VectorFieldSpec,
    x0,
    tau_sing: float,
    step: Optional[float] = None,
    max_steps: int = 100_000,
) -> CharacteristicRay:
    """March the characteristic line through x0 until the boundary or S(u).

    Marches both ways from x0 with the local N-perp direction re-evaluated
    and sign-aligned at every step, records the polyline, the contact-form
    lift, and the maximal angular deviation from the starting direction.
    """
    src = as_gradient_source(u, F)
    x0 = np.asarray(x0, dtype=float)
    step = step or max(src.h_scale / 2.0, 1e-4)
    d0 = characteristic_direction(u, F, x0, tau_sing)
    if d0 is None:
        raise ValueError("ray started on the singular set")

    def march(sign):
        pts = [x0]
        d = sign * d0
        deviation = 0.0
        for _ in range(max_steps):
            nxt = pts[-1] + step * d
            if not bool(src.inside(nxt)):
                break
            g = np.asarray(src.grad_plus_field_at(nxt), dtype=float)
            norm = float(np.linalg.norm(g))
            if norm < tau_sing:
                break
            dn = _perp(g / norm)
            if float(np.dot(dn, d)) < 0:
                dn = -dn
            deviation = max(deviation, float(np.arccos(np.clip(np.dot(dn, sign * d0), -1, 1))))
            pts.append(nxt)
            d = dn
        return pts, deviation

    back, dev_b = march(-1.0)
    fwd, dev_f = march(+1.0)
    pts = np.array(back[::-1] + fwd[1:])
    z = np.empty(pts.shape[0])
    z[0] = float(src.value_at(pts[0]))
    # contact relation dz = y dx - x dy, exact per straight step
    crosses = pts[:-1, 0] * pts[1:, 1] - pts[:-1, 1] * pts[1:, 0]
    z[1:] = z[0] + np.cumsum(-crosses)
    return CharacteristicRay(
        base=x0,
        direction=d0,
        endpoints=np.array([pts[0], pts[-1]]),
        lift_slope=float(-(x0[0] * d0[1] - x0[1] * d0[0])),
        points=pts,
        lift=z,
        deviation=max(dev_b, dev_f),
    )


@dataclass(frozen=True)
class InterfaceSample:
    """One-sided data of a graph at a point of an interface curve."""

    point: np.ndarray
    tangent: np.ndarray
    nu_plus: np.ndarray           # outward unit normal of the + side
    n_plus: Optional[np.ndarray]  # one-sided limits of N(u)
    n_minus: Optional[np.ndarray]
    kind: str = "singular"        # singular-curve | kink | smooth

    @property
    def nu_minus(self) -> np.ndarray:
        return -self.nu_plus


def jump_defect(s: InterfaceSample) -> float:
    """(N+ - N-) . nu+; zero is the weak-solution matching condition.

    For a singular curve with opposite one-sided normals this equals
    2 N+ . nu+, vanishing exactly at perpendicular ray incidence.
    """
    if s.n_plus is None or s.n_minus is None:
        raise ValueError("both one-sided normals must be defined")
    return float((s.n_plus - s.n_minus) @ s.nu_plus)


def angle_criterion(
    s: InterfaceSample,
    ray_in: CharacteristicRay,
    ray_out: CharacteristicRay,
    angle_tol: float = 1e-3,
):
    """Incident and reflected ray angles at s.point and their equality test.

    Angles are measured between the oriented interface tangent and the ray
    directions pointing away from the touch point into their own sides.
    """
    d_in = ray_in.oriented_from(s.point)
    d_out = ray_out.oriented_from(s.point)
    side_in = float(np.dot(d_in, s.nu_plus))
    side_out = float(np.dot(d_out, s.nu_plus))
    if side_in * side_out > 0:
        raise ValueError("rays must touch the interface point from opposite sides")
    incident = float(np.arccos(np.clip(np.dot(s.tangent, d_in), -1.0, 1.0)))
    reflected = float(np.arccos(np.clip(np.dot(s.tangent, d_out), -1.0, 1.0)))
    return incident, reflected, abs(incident - reflected) <= angle_tol


def legendrian_defect(ray: CharacteristicRay, u) -> float:
    """Total contact-form defect of the graph lift along the ray.

    Integrates |du + x dy - y dx| along the polyline with u sampled from
    the graph; each straight step is integrated exactly.
    """
    src = as_gradient_source(u) if isinstance(u, ClosedFormSurface) else None
    if src is not None:
        z = np.asarray(src.value_at(ray.points), dtype=float)
    elif callable(u):
        z = np.asarray(u(ray.points), dtype=float)
    else:
        raise TypeError("u must be a catalog surface or a callable on points")
    pts = ray.points
    crosses = pts[:-1, 0] * pts[1:, 1] - pts[:-1, 1] * pts[1:, 0]
    return float(np.abs(np.diff(z) + crosses).sum())


def loop_obstruction(loop) -> float:
    """Contact-form integral around a closed polygon: twice the signed area.

    A characteristic (Legendrian-lifted) loop would need this to vanish;
    a nonzero value certifies that no closed characteristic loop exists.
    """
    p = np.asarray(loop, dtype=float)
    if p.shape[0] < 3:
        return 0.0
    q = np.vstack([p, p[:1]])
    return float(np.sum(q[:-1, 0] * q[1:, 1] - q[:-1, 1] * q[1:, 0]))


@dataclass(frozen=True)
class MinimizerVerdict:
    outcome: str                     # Minimizer | NotMinimizer | Inconclusive
    route: str
    witness: Optional[InterfaceSample] = None
    witness_defect: float = 0.0
    max_defect: float = 0.0
    defect_tol: float = 0.0
    details: dict = dc_field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "outcome": self.outcome,
            "route": self.route,
            "max_defect": self.max_defect,
            "defect_tol": self.defect_tol,
        }
        if self.witness is not None:
            out["witness_point"] = [float(v) for v in self.witness.point]
            out["witness_defect"] = self.witness_defect
        out.update(self.details)
        return out


def _interface_samples_surface(
    surf: ClosedFormSurface, iface: Interface, n: int, margin: float, delta: float
):
    pts = iface.points(n, margin)
    n_plus, n_minus = surf.one_sided_normals(pts, iface.side_normal, delta)
    tang = iface.tangent()
    samples = []
    for k in range(pts.shape[0]):
        samples.append(
            InterfaceSample(
                point=pts[k],
                tangent=tang,
                nu_plus=-iface.side_normal,
                n_plus=n_plus[k],
                n_minus=n_minus[k],
                kind="singular-curve" if iface.kind == "singular" else "C1-kink",
            )
        )
    return samples


def _interface_samples_grid(
    grid: ScalarFieldGrid,
    F: VectorFieldSpec,
    iface: Interface,
    n: int,
    margin: float,
    tau_sing: float,
):
    """One-sided normals by quadratic extrapolation from 3 nodes per side."""
    pts = iface.points(n, margin)
    tang = iface.tangent()
    nrm = iface.side_normal
    h = grid.h
    samples = []
    offsets = np.array([2.0, 3.0, 4.0]) * h
    for k in range(pts.shape[0]):
        sides = []
        for sign in (+1.0, -1.0):
            probe = pts[k][None, :] + sign * offsets[:, None] * nrm[None, :]
            if not np.all(grid.domain.contains(probe)):
                sides.append(None)
                continue
            g = interpolate_gradient(grid, F, probe)
            norms = np.linalg.norm(g, axis=-1)
            if np.any(norms < tau_sing):
                sides.append(None)
                continue
            nn = g / norms[:, None]
            extrap = 3.0 * nn[0] - 3.0 * nn[1] + nn[2]
            mag = np.linalg.norm(extrap)
            sides.append(extrap / mag if mag > 0 else None)
        samples.append(
            InterfaceSample(
                point=pts[k],
                tangent=tang,
                nu_plus=-nrm,
                n_plus=sides[0],
                n_minus=sides[1],
                kind="singular-curve" if iface.kind == "singular" else "C1-kink",
            )
        )
    return samples


def minimizer_verdict(
    u,
    F: Optional[VectorFieldSpec] = None,
    H=None,
    domain=None,
    tau_sing: Optional[float] = None,
    interfaces: Optional[Sequence[Interface]] = None,
    defect_tol: Optional[float] = None,
    n_samples: int = 64,
    margin: float = 0.03,
    grid_h: float = 2.0**-7,
) -> MinimizerVerdict:
    """Certify a candidate graph as minimizer / non-minimizer / inconclusive.

    Route 1: when the detected singular set consists of point-like
    components only (node count <= 3 each), its codimension-2 size makes
    the graph a minimizer outright.  Route 2: sample every interface
    (declared, or fitted from the detected singular set) and evaluate the
    normal-jump defect; all below tolerance certifies a minimizer, any
    defect above it yields a non-minimizer with the worst sample as
    witness.  Anything undecidable is reported inconclusive.
    """
    if isinstance(u, ClosedFormSurface):
        surf = u
        F = F or surf.field
        domain = domain or surf.natural_domain
        if interfaces is None:
            interfaces = surf.jump_interfaces()
        if defect_tol is None:
            defect_tol = 1e-4
        grid = None
    elif isinstance(u, ScalarFieldGrid):
        surf = None
        grid = u
        if F is None:
            raise ValueError("a field spec is required with a grid sample")
        domain = domain or grid.domain
        if defect_tol is None:
            defect_tol = 10.0 * grid.h + 1e-6
    else:
        raise TypeError(f"cannot issue a verdict for {type(u)!r}")

    detected: Optional[SingularSet] = None
    if interfaces is None or len(interfaces) == 0:
        if grid is None:
            from .grids import build_grid

            grid = build_grid(domain, grid_h)
            grid.fill_from(surf.u if surf else u)
        if tau_sing is None:
            tau_sing = default_singular_threshold(grid, F)
        detected = singular_set(grid, F, tau_sing)
        if detected.count == 0 or all(c.count <= 3 for c in detected.components):
            return MinimizerVerdict(
                outcome="Minimizer",
                route="H_{m-1}(S)=0",
                max_defect=0.0,
                defect_tol=defect_tol,
                details={"singular_nodes": detected.count},
            )
        interfaces = []
        for i, comp in enumerate(detected.components):
            # fitted line segment spanning the component
            t = (comp.points - comp.line_point) @ comp.line_direction
            a = comp.line_point + t.min() * comp.line_direction
            b = comp.line_point + t.max() * comp.line_direction
            d = comp.line_direction
            interfaces.append(
                Interface(
                    name=f"fitted-{i}",
                    kind="singular",
                    a=a,
                    b=b,
                    side_normal=np.array([-d[1], d[0]]),
                )
            )
    else:
        interfaces = [g for g in interfaces if g.kind != "boundary"]
        if len(interfaces) == 0:
            return MinimizerVerdict(
                outcome="Minimizer",
                route="H_{m-1}(S)=0",
                max_defect=0.0,
                defect_tol=defect_tol,
            )

    if grid is not None and tau_sing is None:
        tau_sing = default_singular_threshold(grid, F)

    worst: Optional[InterfaceSample] = None
    worst_defect = 0.0
    n_evaluated = 0
    for iface in interfaces:
        if surf is not None:
            samples = _interface_samples_surface(surf, iface, n_samples, margin, delta=1e-7)
        else:
            samples = _interface_samples_grid(grid, F, iface, n_samples, margin, tau_sing)
        for s in samples:
            if s.n_plus is None or s.n_minus is None:
                continue
            d = abs(jump_defect(s))
            n_evaluated += 1
            if d > worst_defect:
                worst_defect = d
                worst = s
    if n_evaluated == 0:
        return MinimizerVerdict(
            outcome="Inconclusive",
            route="jump-condition",
            max_defect=float("nan"),
            defect_tol=defect_tol,
            details={"reason": "no interface sample admitted one-sided normals"},
        )
    if worst_defect > defect_tol:
        return MinimizerVerdict(
            outcome="NotMinimizer",
            route="violation witness",
            witness=worst,
            witness_defect=worst_defect,
            max_defect=worst_defect,
            defect_tol=defect_tol,
            details={"samples": n_evaluated},
        )
    return MinimizerVerdict(
        outcome="Minimizer",
        route="jump-condition",
        max_defect=worst_defect,
        defect_tol=defect_tol,
        details={"samples": n_evaluated},
    )
