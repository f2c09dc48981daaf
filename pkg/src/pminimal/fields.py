"""Perturbation vector fields, the star operation, and twist-rank bounds.

A graph energy density ``|grad(u) + F|`` is steered by a vector field F on
a domain in R^m.  This module holds the admissible field kinds, the star
operation on even-dimensional vectors, the skew twist matrix built from the
field Jacobian, and the integer bounds on the singular-set dimension that
the twist rank provides.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional, Sequence

import numpy as np

__all__ = [
    "DimensionError",
    "EvaluationError",
    "VectorFieldSpec",
    "CurvatureSpec",
    "TwistMatrix",
    "star",
    "standard_contact",
    "zero_field",
    "gradient_plus_linear",
    "custom_field",
    "scaled_field",
    "twist_matrix",
    "twist_rank",
    "singular_dim_bound",
    "check_theorem_e_condition",
    "div_f_star",
    "zero_curvature",
]


class DimensionError(ValueError):
    """Raised when an operation requires a different (usually even) dimension."""


class EvaluationError(RuntimeError):
    """Raised when a field evaluator fails at a point."""


def star(v: np.ndarray) -> np.ndarray:
    """Star of an even-dimensional vector: (g1, g2, ...) -> (g2, -g1, g4, -g3, ...).

    Accepts arrays of shape (..., 2n); the operation is applied along the
    last axis.  ``star(star(v)) == -v`` and ``star(v) . v == 0``.
    """
    v = np.asarray(v, dtype=float)
    if v.shape[-1] % 2 != 0:
        raise DimensionError(f"star requires even length, got {v.shape[-1]}")
    out = np.empty_like(v)
    out[..., 0::2] = v[..., 1::2]
    out[..., 1::2] = -v[..., 0::2]
    return out


@dataclass(frozen=True)
class VectorFieldSpec:
    """A vector field F on R^m with exact Jacobian access.

    ``value`` maps points of shape (..., m) to field values of the same
    shape; ``jacobian`` maps a single point (m,) to the m x m matrix
    J[i, j] = dF_i/dx_j.  Specs are immutable and safe to share.
    """

    dim: int
    kind: str
    _value: Callable[[np.ndarray], np.ndarray]
    _jacobian: Callable[[np.ndarray], np.ndarray]
    params: dict = dc_field(default_factory=dict)

    def value(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise DimensionError(f"point dimension {x.shape[-1]} != field dim {self.dim}")
        try:
            out = np.asarray(self._value(x), dtype=float)
        except Exception as exc:  # noqa: BLE001 - surface as evaluation failure
            raise EvaluationError(f"field value failed at {x!r}: {exc}") from exc
        if out.shape != x.shape:
            raise EvaluationError(f"field value shape {out.shape} != point shape {x.shape}")
        return out

    def jacobian(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise DimensionError(f"jacobian expects a single point of shape ({self.dim},)")
        try:
            jac = np.asarray(self._jacobian(x), dtype=float)
        except Exception as exc:  # noqa: BLE001
            raise EvaluationError(f"field jacobian failed at {x!r}: {exc}") from exc
        if jac.shape != (self.dim, self.dim):
            raise EvaluationError(f"jacobian shape {jac.shape} != ({self.dim}, {self.dim})")
        return jac

    def jacobian_bound(self, points: np.ndarray) -> float:
        """Max absolute Jacobian entry over a sample of points."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return max((float(np.abs(self.jacobian(p)).max()) for p in points), default=0.0)


@dataclass(frozen=True)
class CurvatureSpec:
    """Scalar curvature datum H with a finite sup-norm estimate on the domain."""

    evaluator: Callable[[np.ndarray], np.ndarray]
    bound: float

    def value(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.asarray(self.evaluator(x), dtype=float)
        expected = x.shape[:-1]
        if out.shape != expected:
            out = np.broadcast_to(out, expected).copy()
        return out


def zero_curvature() -> CurvatureSpec:
    return CurvatureSpec(evaluator=lambda x: np.zeros(np.asarray(x).shape[:-1]), bound=0.0)


def standard_contact(dim: int) -> VectorFieldSpec:
    """The contact field F = -star(X) on R^{2n}; F(x, y) = (-y, x) for m = 2."""
    if dim % 2 != 0 or dim < 2:
        raise DimensionError(f"standard contact field needs even dim >= 2, got {dim}")
    jac = np.zeros((dim, dim))
    for k in range(dim // 2):
        jac[2 * k, 2 * k + 1] = -1.0
        jac[2 * k + 1, 2 * k] = 1.0
    return VectorFieldSpec(
        dim=dim,
        kind="standard-contact",
        _value=lambda x: -star(x),
        _jacobian=lambda x, j=jac: j,
    )


def zero_field(dim: int) -> VectorFieldSpec:
    zero_jac = np.zeros((dim, dim))
    return VectorFieldSpec(
        dim=dim,
        kind="zero",
        _value=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        _jacobian=lambda x: zero_jac,
    )


def gradient_plus_linear(
    dim: int,
    grad_g: Optional[Callable[[np.ndarray], np.ndarray]],
    hess_g: Optional[Callable[[np.ndarray], np.ndarray]],
    twist: np.ndarray,
) -> VectorFieldSpec:
    """Field with gradient part plus a linear part of constant twist.

    ``twist`` is the constant skew matrix the twist_matrix operation will
    return for this field; the linear part is -0.5 * twist @ x.  The pure
    gradient part contributes nothing to the twist.  ``grad_g``/``hess_g``
    may be None for a vanishing gradient part.
    """
    C = np.asarray(twist, dtype=float)
    if C.shape != (dim, dim):
        raise DimensionError(f"twist matrix shape {C.shape} != ({dim}, {dim})")
    if not np.array_equal(C, -C.T):
        raise ValueError("twist matrix must be exactly skew-symmetric")
    if grad_g is None:
        grad_g = lambda x: np.zeros_like(x)  # noqa: E731
    if hess_g is None:
        hess_g = lambda x: np.zeros((dim, dim))  # noqa: E731

    def value(x, g=grad_g, M=C):
        gval = np.asarray(g(x), dtype=float)
        return gval - 0.5 * np.asarray(x, dtype=float) @ M.T

    def jacobian(x, hg=hess_g, M=C):
        return np.asarray(hg(x), dtype=float) - 0.5 * M

    return VectorFieldSpec(
        dim=dim,
        kind="gradient-plus-linear",
        _value=value,
        _jacobian=jacobian,
        params={"twist": C},
    )


def custom_field(
    dim: int,
    value: Callable[[np.ndarray], np.ndarray],
    jacobian: Callable[[np.ndarray], np.ndarray],
) -> VectorFieldSpec:
    """User-supplied field; the Jacobian callable is required, never differenced."""

    def batched_value(x, f=value):
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            return np.asarray(f(x), dtype=float)
        try:
            out = np.asarray(f(x), dtype=float)
            if out.shape == x.shape:
                return out
        except Exception:  # noqa: BLE001 - fall back to a point loop
            pass
        flat = x.reshape(-1, x.shape[-1])
        return np.stack([np.asarray(f(p), dtype=float) for p in flat]).reshape(x.shape)

    return VectorFieldSpec(dim=dim, kind="custom", _value=batched_value, _jacobian=jacobian)


def scaled_field(spec: VectorFieldSpec, sigma: float) -> VectorFieldSpec:
    """sigma * F, used by the boundary-value continuation family."""
    if sigma == 1.0:
        return spec
    return VectorFieldSpec(
        dim=spec.dim,
        kind=spec.kind if sigma == 0.0 else f"scaled({spec.kind})",
        _value=lambda x, s=spec, a=sigma: a * s.value(x),
        _jacobian=lambda x, s=spec, a=sigma: a * s.jacobian(x),
        params={"base": spec, "sigma": sigma},
    )


@dataclass(frozen=True)
class TwistMatrix:
    """Skew matrix with entries d_J F_I - d_I F_J (row J, column I)."""

    entries: np.ndarray
    rank_tolerance: float = 1e-9

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=float)
        if e.ndim != 2 or e.shape[0] != e.shape[1]:
            raise DimensionError(f"twist matrix must be square, got {e.shape}")
        if np.abs(e + e.T).max() > 1e-12 * max(1.0, np.abs(e).max()):
            raise ValueError("twist matrix is not skew-symmetric")


def twist_matrix(spec: VectorFieldSpec, x, rank_tolerance: float = 1e-9) -> TwistMatrix:
    """Twist of F at x: entries[J, I] = d_J F_I - d_I F_J = (Jac^T - Jac)[J, I]."""
    jac = spec.jacobian(np.asarray(x, dtype=float))
    return TwistMatrix(entries=jac.T - jac, rank_tolerance=rank_tolerance)


def twist_rank(tm: TwistMatrix) -> int:
    """Numerical rank: singular values above rank_tolerance * sigma_max."""
    sigma = np.linalg.svd(tm.entries, compute_uv=False)
    if sigma.size == 0 or sigma[0] == 0.0:
        return 0
    return int(np.count_nonzero(sigma > tm.rank_tolerance * sigma[0]))


def singular_dim_bound(spec: VectorFieldSpec, x) -> int:
    """Upper bound m - floor((rank + 1) / 2) on the singular-set dimension at x."""
    rank = twist_rank(twist_matrix(spec, x))
    return spec.dim - (rank + 1) // 2


def check_theorem_e_condition(spec: VectorFieldSpec, sample_points: Sequence) -> bool:
    """True iff floor((rank + 1) / 2) >= 2 at every sample point."""
    pts = np.atleast_2d(np.asarray(sample_points, dtype=float))
    if pts.size == 0:
        raise ValueError("sample_points must be nonempty")
    for p in pts:
        rank = twist_rank(twist_matrix(spec, p))
        if (rank + 1) // 2 < 2:
            return False
    return True


def div_f_star(spec: VectorFieldSpec, x) -> float:
    """Divergence of the starred field F* at x, from the Jacobian of F.

    F* has components (F_2, -F_1, F_4, -F_3, ...), so
    div F* = sum_k (dF_{2k+1}/dx_{2k} - dF_{2k}/dx_{2k+1})  (0-based pairs).
    """
    if spec.dim % 2 != 0:
        raise DimensionError("div F* is defined for even dimensions only")
    jac = spec.jacobian(np.asarray(x, dtype=float))
    total = 0.0
    for k in range(spec.dim // 2):
        total += jac[2 * k + 1, 2 * k] - jac[2 * k, 2 * k + 1]
    return float(total)
