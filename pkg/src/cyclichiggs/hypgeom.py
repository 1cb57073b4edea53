"""Hyperbolic geometry on the Poincare disk and the punctured-disk cusp.

Conventions: the disk carries the curvature -1 metric with real conformal
factor 4/(1-|z|^2)^2, the punctured disk the complete cusp metric with factor
1/(|z| ln|z|)^2.  "Conformal factor" always means g(d/dx, d/dx) for
z = x + iy.
"""

from __future__ import annotations

import numpy as np

from .liegroup import InvalidInputError

__all__ = [
    "hyp_distance",
    "disk_conformal_factor",
    "cusp_conformal_factor",
    "fuchsian_norm",
    "radial_geodesic",
    "disk_radial_distance",
    "cusp_radial_distance",
]


def _check_disk_point(z: complex) -> complex:
    z = complex(z)
    if not (np.isfinite(z.real) and np.isfinite(z.imag)):
        raise InvalidInputError("point has non-finite coordinates")
    if abs(z) >= 1.0:
        raise InvalidInputError(f"point |z| = {abs(z)} is not inside the unit disk")
    return z


def hyp_distance(a: complex, b: complex) -> float:
    """Hyperbolic distance between two points of the open unit disk."""
    a, b = _check_disk_point(a), _check_disk_point(b)
    t = abs(a - b) / abs(1.0 - np.conj(a) * b)
    return float(np.log1p(t) - np.log1p(-t))  # = 2 artanh(t)


def disk_conformal_factor(z: complex) -> float:
    """Conformal factor 4/(1-|z|^2)^2 of the curvature -1 disk metric."""
    z = _check_disk_point(z)
    return 4.0 / (1.0 - abs(z) ** 2) ** 2


def cusp_conformal_factor(z: complex) -> float:
    """Conformal factor 1/(|z| ln|z|)^2 of the complete cusp metric on 0<|z|<1."""
    r = abs(complex(z))
    if not np.isfinite(r) or r <= 0.0 or r >= 1.0:
        raise InvalidInputError(f"need 0 < |z| < 1, got |z| = {r}")
    return 1.0 / (r * np.log(r)) ** 2


def fuchsian_norm(d: float) -> float:
    """Matrix norm sqrt(2 cosh d) of a hyperbolic translation by distance d."""
    if not np.isfinite(d) or d < 0.0:
        raise InvalidInputError(f"need a distance d >= 0, got {d}")
    return float(np.sqrt(2.0 * np.cosh(d)))


def disk_radial_distance(r_from: float, r_to: float) -> float:
    """Signed disk distance along the positive real axis."""
    return float(
        np.log((1.0 + r_to) / (1.0 - r_to)) - np.log((1.0 + r_from) / (1.0 - r_from))
    )


def cusp_radial_distance(r_from: float, r_to: float) -> float:
    """Signed cusp distance along a radius, ln(ln r_from / ln r_to)."""
    if not (0.0 < r_from < 1.0 and 0.0 < r_to < 1.0):
        raise InvalidInputError("cusp radii must lie in (0, 1)")
    return float(np.log(np.log(r_from) / np.log(r_to)))


def radial_geodesic(r_from: float, r_to: float, n: int) -> np.ndarray:
    """n points on [r_from, r_to] of the real axis, disk-arclength uniform.

    Uses the closed form rho(r) = ln((1+r)/(1-r)) rather than quadrature, so
    consecutive hyperbolic distances agree to round-off.
    """
    if not (0.0 <= r_from < r_to < 1.0):
        raise InvalidInputError(
            f"need 0 <= r_from < r_to < 1, got ({r_from}, {r_to})"
        )
    if n < 2:
        raise InvalidInputError(f"need at least 2 sample points, got {n}")
    rho = np.linspace(
        np.log((1.0 + r_from) / (1.0 - r_from)),
        np.log((1.0 + r_to) / (1.0 - r_to)),
        n,
    )
    return np.tanh(rho / 2.0)
