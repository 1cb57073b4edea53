"""Flat connection of a solved metric and parallel transport along paths.

Holomorphic frame order is (e_-2, e_-1, e_0, e_1, e_2).  The Higgs
coefficient matrix places the tau chain with coefficient 1, beta with b(z)
and gamma with -c(z); the sign on the gamma chain is forced by the
orthogonality condition Phi^T Q + Q Phi = 0 together with the printed
characteristic polynomial t(t^4 + 2 b^2 c), and is asserted at assembly.

The flat connection is D = Chern(h) + Phi + Phi^{*h}; in the chart frame

    A_z    = diag(d_z ln H_i) + phi(z) * ff(z),
    A_zbar = phi^{*h}(z) * conj(ff(z)),

with ff = 1 on a disk chart and 1/z on a cusp chart.  Real orthonormal
frames (e1, e2, f2, f1, f3) diagonalize the invariant form to I_{2,3}, so
transport matrices expressed in them land in SO0(2,3) up to discretization
error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import liegroup as lg
from .hitchin import HiggsCoefficients
from .liegroup import ChamberPoint, InvalidInputError

__all__ = [
    "Q5",
    "higgs_matrix_coefficients",
    "higgs_matrix",
    "higgs_star",
    "ConnectionSample",
    "connection_sample",
    "real_frame_factors",
    "Path",
    "disk_radial_path",
    "cusp_radial_path",
    "rectangle_loop",
    "TransportResult",
    "parallel_transport",
    "transport_vector",
    "flatness_residual",
    "conservation_probe",
    "norms_by_line",
]

# complex-bilinear invariant form on the holomorphic frame
Q5 = np.zeros((5, 5))
Q5[0, 4] = Q5[4, 0] = -1.0
Q5[1, 3] = Q5[3, 1] = 1.0
Q5[2, 2] = -1.0

# unitary change of basis: columns are (e1, e2, f2, f1, f3) written in the
# h-unit holomorphic frame
_SQ = 1.0 / np.sqrt(2.0)
M_REAL = np.array(
    [
        [0.0, 0.0, -1j * _SQ, _SQ, 0.0],
        [_SQ, -1j * _SQ, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 1.0],
        [_SQ, 1j * _SQ, 0.0, 0.0, 0.0],
        [0.0, 0.0, 1j * _SQ, _SQ, 0.0],
    ],
    dtype=complex,
)


def higgs_matrix_coefficients(b: complex, c: complex) -> np.ndarray:
    """Coefficient matrix of the cyclic Higgs field with values b, c."""
    m = np.zeros((5, 5), dtype=complex)
    m[1, 0] = 1.0
    m[2, 1] = b
    m[3, 2] = b
    m[4, 3] = 1.0
    m[1, 4] = -c
    m[0, 3] = -c
    return m


def higgs_matrix(z: complex, coeffs: HiggsCoefficients) -> np.ndarray:
    """Chart coefficient matrix of Phi at z (against dz or dz/z).

    Asserts the so(Q) condition, which pins the dual-map signs.
    """
    m = higgs_matrix_coefficients(coeffs.b(z), coeffs.c(z))
    defect = np.abs(m.T @ Q5 + Q5 @ m).max()
    if defect > 1e-12 * max(1.0, np.abs(m).max()):
        raise InvalidInputError(f"Higgs matrix left so(Q): defect {defect}")
    return m


def higgs_star(phi: np.ndarray, h5: np.ndarray) -> np.ndarray:
    """Adjoint coefficient matrix: (phi*)_ij = conj(phi_ji) H_j / H_i."""
    return np.conj(phi).T * (h5[None, :] / h5[:, None])


def _h5(psi: float, chi: float) -> np.ndarray:
    return np.array(
        [np.exp(psi), np.exp(chi), 1.0, np.exp(-chi), np.exp(-psi)]
    )


@dataclass(frozen=True)
class ConnectionSample:
    """Coefficients of the flat connection against dz and dzbar at a point."""

    A_z: np.ndarray
    A_zbar: np.ndarray


def connection_sample(z: complex, fields, coeffs: HiggsCoefficients) -> ConnectionSample:
    """Assemble D = Chern + Phi + Phi^* in the holomorphic chart frame.

    fields provides (psi, chi, dpsi/dr, dchi/dr) at |z| (a solved metric's
    spline interpolant or a closed form).
    """
    z = complex(z)
    r = abs(z)
    psi, chi, dpsi, dchi = fields.eval(r)
    h5 = _h5(float(psi), float(chi))
    dln = np.array([dpsi, dchi, 0.0, -dchi, -dpsi], dtype=float)
    chern = np.conj(z) / (2.0 * r) * dln
    phi = higgs_matrix(z, coeffs)
    star = higgs_star(phi, h5)
    ff = 1.0 / z if coeffs.chart == "cusp" else 1.0
    a_z = np.diag(chern.astype(complex)) + phi * ff
    a_zbar = star * np.conj(ff)
    return ConnectionSample(a_z, a_zbar)


def real_frame_factors(r: float, fields):
    """(sqrt_h5, M) with R = diag(1/sqrt_h5) @ M the real frame at radius r.

    R columns are the I_{2,3}-orthonormal real basis in holomorphic
    coordinates; R^{-1} = M^dagger diag(sqrt_h5).
    """
    psi, chi, _, _ = fields.eval(r)
    return np.sqrt(_h5(float(psi), float(chi))), M_REAL


@dataclass(frozen=True)
class Path:
    """Sampled path; transport takes one RK4 step per consecutive pair."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=complex)
        object.__setattr__(self, "points", pts)
        if pts.ndim != 1 or pts.size < 2:
            raise InvalidInputError("a path needs at least two sample points")

    @property
    def start(self) -> complex:
        return complex(self.points[0])

    @property
    def end(self) -> complex:
        return complex(self.points[-1])

    @property
    def closed(self) -> bool:
        scale = np.abs(self.points).max()
        return bool(abs(self.points[0] - self.points[-1]) <= 1e-12 * scale)

    def reversed(self) -> "Path":
        return Path(self.points[::-1])

    def subpath(self, i0: int, i1: int) -> "Path":
        return Path(self.points[i0 : i1 + 1])


def disk_radial_path(r_from: float, r_to: float, n: int) -> Path:
    """Radial path sampled uniformly in disk hyperbolic arclength."""
    from .hypgeom import radial_geodesic

    lo, hi = min(r_from, r_to), max(r_from, r_to)
    pts = radial_geodesic(lo, hi, n).astype(complex)
    if r_from > r_to:
        pts = pts[::-1]
    return Path(pts)


def cusp_radial_path(r_from: float, r_to: float, n: int) -> Path:
    """Radial path sampled uniformly in ln r (cusp-arclength uniform)."""
    pts = np.exp(np.linspace(np.log(r_from), np.log(r_to), n)).astype(complex)
    return Path(pts)


def rectangle_loop(s0: float, s1: float, theta: float, n: int) -> Path:
    """Contractible rectangle in (ln r, arg z): out, rotate, back, unrotate."""
    if s0 >= s1 or theta <= 0:
        raise InvalidInputError("need s0 < s1 and theta > 0")
    s_leg = np.linspace(s0, s1, n)
    t_leg = np.linspace(0.0, theta, n)
    pts = np.concatenate(
        [
            np.exp(s_leg),
            np.exp(s1 + 1j * t_leg[1:]),
            np.exp(s_leg[::-1][1:] + 1j * theta),
            np.exp(s0 + 1j * t_leg[::-1][1:]),
        ]
    )
    return Path(pts)


def _step_matrix(z, zdot, fields, coeffs, dtype):
    sample = connection_sample(z, fields, coeffs)
    m = -(sample.A_z * zdot + sample.A_zbar * np.conj(zdot))
    return m.astype(dtype, copy=False)


_EXTENDED = np.clongdouble if np.finfo(np.longdouble).eps < 1e-17 else np.complex128


def _rk4_transport(path: Path, fields, coeffs, value, record=False, extended=False):
    """Integrate d/dt = -(A_z zdot + A_zbar conj(zdot)) along the path.

    With extended=True the state is kept in long-double precision: the
    invariant-form defect of long transports is floored by rounding at the
    scale ||v||^2 per step, which matters for sections of large growth.
    """
    dtype = _EXTENDED if extended else np.complex128
    out = np.asarray(value).astype(dtype)
    history = [out.copy()] if record else None
    pts = path.points
    for z0, z1 in zip(pts[:-1], pts[1:]):
        zdot = z1 - z0  # unit parameter per sample interval
        zm = 0.5 * (z0 + z1)
        a0 = _step_matrix(z0, zdot, fields, coeffs, dtype)
        am = _step_matrix(zm, zdot, fields, coeffs, dtype)
        a1 = _step_matrix(z1, zdot, fields, coeffs, dtype)
        k1 = a0 @ out
        k2 = am @ (out + 0.5 * k1)
        k3 = am @ (out + 0.5 * k2)
        k4 = a1 @ (out + k3)
        out = out + (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        if record:
            history.append(out.copy())
    return (out, history) if record else out


@dataclass(frozen=True)
class TransportResult:
    """Parallel transport between the real frames at the path endpoints."""

    matrix: np.ndarray
    path: Path
    flatness_residual: float
    cartan: ChamberPoint

    def membership(self, tol: float = 1e-6):
        return lg.membership_check(self.matrix, tol)


def parallel_transport(path: Path, fields, coeffs: HiggsCoefficients) -> TransportResult:
    """Transport matrix in real frames, with Cartan projection.

    The flatness_residual field records the reality and signature defects of
    the raw result (the Gram defect against I_{2,3} plus the imaginary
    leakage), both of discretization size for a converged solution.
    """
    t_hol = _rk4_transport(path, fields, coeffs, np.eye(5, dtype=complex))
    sq0, m = real_frame_factors(abs(path.start), fields)
    sq1, _ = real_frame_factors(abs(path.end), fields)
    t_real_c = m.conj().T @ (sq1[:, None] * t_hol * (1.0 / sq0)[None, :]) @ m
    imag_defect = float(np.abs(t_real_c.imag).max())
    t_real = t_real_c.real
    gram_defect = float(np.abs(t_real.T @ lg.I23 @ t_real - lg.I23).max())
    return TransportResult(
        t_real, path, max(imag_defect, gram_defect), lg.cartan_projection(t_real)
    )


def transport_vector(
    path: Path,
    v0_hol: np.ndarray,
    fields,
    coeffs: HiggsCoefficients,
    extended: bool = False,
) -> np.ndarray:
    """Values of the flat section along the path (holomorphic components)."""
    _, history = _rk4_transport(
        path,
        fields,
        coeffs,
        np.asarray(v0_hol, dtype=complex),
        record=True,
        extended=extended,
    )
    return np.asarray(history)


def flatness_residual(loop: Path, fields, coeffs: HiggsCoefficients) -> float:
    """||T(loop) - I||_inf for a closed contractible loop."""
    if not loop.closed:
        raise InvalidInputError("flatness residual needs a closed loop")
    result = parallel_transport(loop, fields, coeffs)
    return float(np.abs(result.matrix - np.eye(5)).max())


def norms_by_line(values: np.ndarray, radii: np.ndarray, fields) -> np.ndarray:
    """Pointwise h-norms ||v_i|| of the five components along a path.

    values has shape (n, 5) in holomorphic components; returns (n, 5) with
    column j the norm of the L_{j-2} component.
    """
    psi, chi, _, _ = fields.eval(np.asarray(radii, dtype=float))
    h5 = np.stack(
        [np.exp(psi), np.exp(chi), np.ones_like(psi), np.exp(-chi), np.exp(-psi)],
        axis=-1,
    )
    return np.abs(values) * np.sqrt(h5)


def conservation_probe(
    path: Path,
    v0_real: np.ndarray,
    fields,
    coeffs: HiggsCoefficients,
    extended: bool = True,
) -> float:
    """Max deviation of 2||v1||^2 - (2||v2||^2 + ||v0||^2) from 1.

    v0_real is given in the real frame at the start point and must be a unit
    vector for I_{2,3}; the combination equals the invariant form of the
    transported section, so the deviation measures integration error.  The
    extended-precision integrator is the default because the combination
    cancels squares of size up to exp(2 mu_2).
    """
    v0_real = np.asarray(v0_real, dtype=float)
    q0 = float(v0_real @ lg.I23 @ v0_real)
    if abs(q0 - 1.0) > 1e-10:
        raise InvalidInputError(f"start vector has invariant norm {q0}, expected 1")
    sq0, m = real_frame_factors(abs(path.start), fields)
    v0_hol = (m @ v0_real) / sq0
    values = transport_vector(path, v0_hol, fields, coeffs, extended=extended)
    norms = norms_by_line(values, np.abs(path.points), fields)
    combo = (
        2.0 * norms[:, 3] ** 2
        - 2.0 * norms[:, 4] ** 2
        - norms[:, 2] ** 2
    )
    return float(np.abs(combo - 1.0).max())
