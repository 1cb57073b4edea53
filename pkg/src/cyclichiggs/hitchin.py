"""Radial solver for the coupled self-duality system on rotational charts.

Unknowns are psi = ln H_{-2} and chi = ln H_{-1} on a mesh uniform in
s = ln r; the remaining metric components follow from H_i H_{-i} = 1 and
H_0 = 1.  With the coordinate Laplacian D = d^2/dz dzbar (radially
(f'' + f'/r)/4 = f_ss / (4 r^2)) the system reads

    D psi = W(r) [ e^{psi+chi} |c|^2 - e^{chi-psi} ]
    D chi = W(r) [ e^{chi-psi} + e^{chi+psi} |c|^2 - e^{-chi} |b|^2 ]

where b, c are the beta and gamma coefficients in the chart frame and W is
the squared chart form factor: W = 1 on a disk chart (tau normalized
against dz) and W = 1/r^2 on a cusp chart (tau normalized against dz/z).

Charts:
  "disk"  hyperbolic factor 4/(1-r^2)^2, used for the exact constant
          curvature solution H_{-2} = A lam^-2, H_{-1} = A lam^-1 with
          A = (2/3)|b|^2 (gamma = 0, constant b);
  "cusp"  hyperbolic factor 1/(r ln r)^2, Dirichlet data from the local
          model metric r^{2d}|ln r|^{+-1}.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.sparse import csc_matrix, diags, bmat
from scipy.sparse.linalg import spsolve

from .bundle import CoeffSpec, CyclicHiggsData
from .liegroup import InvalidInputError
from .modelmetric import model_metric_local

__all__ = [
    "CHARTS",
    "ConvergenceError",
    "RadialMesh",
    "HiggsCoefficients",
    "BoundaryData",
    "MetricSolution",
    "DerivedFields",
    "laplacian_matrix",
    "system_residual",
    "solve",
    "boundary_from_model_metric",
    "fuchsian_exact",
    "boundary_from_fuchsian",
    "derived_fields",
    "gap_verify",
    "u_identity_residual",
    "continuous_residual",
    "curvature_check",
    "quasi_isometry_check",
]

CHARTS = ("disk", "cusp")


class ConvergenceError(RuntimeError):
    """Newton (and the Picard fallback) failed to reach tolerance."""

    def __init__(self, message: str, last_residual: float):
        super().__init__(f"{message} (last residual {last_residual:.3e})")
        self.last_residual = last_residual


@dataclass(frozen=True)
class RadialMesh:
    """Radial grid in (0, 1), uniform in s = ln r."""

    chart: str
    r: np.ndarray

    def __post_init__(self):
        if self.chart not in CHARTS:
            raise InvalidInputError(f"unknown chart {self.chart!r}")
        r = np.asarray(self.r, dtype=float)
        object.__setattr__(self, "r", r)
        if r.ndim != 1 or r.size < 16:
            raise InvalidInputError("mesh needs at least 16 nodes")
        if not (0.0 < r[0] < r[-1] < 1.0) or np.any(np.diff(r) <= 0):
            raise InvalidInputError("mesh radii must increase inside (0, 1)")

    @classmethod
    def build(cls, chart: str, r_min: float, r_max: float, n: int) -> "RadialMesh":
        if not (0.0 < r_min < r_max < 1.0):
            raise InvalidInputError(f"need 0 < r_min < r_max < 1, got ({r_min}, {r_max})")
        return cls(chart, np.exp(np.linspace(np.log(r_min), np.log(r_max), n)))

    @property
    def n(self) -> int:
        return self.r.size

    @property
    def s(self) -> np.ndarray:
        return np.log(self.r)

    @property
    def h(self) -> float:
        return float((np.log(self.r[-1]) - np.log(self.r[0])) / (self.n - 1))

    @property
    def r_min(self) -> float:
        return float(self.r[0])

    @property
    def r_max(self) -> float:
        return float(self.r[-1])

    def refine(self, factor: int) -> "RadialMesh":
        return RadialMesh.build(
            self.chart, self.r_min, self.r_max, (self.n - 1) * factor + 1
        )

    def interior_slice(self, fraction: float = 0.6) -> slice:
        """Centered sub-mesh covering `fraction` of the s-range."""
        skip = int(round((1.0 - fraction) / 2.0 * (self.n - 1)))
        return slice(max(skip, 1), self.n - max(skip, 1))


def hyperbolic_factor(chart: str, r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if chart == "disk":
        return 4.0 / (1.0 - r * r) ** 2
    return 1.0 / (r * np.log(r)) ** 2


@dataclass(frozen=True)
class HiggsCoefficients:
    """Chart frame coefficients of beta and gamma; tau has coefficient 1."""

    b: CoeffSpec
    c: CoeffSpec
    chart: str
    rotational: bool = True

    def __post_init__(self):
        if self.chart not in CHARTS:
            raise InvalidInputError(f"unknown chart {self.chart!r}")
        if not self.rotational:
            raise InvalidInputError("only rotational coefficients are supported")

    def weight(self, r) -> np.ndarray:
        """Squared chart form factor |T|^2 multiplying the curvature terms."""
        r = np.asarray(r, dtype=float)
        return 1.0 / (r * r) if self.chart == "cusp" else np.ones_like(r)

    def lam_hyp(self, r) -> np.ndarray:
        return hyperbolic_factor(self.chart, r)

    def b_abs2(self, r) -> np.ndarray:
        return self.b.abs_at(r) ** 2

    def c_abs2(self, r) -> np.ndarray:
        return self.c.abs_at(r) ** 2


@dataclass(frozen=True)
class BoundaryData:
    """Dirichlet values of (H_-2, H_-1) at r_min and r_max."""

    H_m2_inner: float
    H_m1_inner: float
    H_m2_outer: float
    H_m1_outer: float
    source: str = "unspecified"

    def __post_init__(self):
        vals = (self.H_m2_inner, self.H_m1_inner, self.H_m2_outer, self.H_m1_outer)
        if not all(np.isfinite(v) and v > 0 for v in vals):
            raise InvalidInputError("boundary metric values must be positive")


def boundary_from_model_metric(
    data: CyclicHiggsData, puncture_id: int, r: float
) -> tuple[float, float]:
    """Model metric values (H_-2, H_-1)(r) = r^{2d}|ln r|^{+-1}."""
    local = model_metric_local(data, puncture_id)
    return local.coefficient(-2, r), local.coefficient(-1, r)


def fuchsian_exact(r, b_const: complex = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Exact disk-chart solution with gamma = 0 and constant b.

    Substituting H_-2 = A lam^a, H_-1 = B lam^beta with lam = 4/(1-r^2)^2
    (so D ln lam = lam / 2) forces a = -2, beta = -1, B = A = (2/3)|b|^2.
    """
    lam = hyperbolic_factor("disk", r)
    amp = (2.0 / 3.0) * abs(b_const) ** 2
    return amp / lam**2, amp / lam


def boundary_from_fuchsian(mesh: RadialMesh, b_const: complex = 1.0) -> BoundaryData:
    h2a, h1a = fuchsian_exact(mesh.r_min, b_const)
    h2b, h1b = fuchsian_exact(mesh.r_max, b_const)
    return BoundaryData(float(h2a), float(h1a), float(h2b), float(h1b), "fuchsian-exact")


def laplacian_matrix(mesh: RadialMesh) -> csc_matrix:
    """Discrete coordinate Laplacian on interior nodes (columns incl. boundary).

    Second difference in s scaled by 1/(4 r^2 h^2); shape (n-2, n).
    """
    n, h = mesh.n, mesh.h
    scale = 1.0 / (4.0 * mesh.r[1:-1] ** 2 * h * h)
    rows = np.repeat(np.arange(n - 2), 3)
    cols = (np.arange(n - 2)[:, None] + np.array([0, 1, 2])[None, :]).ravel()
    vals = (scale[:, None] * np.array([1.0, -2.0, 1.0])[None, :]).ravel()
    return csc_matrix((vals, (rows, cols)), shape=(n - 2, n))


def _rhs_terms(coeffs: HiggsCoefficients, mesh: RadialMesh):
    r = mesh.r[1:-1]
    return coeffs.weight(r), coeffs.b_abs2(r), coeffs.c_abs2(r)


def system_residual(
    psi: np.ndarray, chi: np.ndarray, coeffs: HiggsCoefficients, mesh: RadialMesh
) -> np.ndarray:
    """Residual of the discrete system on interior nodes, stacked (F1, F2)."""
    lap = laplacian_matrix(mesh)
    w, b2, c2 = _rhs_terms(coeffs, mesh)
    p, x = psi[1:-1], chi[1:-1]
    f1 = lap @ psi - w * (np.exp(p + x) * c2 - np.exp(x - p))
    f2 = lap @ chi - w * (np.exp(x - p) + np.exp(x + p) * c2 - np.exp(-x) * b2)
    return np.concatenate([f1, f2])


def _jacobian(psi, chi, coeffs, mesh):
    lap = laplacian_matrix(mesh)[:, 1:-1]
    w, b2, c2 = _rhs_terms(coeffs, mesh)
    p, x = psi[1:-1], chi[1:-1]
    g_pc = np.exp(p + x) * c2
    g_mp = np.exp(x - p)
    g_mx = np.exp(-x) * b2
    d11 = diags(-w * (g_pc + g_mp))
    d12 = diags(-w * (g_pc - g_mp))
    d21 = diags(-w * (-g_mp + g_pc))
    d22 = diags(-w * (g_mp + g_pc + g_mx))
    return bmat([[lap + d11, d12], [d21, lap + d22]], format="csc")


def _initial_guess(mesh: RadialMesh, bc: BoundaryData):
    s = mesh.s
    t = (s - s[0]) / (s[-1] - s[0])
    psi = np.log(bc.H_m2_inner) * (1 - t) + np.log(bc.H_m2_outer) * t
    chi = np.log(bc.H_m1_inner) * (1 - t) + np.log(bc.H_m1_outer) * t
    return psi, chi


def _apply_bc(psi, chi, bc):
    psi[0], psi[-1] = np.log(bc.H_m2_inner), np.log(bc.H_m2_outer)
    chi[0], chi[-1] = np.log(bc.H_m1_inner), np.log(bc.H_m1_outer)


@dataclass(frozen=True)
class MetricSolution:
    """Discrete diagonal harmonic-metric candidate on a radial mesh."""

    mesh: RadialMesh
    H_m2: np.ndarray
    H_m1: np.ndarray
    residual_sup: float
    iterations: int
    boundary_source: str
    method: str = "newton"

    def __post_init__(self):
        if np.any(self.H_m2 <= 0) or np.any(self.H_m1 <= 0):
            raise InvalidInputError("metric fields must be positive")

    def H(self, i: int) -> np.ndarray:
        """Metric coefficient of L_i; H_i H_{-i} = 1 and H_0 = 1 exactly."""
        if i == -2:
            return self.H_m2
        if i == -1:
            return self.H_m1
        if i == 0:
            return np.ones_like(self.H_m2)
        if i == 1:
            return 1.0 / self.H_m1
        if i == 2:
            return 1.0 / self.H_m2
        raise InvalidInputError(f"line index {i} outside -2..2")

    def fields(self) -> "SplineRadialFields":
        return SplineRadialFields(self.mesh, self.H_m2, self.H_m1)


class SplineRadialFields:
    """Cubic-spline interpolant of (psi, chi) in s = ln r, with derivatives."""

    def __init__(self, mesh: RadialMesh, H_m2: np.ndarray, H_m1: np.ndarray):
        self.mesh = mesh
        self.chart = mesh.chart
        self._psi = CubicSpline(mesh.s, np.log(H_m2))
        self._chi = CubicSpline(mesh.s, np.log(H_m1))

    def eval(self, r):
        """(psi, chi, dpsi/dr, dchi/dr) at radius r (scalar or array)."""
        r = np.asarray(r, dtype=float)
        s = np.log(r)
        psi, chi = self._psi(s), self._chi(s)
        return psi, chi, self._psi(s, 1) / r, self._chi(s, 1) / r


class ExactRadialFields:
    """Closed-form field provider (e.g. the exact disk-chart solution)."""

    def __init__(self, chart, psi_fn, chi_fn, dpsi_fn, dchi_fn):
        self.chart = chart
        self._fns = (psi_fn, chi_fn, dpsi_fn, dchi_fn)

    @classmethod
    def fuchsian(cls, b_const: complex = 1.0) -> "ExactRadialFields":
        amp = np.log((2.0 / 3.0) * abs(b_const) ** 2)

        def lnlam(r):
            return np.log(4.0) - 2.0 * np.log1p(-np.asarray(r) ** 2)

        def dlnlam(r):
            r = np.asarray(r, dtype=float)
            return 4.0 * r / (1.0 - r * r)

        return cls(
            "disk",
            lambda r: amp - 2.0 * lnlam(r),
            lambda r: amp - lnlam(r),
            lambda r: -2.0 * dlnlam(r),
            lambda r: -dlnlam(r),
        )

    def eval(self, r):
        psi_fn, chi_fn, dpsi_fn, dchi_fn = self._fns
        return psi_fn(r), chi_fn(r), dpsi_fn(r), dchi_fn(r)

    def solution_on(self, mesh: RadialMesh) -> MetricSolution:
        psi, chi, _, _ = self.eval(mesh.r)
        return MetricSolution(
            mesh, np.exp(psi), np.exp(chi), 0.0, 0, "closed-form", "exact"
        )


def solve(
    coeffs: HiggsCoefficients,
    mesh: RadialMesh,
    bc: BoundaryData,
    *,
    newton_tol: float = 1e-8,
    max_iter: int = 25,
    picard_fallback: bool = True,
) -> MetricSolution:
    """Damped Newton in log variables; positivity is automatic.

    Residuals are measured in the sup norm of the discrete system.  If the
    line search stalls, an under-relaxed Picard sweep (linear Dirichlet
    solve with frozen nonlinearity) restarts the iteration.
    """
    if mesh.chart != coeffs.chart:
        raise InvalidInputError("mesh and coefficients disagree about the chart")
    psi, chi = _initial_guess(mesh, bc)
    _apply_bc(psi, chi, bc)

    def sup(pv, cv):
        return float(np.abs(system_residual(pv, cv, coeffs, mesh)).max())

    res = sup(psi, chi)
    iters = 0
    while res > newton_tol:
        if iters >= max_iter:
            if not picard_fallback:
                raise ConvergenceError("Newton exceeded max iterations", res)
            psi, chi, ok = _picard_sweeps(psi, chi, coeffs, mesh, bc, 200)
            res = sup(psi, chi)
            if not ok or res > 1e3:
                raise ConvergenceError("Newton and Picard fallback both stalled", res)
            iters = 0
            picard_fallback = False
            continue
        jac = _jacobian(psi, chi, coeffs, mesh)
        f = system_residual(psi, chi, coeffs, mesh)
        step = spsolve(jac, -f)
        n_int = mesh.n - 2
        dpsi, dchi = step[:n_int], step[n_int:]
        alpha, accepted = 1.0, False
        while alpha > 2.0**-30:
            trial_psi, trial_chi = psi.copy(), chi.copy()
            trial_psi[1:-1] += alpha * dpsi
            trial_chi[1:-1] += alpha * dchi
            trial_res = sup(trial_psi, trial_chi)
            if trial_res < (1.0 - 0.25 * alpha) * res:
                psi, chi, res, accepted = trial_psi, trial_chi, trial_res, True
                break
            alpha /= 2.0
        if not accepted:
            iters = max_iter  # force fallback or failure on next pass
        else:
            iters += 1
    return MetricSolution(
        mesh, np.exp(psi), np.exp(chi), res, iters, bc.source, "newton"
    )


def _picard_sweeps(psi, chi, coeffs, mesh, bc, sweeps, relax=0.5):
    """Linear Dirichlet solves with frozen nonlinearity, under-relaxed."""
    lap_int = laplacian_matrix(mesh)[:, 1:-1].tocsc()
    lap_full = laplacian_matrix(mesh)
    w, b2, c2 = _rhs_terms(coeffs, mesh)
    bpsi = np.zeros(mesh.n)
    bchi = np.zeros(mesh.n)
    _apply_bc(bpsi, bchi, bc)
    old = float(np.abs(system_residual(psi, chi, coeffs, mesh)).max())
    for _ in range(sweeps):
        p, x = psi[1:-1], chi[1:-1]
        rhs1 = w * (np.exp(p + x) * c2 - np.exp(x - p)) - lap_full @ bpsi
        rhs2 = (
            w * (np.exp(x - p) + np.exp(x + p) * c2 - np.exp(-x) * b2)
            - lap_full @ bchi
        )
        new_psi = psi.copy()
        new_chi = chi.copy()
        new_psi[1:-1] = (1 - relax) * p + relax * spsolve(lap_int, rhs1)
        new_chi[1:-1] = (1 - relax) * x + relax * spsolve(lap_int, rhs2)
        psi, chi = new_psi, new_chi
    new = float(np.abs(system_residual(psi, chi, coeffs, mesh)).max())
    return psi, chi, new < old


@dataclass(frozen=True)
class DerivedFields:
    """Pointwise fields derived from a metric solution.

    gh_factor is the real conformal factor of g_h in the chart (the chart
    form factor |T|^2 is folded in, so on a cusp chart it carries the 1/r^2
    of the dz/z frame); tau_norm and gamma_norm are measured against the
    harmonic metric and the chart hyperbolic metric.
    """

    mesh: RadialMesh
    gh_factor: np.ndarray
    tau_norm: np.ndarray
    gamma_norm: np.ndarray
    u: np.ndarray
    curvature: np.ndarray
    lam_hyp: np.ndarray


def derived_fields(
    sol: MetricSolution, coeffs: HiggsCoefficients, geometry=None
) -> DerivedFields:
    """Conformal factor, tau/gamma norms, u field and Gauss curvature.

    geometry overrides the chart hyperbolic factor (callable of r) when the
    chart metric is not the scenario's reference metric.
    """
    mesh = sol.mesh
    r = mesh.r
    lam = geometry(r) if geometry is not None else coeffs.lam_hyp(r)
    w = coeffs.weight(r)
    ratio = sol.H_m1 / sol.H_m2  # = H_2 / H_1
    gh = 2.0 * w * ratio
    tau2 = w * ratio / lam
    u = sol.H_m2**2 * coeffs.c_abs2(r)
    gamma2 = u * tau2
    curv = _curvature_direct(mesh, gh)
    return DerivedFields(
        mesh, gh, np.sqrt(tau2), np.sqrt(gamma2), u, curv, np.asarray(lam)
    )


def _lap_interior(mesh: RadialMesh, f: np.ndarray) -> np.ndarray:
    h = mesh.h
    return (f[:-2] - 2.0 * f[1:-1] + f[2:]) / (4.0 * mesh.r[1:-1] ** 2 * h * h)


def _lap4_interior(mesh: RadialMesh, f: np.ndarray) -> np.ndarray:
    """Fourth-order Laplacian on nodes 2..n-3.

    Verification stencil, deliberately different from the solver's 3-point
    scheme: residuals of solved fields then expose the genuine O(h^2)
    discretization error instead of the Newton tolerance.
    """
    h = mesh.h
    fss = (
        -f[:-4] + 16.0 * f[1:-3] - 30.0 * f[2:-2] + 16.0 * f[3:-1] - f[4:]
    ) / (12.0 * h * h)
    return fss / (4.0 * mesh.r[2:-2] ** 2)


def _curvature_direct(mesh: RadialMesh, gh: np.ndarray) -> np.ndarray:
    """K = -2 D ln(gh) / gh via the verification stencil; edges copied."""
    k = np.empty_like(gh)
    k[2:-2] = -2.0 * _lap4_interior(mesh, np.log(gh)) / gh[2:-2]
    k[0] = k[1] = k[2]
    k[-1] = k[-2] = k[-3]
    return k


def curvature_identity(sol: MetricSolution, coeffs: HiggsCoefficients) -> np.ndarray:
    """K = -2 + |b|^2 H_-2 / H_-1^2, the on-shell form of the curvature."""
    return -2.0 + coeffs.b_abs2(sol.mesh.r) * sol.H_m2 / sol.H_m1**2


def gap_verify(fields: DerivedFields, interior_fraction: float = 0.6) -> float:
    """inf over the interior sub-mesh of tau_norm - gamma_norm."""
    sl = fields.mesh.interior_slice(interior_fraction)
    return float((fields.tau_norm[sl] - fields.gamma_norm[sl]).min())


def u_identity_residual(
    fields: DerivedFields, sol: MetricSolution, u_floor: float = 1e-300
):
    """sup over interior nodes of |D_{g_h} ln u - (u - 1)|.

    D_{g_h} is the coordinate Laplacian divided by the conformal factor of
    g_h.  Nodes with u below u_floor are excluded and counted.
    """
    u = fields.u
    if np.all(u <= u_floor):
        raise InvalidInputError("u vanishes identically; identity not applicable")
    mask = u > u_floor
    if not np.all(mask):
        # zeros of c(z) make ln u singular; restrict to the positive part
        raise InvalidInputError("u vanishes at mesh nodes; restrict the mesh")
    lnu = np.log(u)
    resid = _lap4_interior(fields.mesh, lnu) / fields.gh_factor[2:-2] - (
        u[2:-2] - 1.0
    )
    return float(np.abs(resid).max()), int((~mask).sum())


def continuous_residual(sol: MetricSolution, coeffs: HiggsCoefficients) -> float:
    """Sup PDE residual of the solved fields under the verification stencil.

    Measures how well the discrete solution satisfies the continuum system,
    so it decays at the scheme's O(h^2) rather than the Newton tolerance.
    """
    mesh = sol.mesh
    r = mesh.r[2:-2]
    w = coeffs.weight(r)
    b2, c2 = coeffs.b_abs2(r), coeffs.c_abs2(r)
    psi, chi = np.log(sol.H_m2), np.log(sol.H_m1)
    p, x = psi[2:-2], chi[2:-2]
    f1 = _lap4_interior(mesh, psi) - w * (np.exp(p + x) * c2 - np.exp(x - p))
    f2 = _lap4_interior(mesh, chi) - w * (
        np.exp(x - p) + np.exp(x + p) * c2 - np.exp(-x) * b2
    )
    return float(max(np.abs(f1).max(), np.abs(f2).max()))


def curvature_check(fields: DerivedFields, tol_scale: float = 5.0):
    """(min K, argmin radius) over the interior, with the -2 bound context."""
    sl = fields.mesh.interior_slice(1.0)
    kint = fields.curvature[sl]
    i = int(np.argmin(kint))
    return float(kint[i]), float(fields.mesh.r[sl][i])


def quasi_isometry_check(fields: DerivedFields):
    """Bounds of g_h against the chart hyperbolic metric.

    ratio_normalized is tau_norm^2 = gh_factor / (2 lam_hyp), the Hermitian
    normalization in which the cusp model metric gives exactly 1; ratio_raw
    is gh_factor / lam_hyp.
    """
    raw = fields.gh_factor / fields.lam_hyp
    norm = 0.5 * raw
    out = {
        "ratio_raw_inf": float(raw.min()),
        "ratio_raw_sup": float(raw.max()),
        "ratio_normalized_inf": float(norm.min()),
        "ratio_normalized_sup": float(norm.max()),
        "ratio_normalized_at_r_min": float(norm[0]),
    }
    if not (np.isfinite(out["ratio_raw_sup"]) and out["ratio_raw_inf"] > 0):
        raise InvalidInputError("quasi-isometry ratio degenerate")
    return out
