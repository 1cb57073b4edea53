"""Morse-function estimates for flat sections and the domination fits.

For a flat section v with components (v_-2, ..., v_2), the function
f_v = ||v_2||_h^2 has coordinate z-derivative

    P = d_z f_v = -T(z) H_2 v_1 conj(v_2) + C(z) H_{-1} v_2 conj(v_{-1}),

where T and C are the tau and gamma coefficients against dz in the chart,
and ||df_v|| = sqrt(2) |P| / sqrt(lam_hyp) in the convention where
||dz||^2 = 1/lam.  At a zero of v_2 the coordinate Hessian is the printed
2x2 matrix built from s = T v_1 sqrt(H_2) and t = -conj(C) H_{-1} v_{-1} /
sqrt(H_2), with determinant [conj(s+t)(s-t) + conj(s-t)(s+t)]^2 =
4(|s|^2 - |t|^2)^2 > 0 whenever the tau/gamma gap holds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import hypgeom
from . import liegroup as lg
from . import transport as tp
from .hitchin import HiggsCoefficients
from .liegroup import InvalidInputError

__all__ = [
    "FlatSectionTrace",
    "GrowthFit",
    "DominationReport",
    "SectionState",
    "trace_section",
    "path_distances",
    "s_conditions_check",
    "hessian_from_st",
    "hessian_nondegeneracy",
    "flow_descend",
    "growth_fit",
    "domination_verify",
]


def _chart_coeffs_at(z, coeffs: HiggsCoefficients):
    """(T, C): tau and gamma coefficients against dz at z."""
    ff = 1.0 / z if coeffs.chart == "cusp" else 1.0
    return ff, coeffs.c(z) * ff


def _lam_at(r, coeffs, geometry=None):
    return geometry(r) if geometry is not None else coeffs.lam_hyp(r)


def gradient_closed_form(z, v_hol, fields, coeffs, geometry=None):
    """(P, grad_norm) at a point from the first-variation identity."""
    z = complex(z)
    r = abs(z)
    psi, chi, _, _ = fields.eval(r)
    h2, hm1 = np.exp(-psi), np.exp(chi)
    t_coeff, c_coeff = _chart_coeffs_at(z, coeffs)
    p = -t_coeff * h2 * v_hol[3] * np.conj(v_hol[4]) + c_coeff * hm1 * v_hol[
        4
    ] * np.conj(v_hol[1])
    lam = _lam_at(r, coeffs, geometry)
    return p, float(np.sqrt(2.0) * abs(p) / np.sqrt(lam))


def f_value(z, v_hol, fields):
    psi, _, _, _ = fields.eval(abs(z))
    return float(np.exp(-psi) * abs(v_hol[4]) ** 2)


class SectionState:
    """A flat section known at one point, extendable by short transports."""

    def __init__(self, z, v_hol, fields, coeffs):
        self.z = complex(z)
        self.v = np.asarray(v_hol, dtype=complex)
        self.fields = fields
        self.coeffs = coeffs

    @classmethod
    def from_real_frame(cls, z, v_real, fields, coeffs):
        sq, m = tp.real_frame_factors(abs(z), fields)
        return cls(z, (m @ np.asarray(v_real, dtype=float)) / sq, fields, coeffs)

    def extended_to(self, z_new, substeps: int = 6) -> "SectionState":
        seg = tp.Path(np.linspace(self.z, complex(z_new), substeps))
        values = tp.transport_vector(seg, self.v, self.fields, self.coeffs)
        return SectionState(z_new, values[-1], self.fields, self.coeffs)

    def f(self) -> float:
        return f_value(self.z, self.v, self.fields)

    def gradient(self, geometry=None):
        return gradient_closed_form(
            self.z, self.v, self.fields, self.coeffs, geometry
        )

    def gradient_fd(self, step: float, geometry=None) -> float:
        """Finite-difference ||df|| from four short extensions."""
        fx = (
            self.extended_to(self.z + step).f() - self.extended_to(self.z - step).f()
        ) / (2.0 * step)
        fy = (
            self.extended_to(self.z + 1j * step).f()
            - self.extended_to(self.z - 1j * step).f()
        ) / (2.0 * step)
        lam = _lam_at(abs(self.z), self.coeffs, geometry)
        return float(np.sqrt(fx * fx + fy * fy) / np.sqrt(2.0 * lam))


def path_distances(path: tp.Path, coeffs, geometry=None) -> np.ndarray:
    """Cumulative hyperbolic length along the path samples."""
    pts = path.points
    if np.abs(pts.imag).max() < 1e-14:
        # radial path: closed forms
        r = pts.real
        if geometry is None and coeffs.chart == "cusp":
            d = np.abs(np.log(np.log(r) / np.log(r[0])))
        elif geometry is None:
            rho = np.log((1.0 + r) / (1.0 - r))
            d = np.abs(rho - rho[0])
        else:
            mid = 0.5 * (r[:-1] + r[1:])
            d = np.concatenate(
                [[0.0], np.cumsum(np.sqrt(geometry(mid)) * np.abs(np.diff(r)))]
            )
        return d
    mid = 0.5 * (pts[:-1] + pts[1:])
    lam = _lam_at(np.abs(mid), coeffs, geometry)
    return np.concatenate([[0.0], np.cumsum(np.sqrt(lam) * np.abs(np.diff(pts)))])


@dataclass(frozen=True)
class FlatSectionTrace:
    """f_v, gradient norm and conservation diagnostics along a path."""

    path: tp.Path
    components: np.ndarray  # (n, 5) holomorphic components
    f_v: np.ndarray
    grad_norm: np.ndarray
    distances: np.ndarray
    conservation_dev: float
    norms: np.ndarray  # (n, 5) per-line h-norms


def trace_section(
    v0_real: np.ndarray,
    path: tp.Path,
    fields,
    coeffs: HiggsCoefficients,
    geometry=None,
) -> FlatSectionTrace:
    """Transport a Q-unit real vector and record the Morse-function data."""
    v0_real = np.asarray(v0_real, dtype=float)
    q0 = float(v0_real @ lg.I23 @ v0_real)
    if abs(q0 - 1.0) > 1e-9:
        raise InvalidInputError(f"start vector has invariant norm {q0}, expected 1")
    sq0, m = tp.real_frame_factors(abs(path.start), fields)
    values = tp.transport_vector(path, (m @ v0_real) / sq0, fields, coeffs)
    radii = np.abs(path.points)
    norms = tp.norms_by_line(values, radii, fields)
    f_v = norms[:, 4] ** 2
    grads = np.empty_like(f_v)
    for i, (z, v) in enumerate(zip(path.points, values)):
        _, grads[i] = gradient_closed_form(z, v, fields, coeffs, geometry)
    combo = 2.0 * norms[:, 3] ** 2 - 2.0 * norms[:, 4] ** 2 - norms[:, 2] ** 2
    return FlatSectionTrace(
        path,
        values,
        f_v,
        grads,
        path_distances(path, coeffs, geometry),
        float(np.abs(combo - 1.0).max()),
        norms,
    )


def s_conditions_check(trace: FlatSectionTrace, gap: float, f_floor: float = 1e-12):
    """Pointwise (S2)/(S3) bounds with the measured constants.

    Verifies ||df|| >= sqrt(2) gap ||v_1|| ||v_2|| pointwise (up to a
    relative slack for discretization) and reports the measured constants
    c = inf ||df|| / f and c' = inf ||df|| / sqrt(f).
    """
    if gap <= 0:
        raise InvalidInputError("the gap must be positive")
    n1, n2 = trace.norms[:, 3], trace.norms[:, 4]
    floor_bound = np.sqrt(2.0) * gap * n1 * n2
    margin = trace.grad_norm - floor_bound
    scale = np.maximum(floor_bound, f_floor)
    pointwise_ok = bool(np.all(margin >= -1e-8 * scale))
    mask = trace.f_v > f_floor
    c = float((trace.grad_norm[mask] / trace.f_v[mask]).min()) if mask.any() else np.inf
    c_half = (
        float((trace.grad_norm[mask] / np.sqrt(trace.f_v[mask])).min())
        if mask.any()
        else np.inf
    )
    return {
        "pointwise_ok": pointwise_ok,
        "worst_margin": float(margin.min()),
        "c_S2": c,
        "c_S3": c_half,
        "support": int(mask.sum()),
    }


def hessian_from_st(s: complex, t: complex):
    """Printed coordinate Hessian at a zero of v_2 and its determinant."""
    off = 1j * (np.conj(s + t) * (s - t) - np.conj(s - t) * (s + t))
    mat = np.array(
        [[2.0 * abs(s + t) ** 2, off], [off, 2.0 * abs(s - t) ** 2]]
    )
    det = (np.conj(s + t) * (s - t) + np.conj(s - t) * (s + t)) ** 2
    return mat.real, float(det.real)


def hessian_nondegeneracy(state: SectionState, geometry=None, f_tol: float = 1e-9):
    """Closed-form Hessian data at a v_2 zero of a flat section.

    Returns (matrix, determinant, s, t); raises if v_2 does not vanish, and
    reports a gap violation if |s| <= |t| (impossible for stable data).
    """
    z = state.z
    if state.f() > f_tol:
        raise InvalidInputError("Hessian is evaluated at a zero of v_2 only")
    psi, chi, _, _ = state.fields.eval(abs(z))
    h2, hm1 = np.exp(-psi), np.exp(chi)
    t_coeff, c_coeff = _chart_coeffs_at(z, state.coeffs)
    s = t_coeff * state.v[3] * np.sqrt(h2)
    t = -np.conj(c_coeff) * hm1 * state.v[1] / np.sqrt(h2)
    if abs(s) <= abs(t):
        raise InvalidInputError(
            f"gap violation at the critical point: |s|={abs(s)} <= |t|={abs(t)}"
        )
    mat, det = hessian_from_st(s, t)
    return mat, det, complex(s), complex(t)


def hessian_fd(state: SectionState, step: float) -> np.ndarray:
    """Finite-difference coordinate Hessian of f_v around the state point."""

    def f_at(dx, dy):
        return state.extended_to(state.z + dx + 1j * dy).f()

    f0 = state.f()
    fxx = (f_at(step, 0) - 2 * f0 + f_at(-step, 0)) / step**2
    fyy = (f_at(0, step) - 2 * f0 + f_at(0, -step)) / step**2
    fxy = (
        f_at(step, step) - f_at(step, -step) - f_at(-step, step) + f_at(-step, -step)
    ) / (4.0 * step**2)
    return np.array([[fxx, fxy], [fxy, fyy]])


@dataclass(frozen=True)
class FlowResult:
    z_min: complex
    trajectory: np.ndarray
    f_values: np.ndarray
    iterations: int
    exited: bool
    grad_final: float
    length: float


def flow_descend(
    start,
    v0_real,
    base_point,
    fields,
    coeffs,
    geometry=None,
    normalized: bool = False,
    grad_tol: float = 1e-10,
    max_iter: int = 20000,
    r_bounds=None,
) -> FlowResult:
    """Gradient descent of f_v from `start`, for the section that is the
    flat extension of v0_real (real frame) at base_point.

    The descent step is explicit with backtracking on f; `normalized`
    switches to the bounded-speed flow -w grad f with w = |grad| / (1 +
    |grad|^2).  Exiting the chart is reported, not fatal.
    """
    state = SectionState.from_real_frame(base_point, v0_real, fields, coeffs)
    if abs(complex(start) - complex(base_point)) > 0:
        state = state.extended_to(start)
    traj = [state.z]
    fvals = [state.f()]
    length = 0.0
    exited = False
    it = 0
    p, grad = state.gradient(geometry)
    while grad > grad_tol and it < max_iter:
        lam = _lam_at(abs(state.z), state.coeffs, geometry)
        # Riemannian gradient in coordinates: (f_x, f_y) / lam
        gx, gy = 2.0 * p.real / lam, -2.0 * p.imag / lam
        speed = np.hypot(gx, gy)
        scale = 1.0
        if normalized:
            w = grad / (1.0 + grad * grad)
            scale = w
        # cap the coordinate step to a fraction of the distance to r = 0/1
        cap = 0.05 * min(abs(state.z), 1.0 - abs(state.z)) / max(speed * scale, 1e-300)
        dt = min(1.0 / max(lam, 1e-300) * 50.0, cap)
        accepted = False
        for _ in range(60):
            z_new = state.z - dt * scale * (gx + 1j * gy)
            if r_bounds is not None and not (
                r_bounds[0] <= abs(z_new) <= r_bounds[1]
            ):
                exited = True
                break
            trial = state.extended_to(z_new)
            if trial.f() <= fvals[-1]:
                hyp_step = np.sqrt(lam) * abs(z_new - state.z)
                state = trial
                length += hyp_step
                accepted = True
                break
            dt /= 2.0
        if exited or not accepted:
            break
        traj.append(state.z)
        fvals.append(state.f())
        p, grad = state.gradient(geometry)
        it += 1
    return FlowResult(
        state.z,
        np.asarray(traj),
        np.asarray(fvals),
        it,
        exited,
        grad,
        float(length),
    )


@dataclass(frozen=True)
class GrowthFit:
    epsilon: float
    C: float
    support: int
    conclusive: bool
    method: str
    decades: float
    slope_split: float


def growth_fit(traces, n_bins: int = 24, min_decades: float = 2.0) -> GrowthFit:
    """Lower-envelope linear fit of ln(1 + f_v) against distance.

    epsilon is the envelope slope (the paper's 1/c_2).  Near the minimum the
    envelope is quadratic (the bound's subtracted constant absorbs it), so
    the line is fitted on the exponential regime f >= 1 only.  The fit is
    conclusive when the data spans at least `min_decades` decades of f, the
    fitted regime covers at least 80 percent of the distance range, and the
    first/second half slopes agree within 20 percent (a straight-line gate
    rejecting sub-exponential growth).
    """
    ds, fs = [], []
    for t in traces:
        ds.append(np.asarray(t.distances if hasattr(t, "distances") else t[0]))
        fs.append(np.asarray(t.f_v if hasattr(t, "f_v") else t[1]))
    d = np.concatenate(ds)
    f = np.concatenate(fs)
    if d.size < 8:
        raise InvalidInputError("not enough samples for a growth fit")
    y = np.log1p(f)
    fpos = f[f > 0]
    decades = float(np.log10(fpos.max() / fpos.min())) if fpos.size else 0.0
    edges = np.linspace(0.0, d.max(), n_bins + 1)
    env_d, env_y = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        mask = (d >= lo) & (d < hi)
        if mask.any():
            k = np.argmin(y[mask])
            env_d.append(d[mask][k])
            env_y.append(y[mask][k])
    env_d, env_y = np.asarray(env_d), np.asarray(env_y)
    regime = env_y >= np.log(2.0)  # envelope past f = 1
    coverage = 0.0
    if regime.sum() >= 4:
        coverage = (d.max() - env_d[regime].min()) / max(d.max(), 1e-12)
    env_d, env_y = env_d[regime], env_y[regime]

    def slope_intercept(x, yy):
        if x.size < 3:
            return np.nan, 0.0
        a, b = np.polyfit(x, yy, 1)
        return float(a), float(b)

    eps, intercept = slope_intercept(env_d, env_y)
    half = env_d.size // 2
    s1, _ = slope_intercept(env_d[:half], env_y[:half])
    s2, _ = slope_intercept(env_d[half:], env_y[half:])
    split = abs(s1 - s2) / max(abs(eps), 1e-12)
    conclusive = bool(
        np.isfinite(eps)
        and decades >= min_decades
        and coverage >= 0.8
        and split <= 0.2
        and eps > 0
    )
    return GrowthFit(
        epsilon=float(eps) if np.isfinite(eps) else 0.0,
        C=float(np.exp(intercept)),
        support=int(env_d.size),
        conclusive=conclusive,
        method="lower-envelope least squares in distance bins, f >= 1 regime",
        decades=decades,
        slope_split=float(split) if np.isfinite(split) else np.inf,
    )


@dataclass(frozen=True)
class DominationReport:
    records: tuple
    epsilon: float
    C: float
    bound_ok: bool
    max_bound_violation: float


def _f_from_real_components(x: np.ndarray) -> np.ndarray:
    """f_v from real-frame components: half the (f1, f2)-projection square."""
    return 0.5 * (x[2] ** 2 + x[3] ** 2)


def domination_verify(
    paths,
    fields,
    coeffs: HiggsCoefficients,
    geometry=None,
    n_samples: int = 10000,
    bound_tol: float = 1e-4,
) -> DominationReport:
    """Per-segment Cartan data and the proof-side section bounds.

    For each segment with transport T = k_minus exp(A(mu)) k_plus, the
    section v* = k_plus^{-1} e_2 has its v_2 zero at the start point and
    satisfies f_{v*}(end) <= exp(2 mu_2)/2 + 1/2; the e_1/e_2 circle family
    (k')^{-1} e_2 is sampled for the min/max record (its minimum obeys the
    same bound, while generic members pick up mu_1 growth).  The fitted
    (epsilon, C) give the lower-envelope line mu_2 >= epsilon d - C.
    """
    records = []
    worst = 0.0
    for path in paths:
        res = tp.parallel_transport(path, fields, coeffs)
        d = float(path_distances(path, coeffs, geometry)[-1])
        kak = lg.kak_decompose(res.matrix)
        mu1, mu2 = kak.mu.mu1, kak.mu.mu2
        e2 = np.array([0.0, 1.0, 0.0, 0.0, 0.0])
        v_star = kak.k_plus.T @ e2
        f_star = float(_f_from_real_components(res.matrix @ v_star))
        thetas = np.linspace(0.0, 2.0 * np.pi, n_samples, endpoint=False)
        family = kak.k_plus.T @ np.vstack(
            [
                np.sin(thetas),
                np.cos(thetas),
                np.zeros_like(thetas),
                np.zeros_like(thetas),
                np.zeros_like(thetas),
            ]
        )
        f_family = _f_from_real_components(res.matrix @ family)
        bound = 0.5 * np.exp(2.0 * mu2) + 0.5
        worst = max(worst, f_star - bound, float(f_family.min()) - bound)
        records.append(
            {
                "d": d,
                "mu1": float(mu1),
                "mu2": float(mu2),
                "f_star": f_star,
                "f_family_min": float(f_family.min()),
                "f_family_max": float(f_family.max()),
                "bound": float(bound),
            }
        )
    records.sort(key=lambda rec: rec["d"])
    dd = np.array([rec["d"] for rec in records])
    if np.any(np.diff(dd) <= 0):
        raise InvalidInputError("segment distances must be strictly increasing")
    m2 = np.array([rec["mu2"] for rec in records])
    slope, intercept = np.polyfit(dd, m2, 1)
    # lower-bound line: shift the fit down to touch the data from below
    shift = (m2 - (slope * dd + intercept)).min()
    return DominationReport(
        records=tuple(records),
        epsilon=float(slope),
        C=float(-(intercept + shift)),
        bound_ok=bool(worst <= bound_tol),
        max_bound_violation=float(worst),
    )
