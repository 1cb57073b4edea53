from fractions import Fraction

import numpy as np
import pytest
from scipy.integrate import solve_bvp

from cyclichiggs import hitchin as ht
from cyclichiggs.bundle import (
    POSITIVE_FLAG,
    CoeffSpec,
    CyclicHiggsData,
    PunctureData,
)
from cyclichiggs.liegroup import InvalidInputError


def disk_coeffs(b=1.0, c=0.0, c_power=0):
    return ht.HiggsCoefficients(CoeffSpec(b, 0), CoeffSpec(c, c_power), "disk")


def cusp_setup(zeta=Fraction(3, 10), b=(1.0, 1), c=(1.0, 0), r_min=0.05, r_max=0.5):
    data = CyclicHiggsData(
        genus=1,
        deg_L1=0,
        punctures=(PunctureData(1, zeta, POSITIVE_FLAG),),
        beta_coeff=CoeffSpec(*b),
        gamma_coeff=CoeffSpec(*c),
    )
    coeffs = ht.HiggsCoefficients(data.beta_coeff, data.gamma_coeff, "cusp")
    h2a, h1a = ht.boundary_from_model_metric(data, 1, r_min)
    h2b, h1b = ht.boundary_from_model_metric(data, 1, r_max)
    bc = ht.BoundaryData(h2a, h1a, h2b, h1b, "model-metric")
    return data, coeffs, bc


def test_mesh_build_and_refine():
    mesh = ht.RadialMesh.build("disk", 0.1, 0.5, 33)
    assert mesh.n == 33
    assert np.allclose(np.diff(mesh.s), mesh.h)
    fine = mesh.refine(2)
    assert fine.n == 65
    assert abs(fine.r_min - 0.1) < 1e-15 and abs(fine.r_max - 0.5) < 1e-15
    with pytest.raises(InvalidInputError):
        ht.RadialMesh.build("disk", 0.5, 0.1, 33)
    with pytest.raises(InvalidInputError):
        ht.RadialMesh.build("torus", 0.1, 0.5, 33)


def test_discrete_laplacian_taylor_oracle():
    mesh = ht.RadialMesh.build("disk", 0.1, 0.6, 200)
    lap = ht.laplacian_matrix(mesh)
    # ln r^2 is harmonic away from the origin; linear in s, so killed up to
    # rounding amplified by the 1/(4 r^2 h^2) row scale
    row_scale = 1.0 / (4.0 * mesh.r_min**2 * mesh.h**2)
    assert np.abs(lap @ np.log(mesh.r**2)).max() < 100.0 * np.finfo(float).eps * row_scale
    # D(r^2) = 1 for the coordinate Laplacian d^2/dz dzbar
    err = np.abs(lap @ mesh.r**2 - 1.0).max()
    assert err < 10.0 * mesh.h**2
    fine = mesh.refine(2)
    err_fine = np.abs(ht.laplacian_matrix(fine) @ fine.r**2 - 1.0).max()
    assert 3.0 < err / err_fine < 5.0  # second order


def test_laplacian_covariance_under_mesh_shift():
    # shifting the mesh by a in ln r rescales the operator by exp(-2a)
    mesh = ht.RadialMesh.build("cusp", 0.05, 0.4, 64)
    a = 0.3
    shifted = ht.RadialMesh("cusp", np.exp(a) * mesh.r)
    l0 = ht.laplacian_matrix(mesh).toarray()
    l1 = ht.laplacian_matrix(shifted).toarray()
    assert np.abs(l1 - np.exp(-2.0 * a) * l0).max() < 1e-12 * np.abs(l0).max()


def test_gamma_zero_decouples_first_equation():
    mesh = ht.RadialMesh.build("disk", 0.2, 0.5, 32)
    psi = np.sin(mesh.s)
    chi = np.cos(mesh.s)
    lap = ht.laplacian_matrix(mesh)
    f = ht.system_residual(psi, chi, disk_coeffs(c=0.0), mesh)
    expected_f1 = lap @ psi + np.exp(chi - psi)[1:-1]
    assert np.abs(f[: mesh.n - 2] - expected_f1).max() < 1e-12


def test_fuchsian_exact_satisfies_system():
    # continuum check: discrete residual of the closed form decays O(h^2)
    coeffs = disk_coeffs()
    res = []
    for n in (65, 129, 257):
        mesh = ht.RadialMesh.build("disk", 0.1, 0.7, n)
        h2, h1 = ht.fuchsian_exact(mesh.r)
        res.append(
            np.abs(ht.system_residual(np.log(h2), np.log(h1), coeffs, mesh)).max()
        )
    assert res[0] / res[1] > 3.5 and res[1] / res[2] > 3.5


def test_solver_reproduces_fuchsian():
    mesh = ht.RadialMesh.build("disk", 0.2, 0.5, 512)
    coeffs = disk_coeffs()
    sol = ht.solve(coeffs, mesh, ht.boundary_from_fuchsian(mesh), newton_tol=1e-8)
    assert sol.residual_sup < 1e-8
    assert sol.iterations <= 25
    h2e, h1e = ht.fuchsian_exact(mesh.r)
    assert np.abs(sol.H_m2 / h2e - 1.0).max() < 1e-6
    assert np.abs(sol.H_m1 / h1e - 1.0).max() < 1e-6
    # Dirichlet values are reproduced at the endpoints (one ulp from the
    # exp/log round trip of the log-variable solver)
    for got, want in ((sol.H_m2[0], h2e[0]), (sol.H_m2[-1], h2e[-1])):
        assert abs(got - want) <= 2.0 * np.spacing(want)


def test_solver_matches_independent_collocation_oracle():
    # pure tau forcing (b = c = 0) against scipy's adaptive collocation BVP
    # solver, an entirely independent discretization
    mesh = ht.RadialMesh.build("cusp", 0.1, 0.5, 513)
    coeffs = ht.HiggsCoefficients(CoeffSpec(0.0, 0), CoeffSpec(0.0, 0), "cusp")
    bc = ht.BoundaryData(0.7, 0.5, 0.8, 0.6, "constants")

    def rhs(r, y):
        psi, dpsi, chi, dchi = y
        w = 1.0 / r**2
        f1 = -w * np.exp(chi - psi)
        f2 = w * np.exp(chi - psi)
        return np.vstack([dpsi, 4.0 * f1 - dpsi / r, dchi, 4.0 * f2 - dchi / r])

    def bcs(ya, yb):
        return np.array(
            [
                ya[0] - np.log(bc.H_m2_inner),
                yb[0] - np.log(bc.H_m2_outer),
                ya[2] - np.log(bc.H_m1_inner),
                yb[2] - np.log(bc.H_m1_outer),
            ]
        )

    r0 = np.linspace(0.1, 0.5, 200)
    guess = np.zeros((4, r0.size))
    guess[0] = np.log(0.75)
    guess[2] = np.log(0.55)
    oracle = solve_bvp(rhs, bcs, r0, guess, tol=1e-10, max_nodes=200000)
    assert oracle.success

    sol = ht.solve(coeffs, mesh, bc, newton_tol=1e-9)
    psi_oracle = oracle.sol(mesh.r)[0]
    chi_oracle = oracle.sol(mesh.r)[2]
    assert np.abs(np.log(sol.H_m2) - psi_oracle).max() < 1e-6
    assert np.abs(np.log(sol.H_m1) - chi_oracle).max() < 1e-6


def test_boundary_from_model_metric_values():
    data, _, _ = cusp_setup()
    r = np.exp(-1.0)
    h2, h1 = ht.boundary_from_model_metric(data, 1, r)
    assert abs(h2 - np.exp(-0.6)) < 1e-14
    assert abs(h1 - np.exp(-0.6)) < 1e-14
    # duality H_-2 H_2 = 1 and the squared frame ratio |ln r|^{-2}
    r = 0.37
    h2, h1 = ht.boundary_from_model_metric(data, 1, r)
    assert abs(h2 * (1.0 / h2) - 1.0) < 1e-15
    assert abs(h1 / h2 - np.log(r) ** -2) < 1e-14


def test_solver_on_cusp_annulus():
    _, coeffs, bc = cusp_setup()
    mesh = ht.RadialMesh.build("cusp", 0.05, 0.5, 512)
    sol = ht.solve(coeffs, mesh, bc, newton_tol=1e-8)
    assert sol.residual_sup < 1e-8
    assert sol.iterations <= 25
    assert np.all(sol.H_m2 > 0) and np.all(sol.H_m1 > 0)
    # exact duality by construction
    assert np.abs(sol.H(2) * sol.H(-2) - 1.0).max() < 1e-15
    assert np.abs(sol.H(1) * sol.H(-1) - 1.0).max() < 1e-15
    assert np.all(sol.H(0) == 1.0)


def test_derived_fields_gamma_zero():
    mesh = ht.RadialMesh.build("disk", 0.2, 0.5, 128)
    coeffs = disk_coeffs()
    sol = ht.solve(coeffs, mesh, ht.boundary_from_fuchsian(mesh), newton_tol=1e-8)
    fields = ht.derived_fields(sol, coeffs)
    assert np.all(fields.u == 0.0)
    assert np.all(fields.gamma_norm == 0.0)
    # tau is identically 1 on the exact solution; curvature is constant -1/2
    assert np.abs(fields.tau_norm - 1.0).max() < 1e-5
    assert np.abs(fields.curvature[2:-2] + 0.5).max() < 1e-4
    assert ht.gap_verify(fields) > 0.9


def test_derived_fields_cusp_tau_norm_uses_log():
    # at model boundary data tau_norm = sqrt(H_-1/H_-2) |ln r| = 1 exactly
    data, coeffs, bc = cusp_setup()
    mesh = ht.RadialMesh.build("cusp", 0.05, 0.5, 256)
    sol = ht.solve(coeffs, mesh, bc, newton_tol=1e-8)
    fields = ht.derived_fields(sol, coeffs)
    assert abs(fields.tau_norm[0] - 1.0) < 1e-12
    assert abs(fields.tau_norm[-1] - 1.0) < 1e-12
    assert np.all(fields.tau_norm > 0.2)
    # u = H_-2^2 |c|^2 and gamma_norm = sqrt(u) tau_norm
    r = mesh.r
    assert np.abs(fields.u - sol.H_m2**2 * coeffs.c_abs2(r)).max() < 1e-15
    assert np.abs(
        fields.gamma_norm - np.sqrt(fields.u) * fields.tau_norm
    ).max() < 1e-14


def test_gap_and_u_bounds_on_stable_cusp():
    _, coeffs, bc = cusp_setup()
    mesh = ht.RadialMesh.build("cusp", 0.05, 0.5, 512)
    sol = ht.solve(coeffs, mesh, bc, newton_tol=1e-8)
    fields = ht.derived_fields(sol, coeffs)
    assert fields.u.max() <= 1.0 - 1e-3
    assert ht.gap_verify(fields) > 0.0
    # interior strictness: u < 1 strictly away from the boundary
    sl = mesh.interior_slice()
    assert fields.u[sl].max() < 1.0


def test_u_identity_residual_order_and_sign():
    _, coeffs, bc = cusp_setup()
    vals = []
    for n in (129, 257, 513, 1025):
        mesh = ht.RadialMesh.build("cusp", 0.05, 0.5, n)
        sol = ht.solve(coeffs, mesh, bc, newton_tol=1e-7)
        fields = ht.derived_fields(sol, coeffs)
        resid, excluded = ht.u_identity_residual(fields, sol)
        assert excluded == 0
        vals.append(resid)
        if n == 513:
            # sign consistency: where u < 1 the g_h-Laplacian of ln u is < 0
            lnu = np.log(fields.u)
            lap = (lnu[:-2] - 2 * lnu[1:-1] + lnu[2:]) / (
                4.0 * mesh.r[1:-1] ** 2 * mesh.h**2
            )
            mask = fields.u[1:-1] < 1.0 - 1e-6
            assert np.all(lap[mask] < 0.0)
    order = np.log2(vals[-2] / vals[-1])
    assert order >= 1.9


def test_u_identity_not_applicable_for_gamma_zero():
    mesh = ht.RadialMesh.build("disk", 0.2, 0.5, 64)
    coeffs = disk_coeffs()
    sol = ht.solve(coeffs, mesh, ht.boundary_from_fuchsian(mesh), newton_tol=1e-8)
    fields = ht.derived_fields(sol, coeffs)
    with pytest.raises(InvalidInputError):
        ht.u_identity_residual(fields, sol)


def test_curvature_bound_and_two_way_agreement():
    _, coeffs, bc = cusp_setup()
    errs = []
    for n in (129, 257, 513, 1025):
        mesh = ht.RadialMesh.build("cusp", 0.05, 0.5, n)
        sol = ht.solve(coeffs, mesh, bc, newton_tol=1e-7)
        fields = ht.derived_fields(sol, coeffs)
        min_k, _ = ht.curvature_check(fields)
        assert min_k >= -2.0 - 5.0 * mesh.h**2
        ident = ht.curvature_identity(sol, coeffs)
        errs.append(np.abs(fields.curvature[2:-2] - ident[2:-2]).max())
    assert np.log2(errs[-2] / errs[-1]) >= 1.9


def test_curvature_beta_zero_forcing():
    # with b = 0 the on-shell curvature is exactly -2 everywhere
    mesh = ht.RadialMesh.build("cusp", 0.05, 0.4, 256)
    coeffs = ht.HiggsCoefficients(CoeffSpec(0.0, 0), CoeffSpec(0.0, 0), "cusp")
    bc = ht.BoundaryData(0.6, 0.5, 0.7, 0.55, "constants")
    sol = ht.solve(coeffs, mesh, bc, newton_tol=1e-8)
    fields = ht.derived_fields(sol, coeffs)
    assert np.abs(ht.curvature_identity(sol, coeffs) + 2.0).max() == 0.0
    assert np.abs(fields.curvature[2:-2] + 2.0).max() < 50.0 * mesh.h**2


def test_continuous_residual_order():
    _, coeffs, bc = cusp_setup()
    res = []
    for n in (129, 257, 513, 1025):
        mesh = ht.RadialMesh.build("cusp", 0.05, 0.5, n)
        sol = ht.solve(coeffs, mesh, bc, newton_tol=1e-7)
        res.append(ht.continuous_residual(sol, coeffs))
    assert np.log2(res[-2] / res[-1]) >= 1.9


def test_quasi_isometry_bounds():
    _, coeffs, bc = cusp_setup()
    reports = []
    for n in (256, 512):
        mesh = ht.RadialMesh.build("cusp", 0.05, 0.5, n)
        sol = ht.solve(coeffs, mesh, bc, newton_tol=1e-8)
        fields = ht.derived_fields(sol, coeffs)
        rep = ht.quasi_isometry_check(fields)
        assert rep["ratio_raw_inf"] > 0.0
        assert np.isfinite(rep["ratio_raw_sup"])
        assert abs(rep["ratio_normalized_at_r_min"] - 1.0) < 1e-10
        reports.append(rep)
    # refinement stability of the reported bounds within 5 percent
    for key in ("ratio_normalized_inf", "ratio_normalized_sup"):
        a, b = reports[0][key], reports[1][key]
        assert abs(a - b) / abs(b) < 0.05


def test_convergence_failure_reports_residual():
    mesh = ht.RadialMesh.build("cusp", 0.05, 0.5, 64)
    coeffs = ht.HiggsCoefficients(CoeffSpec(0.0, 0), CoeffSpec(0.0, 0), "cusp")
    bc = ht.BoundaryData(0.6, 0.5, 0.7, 0.55, "constants")
    with pytest.raises(ht.ConvergenceError) as err:
        ht.solve(coeffs, mesh, bc, newton_tol=1e-30, max_iter=3, picard_fallback=False)
    assert err.value.last_residual > 0.0


def test_picard_fallback_improves():
    mesh = ht.RadialMesh.build("cusp", 0.05, 0.5, 64)
    coeffs = ht.HiggsCoefficients(CoeffSpec(0.0, 0), CoeffSpec(0.0, 0), "cusp")
    bc = ht.BoundaryData(0.6, 0.5, 0.7, 0.55, "constants")
    psi, chi = ht._initial_guess(mesh, bc)
    ht._apply_bc(psi, chi, bc)
    r0 = np.abs(ht.system_residual(psi, chi, coeffs, mesh)).max()
    psi2, chi2, ok = ht._picard_sweeps(psi, chi, coeffs, mesh, bc, 50)
    assert ok
    assert np.abs(ht.system_residual(psi2, chi2, coeffs, mesh)).max() < r0


def test_exact_fields_provider():
    fields = ht.ExactRadialFields.fuchsian(1.0)
    r = np.array([0.3, 0.5])
    psi, chi, dpsi, dchi = fields.eval(r)
    h2, h1 = ht.fuchsian_exact(r)
    assert np.abs(np.exp(psi) - h2).max() < 1e-15
    assert np.abs(np.exp(chi) - h1).max() < 1e-14
    # derivative against central differences
    eps = 1e-6
    for rr in (0.3, 0.55):
        num = (fields.eval(rr + eps)[0] - fields.eval(rr - eps)[0]) / (2 * eps)
        assert abs(num - fields.eval(rr)[2]) < 1e-8


def test_spline_fields_match_exact():
    mesh = ht.RadialMesh.build("disk", 0.2, 0.6, 512)
    h2, h1 = ht.fuchsian_exact(mesh.r)
    sol = ht.MetricSolution(mesh, h2, h1, 0.0, 0, "closed-form", "exact")
    spl = sol.fields()
    exact = ht.ExactRadialFields.fuchsian(1.0)
    for rr in (0.25, 0.4, 0.55):
        got = spl.eval(rr)
        want = exact.eval(rr)
        for g, w in zip(got, want):
            assert abs(g - w) < 1e-8
