"""Command line pipeline: scenario ingestion, solves, transport, verification.

Subcommands: stability, model-metric, solve, transport, dominate,
verify-all.  Exit codes: 0 success (and all invariants pass for
verify-all), 2 schema violation, 3 precondition failure, 4 convergence
failure.  Outputs are deterministic byte-for-byte for a fixed scenario file
and seed: floats are serialized by repr and JSON keys are sorted.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path as FsPath

import numpy as np

from . import anosov as an
from . import bundle as bd
from . import hitchin as ht
from . import liegroup as lg
from . import modelmetric as mm
from . import transport as tp
from .liegroup import InvalidInputError
from .scenario import (
    PreconditionError,
    Scenario,
    ScenarioError,
    apply_overrides,
    load_scenario,
)

__all__ = ["main"]

EXIT_OK = 0
EXIT_SCHEMA = 2
EXIT_PRECONDITION = 3
EXIT_CONVERGENCE = 4


def _write_json(path: FsPath, payload) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _write_csv(path: FsPath, header, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(
            ",".join(repr(float(x)) if isinstance(x, (float, np.floating)) else str(x) for x in row)
        )
    path.write_text("\n".join(lines) + "\n")


def _rational(x) -> str:
    return str(x)


def _solve_scenario(sc: Scenario, n_override: int | None = None, tol_override=None):
    """(solution, fields) pair; closed-form scenarios skip the solver."""
    sc.require_solver_sections()
    mesh = sc.mesh if n_override is None else ht.RadialMesh.build(
        sc.chart, sc.mesh.r_min, sc.mesh.r_max, n_override
    )
    if sc.exact_fields:
        fields = sc.closed_form_fields()
        return fields.solution_on(mesh), fields
    sol = ht.solve(
        sc.coeffs,
        mesh,
        sc.boundary(),
        newton_tol=sc.newton_tol if tol_override is None else tol_override,
        max_iter=sc.max_iter,
    )
    return sol, sol.fields()


def _radial_path(sc: Scenario, r_from: float, r_to: float, n: int) -> tp.Path:
    if sc.chart == "cusp":
        return tp.cusp_radial_path(r_from, r_to, n)
    return tp.disk_radial_path(r_from, r_to, n)


def run_stability(sc: Scenario, outdir: FsPath) -> int:
    verdict = bd.check_stability(sc.data, sc.gamma_is_zero)
    ok_a, problems = bd.check_assumption_A(sc.data)
    payload = {
        "classification": verdict.classification,
        "witnesses": list(verdict.witnesses),
        "gamma_is_zero": sc.gamma_is_zero,
        "assumption_A": ok_a,
        "assumption_A_problems": problems,
        "pardeg_L1": _rational(bd.parabolic_degree_line(1, sc.data)),
        "pardeg_L2": _rational(bd.parabolic_degree_line(2, sc.data)),
        "deg_canonical": sc.data.deg_canonical,
        "milnor_wood": bd.milnor_wood_check(sc.data),
        "beta_realizable": bd.beta_realizable(sc.data),
    }
    _write_json(outdir / "stability.json", payload)
    print(f"stability: {verdict.classification} (witnesses: {list(verdict.witnesses)})")
    return EXIT_OK


def run_model_metric(sc: Scenario, outdir: FsPath) -> int:
    rows = []
    tables = {}
    found = False
    for p in sc.data.punctures:
        if p.zeta == 0:
            continue
        found = True
        local = mm.model_metric_local(sc.data, p.id)
        gr = mm.graded_residue_cyclic(sc.data, p.id)
        tables[str(p.id)] = {
            "delta": float(p.delta),
            "exponents": {str(i): list(map(float, local.exponents[i])) for i in local.exponents},
            "graded_weights": list(map(float, gr.weights)),
            "block_sizes": list(gr.block_sizes()),
        }
        for i in (-2, -1, 0, 1, 2):
            delta, rpow = local.exponents[i]
            rows.append((p.id, i, float(delta), int(rpow), local.coefficient(i, np.exp(-2.0))))
    if not found:
        raise PreconditionError("model-metric requires a puncture of non-zero weight")
    _write_csv(
        outdir / "model_metric.csv",
        ["puncture", "line", "delta", "log_power", "coefficient_at_r_exp_minus_2"],
        rows,
    )
    _write_json(outdir / "model_metric.json", tables)
    print(f"model-metric: wrote diagonal table for {len(tables)} puncture(s)")
    return EXIT_OK


def _solve_payload(sc: Scenario, sol, fields):
    dfield = ht.derived_fields(sol, sc.coeffs)
    payload = {
        "name": sc.name,
        "chart": sc.chart,
        "method": sol.method,
        "residual_sup": float(sol.residual_sup),
        "iterations": int(sol.iterations),
        "boundary_source": sol.boundary_source,
        "n": sol.mesh.n,
        "gap": ht.gap_verify(dfield),
        "sup_u": float(dfield.u.max()),
        "min_curvature": ht.curvature_check(dfield)[0],
        "argmin_curvature_r": ht.curvature_check(dfield)[1],
        "quasi_isometry": ht.quasi_isometry_check(dfield),
        "continuous_residual": ht.continuous_residual(sol, sc.coeffs),
    }
    if not sc.gamma_is_zero:
        resid, excluded = ht.u_identity_residual(dfield, sol)
        payload["u_identity_residual"] = resid
        payload["u_identity_excluded_nodes"] = excluded
    else:
        payload["u_identity_residual"] = None
    return payload, dfield


def run_solve(sc: Scenario, outdir: FsPath) -> int:
    sol, fields = _solve_scenario(sc)
    payload, dfield = _solve_payload(sc, sol, fields)
    rows = zip(
        sol.mesh.r,
        sol.H_m2,
        sol.H_m1,
        dfield.u,
        dfield.tau_norm,
        dfield.gamma_norm,
        dfield.curvature,
    )
    _write_csv(
        outdir / "fields.csv",
        ["r", "H_m2", "H_m1", "u", "tau_norm", "gamma_norm", "K"],
        rows,
    )
    _write_json(outdir / "summary.json", payload)
    print(
        f"solve: residual {payload['residual_sup']:.3e} in {payload['iterations']} "
        f"iterations; gap {payload['gap']:.4f}"
    )
    return EXIT_OK


def _base_vector():
    return np.array([0.0, 1.0, 0.0, 0.0, 0.0])


def run_transport(sc: Scenario, outdir: FsPath) -> int:
    sc.require_paths()
    sol, fields = _solve_scenario(sc)
    ps = sc.paths
    segments = []
    for r_end in ps.segment_ends:
        path = _radial_path(sc, ps.base_r, r_end, ps.steps_per_segment)
        res = tp.parallel_transport(path, fields, sc.coeffs)
        ok, diag = res.membership(sc.tolerances["membership"])
        rev = tp.parallel_transport(path.reversed(), fields, sc.coeffs)
        d = float(an.path_distances(path, sc.coeffs)[-1])
        segments.append(
            {
                "r_end": r_end,
                "d": d,
                "mu1": float(res.cartan.mu1),
                "mu2": float(res.cartan.mu2),
                "membership_ok": bool(ok),
                "gram_defect": diag["gram_defect"],
                "det_defect": diag["det_defect"],
                "flatness_residual": res.flatness_residual,
                "mu_inverse_defect": float(
                    max(
                        abs(res.cartan.mu1 - rev.cartan.mu1),
                        abs(res.cartan.mu2 - rev.cartan.mu2),
                    )
                ),
            }
        )
    # conservation along the designated geodesic with the proof-family section
    longest = _radial_path(
        sc, ps.base_r, ps.conservation_r_end, ps.conservation_steps
    )
    res = tp.parallel_transport(longest, fields, sc.coeffs)
    kak = lg.kak_decompose(res.matrix)
    v_star = kak.k_plus.T @ _base_vector()
    conservation = tp.conservation_probe(longest, v_star, fields, sc.coeffs)
    trace = an.trace_section(
        v_star, _radial_path(sc, ps.base_r, ps.trace_r_out, ps.trace_steps),
        fields, sc.coeffs,
    )
    _write_csv(
        outdir / "transport_trace.csv",
        ["d", "f_v", "grad_norm"],
        zip(trace.distances, trace.f_v, trace.grad_norm),
    )
    _write_json(
        outdir / "transport_summary.json",
        {"segments": segments, "conservation_deviation": conservation,
         "trace_conservation_deviation": trace.conservation_dev},
    )
    print(
        f"transport: {len(segments)} segments, conservation deviation "
        f"{conservation:.3e}"
    )
    return EXIT_OK


def run_dominate(sc: Scenario, outdir: FsPath) -> int:
    sc.require_paths()
    sol, fields = _solve_scenario(sc)
    ps = sc.paths
    paths = [
        _radial_path(sc, ps.base_r, r_end, ps.steps_per_segment)
        for r_end in ps.segment_ends
    ]
    report = an.domination_verify(
        paths, fields, sc.coeffs,
        n_samples=sc.n_section_samples, bound_tol=sc.tolerances["bound"],
    )
    out_trace = an.trace_section(
        _base_vector(),
        _radial_path(sc, ps.base_r, ps.trace_r_out, ps.trace_steps),
        fields, sc.coeffs,
    )
    in_trace = an.trace_section(
        _base_vector(),
        _radial_path(sc, ps.base_r, ps.trace_r_in, ps.trace_steps // 4),
        fields, sc.coeffs,
    )
    fit = an.growth_fit([out_trace, in_trace])
    _write_csv(
        outdir / "domination.csv",
        ["d", "mu1", "mu2"],
        [(rec["d"], rec["mu1"], rec["mu2"]) for rec in report.records],
    )
    _write_csv(
        outdir / "growth_trace.csv",
        ["d", "f_v", "grad_norm"],
        zip(out_trace.distances, out_trace.f_v, out_trace.grad_norm),
    )
    _write_json(
        outdir / "domination.json",
        {
            "epsilon": report.epsilon,
            "C": report.C,
            "bound_ok": report.bound_ok,
            "max_bound_violation": report.max_bound_violation,
            "records": list(report.records),
            "growth_fit": {
                "epsilon": fit.epsilon,
                "C": fit.C,
                "conclusive": fit.conclusive,
                "decades": fit.decades,
                "slope_split": fit.slope_split,
                "support": fit.support,
                "method": fit.method,
            },
        },
    )
    print(
        f"dominate: fitted epsilon {report.epsilon:.4f}, bound_ok {report.bound_ok}, "
        f"growth epsilon {fit.epsilon:.4f} (conclusive: {fit.conclusive})"
    )
    return EXIT_OK


class _Checks:
    def __init__(self):
        self.items = []

    def add(self, name: str, passed: bool, value=None):
        self.items.append({"name": name, "passed": bool(passed), "value": value})
        status = "PASS" if passed else "FAIL"
        print(f"{status} {name}" + ("" if value is None else f" ({value})"))

    @property
    def all_passed(self) -> bool:
        return all(item["passed"] for item in self.items)


def _order(values) -> float:
    return float(np.log2(values[-2] / values[-1]))


def _verify_algebraic(sc: Scenario, checks: _Checks, rng):
    ok_a, _ = bd.check_assumption_A(sc.data)
    checks.add("assumption_A", ok_a)
    verdict = bd.check_stability(sc.data, sc.gamma_is_zero)
    checks.add("stability_classification", True, verdict.classification)
    if verdict.classification == "stable" and bd.beta_realizable(sc.data):
        checks.add("milnor_wood_from_stability", bd.milnor_wood_check(sc.data))
    worst = 0.0
    for _ in range(50):
        b = complex(rng.normal(), rng.normal())
        c = complex(rng.normal(), rng.normal())
        m = tp.higgs_matrix_coefficients(b, c)
        worst = max(worst, float(np.abs(np.poly(m) - bd.char_poly_at_point(b, c)).max()))
    checks.add("char_poly_matches_matrix", worst < 1e-10, worst)
    checks.add(
        "eigenvector_isotropy",
        bd.eigenvector_isotropy_check(1.0, 1.0) and bd.eigenvector_isotropy_check(2.0, -3.0),
    )
    worst_kak = 0.0
    worst_inv = 0.0
    for _ in range(200):
        g, triple = lg.random_group_element(rng)
        out = lg.kak_decompose(g)
        worst_kak = max(worst_kak, float(np.abs(out.compose() - g).max()))
        worst_kak = max(worst_kak, abs(out.mu.mu1 - triple.mu.mu1))
        mu_inv = lg.cartan_projection(np.linalg.inv(g))
        worst_inv = max(
            worst_inv,
            abs(out.mu.mu1 - mu_inv.mu1),
            abs(out.mu.mu2 - mu_inv.mu2),
        )
    checks.add("kak_round_trip", worst_kak < 1e-9, worst_kak)
    checks.add("cartan_inverse_symmetry", worst_inv < 1e-9, worst_inv)


def _verify_model_metric(sc: Scenario, checks: _Checks):
    for p in sc.data.punctures:
        if p.zeta == 0:
            continue
        local = mm.model_metric_local(sc.data, p.id)
        delta = float(p.delta)
        expected = {-2: (-delta, 1), -1: (-delta, -1), 0: (0.0, 0), 1: (delta, 1), 2: (delta, -1)}
        checks.add(f"model_metric_exponents_p{p.id}", local.exponents == expected)
        gr = mm.graded_residue_cyclic(sc.data, p.id)
        wf = mm.weight_filtration(gr.blocks[delta])
        w0 = wf.subspace(0)
        chain_ok = (
            w0.shape[1] == 1
            and abs(abs(w0[1, 0]) - 1.0) < 1e-12
            and np.allclose(wf.subspace(-1), w0)
            and wf.subspace(1).shape[1] == 2
        )
        checks.add(f"weight_filtration_chain_p{p.id}", bool(chain_ok))


def _verify_solver(sc: Scenario, checks: _Checks):
    sol, fields = _solve_scenario(sc)
    if not sc.exact_fields:
        checks.add("newton_residual", sol.residual_sup <= sc.newton_tol, sol.residual_sup)
        checks.add("newton_iterations", sol.iterations <= sc.max_iter, sol.iterations)
    dual = max(
        float(np.abs(sol.H(2) * sol.H(-2) - 1.0).max()),
        float(np.abs(sol.H(1) * sol.H(-1) - 1.0).max()),
    )
    checks.add("metric_duality_exact", dual < 1e-14, dual)
    dfield = ht.derived_fields(sol, sc.coeffs)
    gap = ht.gap_verify(dfield)
    checks.add("gap_positive", gap > 0.0, gap)
    if not sc.gamma_is_zero:
        checks.add("sup_u_bound", float(dfield.u.max()) <= 1.0 - 1e-3, float(dfield.u.max()))
    min_k, _ = ht.curvature_check(dfield)
    checks.add(
        "curvature_lower_bound",
        min_k >= -2.0 - 5.0 * sol.mesh.h**2,
        min_k,
    )
    quasi = ht.quasi_isometry_check(dfield)
    checks.add(
        "quasi_isometry_bounds",
        quasi["ratio_raw_inf"] > 0 and np.isfinite(quasi["ratio_raw_sup"]),
        (quasi["ratio_normalized_inf"], quasi["ratio_normalized_sup"]),
    )
    if sc.chart == "cusp" and sc.boundary_source == "model-metric":
        checks.add(
            "quasi_isometry_model_limit",
            abs(quasi["ratio_normalized_at_r_min"] - 1.0) < 1e-9,
            quasi["ratio_normalized_at_r_min"],
        )
    if sc.exact_fields:
        h2e, h1e = ht.fuchsian_exact(sol.mesh.r, sc.coeffs.b.const)
        err = max(
            float(np.abs(sol.H_m2 / h2e - 1).max()),
            float(np.abs(sol.H_m1 / h1e - 1).max()),
        )
        checks.add("closed_form_consistency", err < 1e-14, err)
        return sol, fields
    # refinement orders measured on the finest pair of three mesh levels,
    # the last one doubling the shipped resolution
    base_n = max(129, (sol.mesh.n - 1) // 2 + 1)
    levels = [base_n, 2 * (base_n - 1) + 1, 4 * (base_n - 1) + 1]
    cont, uident, ktwo = [], [], []
    for n in levels:
        # the refined meshes sit near the float64 residual floor at the
        # scenario tolerance; the measured residuals are orders larger
        sol_n, _ = _solve_scenario(
            sc, n_override=n, tol_override=max(sc.newton_tol, 1e-7)
        )
        df_n = ht.derived_fields(sol_n, sc.coeffs)
        cont.append(ht.continuous_residual(sol_n, sc.coeffs))
        ktwo.append(
            float(
                np.abs(
                    df_n.curvature[2:-2] - ht.curvature_identity(sol_n, sc.coeffs)[2:-2]
                ).max()
            )
        )
        if not sc.gamma_is_zero:
            uident.append(ht.u_identity_residual(df_n, sol_n)[0])
    checks.add("continuous_residual_order", _order(cont) >= 1.9, round(_order(cont), 3))
    checks.add("curvature_two_way_order", _order(ktwo) >= 1.9, round(_order(ktwo), 3))
    if not sc.gamma_is_zero:
        checks.add("u_identity_order", _order(uident) >= 1.9, round(_order(uident), 3))
    if sc.boundary_source == "fuchsian" and sc.gamma_is_zero:
        h2e, h1e = ht.fuchsian_exact(sol.mesh.r, sc.coeffs.b.const)
        err = max(
            float(np.abs(sol.H_m2 / h2e - 1).max()),
            float(np.abs(sol.H_m1 / h1e - 1).max()),
        )
        checks.add("fuchsian_reproduction", err < 1e-6, err)
    return sol, fields


def _verify_transport(sc: Scenario, checks: _Checks, sol, fields):
    ps = sc.paths
    path = _radial_path(sc, ps.base_r, ps.segment_ends[-1], ps.steps_per_segment)
    res = tp.parallel_transport(path, fields, sc.coeffs)
    ok, diag = res.membership(sc.tolerances["membership"])
    checks.add("transport_membership", ok, diag["gram_defect"])
    rev = tp.parallel_transport(path.reversed(), fields, sc.coeffs)
    inv_defect = max(
        abs(res.cartan.mu1 - rev.cartan.mu1), abs(res.cartan.mu2 - rev.cartan.mu2)
    )
    checks.add("transport_mu_inverse", inv_defect <= 1e-8, inv_defect)
    cons_path = _radial_path(sc, ps.base_r, ps.conservation_r_end, ps.conservation_steps)
    cons_res = tp.parallel_transport(cons_path, fields, sc.coeffs)
    cons_kak = lg.kak_decompose(cons_res.matrix)
    conservation = tp.conservation_probe(
        cons_path, cons_kak.k_plus.T @ _base_vector(), fields, sc.coeffs
    )
    checks.add(
        "conservation_identity", conservation <= sc.tolerances["conservation"], conservation
    )
    mid = np.sqrt(sc.mesh.r_min * sc.mesh.r_max) if sc.mesh else ps.base_r
    width = 0.35 * (np.log(sc.mesh.r_max) - np.log(sc.mesh.r_min)) if sc.mesh else 0.5
    if sc.exact_fields:
        loop = tp.rectangle_loop(np.log(mid) - width / 2, np.log(mid) + width / 2, 0.5, 4000)
        resid = tp.flatness_residual(loop, fields, sc.coeffs)
        checks.add("loop_holonomy_exact", resid < 1e-7, resid)
    else:
        loops = []
        base_n = max(65, (sc.mesh.n - 1) // 8 + 1)
        for n in (base_n, 2 * (base_n - 1) + 1, 4 * (base_n - 1) + 1):
            sol_n, fields_n = _solve_scenario(sc, n_override=n)
            loop = tp.rectangle_loop(
                np.log(mid) - width / 2, np.log(mid) + width / 2, 0.5, 4000
            )
            loops.append(tp.flatness_residual(loop, fields_n, sc.coeffs))
        checks.add("loop_holonomy_order", _order(loops) >= 1.9, round(_order(loops), 3))


def _verify_morse(sc: Scenario, checks: _Checks, sol, fields, rng):
    ps = sc.paths
    base = ps.base_r
    state = an.SectionState.from_real_frame(base, _base_vector(), fields, sc.coeffs)
    probe = state.extended_to(base * 1.25)
    _, g_cf = probe.gradient()
    g_fd = probe.gradient_fd(1e-5)
    rel = abs(g_cf - g_fd) / max(g_cf, 1e-300)
    checks.add("gradient_fd_agreement", rel <= 1e-4, rel)
    mat, det, s, t = an.hessian_nondegeneracy(state)
    fd = an.hessian_fd(state, 2e-4)
    rel_h = abs(np.linalg.det(fd) - det) / det
    checks.add("hessian_positive_and_fd", det > 0 and rel_h <= 1e-3, (det, rel_h))
    cell = (sc.mesh.h if sc.mesh else 1e-3) * base
    starts = base * (1.0 + 0.12 * rng.uniform(-1.0, 1.0, size=8))
    r_lo = sc.mesh.r_min * 1.04 if sc.mesh else 0.02
    r_hi = sc.mesh.r_max * 0.96 if sc.mesh else 0.99
    ends = []
    worst_f = 0.0
    for s0 in starts:
        res = an.flow_descend(
            float(s0), _base_vector(), base, fields, sc.coeffs,
            grad_tol=sc.tolerances["flow_grad"], r_bounds=(r_lo, r_hi),
        )
        ends.append(res.z_min)
        worst_f = max(worst_f, float(res.f_values[-1]))
    spread = max(abs(e - ends[0]) for e in ends)
    checks.add("flow_unique_minimum", spread <= 2.0 * cell and worst_f < 1e-9, (spread, worst_f))
    out_trace = an.trace_section(
        _base_vector(), _radial_path(sc, base, ps.trace_r_out, ps.trace_steps),
        fields, sc.coeffs,
    )
    in_trace = an.trace_section(
        _base_vector(), _radial_path(sc, base, ps.trace_r_in, ps.trace_steps // 4),
        fields, sc.coeffs,
    )
    dfield = ht.derived_fields(sol, sc.coeffs)
    gap = ht.gap_verify(dfield)
    s_rep = an.s_conditions_check(out_trace, gap)
    checks.add("s_conditions_pointwise", s_rep["pointwise_ok"], s_rep["worst_margin"])
    fit = an.growth_fit([out_trace, in_trace])
    # the conclusiveness gate needs the exponential regime to dominate the
    # trace span; assert it only when the chart window can deliver that
    if sc.chart == "disk" and float(out_trace.distances[-1]) >= 6.5:
        checks.add(
            "growth_fit", fit.conclusive and fit.epsilon > 0 and fit.decades >= 2.0,
            (round(fit.epsilon, 4), round(fit.decades, 2)),
        )
    else:
        # short windows legitimately return an inconclusive verdict
        # (insufficient dynamic range); the fit is reported, not asserted
        checks.add(
            "growth_fit_reported",
            True,
            (round(fit.epsilon, 4), fit.conclusive, round(fit.decades, 2)),
        )
    paths = [
        _radial_path(sc, base, r_end, ps.steps_per_segment)
        for r_end in ps.segment_ends
    ]
    rep = an.domination_verify(
        paths, fields, sc.coeffs,
        n_samples=sc.n_section_samples, bound_tol=sc.tolerances["bound"],
    )
    checks.add(
        "domination_bound_and_fit", rep.bound_ok and rep.epsilon > 0,
        (round(rep.epsilon, 4), rep.max_bound_violation),
    )


def run_verify_all(sc: Scenario, outdir: FsPath) -> int:
    rng = np.random.default_rng(sc.seed)
    checks = _Checks()
    _verify_algebraic(sc, checks, rng)
    if sc.data.punctures:
        _verify_model_metric(sc, checks)
    sol = fields = None
    if sc.mesh is not None:
        sol, fields = _verify_solver(sc, checks)
    if sc.paths is not None and sol is not None:
        _verify_transport(sc, checks, sol, fields)
        _verify_morse(sc, checks, sol, fields, rng)
    _write_json(
        outdir / "verify.json",
        {"all_passed": checks.all_passed, "checks": checks.items, "name": sc.name},
    )
    print(f"verify-all: {'PASS' if checks.all_passed else 'FAIL'} ({len(checks.items)} checks)")
    return EXIT_OK if checks.all_passed else 1


_COMMANDS = {
    "stability": run_stability,
    "model-metric": run_model_metric,
    "solve": run_solve,
    "transport": run_transport,
    "dominate": run_dominate,
    "verify-all": run_verify_all,
}


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cyclichiggs",
        description="Cyclic parabolic SO0(2,3)-Higgs bundle laboratory",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--scenario", required=True, help="scenario TOML file")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--refine", type=int, default=1, help="mesh/step refinement factor")
        p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
        p.add_argument(
            "--tol-override",
            action="append",
            default=[],
            metavar="KEY=VAL",
            help="override a tolerance (newton_tol or a [tolerances] key)",
        )
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        overrides = {}
        for item in args.tol_override:
            if "=" not in item:
                raise ScenarioError(f"malformed --tol-override {item!r}")
            key, val = item.split("=", 1)
            overrides[key.strip()] = val.strip()
        scenario = load_scenario(args.scenario)
        scenario = apply_overrides(scenario, overrides, args.refine, args.seed)
        outdir = FsPath(args.out) if args.out else FsPath("out") / scenario.name
        outdir.mkdir(parents=True, exist_ok=True)
        return _COMMANDS[args.command](scenario, outdir)
    except ScenarioError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except (PreconditionError, InvalidInputError) as exc:
        print(f"precondition error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except ht.ConvergenceError as exc:
        print(f"convergence error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
