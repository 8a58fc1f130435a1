"""End-to-end acceptance checks, one test per shipped claim.

Each test prints exactly one `[ACCEPTANCE] criterion N: PASS|FAIL` line
through conftest.record_acceptance (repeated in the terminal summary),
so a log of this module doubles as the release checklist. The heavy
iteration-count and condition-number studies run once in module-scoped
fixtures and are shared by the criteria that read them.
"""

from contextlib import contextmanager

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, record_acceptance
from _oracles import pair_gauss, pair_singular
from msbem.assembly import (IncidentWave, _corner_values, assemble_duality,
                            assemble_rhs)
from msbem.geometry import make_screen
from msbem.potentials_excitation import default_probes, scattered_field
from msbem.quadrature import QuadratureConfig, sauter_schwab_integral
from msbem.solver import (AssemblyCache, CalderonPreconditioner, SolveConfig,
                          _block_diag_operator, effective_condition_number,
                          gmres, solve_dirichlet, solve_neumann)
from msbem.spaces import (FULL, ReductionStrategy, expected_nullity,
                          multitrace_space, problem_spaces, singletrace_basis)

H_LADDER = (0.4, 0.2, 0.1, 0.05)
REDUCTIONS = (FULL, ReductionStrategy("partial"),
              ReductionStrategy("single-strip"),
              ReductionStrategy("fixed-overlap", 0.25))
SOLVERS = {"dirichlet": solve_dirichlet, "neumann": solve_neumann}


@contextmanager
def guarded(criterion: int):
    """Guarantee an acceptance line even when the check itself errors."""
    try:
        yield
    except Exception as exc:
        if criterion not in ACCEPTANCE_LINES:
            record_acceptance(criterion, False,
                              f"error: {type(exc).__name__}: {exc}")
        raise


def _conclude(criterion: int, ok: bool, detail: str) -> None:
    record_acceptance(criterion, ok, detail)
    assert ok, f"criterion {criterion}: {detail}"


# ----------------------------------------------------------------------
# Shared studies
# ----------------------------------------------------------------------


@pytest.fixture(scope="module")
def study():
    """Iteration ladder for both problems plus the Neumann spectrum study.

    64 solves: h in H_LADDER x 4 reductions x (NP, CP) x 2 problems, all
    at kappa=1 with the default tolerances. Probe fields are captured at
    h=0.1 from the unpreconditioned runs for the quotient-equivalence
    check, and effective condition numbers at every h for Neumann.
    """
    cfg = SolveConfig(max_outer=600, max_inner=600)
    iters, unconverged, fields, cond = {}, [], {}, {}
    probes = None
    for problem in ("neumann", "dirichlet"):
        solver = SOLVERS[problem]
        cache = AssemblyCache()
        for h in H_LADDER:
            screen = make_screen("trijunction", h)
            for red in REDUCTIONS:
                for pre in (False, True):
                    rep = solver(screen, 1.0, red, precondition=pre,
                                 cfg=cfg, cache=cache)
                    tag = "CP" if pre else "NP"
                    iters[(problem, h, red.label(), tag)] = rep.iterations
                    if not rep.converged:
                        unconverged.append((problem, h, red.label(), tag))
                    if h == 0.1 and not pre:
                        if probes is None:
                            probes = default_probes(rep.space)
                        fields[(problem, red.label())] = \
                            scattered_field(rep, probes=probes)
            if problem == "neumann":
                space, A = cache.system(screen, problem, 1.0,
                                        cfg.quadrature, FULL)
                c_np, nul = effective_condition_number(A)
                dual = multitrace_space(screen, problem, "dual", FULL)
                blocks = [cache.precond_block(screen, dual, i, 1.0,
                                              cfg.precond_quadrature)
                          for i in range(len(dual.blocks))]
                M = assemble_duality(dual, space)
                P = CalderonPreconditioner(_block_diag_operator(blocks),
                                           M, cfg)
                c_cp, _ = effective_condition_number(A, P)
                cond[h] = (c_np, c_cp, nul)
            cache.clear()
    return {"iters": iters, "unconverged": unconverged,
            "fields": fields, "cond": cond}


@pytest.fixture(scope="module")
def typeb_study():
    """Type-B overlapping-covering runs at kappa=10, both problems."""
    cfg = SolveConfig(max_outer=600, max_inner=600)
    out = {}
    for problem in ("neumann", "dirichlet"):
        solver = SOLVERS[problem]
        cache = AssemblyCache()
        for h in (0.25, 0.125):
            screen = make_screen("typeb", h)
            for pre in (False, True):
                rep = solver(screen, 10.0, FULL, precondition=pre, cfg=cfg,
                             direction=(0.0, 0.0, -1.0), cache=cache)
                out[(problem, h, "CP" if pre else "NP")] = \
                    (rep.iterations, rep.converged)
            cache.clear()
    return out


# ----------------------------------------------------------------------
# Criteria
# ----------------------------------------------------------------------


def test_criterion_1_nullspace_conformity(tri05, tri025, shared_cache,
                                          mats025):
    with guarded(1):
        quad = mats025["quad"]
        details = []
        ok = True
        for screen, n in ((tri05, 2), (tri025, 4)):
            spd, V = shared_cache.system(screen, "dirichlet", 1.0, quad,
                                         FULL)
            spn, W = shared_cache.system(screen, "neumann", 1.0, quad, FULL)
            want_v = 3 * 2 * n * n          # one null direction per
            want_w = expected_nullity(screen, spn)    # geometric triangle
            _, nul_v = effective_condition_number(V)
            _, nul_w = effective_condition_number(W)
            worst = 0.0
            for mat, space in ((V, spd), (W, spn)):
                basis = singletrace_basis(screen, space)
                rel = np.linalg.norm(mat @ basis, axis=0) \
                    / (np.linalg.norm(mat, 2) * np.linalg.norm(basis, axis=0))
                worst = max(worst, float(rel.max()))
            ok = ok and nul_v == want_v and nul_w == want_w and worst <= 1e-8
            details.append(f"n={n}: V {nul_v}/{want_v}, W {nul_w}/{want_w}, "
                           f"resid {worst:.1e}")
        _conclude(1, ok, "; ".join(details))


def test_criterion_2_rhs_orthogonal_to_single_trace(tri025):
    with guarded(2):
        worst = 0.0
        for problem in ("dirichlet", "neumann"):
            space = multitrace_space(tri025, problem, "primal", FULL)
            basis = singletrace_basis(tri025, space)
            coln = np.linalg.norm(basis, axis=0)
            for kappa in (1.0, 10.0):
                for direction in ((0.0, 0.0, 1.0), (0.0, 0.6, 0.8)):
                    wave = IncidentWave(direction=direction, kappa=kappa)
                    rhs = assemble_rhs(space, wave, problem)
                    rel = np.abs(basis.T @ rhs) \
                        / (np.linalg.norm(rhs) * coln)
                    worst = max(worst, float(rel.max()))
        _conclude(2, worst <= 1e-10, f"max |<rhs, z>| = {worst:.1e} rel")


def test_criterion_3_reductions_radiate_same_fields(study):
    with guarded(3):
        worst = 0.0
        labels = [r.label() for r in REDUCTIONS]
        for problem in ("dirichlet", "neumann"):
            vals = [study["fields"][(problem, lab)] for lab in labels]
            for i in range(len(vals)):
                for j in range(i + 1, len(vals)):
                    rel = np.linalg.norm(vals[i] - vals[j]) \
                        / max(np.linalg.norm(vals[i]),
                              np.linalg.norm(vals[j]))
                    worst = max(worst, float(rel))
        _conclude(3, worst <= 1e-3,
                  f"max pairwise probe-field gap {worst:.2e} "
                  f"(h=0.1, kappa=1, both problems)")


def test_criterion_4_preconditioning_effect(study):
    with guarded(4):
        iters = study["iters"]
        failures = list(study["unconverged"])
        growth_worst = 0.0
        for problem in ("dirichlet", "neumann"):
            for red in REDUCTIONS:
                lab = red.label()
                np_seq = [iters[(problem, h, lab, "NP")] for h in H_LADDER]
                cp_seq = [iters[(problem, h, lab, "CP")] for h in H_LADDER]
                print(f"{problem:9s} {lab:18s} NP {np_seq}  CP {cp_seq}")
                if not all(b > a for a, b in zip(np_seq, np_seq[1:])):
                    failures.append((problem, lab, "NP not increasing",
                                     np_seq))
                for h in H_LADDER[-2:]:
                    if not iters[(problem, h, lab, "CP")] \
                            < iters[(problem, h, lab, "NP")]:
                        failures.append(
                            (problem, lab, f"CP !< NP at h={h}: "
                             f"{iters[(problem, h, lab, 'CP')]} vs "
                             f"{iters[(problem, h, lab, 'NP')]}"))
                growth = cp_seq[-1] / cp_seq[-2]
                growth_worst = max(growth_worst, growth)
                if growth > 1.35:
                    failures.append((problem, lab, "CP growth", growth))
        _conclude(4, not failures,
                  f"64 solves converged; CP<NP at h=0.1,0.05; NP strictly "
                  f"increasing; worst CP growth {growth_worst:.3f} <= 1.35"
                  if not failures else f"failures: {failures}")


def test_criterion_5_condition_growth_law(study):
    with guarded(5):
        cond = study["cond"]
        fails = []
        ratios = []
        for ha, hb in zip(H_LADDER, H_LADDER[1:]):
            pred = ((1 + abs(np.log(hb))) / (1 + abs(np.log(ha)))) ** 2
            r_np = cond[hb][0] / cond[ha][0]
            r_cp = cond[hb][1] / cond[ha][1]
            ratios.append(f"{ha}->{hb}: CP {r_cp:.2f} "
                          f"(cap {1.5 * pred:.2f}), NP {r_np:.2f}")
            if r_cp > 1.5 * pred:
                fails.append(f"CP ratio {r_cp:.2f} > 1.5x{pred:.2f}")
            if not r_np > r_cp:
                fails.append(f"NP ratio {r_np:.2f} <= CP {r_cp:.2f}")
        _conclude(5, not fails, "; ".join(ratios) if not fails
                  else "; ".join(fails))


def test_criterion_6_dual_space_properties(tri025, rng):
    with guarded(6):
        fails = []
        pou_worst = 0.0
        gram_iters = []
        for problem in ("dirichlet", "neumann"):
            primal, dual = problem_spaces(tri025, problem)
            for bp, bd in zip(primal.blocks, dual.blocks):
                if problem == "dirichlet":
                    if bd.ndof != bp.carrier.num_triangles:
                        fails.append("dual-p1 dim != triangle count")
                    sums = np.asarray(_corner_values(bd).sum(axis=1)).ravel()
                    pou_worst = max(pou_worst,
                                    float(np.abs(sums - 1.0).max()))
                else:
                    if bd.ndof != len(bp.carrier.interior_vertices):
                        fails.append("dual-constant dim != interior "
                                     "vertex count")
            M = assemble_duality(dual, primal).entries
            n = M.shape[0]
            rhs = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            for mat, tag in ((M, "M"), (M.T.tocsr(), "Mt")):
                _, it, hist, ok = gmres(mat, rhs, tol=2e-12, maxit=n)
                if not (ok and it <= n):
                    fails.append(f"{problem} {tag} Gram solve: "
                                 f"{it} iters, resid {hist[-1]:.1e}")
                gram_iters.append((it, n))
        if pou_worst > 1e-12:
            fails.append(f"partition of unity off by {pou_worst:.1e}")
        worst_it, worst_n = max(gram_iters, key=lambda t: t[0] / t[1])
        _conclude(6, not fails,
                  f"PoU {pou_worst:.1e}; dims match; Gram GMRES worst "
                  f"{worst_it}/{worst_n} iters to 2e-12" if not fails
                  else "; ".join(fails))


def test_criterion_7_quadrature_oracle():
    with guarded(7):
        t_ref = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        edge = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 0.0],
                         [0.5, -0.9, 0.2]])
        vertex = np.array([[0.0, 0.0, 0.0], [-1.0, -0.1, 0.0],
                           [-0.3, -1.0, 0.4]])

        def kern(x, y):
            r = np.linalg.norm(x - y, axis=-1)
            return 1.0 / (4.0 * np.pi * r)

        cfg = QuadratureConfig(order=8)
        worst = 0.0
        for partner in (t_ref, edge, vertex):
            ref = pair_singular(t_ref, partner, q=10)
            got = sauter_schwab_integral(kern, t_ref, partner, cfg)
            worst = max(worst, abs(got.real - ref) / abs(ref))
        far = t_ref + np.array([10.0, 5.0, 8.0])
        ref = pair_gauss(t_ref, far, q=20)
        got = sauter_schwab_integral(kern, t_ref, far, QuadratureConfig())
        far_rel = abs(got.real - ref) / abs(ref)
        ok = worst <= 1e-6 and far_rel <= 1e-10
        _conclude(7, ok, f"singular classes {worst:.1e} <= 1e-6, "
                         f"separated {far_rel:.1e} <= 1e-10")


def test_criterion_8_typeb_demonstration(typeb_study):
    with guarded(8):
        fails = []
        fine = 0.125
        n_np, n_np_ok = typeb_study[("neumann", fine, "NP")]
        n_cp, n_cp_ok = typeb_study[("neumann", fine, "CP")]
        if not (n_np_ok and n_cp_ok):
            fails.append("neumann run did not converge")
        if not n_cp < n_np:
            fails.append(f"neumann CP {n_cp} !< NP {n_np} at h={fine}")
        for h in (0.25, 0.125):
            for tag in ("NP", "CP"):
                it, okc = typeb_study[("dirichlet", h, tag)]
                if not okc:
                    fails.append(f"dirichlet {tag} at h={h} unconverged")
        d_np, _ = typeb_study[("dirichlet", fine, "NP")]
        d_cp, _ = typeb_study[("dirichlet", fine, "CP")]
        _conclude(8, not fails,
                  f"neumann kappa=10: CP {n_cp} < NP {n_np} at h={fine}; "
                  f"dirichlet completes (NP {d_np}, CP {d_cp}: cross-over "
                  f"not yet reached)" if not fails else "; ".join(fails))


def test_criterion_9_symmetry_linearity_gauge(tri025, shared_cache, mats025,
                                              rng):
    with guarded(9):
        fails = []
        # complex symmetry of the Galerkin matrices
        sym = 0.0
        for mat in (mats025["V"], mats025["W"]):
            sym = max(sym, float(np.abs(mat - mat.T).max()
                                 / np.abs(mat).max()))
        if sym > 1e-8:
            fails.append(f"matrix asymmetry {sym:.1e}")
        # linearity of the density-to-field map
        space = mats025["space_d"]
        probes = default_probes(space)
        c1 = rng.standard_normal(space.dimension) \
            + 1j * rng.standard_normal(space.dimension)
        c2 = rng.standard_normal(space.dimension) \
            + 1j * rng.standard_normal(space.dimension)
        a, b = 0.7 - 0.2j, -1.3 + 0.4j
        lhs = scattered_field(a * c1 + b * c2, space=space,
                              problem="dirichlet", kappa=1.0, probes=probes)
        rhs = a * scattered_field(c1, space=space, problem="dirichlet",
                                  kappa=1.0, probes=probes) \
            + b * scattered_field(c2, space=space, problem="dirichlet",
                                  kappa=1.0, probes=probes)
        lin = float(np.linalg.norm(lhs - rhs) / np.linalg.norm(lhs))
        if lin > 1e-10:
            fails.append(f"linearity {lin:.1e}")
        # gauge invariance: single-trace shifts do not radiate
        gauge = 0.0
        for problem, solver in SOLVERS.items():
            rep = solver(tri025, 1.0, cache=shared_cache)
            basis = singletrace_basis(tri025, rep.space)
            y = rng.standard_normal(basis.shape[1]) \
                + 1j * rng.standard_normal(basis.shape[1])
            shift = basis @ y
            shift *= np.linalg.norm(rep.coefficients) \
                / np.linalg.norm(shift)
            f0 = scattered_field(rep, probes=probes)
            f1 = scattered_field(rep.coefficients + shift, space=rep.space,
                                 problem=problem, kappa=1.0, probes=probes)
            gauge = max(gauge, float(np.linalg.norm(f1 - f0)
                                     / np.linalg.norm(f0)))
        if gauge > 1e-6:
            fails.append(f"gauge drift {gauge:.1e}")
        _conclude(9, not fails,
                  f"symmetry {sym:.1e}, linearity {lin:.1e}, "
                  f"gauge {gauge:.1e}" if not fails else "; ".join(fails))
