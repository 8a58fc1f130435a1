"""Tests for the quotient-space builders and nullity bookkeeping.

Dimension and nullity tables below are derived by hand for the
three-sheet junction screen at h = 0.5 (n = 2 cells per side):

* each sheet carries 2 n^2 = 8 triangles and (n+1)^2 = 9 vertices;
* each panel glues two sheets along the junction, so its mesh has
  16 triangles and 15 vertices, 3 of them interior (the two sheet
  centers and the junction midpoint);
* Dirichlet dofs are panel triangles (16 per panel), Neumann dofs are
  interior panel vertices (3 per panel);
* every geometric triangle appears in exactly two panels with opposite
  orientation signs, giving one null direction per triangle (24 for the
  full space); a sheet-center vertex appears in two panels (one null
  direction each, 3 total) and the junction midpoint in all three
  panels with a rank-2 constraint (one more), giving 4 for Neumann.
"""

import numpy as np
import pytest

from msbem.assembly import _corner_values
from msbem.errors import EmptySpaceError, ReductionError
from msbem.geometry import make_junction_screen, make_typeB_screen
from msbem.spaces import (CONTINUOUS_P1, DUAL_CONSTANT, DUAL_P1, FULL,
                          PW_CONSTANT, ReductionStrategy, expected_nullity,
                          multitrace_space, problem_spaces, singletrace_basis)

REDUCTIONS = [FULL, ReductionStrategy("partial"),
              ReductionStrategy("single-strip"),
              ReductionStrategy("fixed-overlap", 0.25)]

DIMS = {"dirichlet": (48, 32, 28, 28), "neumann": (9, 6, 5, 5)}
NULLS = {"dirichlet": (24, 8, 4, 4), "neumann": (4, 1, 0, 0)}


# ----------------------------------------------------------------------
# ReductionStrategy
# ----------------------------------------------------------------------


def test_reduction_strategy_validation():
    with pytest.raises(ReductionError):
        ReductionStrategy("bogus")
    with pytest.raises(ReductionError):
        ReductionStrategy("fixed-overlap")
    with pytest.raises(ReductionError):
        ReductionStrategy("fixed-overlap", -0.1)
    with pytest.raises(ReductionError):
        ReductionStrategy("partial", 0.1)
    assert FULL.is_full
    assert not ReductionStrategy("partial").is_full


def test_reduction_labels_and_parse():
    assert FULL.label() == "full"
    assert ReductionStrategy("fixed-overlap", 0.25).label() == \
        "fixed-overlap:0.25"
    assert ReductionStrategy.parse("full") == FULL
    assert ReductionStrategy.parse("partial").variant == "partial"
    assert ReductionStrategy.parse("single-strip").variant == "single-strip"
    r = ReductionStrategy.parse("fixed-overlap:0.1")
    assert r.delta == pytest.approx(0.1)
    # bare fixed-overlap defaults to a quarter of the screen side
    r = ReductionStrategy.parse("fixed-overlap", side=2.0)
    assert r.delta == pytest.approx(0.5)
    with pytest.raises(ReductionError):
        ReductionStrategy.parse("quarter")


# ----------------------------------------------------------------------
# Dimension and nullity tables
# ----------------------------------------------------------------------


@pytest.mark.parametrize("problem", ["dirichlet", "neumann"])
def test_dimension_table(tri05, problem):
    for red, dim in zip(REDUCTIONS, DIMS[problem]):
        primal, dual = problem_spaces(tri05, problem, red)
        assert primal.dimension == dim, red.label()
        assert dual.dimension == dim, red.label()
        assert len(primal.dof_meta) == dim
        assert primal.anchor_points.shape == (dim, 3)


@pytest.mark.parametrize("problem", ["dirichlet", "neumann"])
def test_expected_nullity_table(tri05, problem):
    for red, nul in zip(REDUCTIONS, NULLS[problem]):
        space = multitrace_space(tri05, problem, "primal", red)
        assert expected_nullity(tri05, space) == nul, red.label()


def test_partial_keeps_first_and_every_other_panel(tri05):
    space = multitrace_space(tri05, "dirichlet", "primal",
                             ReductionStrategy("partial"))
    assert sorted(set(b.panel for b in space.blocks)) == [0, 1]
    four = make_junction_screen(4, 1.0, 0.5)
    space = multitrace_space(four, "dirichlet", "primal",
                             ReductionStrategy("partial"))
    assert sorted(set(b.panel for b in space.blocks)) == [0, 1, 3]


def test_space_kinds(tri05):
    primal, dual = problem_spaces(tri05, "dirichlet")
    assert primal.kind == PW_CONSTANT and dual.kind == DUAL_P1
    primal, dual = problem_spaces(tri05, "neumann")
    assert primal.kind == CONTINUOUS_P1 and dual.kind == DUAL_CONSTANT
    assert str(primal.dimension) in primal.describe()


# ----------------------------------------------------------------------
# Single-trace basis structure
# ----------------------------------------------------------------------


@pytest.mark.parametrize("problem", ["dirichlet", "neumann"])
def test_nullity_matches_singletrace_rank(tri05, tri025, problem):
    for screen in (tri05, tri025):
        space = multitrace_space(screen, problem, "primal", FULL)
        basis = singletrace_basis(screen, space)
        assert basis.shape[0] == space.dimension
        assert np.linalg.matrix_rank(basis) == basis.shape[1]
        assert basis.shape[1] == expected_nullity(screen, space)


def test_singletrace_column_structure(tri05):
    # piecewise constants: the two copies of a triangle enter with their
    # opposite orientation signs
    space = multitrace_space(tri05, "dirichlet", "primal", FULL)
    basis = singletrace_basis(tri05, space)
    for col in basis.T:
        nz = col[col != 0]
        assert len(nz) == 2
        assert set(nz) == {1.0, -1.0}
    # continuous hats: all copies of a vertex enter with weight one
    space = multitrace_space(tri05, "neumann", "primal", FULL)
    basis = singletrace_basis(tri05, space)
    for col in basis.T:
        nz = col[col != 0]
        assert len(nz) in (2, 3)
        assert np.all(nz == 1.0)


def test_anchor_copies_share_coordinates(tri05):
    for problem in ("dirichlet", "neumann"):
        space = multitrace_space(tri05, problem, "primal", FULL)
        by_gid = {}
        for meta in space.dof_meta:
            by_gid.setdefault(meta.gid, []).append(meta.point)
        for pts in by_gid.values():
            for p in pts[1:]:
                assert p == pts[0]


# ----------------------------------------------------------------------
# Dual spaces
# ----------------------------------------------------------------------


def test_dual_dimension_identities(tri05):
    primal, dual = problem_spaces(tri05, "dirichlet")
    for bp, bd in zip(primal.blocks, dual.blocks):
        # one dual-p1 function per parent triangle
        assert bd.ndof == bp.carrier.num_triangles
        assert bd.carrier.refinement.parent is bp.carrier
    primal, dual = problem_spaces(tri05, "neumann")
    for bp, bd in zip(primal.blocks, dual.blocks):
        # one dual cell per interior vertex
        assert bd.ndof == len(bp.carrier.interior_vertices)


def test_dual_p1_partition_of_unity(tri05):
    _, dual = problem_spaces(tri05, "dirichlet")
    for block in dual.blocks:
        C = _corner_values(block)
        sums = np.asarray(C.sum(axis=1)).ravel()
        assert np.allclose(sums, 1.0, atol=1e-12)


def test_dual_constant_covers_owned_children(tri05):
    _, dual = problem_spaces(tri05, "neumann")
    for block in dual.blocks:
        C = _corner_values(block)
        sums = np.asarray(C.sum(axis=1)).ravel()
        assert np.all((np.abs(sums) < 1e-14) | (np.abs(sums - 1) < 1e-14))
        assert sums.max() > 0.5
        # each dual cell owns twice the parent-vertex valence in children
        refined = block.carrier
        parent = refined.refinement.parent
        col_counts = np.diff(C.tocsc().indptr)
        for j, v in enumerate(parent.interior_vertices):
            assert col_counts[j] == 3 * 2 * len(parent.vertex_triangles[v])


# ----------------------------------------------------------------------
# Reduction strip geometry
# ----------------------------------------------------------------------


def test_single_strip_drops_far_second_sheet_dofs(tri05):
    second = tri05.panels[0][1].sheet
    for problem in ("dirichlet", "neumann"):
        space = multitrace_space(tri05, problem, "primal",
                                 ReductionStrategy("single-strip"))
        panel0 = [m for m in space.dof_meta if m.panel == 0]
        assert all(m.on_junction for m in panel0 if m.sheet == second)
        # other panels keep everything
        full = multitrace_space(tri05, problem, "primal", FULL)
        assert len([m for m in space.dof_meta if m.panel == 1]) == \
            len([m for m in full.dof_meta if m.panel == 1])


def test_fixed_overlap_respects_delta(tri05):
    second = tri05.panels[0][1].sheet
    delta = 0.25
    space = multitrace_space(tri05, "dirichlet", "primal",
                             ReductionStrategy("fixed-overlap", delta))
    for m in space.dof_meta:
        if m.panel == 0 and m.sheet == second and not m.on_junction:
            d = tri05.junction_distance(np.asarray(m.point))[0]
            assert d <= delta + 1e-12
    # a generous delta keeps the whole panel
    wide = multitrace_space(tri05, "dirichlet", "primal",
                            ReductionStrategy("fixed-overlap", 10.0))
    partial = multitrace_space(tri05, "dirichlet", "primal",
                               ReductionStrategy("partial"))
    assert wide.dimension == partial.dimension


# ----------------------------------------------------------------------
# Errors
# ----------------------------------------------------------------------


def test_space_errors(tri05):
    with pytest.raises(ValueError):
        multitrace_space(tri05, "robin", "primal")
    with pytest.raises(ValueError):
        multitrace_space(tri05, "dirichlet", "left")
    reduced = multitrace_space(tri05, "dirichlet", "primal",
                               ReductionStrategy("partial"))
    with pytest.raises(ReductionError):
        singletrace_basis(tri05, reduced)


def test_overlapping_covering_restrictions():
    screen = make_typeB_screen(0.5)
    full = multitrace_space(screen, "dirichlet", "primal", FULL)
    assert full.dimension > 0
    with pytest.raises(ReductionError):
        multitrace_space(screen, "dirichlet", "primal",
                         ReductionStrategy("partial"))
    with pytest.raises(ReductionError):
        singletrace_basis(screen, full)
    with pytest.raises(ReductionError):
        expected_nullity(screen, full)


def test_empty_space_raises():
    # h equal to the side leaves no interior vertices on any panel
    coarse = make_junction_screen(3, 1.0, 1.0)
    with pytest.raises(EmptySpaceError):
        multitrace_space(coarse, "neumann", "primal")
