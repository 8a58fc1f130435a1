"""Boundary-element spaces on panels and multi-trace product spaces.

Every space is a list of per-panel blocks. A block stores a carrier mesh
(the panel mesh for primal spaces, its barycentric refinement for dual
spaces) plus a scatter table mapping elementary shapes to basis functions:
shape (t, k) is the indicator of carrier triangle t (piecewise-constant
kinds, one shape per triangle) or the hat of local corner k of triangle t
(linear kinds, three shapes per triangle). Basis functions are weighted
shape combinations; assembly only ever sees shapes and the scatter table.

Reductions drop redundant multi-trace DoFs while preserving the discrete
jump (quotient) space: `partial` keeps the first panel plus every second
one after it, `single-strip` additionally drops first-panel DoFs carried
entirely by the second sheet away from the junction, and `fixed-overlap`
keeps such DoFs only within a fixed Euclidean distance of the junction
polyline. Dual spaces on reduced panels are rebuilt on the truncated
carrier (union of supports of the kept primal DoFs).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import EmptySpaceError, ReductionError
from .geometry import MultiScreen, PanelMesh, TriMesh, barycentric_refine, submesh

PW_CONSTANT = "pw-constant"
CONTINUOUS_P1 = "continuous-p1"
DUAL_CONSTANT = "dual-constant"
DUAL_P1 = "dual-p1"


@dataclass(frozen=True)
class ReductionStrategy:
    """DoF-reduction variant: full | partial | single-strip | fixed-overlap."""

    variant: str
    delta: float | None = None

    def __post_init__(self):
        if self.variant not in ("full", "partial", "single-strip",
                                "fixed-overlap"):
            raise ReductionError(f"unknown reduction '{self.variant}'")
        if self.variant == "fixed-overlap":
            if self.delta is None or self.delta <= 0:
                raise ReductionError("fixed-overlap needs delta > 0")
        elif self.delta is not None:
            raise ReductionError(f"{self.variant} takes no delta")

    @property
    def is_full(self) -> bool:
        return self.variant == "full"

    def label(self) -> str:
        if self.variant == "fixed-overlap":
            return f"fixed-overlap:{self.delta:g}"
        return self.variant

    @staticmethod
    def parse(text: str, side: float = 1.0) -> "ReductionStrategy":
        """Parse 'full|partial|single-strip|fixed-overlap[:delta]'.

        A bare 'fixed-overlap' defaults delta to 0.25 x side.
        """
        text = text.strip().lower()
        m = re.fullmatch(r"fixed-overlap(?::([0-9.eE+-]+))?", text)
        if m:
            delta = float(m.group(1)) if m.group(1) else 0.25 * side
            return ReductionStrategy("fixed-overlap", delta)
        return ReductionStrategy(text)


FULL = ReductionStrategy("full")


@dataclass(frozen=True)
class DofMeta:
    """Geometric anchor of one basis function."""

    panel: int
    sheet: int                 # -1 when the anchor spans several sheets
    kind: str                  # "tri" | "vertex"
    gid: tuple                 # screen-wide geometric id of the anchor
    point: tuple               # anchor coordinates (centroid / vertex)
    on_junction: bool


@dataclass(frozen=True)
class SpaceBlock:
    """One panel's contribution to a space."""

    panel: int
    kind: str
    carrier: TriMesh
    shape_kind: int            # 0: triangle indicators, 1: corner hats
    ndof: int
    slot_ptr: np.ndarray       # CSR over shape slots (ntri * nshape)
    slot_dof: np.ndarray       # local dof indices
    slot_wt: np.ndarray
    dof_meta: tuple = ()

    @property
    def nshape(self) -> int:
        return 1 if self.shape_kind == 0 else 3

    def scatter_matrix(self):
        """Shapes-to-dofs map as a scipy CSR matrix (nslots x ndof)."""
        from scipy.sparse import csr_matrix
        nslots = self.carrier.num_triangles * self.nshape
        return csr_matrix((self.slot_wt, self.slot_dof, self.slot_ptr),
                          shape=(nslots, self.ndof))


@dataclass(frozen=True)
class FunctionSpace:
    """Block-concatenated space; dof index = block.start + local index."""

    kind: str
    blocks: tuple
    screen: MultiScreen | None = None
    problem: str | None = None
    side: str | None = None
    reduction: ReductionStrategy | None = None

    @cached_property
    def dimension(self) -> int:
        return sum(b.ndof for b in self.blocks)

    @cached_property
    def block_starts(self) -> np.ndarray:
        return np.cumsum([0] + [b.ndof for b in self.blocks])

    @cached_property
    def dof_meta(self) -> tuple:
        out = []
        for b in self.blocks:
            out.extend(b.dof_meta)
        return tuple(out)

    @cached_property
    def anchor_points(self) -> np.ndarray:
        return np.array([m.point for m in self.dof_meta], dtype=np.float64)

    def describe(self) -> str:
        lines = [f"space kind={self.kind} dim={self.dimension}"
                 + (f" problem={self.problem} side={self.side}"
                    if self.problem else "")
                 + (f" reduction={self.reduction.label()}"
                    if self.reduction else "")]
        starts = self.block_starts
        for i, b in enumerate(self.blocks):
            lines.append(f"  panel {b.panel}: dofs [{starts[i]}, "
                         f"{starts[i + 1]}) carrier_tris="
                         f"{b.carrier.num_triangles}")
        return "\n".join(lines)


def _slots_csr(entries: list) -> tuple:
    """entries[slot] = list of (dof, weight); returns CSR arrays."""
    ptr = np.zeros(len(entries) + 1, dtype=np.int64)
    for i, e in enumerate(entries):
        ptr[i + 1] = ptr[i] + len(e)
    dof = np.empty(ptr[-1], dtype=np.int64)
    wt = np.empty(ptr[-1], dtype=np.float64)
    for i, e in enumerate(entries):
        for j, (d, w) in enumerate(e):
            dof[ptr[i] + j] = d
            wt[ptr[i] + j] = w
    return ptr, dof, wt


# ----------------------------------------------------------------------
# Elementary per-panel space constructors
# ----------------------------------------------------------------------


def _pw_constant_block(mesh: TriMesh, panel: int = 0,
                       keep: np.ndarray | None = None,
                       meta: tuple = ()) -> SpaceBlock:
    nt = mesh.num_triangles
    if keep is None:
        keep = np.arange(nt)
    local = -np.ones(nt, dtype=np.int64)
    local[keep] = np.arange(len(keep))
    entries = [[(local[t], 1.0)] if local[t] >= 0 else [] for t in range(nt)]
    ptr, dof, wt = _slots_csr(entries)
    return SpaceBlock(panel=panel, kind=PW_CONSTANT, carrier=mesh,
                      shape_kind=0, ndof=len(keep), slot_ptr=ptr,
                      slot_dof=dof, slot_wt=wt, dof_meta=meta)


def _p1_block(mesh: TriMesh, panel: int, keep_verts: np.ndarray,
              meta: tuple = ()) -> SpaceBlock:
    local = -np.ones(mesh.num_vertices, dtype=np.int64)
    local[keep_verts] = np.arange(len(keep_verts))
    entries = []
    for t in range(mesh.num_triangles):
        for k in range(3):
            v = local[mesh.triangles[t, k]]
            entries.append([(v, 1.0)] if v >= 0 else [])
    ptr, dof, wt = _slots_csr(entries)
    return SpaceBlock(panel=panel, kind=CONTINUOUS_P1, carrier=mesh,
                      shape_kind=1, ndof=len(keep_verts), slot_ptr=ptr,
                      slot_dof=dof, slot_wt=wt, dof_meta=meta)


def pw_constant_space(mesh: TriMesh) -> FunctionSpace:
    """One indicator basis function per triangle."""
    return FunctionSpace(kind=PW_CONSTANT, blocks=(_pw_constant_block(mesh),))


def continuous_p1_space(mesh: TriMesh, zero_boundary: bool = False) -> FunctionSpace:
    """One hat per vertex, boundary hats dropped when zero_boundary."""
    keep = mesh.interior_vertices if zero_boundary \
        else np.arange(mesh.num_vertices)
    if len(keep) == 0:
        raise EmptySpaceError("space is empty: no interior vertices")
    return FunctionSpace(kind=CONTINUOUS_P1,
                         blocks=(_p1_block(mesh, 0, keep),))


def _dual_constant_block(mesh: TriMesh, panel: int = 0,
                         interior_only: bool = True,
                         meta: tuple = ()) -> SpaceBlock:
    refined = barycentric_refine(mesh)
    corner = refined.refinement.child_corner
    keep = mesh.interior_vertices if interior_only \
        else np.arange(mesh.num_vertices)
    if len(keep) == 0:
        raise EmptySpaceError("space is empty: no interior vertices")
    local = -np.ones(mesh.num_vertices, dtype=np.int64)
    local[keep] = np.arange(len(keep))
    entries = [[(local[corner[t]], 1.0)] if local[corner[t]] >= 0 else []
               for t in range(refined.num_triangles)]
    ptr, dof, wt = _slots_csr(entries)
    return SpaceBlock(panel=panel, kind=DUAL_CONSTANT, carrier=refined,
                      shape_kind=0, ndof=len(keep), slot_ptr=ptr,
                      slot_dof=dof, slot_wt=wt, dof_meta=meta)


def dual_constant_space(mesh: TriMesh, interior_only: bool = True) -> FunctionSpace:
    """Indicators of barycentric dual cells of (interior) vertices."""
    return FunctionSpace(kind=DUAL_CONSTANT,
                         blocks=(_dual_constant_block(
                             mesh, interior_only=interior_only),))


def _dual_p1_block(mesh: TriMesh, panel: int = 0, meta: tuple = ()) -> SpaceBlock:
    """One basis function per primal triangle, as hats on the refinement.

    Weights: 1 at the triangle's barycenter, 1/2 at interior-edge midpoints
    (1 at boundary-edge midpoints), 1/valence at primal vertices.
    """
    refined = barycentric_refine(mesh)
    info = refined.refinement
    nv, ne = mesh.num_vertices, len(mesh.edges)
    # incidence helpers on the primal mesh
    edge_tris: dict = {}
    for t, tri in enumerate(mesh.triangles):
        for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            key = (min(int(a), int(b)), max(int(a), int(b)))
            edge_tris.setdefault(key, []).append(t)
    edge_key = [(int(a), int(b)) for a, b in mesh.edges]
    valence = np.array([len(s) for s in mesh.vertex_triangles], dtype=np.int64)

    # weight table per refined vertex: list of (primal triangle, weight)
    vertex_weights: list = [[] for _ in range(refined.num_vertices)]
    for r in range(refined.num_vertices):
        kind, ref = int(info.node_kind[r]), int(info.node_ref[r])
        if kind == 0:                       # primal vertex
            for t in mesh.vertex_triangles[ref]:
                vertex_weights[r].append((int(t), 1.0 / valence[ref]))
        elif kind == 1:                     # edge midpoint
            tris = edge_tris[edge_key[ref]]
            w = 1.0 if len(tris) == 1 else 0.5
            for t in tris:
                vertex_weights[r].append((int(t), w))
        else:                               # barycenter
            vertex_weights[r].append((ref, 1.0))

    entries = []
    for t in range(refined.num_triangles):
        for k in range(3):
            entries.append(vertex_weights[int(refined.triangles[t, k])])
    ptr, dof, wt = _slots_csr(entries)
    return SpaceBlock(panel=panel, kind=DUAL_P1, carrier=refined,
                      shape_kind=1, ndof=mesh.num_triangles, slot_ptr=ptr,
                      slot_dof=dof, slot_wt=wt, dof_meta=meta)


def dual_p1_space(mesh: TriMesh) -> FunctionSpace:
    """Piecewise-linear dual functions, one per primal triangle."""
    return FunctionSpace(kind=DUAL_P1, blocks=(_dual_p1_block(mesh),))


# ----------------------------------------------------------------------
# Multi-trace spaces with reductions
# ----------------------------------------------------------------------


def _kept_panels(num_panels: int, reduction: ReductionStrategy) -> list:
    if reduction.is_full:
        return list(range(num_panels))
    return [0] + list(range(1, num_panels, 2))


def _tri_meta(pm: PanelMesh, mesh: TriMesh, tri_ids: np.ndarray,
              junction_mask: np.ndarray) -> tuple:
    out = []
    for t in tri_ids:
        verts = mesh.triangles[t]
        gid = tuple(sorted(int(pm.vert_gid[v]) for v in verts))
        cen = mesh.vertices[verts].mean(axis=0)
        out.append(DofMeta(panel=pm.panel, sheet=int(pm.tri_sheet[t]),
                           kind="tri", gid=gid, point=tuple(cen),
                           on_junction=bool(junction_mask[verts].any())))
    return tuple(out)


def _vertex_meta(pm: PanelMesh, keep_verts: np.ndarray) -> tuple:
    mesh = pm.mesh
    jm = pm.junction_mask
    out = []
    for v in keep_verts:
        star = mesh.vertex_triangles[v]
        sheets = set(int(pm.tri_sheet[t]) for t in star)
        out.append(DofMeta(panel=pm.panel,
                           sheet=sheets.pop() if len(sheets) == 1 else -1,
                           kind="vertex", gid=(int(pm.vert_gid[v]),),
                           point=tuple(mesh.vertices[v]),
                           on_junction=bool(jm[v])))
    return tuple(out)


def _panel_zero_dofs(pm: PanelMesh, problem: str, zero_boundary: bool):
    """Unreduced per-panel primal dof anchors: (anchor ids, meta)."""
    mesh = pm.mesh
    if problem == "dirichlet":
        ids = np.arange(mesh.num_triangles)
        return ids, _tri_meta(pm, mesh, ids, pm.junction_mask)
    ids = mesh.interior_vertices if zero_boundary \
        else np.arange(mesh.num_vertices)
    return ids, _vertex_meta(pm, ids)


def _first_panel_filter(screen: MultiScreen, pm: PanelMesh, ids: np.ndarray,
                        meta: tuple, reduction: ReductionStrategy):
    """Apply the single-strip / fixed-overlap drop rule on panel 0.

    A DoF is a drop candidate when all its carrier triangles lie in the
    panel's second sheet and its anchor does not touch the junction chain.
    """
    second_sheet = screen.panels[0][1].sheet
    keep = []
    for i, m in enumerate(meta):
        candidate = (m.sheet == second_sheet) and not m.on_junction
        if not candidate:
            keep.append(i)
        elif reduction.variant == "fixed-overlap":
            d = screen.junction_distance(np.asarray(m.point))[0]
            if d <= reduction.delta + 1e-12:
                keep.append(i)
    keep = np.asarray(keep, dtype=np.int64)
    return ids[keep], tuple(meta[i] for i in keep)


def _supporting_tris(pm: PanelMesh, problem: str, ids: np.ndarray) -> np.ndarray:
    """Union of carrier triangles of the kept primal DoFs."""
    mesh = pm.mesh
    if problem == "dirichlet":
        return np.asarray(ids, dtype=np.int64)
    tris: set = set()
    for v in ids:
        tris.update(int(t) for t in mesh.vertex_triangles[v])
    return np.asarray(sorted(tris), dtype=np.int64)


def _panel_selection(screen: MultiScreen, problem: str,
                     reduction: ReductionStrategy):
    """Kept panels with kept-dof anchors and (possibly truncated) carriers.

    Returns a list of records (panel mesh, carrier mesh, anchor ids on the
    carrier, dof meta); the carrier is the full panel mesh unless the
    reduction truncated it.
    """
    if not reduction.is_full and screen.covering_kind != "exact":
        raise ReductionError(
            "reductions require an exact two-panel-per-sheet covering")
    zero_boundary = screen.covering_kind == "exact"
    records = []
    for l in _kept_panels(screen.num_panels, reduction):
        pm = screen.panel_meshes[l]
        ids, meta = _panel_zero_dofs(pm, problem, zero_boundary)
        if l == 0 and reduction.variant in ("single-strip", "fixed-overlap"):
            ids, meta = _first_panel_filter(screen, pm, ids, meta, reduction)
            if len(ids) == 0:
                raise ReductionError("reduction removed every panel-0 DoF")
            support = _supporting_tris(pm, problem, ids)
            if len(support) < pm.mesh.num_triangles:
                carrier, vmap, tmap = submesh(pm.mesh, support)
                if problem == "dirichlet":
                    back_t = -np.ones(pm.mesh.num_triangles, dtype=np.int64)
                    back_t[tmap] = np.arange(len(tmap))
                    ids = back_t[ids]
                else:
                    back_v = -np.ones(pm.mesh.num_vertices, dtype=np.int64)
                    back_v[vmap] = np.arange(len(vmap))
                    ids = back_v[ids]
                records.append((pm, carrier, ids, meta))
                continue
        records.append((pm, pm.mesh, ids, meta))
    return records


def multitrace_space(screen: MultiScreen, problem: str, side: str,
                     reduction: ReductionStrategy = FULL) -> FunctionSpace:
    """Product space over kept panels for one variational problem.

    problem: dirichlet (pw-constant primal, dual-p1 dual) or neumann
    (continuous-p1 primal, dual-constant dual). side: primal | dual. The
    dual space of a reduced problem is rebuilt on the truncated carrier so
    that its dimension matches the kept primal DoFs.
    """
    problem = problem.lower()
    side = side.lower()
    if problem not in ("dirichlet", "neumann"):
        raise ValueError(f"unknown problem '{problem}'")
    if side not in ("primal", "dual"):
        raise ValueError(f"unknown side '{side}'")
    records = _panel_selection(screen, problem, reduction)
    interior_duals = screen.covering_kind == "exact"
    blocks = []
    for pm, carrier, ids, meta in records:
        if problem == "dirichlet":
            if side == "primal":
                blocks.append(_pw_constant_block(carrier, pm.panel,
                                                 keep=ids, meta=meta))
            else:
                blocks.append(_dual_p1_block(carrier, pm.panel))
        else:
            if side == "primal":
                blocks.append(_p1_block(carrier, pm.panel, ids, meta=meta))
            else:
                blocks.append(_dual_constant_block(
                    carrier, pm.panel, interior_only=interior_duals))
        if side == "dual" and blocks[-1].ndof != len(ids):
            raise ReductionError(
                f"panel {pm.panel}: dual dimension {blocks[-1].ndof} does "
                f"not match the {len(ids)} kept primal DoFs; the reduction "
                "strip is too ragged for a square duality Gram")
    if sum(b.ndof for b in blocks) == 0:
        raise EmptySpaceError("space is empty: no interior vertices")
    kind = blocks[0].kind
    return FunctionSpace(kind=kind, blocks=tuple(blocks), screen=screen,
                         problem=problem, side=side, reduction=reduction)


def problem_spaces(screen: MultiScreen, problem: str,
                   reduction: ReductionStrategy = FULL):
    """(primal, dual) pair for one problem and reduction."""
    return (multitrace_space(screen, problem, "primal", reduction),
            multitrace_space(screen, problem, "dual", reduction))


# ----------------------------------------------------------------------
# Single-trace (nullspace) bases and nullity bookkeeping
# ----------------------------------------------------------------------


def _anchor_groups(space: FunctionSpace) -> dict:
    groups: dict = {}
    for i, m in enumerate(space.dof_meta):
        groups.setdefault(m.gid, []).append(i)
    return groups


def singletrace_basis(screen: MultiScreen, space: FunctionSpace) -> np.ndarray:
    """Columns spanning the discrete single-trace subspace (Full, exact).

    Piecewise-constant spaces pair the two copies of each geometric
    triangle with coefficients equal to their orientation signs (opposite
    normal components); continuous spaces pair all copies of a geometric
    vertex with equal coefficients (matching point values). Reduced spaces
    are rejected: their single-trace content is intentionally smaller and
    only characterized numerically.
    """
    if space.reduction is None or not space.reduction.is_full:
        raise ReductionError("single-trace basis requires the full space")
    if screen.covering_kind != "exact":
        raise ReductionError("single-trace basis requires an exact covering")
    starts = space.block_starts
    signs = []
    for bi, block in enumerate(space.blocks):
        if block.kind == PW_CONSTANT:
            pm = screen.panel_meshes[block.panel]
            # dof order equals carrier triangle order for full spaces
            signs.extend(int(pm.tri_sign[t]) for t in range(block.ndof))
        else:
            signs.extend([1] * block.ndof)
    columns = []
    for gid, dofs in sorted(_anchor_groups(space).items()):
        if len(dofs) < 2:
            continue
        col = np.zeros(space.dimension)
        for d in dofs:
            col[d] = signs[d]
        columns.append(col)
    if not columns:
        raise EmptySpaceError("no paired anchors: space is empty")
    return np.stack(columns, axis=1)


def _sheet_sign_table(screen: MultiScreen) -> dict:
    """(panel, sheet) -> orientation sign of that sheet inside the panel."""
    table = {}
    for l, parts in enumerate(screen.panels):
        for part in parts:
            table[(l, part.sheet)] = part.sign
    return table


def expected_nullity(screen: MultiScreen, space: FunctionSpace) -> int:
    """Combinatorial nullity of the first-kind operator on `space`.

    Counts, per geometric anchor, the solutions of the per-sheet radiation
    cancellation constraints: for each sheet carrying copies of the anchor,
    the orientation-signed coefficients must sum to zero. Exact coverings
    only (overlapping coverings pair hats with unequal supports and need a
    numerical rank instead).
    """
    if screen.covering_kind != "exact":
        raise ReductionError("combinatorial nullity needs an exact covering")
    sign_of = _sheet_sign_table(screen)
    meta = space.dof_meta
    total = 0
    for gid, dofs in _anchor_groups(space).items():
        rows: dict = {}
        for j, d in enumerate(dofs):
            m = meta[d]
            if m.sheet >= 0:
                sheets = [m.sheet]
            else:
                sheets = [s for (l, s) in sign_of if l == m.panel]
            for s in sheets:
                rows.setdefault(s, np.zeros(len(dofs)))[j] = sign_of[(m.panel, s)]
        if not rows:
            continue
        A = np.stack(list(rows.values()))
        total += len(dofs) - np.linalg.matrix_rank(A)
    return total
