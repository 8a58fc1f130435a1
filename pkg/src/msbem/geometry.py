"""Triangle meshes and multi-screen geometries.

A multi-screen is a collection of simple screens (sheets) meeting at
junction lines where three or more surface flaps come together. The
discretization never works on the sheets directly: it works on *panels*,
oriented simple-screen meshes that cover the inflated screen (every sheet
point appears once per side). A panel glues one or more sheet pieces along
junction chains; the two copies of any sheet triangle always carry opposite
normals.

Junction vertices are generated once per coordinate formula so that copies
in different sheets and panels are bit-identical; all downstream identity
checks (pair classification, single-trace pairing) rely on exact coordinate
equality.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import MeshInvariantError

_AREA_TOL = 1e-14


def _clean(coords: np.ndarray) -> np.ndarray:
    """Normalize -0.0 to +0.0 so byte-level vertex identity works."""
    out = np.asarray(coords, dtype=np.float64) + 0.0
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class RefinementInfo:
    """Provenance of a barycentrically refined mesh.

    node_kind: 0 original vertex, 1 edge midpoint, 2 barycenter.
    node_ref: original vertex id / parent edge id / parent triangle id.
    child_corner: for each child triangle, the original vertex it touches.
    """

    parent: "TriMesh"
    parent_tri: np.ndarray
    child_corner: np.ndarray
    node_kind: np.ndarray
    node_ref: np.ndarray


@dataclass(frozen=True)
class TriMesh:
    """Oriented triangle surface mesh.

    vertices: (V, 3) float64, read-only. triangles: (T, 3) int vertex
    indices, right-hand-rule orientation consistent across interior edges.
    vertex_markers: named vertex subsets ("junction", "irregular").
    """

    vertices: np.ndarray
    triangles: np.ndarray
    vertex_markers: dict = field(default_factory=dict)
    refinement: RefinementInfo | None = None

    def __post_init__(self):
        v = _clean(self.vertices)
        t = np.ascontiguousarray(np.asarray(self.triangles, dtype=np.int64))
        t.flags.writeable = False
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)
        self._validate()

    def _validate(self) -> None:
        v, t = self.vertices, self.triangles
        if v.ndim != 2 or v.shape[1] != 3:
            raise MeshInvariantError("vertices must be (V, 3)")
        if t.ndim != 2 or t.shape[1] != 3 or len(t) == 0:
            raise MeshInvariantError("triangles must be (T, 3), T >= 1")
        if t.min() < 0 or t.max() >= len(v):
            raise MeshInvariantError("triangle index out of range")
        if np.any(self.areas < _AREA_TOL):
            raise MeshInvariantError("degenerate triangle (zero area)")
        # Bit-identical duplicate vertices would break pair classification.
        if len(np.unique(v, axis=0)) != len(v):
            raise MeshInvariantError("duplicate vertex coordinates")
        # Each undirected edge in at most two triangles, and the two
        # incident triangles must traverse it in opposite directions.
        de = self._directed_edges
        if len(np.unique(de, axis=0)) != len(de):
            raise MeshInvariantError("inconsistent orientation or duplicated face")
        und = np.sort(de, axis=1)
        _, counts = np.unique(und, axis=0, return_counts=True)
        if counts.max() > 2:
            raise MeshInvariantError("edge shared by more than two triangles")

    @cached_property
    def _directed_edges(self) -> np.ndarray:
        t = self.triangles
        return np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])

    @cached_property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @cached_property
    def num_triangles(self) -> int:
        return len(self.triangles)

    @cached_property
    def tri_coords(self) -> np.ndarray:
        return self.vertices[self.triangles]

    @cached_property
    def _cross(self) -> np.ndarray:
        tc = self.tri_coords
        return np.cross(tc[:, 1] - tc[:, 0], tc[:, 2] - tc[:, 0])

    @cached_property
    def areas(self) -> np.ndarray:
        return 0.5 * np.linalg.norm(self._cross, axis=1)

    @cached_property
    def normals(self) -> np.ndarray:
        return self._cross / (2.0 * self.areas[:, None])

    @cached_property
    def centroids(self) -> np.ndarray:
        return self.tri_coords.mean(axis=1)

    @cached_property
    def edges(self) -> np.ndarray:
        """Undirected edges as sorted vertex pairs, lexicographic order."""
        return np.unique(np.sort(self._directed_edges, axis=1), axis=0)

    @cached_property
    def boundary_edges(self) -> np.ndarray:
        und = np.sort(self._directed_edges, axis=1)
        uniq, counts = np.unique(und, axis=0, return_counts=True)
        return uniq[counts == 1]

    @cached_property
    def boundary_vertices(self) -> np.ndarray:
        mask = np.zeros(self.num_vertices, dtype=bool)
        be = self.boundary_edges
        if len(be):
            mask[be.ravel()] = True
        return mask

    @cached_property
    def interior_vertices(self) -> np.ndarray:
        return np.flatnonzero(~self.boundary_vertices)

    @cached_property
    def vertex_triangles(self) -> tuple:
        """Star of each vertex as a tuple of triangle-index arrays."""
        order = np.argsort(self.triangles.ravel(), kind="stable")
        tri_of = order // 3
        verts = self.triangles.ravel()[order]
        bounds = np.searchsorted(verts, np.arange(self.num_vertices + 1))
        return tuple(tri_of[bounds[i]:bounds[i + 1]]
                     for i in range(self.num_vertices))

    @cached_property
    def edge_lengths(self) -> np.ndarray:
        ev = self.vertices[self.edges]
        return np.linalg.norm(ev[:, 1] - ev[:, 0], axis=1)

    @cached_property
    def tri_diameters(self) -> np.ndarray:
        tc = self.tri_coords
        d01 = np.linalg.norm(tc[:, 0] - tc[:, 1], axis=1)
        d12 = np.linalg.norm(tc[:, 1] - tc[:, 2], axis=1)
        d20 = np.linalg.norm(tc[:, 2] - tc[:, 0], axis=1)
        return np.maximum(d01, np.maximum(d12, d20))

    @cached_property
    def diameter(self) -> float:
        lo, hi = self.vertices.min(axis=0), self.vertices.max(axis=0)
        return float(np.linalg.norm(hi - lo))

    def marked(self, name: str) -> np.ndarray:
        return np.asarray(sorted(self.vertex_markers.get(name, ())), dtype=np.int64)


def submesh(mesh: TriMesh, tri_ids: np.ndarray) -> tuple[TriMesh, np.ndarray, np.ndarray]:
    """Extract the submesh spanned by `tri_ids`.

    Returns (mesh, vertex_map, tri_map) where vertex_map/tri_map send new
    indices to indices of the parent mesh. Markers are restricted.
    """
    tri_ids = np.asarray(sorted(set(int(i) for i in tri_ids)), dtype=np.int64)
    if len(tri_ids) == 0:
        raise MeshInvariantError("empty submesh")
    tris = mesh.triangles[tri_ids]
    used = np.unique(tris)
    remap = -np.ones(mesh.num_vertices, dtype=np.int64)
    remap[used] = np.arange(len(used))
    markers = {}
    for name, ids in mesh.vertex_markers.items():
        kept = frozenset(int(remap[i]) for i in ids if remap[i] >= 0)
        if kept:
            markers[name] = kept
    sub = TriMesh(mesh.vertices[used], remap[tris], vertex_markers=markers)
    return sub, used, tri_ids


def barycentric_refine(mesh: TriMesh) -> TriMesh:
    """Split every triangle into its six barycentric children.

    New vertices are the originals, then edge midpoints, then barycenters.
    Children inherit the parent orientation; provenance (parent triangle,
    touched original corner, node origin) is recorded for the dual-space
    constructions. Coordinate sums run in lexicographic vertex order so
    coincident copies of a mesh refine bit-identically.
    """
    v, t = mesh.vertices, mesh.triangles
    edges = mesh.edges
    edge_id = {(int(a), int(b)): i for i, (a, b) in enumerate(edges)}
    ev = v[edges]
    # midpoint: addition is commutative bitwise, no ordering needed
    mid = 0.5 * (ev[:, 0] + ev[:, 1])
    # barycenter: sum in lexicographic coordinate order (associativity)
    tc = v[t]
    order = np.lexsort((tc[:, :, 2], tc[:, :, 1], tc[:, :, 0]), axis=1)
    sorted_tc = np.take_along_axis(tc, order[:, :, None], axis=1)
    bary = (sorted_tc[:, 0] + sorted_tc[:, 1] + sorted_tc[:, 2]) / 3.0
    nv, ne = len(v), len(edges)
    verts = np.concatenate([v, mid, bary])

    tris = np.empty((6 * len(t), 3), dtype=np.int64)
    corner = np.empty(6 * len(t), dtype=np.int64)
    for k, (a, b, c) in enumerate(t):
        a, b, c = int(a), int(b), int(c)
        mab = nv + edge_id[(min(a, b), max(a, b))]
        mbc = nv + edge_id[(min(b, c), max(b, c))]
        mca = nv + edge_id[(min(c, a), max(c, a))]
        g = nv + ne + k
        tris[6 * k:6 * k + 6] = [(a, mab, g), (mab, b, g), (b, mbc, g),
                                 (mbc, c, g), (c, mca, g), (mca, a, g)]
        corner[6 * k:6 * k + 6] = [a, b, b, c, c, a]

    node_kind = np.concatenate([np.zeros(nv, dtype=np.int64),
                                np.ones(ne, dtype=np.int64),
                                np.full(len(t), 2, dtype=np.int64)])
    node_ref = np.concatenate([np.arange(nv), np.arange(ne), np.arange(len(t))])
    markers = {}
    for name, ids in mesh.vertex_markers.items():
        new_ids = set(int(i) for i in ids)
        if name == "junction":
            for i, (a, b) in enumerate(edges):
                if int(a) in new_ids and int(b) in new_ids:
                    new_ids.add(nv + i)
        markers[name] = frozenset(new_ids)
    info = RefinementInfo(parent=mesh,
                          parent_tri=np.repeat(np.arange(len(t)), 6),
                          child_corner=corner, node_kind=node_kind,
                          node_ref=node_ref)
    return TriMesh(verts, tris, vertex_markers=markers, refinement=info)


@dataclass(frozen=True)
class DualCells:
    """Barycentric dual cells: one per vertex of the primal mesh."""

    refined: TriMesh
    cells: tuple

    @property
    def primal(self) -> TriMesh:
        return self.refined.refinement.parent


def dual_cells(mesh: TriMesh) -> DualCells:
    """Group barycentric children around the primal vertex they touch.

    Accepts a primal mesh (refined internally) or an already refined mesh.
    The cells partition the refined surface; a vertex of valence k owns 2k
    children.
    """
    refined = mesh if mesh.refinement is not None else barycentric_refine(mesh)
    corner = refined.refinement.child_corner
    nv = refined.refinement.parent.num_vertices
    order = np.argsort(corner, kind="stable")
    bounds = np.searchsorted(corner[order], np.arange(nv + 1))
    cells = tuple(order[bounds[i]:bounds[i + 1]] for i in range(nv))
    return DualCells(refined=refined, cells=cells)


# ----------------------------------------------------------------------
# Multi-screen geometries
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class PanelPart:
    """One signed sheet piece of a panel: sign +-1 flips orientation."""

    sheet: int
    sign: int
    tris: np.ndarray | None = None    # None means the whole sheet


@dataclass(frozen=True)
class JunctionChain:
    """Ordered junction vertex chain with per-sheet vertex indices."""

    coords: np.ndarray
    entries: tuple    # ((sheet_id, index array along the chain), ...)

    def sheet_indices(self, sheet: int) -> np.ndarray | None:
        for s, idx in self.entries:
            if s == sheet:
                return idx
        return None


@dataclass(frozen=True)
class PanelMesh:
    """A glued, oriented panel mesh with sheet provenance.

    tri_sheet/tri_parent: originating sheet and sheet-triangle per triangle.
    tri_sign: orientation relative to the sheet's native normal.
    vert_gid: screen-wide geometric vertex id (coordinate identity).
    """

    panel: int
    mesh: TriMesh
    tri_sheet: np.ndarray
    tri_parent: np.ndarray
    tri_sign: np.ndarray
    vert_gid: np.ndarray

    @property
    def junction_mask(self) -> np.ndarray:
        mask = np.zeros(self.mesh.num_vertices, dtype=bool)
        ids = self.mesh.marked("junction")
        if len(ids):
            mask[ids] = True
        return mask


@dataclass(frozen=True)
class MultiScreen:
    """A multi-screen: sheets, junction chains and a panel covering."""

    name: str
    sheets: tuple
    junctions: tuple
    panels: tuple
    covering_kind: str
    h: float
    side: float

    def __post_init__(self):
        if self.covering_kind not in ("exact", "overlapping"):
            raise MeshInvariantError("covering_kind must be exact|overlapping")

    @property
    def num_panels(self) -> int:
        return len(self.panels)

    @cached_property
    def diameter(self) -> float:
        pts = np.concatenate([s.vertices for s in self.sheets])
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        return float(np.linalg.norm(hi - lo))

    @cached_property
    def centroid(self) -> np.ndarray:
        pts = np.concatenate([s.vertices for s in self.sheets])
        return pts.mean(axis=0)

    @cached_property
    def junction_segments(self) -> np.ndarray:
        """All junction polyline segments, (S, 2, 3)."""
        segs = []
        for chain in self.junctions:
            c = chain.coords
            segs.append(np.stack([c[:-1], c[1:]], axis=1))
        return np.concatenate(segs) if segs else np.zeros((0, 2, 3))

    @cached_property
    def panel_meshes(self) -> tuple:
        raw = [_glue_panel(self, l) for l in range(self.num_panels)]
        # Screen-wide geometric vertex ids via exact coordinate identity.
        stacked = np.concatenate([pm.vertices for pm, *_ in raw])
        _, inverse = np.unique(stacked, axis=0, return_inverse=True)
        out, off = [], 0
        for l, (pm, tsheet, tparent, tsign) in enumerate(raw):
            gid = inverse[off:off + pm.num_vertices].copy()
            off += pm.num_vertices
            out.append(PanelMesh(panel=l, mesh=pm, tri_sheet=tsheet,
                                 tri_parent=tparent, tri_sign=tsign,
                                 vert_gid=gid))
        return tuple(out)

    def measured_h(self) -> tuple[float, float]:
        """(min, max) edge length over the sheets."""
        lengths = np.concatenate([s.edge_lengths for s in self.sheets])
        return float(lengths.min()), float(lengths.max())

    def junction_distance(self, points: np.ndarray) -> np.ndarray:
        """Euclidean distance from points to the junction polyline."""
        return _segment_distance(np.atleast_2d(points), self.junction_segments)


def _segment_distance(points: np.ndarray, segments: np.ndarray) -> np.ndarray:
    if len(segments) == 0:
        return np.full(len(points), np.inf)
    a, b = segments[:, 0], segments[:, 1]
    ab = b - a
    denom = np.einsum("ij,ij->i", ab, ab)
    diff = points[:, None, :] - a[None, :, :]
    t = np.clip(np.einsum("pij,ij->pi", diff, ab) / denom[None, :], 0.0, 1.0)
    proj = a[None, :, :] + t[:, :, None] * ab[None, :, :]
    d = np.linalg.norm(points[:, None, :] - proj, axis=2)
    return d.min(axis=1)


def _glue_panel(screen: MultiScreen, l: int):
    """Glue the signed sheet pieces of panel l into one oriented mesh."""
    verts_parts, tris_parts, sheet_parts, parent_parts, sign_parts = [], [], [], [], []
    marker_names = set()
    part_marker_ids = []
    offset = 0
    for part in screen.panels[l]:
        sheet = screen.sheets[part.sheet]
        if part.tris is None:
            tri_ids = np.arange(sheet.num_triangles)
            tris = sheet.triangles
            verts = sheet.vertices
            vmap = np.arange(sheet.num_vertices)
        else:
            sub, vmap, tri_ids = submesh(sheet, part.tris)
            tris, verts = sub.triangles, sub.vertices
        if part.sign < 0:
            tris = tris[:, [0, 2, 1]]
        verts_parts.append(verts)
        tris_parts.append(tris + offset)
        sheet_parts.append(np.full(len(tris), part.sheet, dtype=np.int64))
        parent_parts.append(tri_ids)
        sign_parts.append(np.full(len(tris), part.sign, dtype=np.int64))
        pm = {}
        for name, ids in sheet.vertex_markers.items():
            marker_names.add(name)
            back = {int(g): i for i, g in enumerate(vmap)}
            pm[name] = [offset + back[int(i)] for i in ids if int(i) in back]
        part_marker_ids.append(pm)
        offset += len(verts)

    all_verts = _clean(np.concatenate(verts_parts))
    all_tris = np.concatenate(tris_parts)
    uniq, inverse = np.unique(all_verts, axis=0, return_inverse=True)
    markers = {}
    for name in marker_names:
        ids = set()
        for pm in part_marker_ids:
            ids.update(int(inverse[i]) for i in pm.get(name, ()))
        markers[name] = frozenset(ids)
    mesh = TriMesh(uniq, inverse[all_tris], vertex_markers=markers)
    return mesh, np.concatenate(sheet_parts), np.concatenate(parent_parts), \
        np.concatenate(sign_parts)


def _cells(side: float, h: float) -> int:
    if h <= 0 or side <= 0:
        raise MeshInvariantError("side and h must be positive")
    if h > side:
        raise MeshInvariantError("mesh width exceeds the sheet size")
    return int(math.ceil(side / h - 1e-9))


def _structured_sheet(ts: np.ndarray, ss: np.ndarray, embed):
    """Tensor grid triangulated along the diagonal away from the t=0 edge."""
    n_t, n_s = len(ts) - 1, len(ss) - 1
    verts = np.array([embed(t, s) for t in ts for s in ss], dtype=np.float64)

    def vid(j, k):
        return j * (n_s + 1) + k

    tris = []
    for j in range(n_t):
        for k in range(n_s):
            tris.append((vid(j, k), vid(j + 1, k), vid(j + 1, k + 1)))
            tris.append((vid(j, k), vid(j + 1, k + 1), vid(j, k + 1)))
    return verts, np.asarray(tris, dtype=np.int64), vid


def make_junction_screen(num_sheets: int, side_length: float, h: float) -> MultiScreen:
    """Equal-angle junction screen: sheets around a straight junction line.

    `num_sheets` square sheets of side `side_length` share the junction
    segment from the origin to (0, side_length, 0), fanning out at equal
    dihedral angles. Panel l glues sheet l (native normal) to sheet l+1
    (flipped), so every sheet appears once per side.
    """
    if num_sheets < 3:
        raise MeshInvariantError("a junction screen needs at least 3 sheets")
    n = _cells(side_length, h)
    ts = side_length * np.arange(n + 1) / n
    sheets = []
    junction_entries = []
    for i in range(num_sheets):
        theta = 2.0 * math.pi * i / num_sheets
        c, s = math.cos(theta), math.sin(theta)
        verts, tris, vid = _structured_sheet(
            ts, ts, lambda t, y: (t * c, y, t * s))
        chain = np.array([vid(0, k) for k in range(n + 1)], dtype=np.int64)
        markers = {"junction": frozenset(int(v) for v in chain),
                   "irregular": frozenset((int(chain[0]), int(chain[-1])))}
        sheets.append(TriMesh(verts, tris, vertex_markers=markers))
        junction_entries.append((i, chain))
    chain_coords = sheets[0].vertices[junction_entries[0][1]]
    junction = JunctionChain(coords=chain_coords,
                             entries=tuple(junction_entries))
    panels = tuple(
        (PanelPart(l, +1), PanelPart((l + 1) % num_sheets, -1))
        for l in range(num_sheets))
    name = "trijunction" if num_sheets == 3 else f"mjunction:{num_sheets}"
    return MultiScreen(name=name, sheets=tuple(sheets), junctions=(junction,),
                       panels=panels, covering_kind="exact", h=h,
                       side=side_length)


def make_typeB_screen(h: float) -> MultiScreen:
    """Screen whose junction ends at a point interior to a sheet.

    A horizontal unit sheet [-0.5, 0.5]^2 x {0} carries a vertical
    half-sheet {0} x [-0.5, 0] x [0, 0.5] attached along the junction
    segment from (0, -0.5, 0) to (0, 0, 0); the latter endpoint is interior
    to the horizontal sheet (an irregular point), so an exact two-panel
    covering per sheet side does not exist. Three overlapping panels are
    used instead: both vertical-sheet panels extend across the junction
    line's continuation (the horizontal sheet minus one lower quadrant),
    and the third panel is the full bottom side.
    """
    m = _cells(0.5, h)
    n = 2 * m
    grid = -0.5 + np.arange(n + 1) / n          # hits 0.0 exactly at index m
    zs = np.arange(m + 1) / n                   # [0, 0.5] for the half-sheet
    ys_w = grid[:m + 1]                         # [-0.5, 0], shared with H

    hverts, htris, hvid = _structured_sheet(grid, grid,
                                            lambda x, y: (x, y, 0.0))
    h_chain = np.array([hvid(m, k) for k in range(m + 1)], dtype=np.int64)
    h_markers = {"junction": frozenset(int(v) for v in h_chain),
                 "irregular": frozenset((int(h_chain[0]), int(h_chain[-1])))}
    horizontal = TriMesh(hverts, htris, vertex_markers=h_markers)

    wverts, wtris, wvid = _structured_sheet(ys_w, zs,
                                            lambda y, z: (0.0, y, z))
    w_chain = np.array([wvid(k, 0) for k in range(m + 1)], dtype=np.int64)
    w_markers = {"junction": frozenset(int(v) for v in w_chain),
                 "irregular": frozenset((int(w_chain[0]), int(w_chain[-1])))}
    vertical = TriMesh(wverts, wtris, vertex_markers=w_markers)

    # Horizontal-sheet triangle subsets by grid cell: triangles of cell
    # (j, k) are 2*(j*n+k) and 2*(j*n+k)+1; x > 0 means j >= m, y > 0
    # means k >= m.
    def cells_where(pred):
        ids = []
        for j in range(n):
            for k in range(n):
                if pred(j, k):
                    base = 2 * (j * n + k)
                    ids.extend((base, base + 1))
        return np.asarray(ids, dtype=np.int64)

    part_right = cells_where(lambda j, k: j >= m or k >= m)
    part_left = cells_where(lambda j, k: j < m or k >= m)
    panels = (
        (PanelPart(0, +1, part_right), PanelPart(1, +1)),
        (PanelPart(0, +1, part_left), PanelPart(1, -1)),
        (PanelPart(0, -1),),
    )
    junction = JunctionChain(coords=horizontal.vertices[h_chain],
                             entries=((0, h_chain), (1, w_chain)))
    return MultiScreen(name="typeb", sheets=(horizontal, vertical),
                       junctions=(junction,), panels=panels,
                       covering_kind="overlapping", h=h, side=1.0)


def make_screen(geometry: str, h: float, side: float = 1.0) -> MultiScreen:
    """Build a named geometry: trijunction | mjunction:<m> | typeb."""
    if geometry == "trijunction":
        return make_junction_screen(3, side, h)
    if geometry == "typeb":
        return make_typeB_screen(h)
    match = re.fullmatch(r"mjunction:(\d+)", geometry)
    if match:
        return make_junction_screen(int(match.group(1)), side, h)
    raise ValueError(f"unknown geometry '{geometry}'")


# ----------------------------------------------------------------------
# OFF + manifest serialization
# ----------------------------------------------------------------------


def write_off(mesh: TriMesh, path) -> None:
    """Write an OFF file; %.17g coordinates round-trip float64 exactly."""
    lines = ["OFF", f"{mesh.num_vertices} {mesh.num_triangles} 0"]
    for p in mesh.vertices:
        lines.append(f"{p[0]:.17g} {p[1]:.17g} {p[2]:.17g}")
    for t in mesh.triangles:
        lines.append(f"3 {t[0]} {t[1]} {t[2]}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_off(path) -> tuple[np.ndarray, np.ndarray]:
    tokens = Path(path).read_text().split()
    if tokens[0] != "OFF":
        raise MeshInvariantError(f"{path}: not an OFF file")
    nv, nf = int(tokens[1]), int(tokens[2])
    pos = 4
    verts = np.array(tokens[pos:pos + 3 * nv], dtype=np.float64).reshape(nv, 3)
    pos += 3 * nv
    tris = []
    for _ in range(nf):
        cnt = int(tokens[pos])
        if cnt != 3:
            raise MeshInvariantError(f"{path}: non-triangle face")
        tris.append([int(tokens[pos + 1]), int(tokens[pos + 2]),
                     int(tokens[pos + 3])])
        pos += 4
    return verts, np.asarray(tris, dtype=np.int64)


def _fmt_ids(ids) -> str:
    return ",".join(str(int(i)) for i in ids)


def export_screen(screen: MultiScreen, directory) -> None:
    """Write one OFF file per sheet plus a plain-text manifest."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    lines = ["msbem-manifest v1",
             f"name {screen.name}",
             f"covering {screen.covering_kind}",
             f"h {screen.h:.17g}",
             f"side {screen.side:.17g}",
             f"sheets {len(screen.sheets)}"]
    for i, sheet in enumerate(screen.sheets):
        fname = f"sheet_{i}.off"
        write_off(sheet, directory / fname)
        lines.append(f"sheet {i} {fname}")
        irr = sheet.marked("irregular")
        if len(irr):
            lines.append(f"irregular {i} {_fmt_ids(irr)}")
    for l, parts in enumerate(screen.panels):
        for p, part in enumerate(parts):
            tris = "all" if part.tris is None else _fmt_ids(part.tris)
            sign = "+" if part.sign > 0 else "-"
            lines.append(f"panel {l} part {p} {sign}{part.sheet} {tris}")
    for j, chain in enumerate(screen.junctions):
        for sheet, idx in chain.entries:
            lines.append(f"junction {j} sheet {sheet} {_fmt_ids(idx)}")
    (directory / "manifest.txt").write_text("\n".join(lines) + "\n")


def import_screen(directory) -> MultiScreen:
    """Rebuild a MultiScreen from `export_screen` output, bit-exactly."""
    directory = Path(directory)
    text = (directory / "manifest.txt").read_text().strip().splitlines()
    if text[0] != "msbem-manifest v1":
        raise MeshInvariantError("unrecognized manifest header")
    meta, sheet_files, irregular = {}, {}, {}
    panel_parts: dict = {}
    chains: dict = {}
    for line in text[1:]:
        parts = line.split()
        if parts[0] in ("name", "covering", "h", "side", "sheets"):
            meta[parts[0]] = parts[1]
        elif parts[0] == "sheet":
            sheet_files[int(parts[1])] = parts[2]
        elif parts[0] == "irregular":
            irregular[int(parts[1])] = [int(x) for x in parts[2].split(",")]
        elif parts[0] == "panel":
            l, p = int(parts[1]), int(parts[3])
            sign = +1 if parts[4][0] == "+" else -1
            sheet = int(parts[4][1:])
            tris = None if parts[5] == "all" else np.array(
                [int(x) for x in parts[5].split(",")], dtype=np.int64)
            panel_parts.setdefault(l, {})[p] = PanelPart(sheet, sign, tris)
        elif parts[0] == "junction":
            j, sheet = int(parts[1]), int(parts[3])
            idx = np.array([int(x) for x in parts[4].split(",")], dtype=np.int64)
            chains.setdefault(j, []).append((sheet, idx))
    sheets = []
    for i in range(int(meta["sheets"])):
        verts, tris = read_off(directory / sheet_files[i])
        markers = {}
        junction_ids = set()
        for j in sorted(chains):
            for sheet, idx in chains[j]:
                if sheet == i:
                    junction_ids.update(int(x) for x in idx)
        if junction_ids:
            markers["junction"] = frozenset(junction_ids)
        if i in irregular:
            markers["irregular"] = frozenset(irregular[i])
        sheets.append(TriMesh(verts, tris, vertex_markers=markers))
    junctions = []
    for j in sorted(chains):
        entries = tuple((sheet, idx) for sheet, idx in chains[j])
        coords = sheets[entries[0][0]].vertices[entries[0][1]]
        junctions.append(JunctionChain(coords=coords, entries=entries))
    panels = tuple(tuple(panel_parts[l][p] for p in sorted(panel_parts[l]))
                   for l in sorted(panel_parts))
    return MultiScreen(name=meta["name"], sheets=tuple(sheets),
                       junctions=tuple(junctions), panels=panels,
                       covering_kind=meta["covering"], h=float(meta["h"]),
                       side=float(meta["side"]))
