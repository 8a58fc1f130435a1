"""Galerkin assembly of boundary integral operators on multi-trace spaces.

The assembly works on a *scene*: the concatenated carrier triangles of all
panel blocks of a space. Triangle pairs are classified by geometric vertex
identity (bit-exact coordinate equality across panels), so a triangle and
its mirror copy on another panel interact through the coincident-pair
regularizing quadrature exactly as a self-interaction; this is what makes
the virtual inflated screen work numerically. Far pairs use symmetric
triangle rules with a distance-based order upgrade; singular pairs use the
regularizing transform tables in canonical (gid-sorted) vertex order so
that front and back copies produce bit-identical entries.

When test and trial space are the same object, only the upper pair
triangle is integrated and the matrix is completed by symmetry.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .errors import QuadratureError
from .quadrature import (COINCIDENT, COMMON_EDGE, COMMON_VERTEX,
                         QuadratureConfig, transform_table, triangle_rule)
from .spaces import CONTINUOUS_P1, DUAL_P1, FunctionSpace


@dataclass(frozen=True)
class KernelConfig:
    """Helmholtz kernel parameters."""

    kappa: complex

    def __post_init__(self):
        if complex(self.kappa).real < 0:
            raise ValueError("wavenumber must have nonnegative real part")


@dataclass(frozen=True)
class IncidentWave:
    """Plane wave exp(i kappa direction . x)."""

    direction: tuple
    kappa: complex

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=np.float64)
        if abs(np.linalg.norm(d) - 1.0) > 1e-12:
            raise ValueError("direction must be a unit vector")
        object.__setattr__(self, "direction", tuple(d))


@dataclass
class GalerkinMatrix:
    """Assembled bilinear form with its spaces and a form tag."""

    entries: object            # dense ndarray or scipy sparse
    test_space: FunctionSpace
    trial_space: FunctionSpace
    form: str                  # "V" | "W" | "Gram" | "B-block"

    @property
    def shape(self):
        return self.entries.shape

    def dense(self) -> np.ndarray:
        if sp.issparse(self.entries):
            return self.entries.toarray()
        return self.entries

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.entries @ x

    def to_csv(self, path) -> None:
        """Plain-text dump, one row per matrix row, entries as re,im pairs."""
        dense = self.dense()
        with open(path, "w") as f:
            f.write(f"# msbem-matrix form={self.form} "
                    f"shape={dense.shape[0]}x{dense.shape[1]}\n")
            for row in np.atleast_2d(dense):
                f.write(",".join(f"{v.real:.17g},{v.imag:.17g}"
                                 for v in row) + "\n")


def greens(cfg: KernelConfig, z) -> complex | np.ndarray:
    """Radiating fundamental solution exp(ik|z|)/(4 pi |z|)."""
    z = np.asarray(z, dtype=np.float64)
    single = z.ndim == 1
    r = np.linalg.norm(np.atleast_2d(z), axis=1)
    if np.any(r == 0.0):
        raise QuadratureError("kernel singularity: zero separation")
    vals = np.exp(1j * cfg.kappa * r) / (4.0 * np.pi * r)
    return complex(vals[0]) if single else vals


# ----------------------------------------------------------------------
# Scenes: flattened carrier geometry of a space
# ----------------------------------------------------------------------


@dataclass
class Scene:
    coords: np.ndarray           # (T, 3, 3)
    areas: np.ndarray
    normals: np.ndarray
    cents: np.ndarray
    diams: np.ndarray
    nshape: int
    slot_ptr: np.ndarray
    slot_dof: np.ndarray
    slot_wt: np.ndarray
    ndof: int

    @cached_property
    def scatter(self) -> sp.csr_matrix:
        nslots = len(self.coords) * self.nshape
        return sp.csr_matrix(
            (self.slot_wt, self.slot_dof, self.slot_ptr),
            shape=(nslots, self.ndof))

    @cached_property
    def curls(self) -> np.ndarray:
        """Surface curl of corner hats: opposite edge over twice the area."""
        c = self.coords
        out = np.empty_like(c)
        out[:, 0] = c[:, 2] - c[:, 1]
        out[:, 1] = c[:, 0] - c[:, 2]
        out[:, 2] = c[:, 1] - c[:, 0]
        return out / (2.0 * self.areas[:, None, None])

    @cached_property
    def diameter(self) -> float:
        pts = self.coords.reshape(-1, 3)
        return float(np.linalg.norm(pts.max(axis=0) - pts.min(axis=0)))


def build_scene(space: FunctionSpace) -> Scene:
    nshape = space.blocks[0].nshape
    coords, ptrs, dofs, wts = [], [np.zeros(1, dtype=np.int64)], [], []
    areas, normals, cents, diams = [], [], [], []
    starts = space.block_starts
    for bi, b in enumerate(space.blocks):
        if b.nshape != nshape:
            raise ValueError("mixed shape kinds in one space")
        m = b.carrier
        coords.append(m.tri_coords)
        areas.append(m.areas)
        normals.append(m.normals)
        cents.append(m.centroids)
        diams.append(m.tri_diameters)
        ptrs.append(b.slot_ptr[1:] + ptrs[-1][-1])
        dofs.append(b.slot_dof + starts[bi])
        wts.append(b.slot_wt)
    return Scene(coords=np.ascontiguousarray(np.concatenate(coords)),
                 areas=np.concatenate(areas),
                 normals=np.ascontiguousarray(np.concatenate(normals)),
                 cents=np.ascontiguousarray(np.concatenate(cents)),
                 diams=np.concatenate(diams),
                 nshape=nshape,
                 slot_ptr=np.concatenate(ptrs),
                 slot_dof=np.concatenate(dofs),
                 slot_wt=np.concatenate(wts),
                 ndof=space.dimension)


def _scene_gids(scene_t: Scene, scene_s: Scene | None) -> tuple:
    """Geometric vertex ids by exact coordinate identity, shared registry."""
    vt = scene_t.coords.reshape(-1, 3)
    if scene_s is None:
        _, inv = np.unique(vt, axis=0, return_inverse=True)
        g = inv.reshape(-1, 3)
        return g, g
    vs = scene_s.coords.reshape(-1, 3)
    _, inv = np.unique(np.concatenate([vt, vs]), axis=0, return_inverse=True)
    return inv[:len(vt)].reshape(-1, 3), inv[len(vt):].reshape(-1, 3)


def _canonical_perm(gids: np.ndarray, shared: tuple) -> tuple:
    """Corner order: shared gids ascending first, then the rest ascending."""
    rest = sorted(g for g in gids if g not in shared)
    order = list(shared) + rest
    lookup = {int(g): k for k, g in enumerate(gids)}
    return tuple(lookup[int(g)] for g in order)


def find_singular_pairs(gt: np.ndarray, gs: np.ndarray, same: bool):
    """All triangle pairs sharing at least one geometric vertex.

    Returns (pi, pj, perm_t, perm_s, cls) plus, per test triangle, the
    sorted list of singular partners as CSR arrays (for the far-pass skip).
    With same=True each unordered pair is emitted once, with the roles in
    a geometry-canonical order (ascending sorted gid triples) so that all
    panel copies of one geometric pair integrate bit-identically; the
    partner lists still contain both orders.
    """
    buckets: dict = {}
    for j in range(len(gs)):
        for g in gs[j]:
            buckets.setdefault(int(g), []).append(j)
    keys = [tuple(sorted(int(g) for g in row)) for row in gt] if same else None
    pi, pj, pt, ps, cls = [], [], [], [], []
    partners: list = [[] for _ in range(len(gt))]
    for i in range(len(gt)):
        gset_t = set(int(g) for g in gt[i])
        cand: set = set()
        for g in gset_t:
            cand.update(buckets.get(g, ()))
        for j in sorted(cand):
            partners[i].append(j)
            if same and j < i:
                continue
            shared = tuple(sorted(gset_t.intersection(int(g) for g in gs[j])))
            fi, fj = (j, i) if same and keys[j] < keys[i] else (i, j)
            pi.append(fi)
            pj.append(fj)
            cls.append(len(shared))
            pt.append(_canonical_perm(gt[fi], shared))
            ps.append(_canonical_perm(gs[fj], shared))
    ptr = np.zeros(len(gt) + 1, dtype=np.int64)
    for i, p in enumerate(partners):
        ptr[i + 1] = ptr[i] + len(p)
    idx = np.empty(ptr[-1], dtype=np.int64)
    for i, p in enumerate(partners):
        idx[ptr[i]:ptr[i + 1]] = p
    return (np.asarray(pi, dtype=np.int64), np.asarray(pj, dtype=np.int64),
            np.asarray(pt, dtype=np.int64).reshape(-1, 3),
            np.asarray(ps, dtype=np.int64).reshape(-1, 3),
            np.asarray(cls, dtype=np.int64), ptr, idx)


def _rule_arrays(strength: int):
    bary, w = triangle_rule(strength)
    return (np.ascontiguousarray(bary[:, 1:3]),
            np.ascontiguousarray(0.5 * w))


def _stacked_tables(order: int):
    """Transform tables for classes 1..3 stacked with offsets by class."""
    tables = [np.zeros((0, 5))]                  # class 0 unused
    for c in (COMMON_VERTEX, COMMON_EDGE, COINCIDENT):
        tables.append(transform_table(c, order))
    off = np.zeros(5, dtype=np.int64)
    for c in range(1, 5):
        off[c] = off[c - 1] + len(tables[c - 1])
    return np.ascontiguousarray(np.concatenate(tables)), off


def _chunk_rows(nsh: int, ncol: int, budget_bytes: int = 96_000_000) -> int:
    return max(8, budget_bytes // (16 * nsh * max(1, ncol)))


def _assemble_pairwise(form: str, test: FunctionSpace, trial: FunctionSpace,
                       cfg: KernelConfig, q: QuadratureConfig) -> np.ndarray:
    same = test is trial
    scene_t = build_scene(test)
    scene_s = scene_t if same else build_scene(trial)
    if form == "W" and (scene_t.nshape != 3 or scene_s.nshape != 3):
        raise ValueError("hypersingular requires continuous densities")
    gt, gs = _scene_gids(scene_t, None if same else scene_s)
    pi, pj, perm_t, perm_s, cls, sptr, sidx = find_singular_pairs(gt, gs, same)

    kappa = complex(cfg.kappa)
    fxy, fw = _rule_arrays(q.far_order)
    nxy, nw = _rule_arrays(q.far_order + 3)
    nsh_t, nsh_s = scene_t.nshape, scene_s.nshape
    T_t = len(scene_t.coords)
    A = np.zeros((scene_t.ndof, scene_s.ndof), dtype=np.complex128)

    chunk = _chunk_rows(nsh_t, scene_s.ndof)
    for i0 in range(0, T_t, chunk):
        i1 = min(T_t, i0 + chunk)
        R = np.zeros((i1 - i0, nsh_t, scene_s.ndof), dtype=np.complex128)
        if form == "V":
            _kernels.far_single_layer(
                scene_t.coords, scene_t.cents, scene_t.diams, scene_t.areas,
                scene_s.coords, scene_s.cents, scene_s.diams, scene_s.areas,
                sptr, sidx, fxy, fw, nxy, nw, q.near_threshold, kappa,
                i0, i1, same, nsh_t, nsh_s,
                scene_s.slot_ptr, scene_s.slot_dof, scene_s.slot_wt, R)
        else:
            _kernels.far_hypersingular(
                scene_t.coords, scene_t.cents, scene_t.diams, scene_t.areas,
                scene_t.normals, scene_t.curls,
                scene_s.coords, scene_s.cents, scene_s.diams, scene_s.areas,
                scene_s.normals, scene_s.curls,
                sptr, sidx, fxy, fw, nxy, nw, q.near_threshold, kappa,
                i0, i1, same,
                scene_s.slot_ptr, scene_s.slot_dof, scene_s.slot_wt, R)
        rows = scene_t.scatter[i0 * nsh_t:i1 * nsh_t]
        A += rows.T @ R.reshape(-1, scene_s.ndof)
    if same:
        A = A + A.T

    table, off = _stacked_tables(q.order)
    out = np.empty((len(pi), nsh_t, nsh_s), dtype=np.complex128)
    if len(pi):
        if form == "V":
            _kernels.singular_single_layer(
                scene_t.coords, scene_t.areas, scene_s.coords, scene_s.areas,
                pi, pj, perm_t, perm_s, cls, table, off, kappa,
                nsh_t, nsh_s, out)
        else:
            _kernels.singular_hypersingular(
                scene_t.coords, scene_t.areas, scene_t.normals, scene_t.curls,
                scene_s.coords, scene_s.areas, scene_s.normals, scene_s.curls,
                pi, pj, perm_t, perm_s, cls, table, off, kappa, out)
        aa = np.repeat(np.arange(nsh_t), nsh_s)
        bb = np.tile(np.arange(nsh_s), nsh_t)
        rows_idx = (pi[:, None] * nsh_t + aa[None, :]).ravel()
        cols_idx = (pj[:, None] * nsh_s + bb[None, :]).ravel()
        data = out.reshape(len(pi), -1).ravel()
        if same:
            nd = pi != pj
            rows_idx = np.concatenate(
                [rows_idx, (pj[nd][:, None] * nsh_t + bb[None, :]).ravel()])
            cols_idx = np.concatenate(
                [cols_idx, (pi[nd][:, None] * nsh_s + aa[None, :]).ravel()])
            data = np.concatenate([data, out[nd].reshape(-1)])
        P = sp.coo_matrix(
            (data, (rows_idx, cols_idx)),
            shape=(T_t * nsh_t, len(scene_s.coords) * nsh_s)).tocsr()
        A += (scene_t.scatter.T @ P @ scene_s.scatter).toarray()
    if not np.all(np.isfinite(A)):
        raise QuadratureError("non-finite Galerkin entries")
    return A


def assemble_single_layer(test: FunctionSpace, trial: FunctionSpace,
                          cfg: KernelConfig,
                          q: QuadratureConfig = QuadratureConfig()) -> GalerkinMatrix:
    """Weakly singular operator on the inflated screen."""
    A = _assemble_pairwise("V", test, trial, cfg, q)
    return GalerkinMatrix(entries=A, test_space=test, trial_space=trial,
                          form="V")


def assemble_hypersingular(test: FunctionSpace, trial: FunctionSpace,
                           cfg: KernelConfig,
                           q: QuadratureConfig = QuadratureConfig()) -> GalerkinMatrix:
    """Hypersingular operator via the integration-by-parts form."""
    for s in (test, trial):
        if s.blocks[0].shape_kind != 1:
            raise ValueError("hypersingular requires continuous densities")
        if s.kind not in (CONTINUOUS_P1, DUAL_P1):
            raise ValueError("hypersingular requires continuous densities")
    A = _assemble_pairwise("W", test, trial, cfg, q)
    return GalerkinMatrix(entries=A, test_space=test, trial_space=trial,
                          form="W")


# ----------------------------------------------------------------------
# Duality pairing (exact piecewise-polynomial integration)
# ----------------------------------------------------------------------

# barycentric coordinates (relative to the parent) of each refinement
# child's corners, in the child construction order
_CHILD_LAMBDA = np.array([
    [[1, 0, 0], [0.5, 0.5, 0], [1 / 3, 1 / 3, 1 / 3]],
    [[0.5, 0.5, 0], [0, 1, 0], [1 / 3, 1 / 3, 1 / 3]],
    [[0, 1, 0], [0, 0.5, 0.5], [1 / 3, 1 / 3, 1 / 3]],
    [[0, 0.5, 0.5], [0, 0, 1], [1 / 3, 1 / 3, 1 / 3]],
    [[0, 0, 1], [0.5, 0, 0.5], [1 / 3, 1 / 3, 1 / 3]],
    [[0.5, 0, 0.5], [1, 0, 0], [1 / 3, 1 / 3, 1 / 3]],
], dtype=np.float64)

_EDGE_QUAD = np.array([[2.0, 1.0, 1.0],
                       [1.0, 2.0, 1.0],
                       [1.0, 1.0, 2.0]]) / 12.0


def _corner_values(block, refined=None) -> sp.csr_matrix:
    """(3*T_ref x ndof) matrix of basis values at refined-child corners."""
    if block.kind in ("dual-constant", "dual-p1"):
        S = block.scatter_matrix()
        if block.nshape == 3:
            return S
        T = block.carrier.num_triangles
        expand = sp.csr_matrix(
            (np.ones(3 * T), (np.arange(3 * T), np.repeat(np.arange(T), 3))),
            shape=(3 * T, T))
        return expand @ S
    # primal block evaluated on the refinement of its carrier
    info = refined.refinement
    S = block.scatter_matrix()                    # (T*nshape x ndof)
    rows, cols, vals = [], [], []
    nsh = block.nshape
    for t in range(refined.num_triangles):
        parent = int(info.parent_tri[t])
        pattern = _CHILD_LAMBDA[t % 6]
        for gamma in range(3):
            slot_out = 3 * t + gamma
            if nsh == 1:
                rows.append(slot_out)
                cols.append(parent)
                vals.append(1.0)
            else:
                for k in range(3):
                    lam = pattern[gamma, k]
                    if lam != 0.0:
                        rows.append(slot_out)
                        cols.append(parent * 3 + k)
                        vals.append(lam)
    L = sp.coo_matrix((vals, (rows, cols)),
                      shape=(3 * refined.num_triangles,
                             block.carrier.num_triangles * nsh)).tocsr()
    return L @ S


def assemble_duality(test: FunctionSpace, trial: FunctionSpace) -> GalerkinMatrix:
    """Pairing M[i,j] = integral of test_i * trial_j, block-diagonal.

    One of the spaces must be a dual space (carried by the barycentric
    refinement of the other's carrier); products are integrated exactly
    with the quadratic midpoint rule on refinement children.
    """
    if test.dimension != trial.dimension:
        raise ValueError("duality pairing needs equal dimensions")
    if len(test.blocks) != len(trial.blocks):
        raise ValueError("duality pairing needs matching panel blocks")
    blocks = []
    for bt, bs in zip(test.blocks, trial.blocks):
        if bt.panel != bs.panel:
            raise ValueError("panel order mismatch in duality pairing")
        dual_t = bt.kind in ("dual-constant", "dual-p1")
        dual_s = bs.kind in ("dual-constant", "dual-p1")
        if dual_t == dual_s:
            raise ValueError("duality pairing needs one primal and one "
                             "dual space")
        refined = (bt if dual_t else bs).carrier
        primal_block = bs if dual_t else bt
        if refined.refinement is None or \
                refined.refinement.parent.num_triangles \
                != primal_block.carrier.num_triangles or \
                not np.array_equal(refined.refinement.parent.vertices,
                                   primal_block.carrier.vertices):
            raise ValueError("dual carrier is not the refinement of the "
                             "primal carrier")
        C_t = _corner_values(bt, refined)
        C_s = _corner_values(bs, refined)
        areas = refined.areas
        K = sp.block_diag([a * _EDGE_QUAD for a in areas], format="csr")
        blocks.append((C_t.T @ K @ C_s).tocsr())
    M = sp.block_diag(blocks, format="csr")
    return GalerkinMatrix(entries=M, test_space=test, trial_space=trial,
                          form="Gram")


# ----------------------------------------------------------------------
# Right-hand sides and potentials
# ----------------------------------------------------------------------


def point_triangle_distance(x: np.ndarray, coords: np.ndarray) -> np.ndarray:
    """Euclidean distance from one point to each triangle (T, 3, 3)."""
    a, b, c = coords[:, 0], coords[:, 1], coords[:, 2]
    ab, ac = b - a, c - a
    ap = x[None, :] - a
    d1 = np.einsum("ij,ij->i", ab, ap)
    d2 = np.einsum("ij,ij->i", ac, ap)
    bp = x[None, :] - b
    d3 = np.einsum("ij,ij->i", ab, bp)
    d4 = np.einsum("ij,ij->i", ac, bp)
    cp = x[None, :] - c
    d5 = np.einsum("ij,ij->i", ab, cp)
    d6 = np.einsum("ij,ij->i", ac, cp)
    vc = d1 * d4 - d3 * d2
    vb = d5 * d2 - d1 * d6
    va = d3 * d6 - d5 * d4
    with np.errstate(divide="ignore", invalid="ignore"):
        t_ab = np.nan_to_num(d1 / (d1 - d3))
        t_ac = np.nan_to_num(d2 / (d2 - d6))
        t_bc = np.nan_to_num((d4 - d3) / ((d4 - d3) + (d5 - d6)))
        denom = va + vb + vc
        v_in = np.nan_to_num(vb / denom)
        w_in = np.nan_to_num(vc / denom)
    candidates = [
        ((d1 <= 0) & (d2 <= 0), a),
        ((d3 >= 0) & (d4 <= d3), b),
        ((vc <= 0) & (d1 >= 0) & (d3 <= 0), a + t_ab[:, None] * ab),
        ((d6 >= 0) & (d5 <= d6), c),
        ((vb <= 0) & (d2 >= 0) & (d6 <= 0), a + t_ac[:, None] * ac),
        ((va <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0),
         b + t_bc[:, None] * (c - b)),
    ]
    closest = a + v_in[:, None] * ab + w_in[:, None] * ac
    taken = np.zeros(len(coords), dtype=bool)
    for cond, pt in candidates:
        use = cond & ~taken
        closest[use] = pt[use]
        taken |= cond
    return np.linalg.norm(x[None, :] - closest, axis=1)


def assemble_rhs(space: FunctionSpace, wave: IncidentWave, problem: str,
                 strength: int = 6) -> np.ndarray:
    """Plane-wave excitation tested against the primal space.

    Dirichlet datum: g = -u_inc (equal on front/back copies). Neumann
    datum: f = -d u_inc/dn with the panel-outward normal (opposite on the
    two copies); the total-field boundary condition is homogeneous.
    """
    problem = problem.lower()
    if problem == "dirichlet" and space.blocks[0].shape_kind != 0:
        raise ValueError("dirichlet data tests against piecewise constants")
    if problem == "neumann" and space.blocks[0].shape_kind != 1:
        raise ValueError("neumann data tests against continuous densities")
    scene = build_scene(space)
    bary, w = triangle_rule(strength)
    d = np.asarray(wave.direction)
    kappa = complex(wave.kappa)
    pts = np.einsum("pk,tkx->tpx", bary, scene.coords)
    uinc = np.exp(1j * kappa * (pts @ d))
    if problem == "dirichlet":
        datum = -uinc
    else:
        dn = scene.normals @ d
        datum = (-1j * kappa) * dn[:, None] * uinc
    nsh = scene.nshape
    shape_vals = np.ones((len(bary), 1)) if nsh == 1 else bary
    integ = np.einsum("tp,pk,p->tk", datum, shape_vals, w) \
        * scene.areas[:, None]
    return scene.scatter.T @ integ.reshape(-1)


def eval_potential(coefficients: np.ndarray, space: FunctionSpace,
                   cfg: KernelConfig, points, layer: str = "single",
                   strength: int = 6) -> np.ndarray:
    """Radiated field of a surface density at exterior points.

    layer "single": U(x) = int G(x-y) u(y); "double": the normal-derivative
    kernel with panel-outward normal at y. Points closer to the screen than
    1e-6 of its diameter are rejected.
    """
    if layer not in ("single", "double"):
        raise ValueError(f"unknown layer '{layer}'")
    scene = build_scene(space)
    coefficients = np.asarray(coefficients, dtype=np.complex128)
    bary, w = triangle_rule(strength)
    pts = np.einsum("pk,tkx->tpx", bary, scene.coords)
    # density value at quadrature points from per-slot coefficients
    slot_c = (scene.scatter @ coefficients).reshape(len(scene.coords),
                                                    scene.nshape)
    if scene.nshape == 1:
        dens = np.repeat(slot_c, len(bary), axis=1)
    else:
        dens = slot_c @ bary.T
    kappa = complex(cfg.kappa)
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    out = np.empty(len(points), dtype=np.complex128)
    wa = w[None, :] * scene.areas[:, None]
    tol = 1e-6 * scene.diameter
    for m, x in enumerate(points):
        if point_triangle_distance(x, scene.coords).min() <= tol:
            raise QuadratureError("evaluation point too close to the screen")
        diff = x[None, None, :] - pts
        r = np.linalg.norm(diff, axis=2)
        phase = np.exp(1j * kappa * r)
        if layer == "single":
            kern = phase / (4.0 * np.pi * r)
        else:
            rn = np.einsum("tpx,tx->tp", diff, scene.normals)
            kern = -rn * phase * (1j * kappa * r - 1.0) \
                / (4.0 * np.pi * r ** 3)
        out[m] = np.sum(kern * dens * wa)
    return out
