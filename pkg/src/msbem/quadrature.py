"""Quadrature rules for triangle pairs with overlapping or touching supports.

Weakly singular double integrals over triangle products are computed with
regularizing coordinate transforms: the product domain is split into a few
4D subdomains on which a polar-like substitution removes the kernel
singularity, after which tensor Gauss-Legendre quadrature converges fast.
Pairs are classified by the number of shared vertices:

    3 shared  coincident triangles
    2 shared  common edge
    1 shared  common vertex
    0 shared  disjoint (plain symmetric triangle rules on each factor)

Triangles are parametrized over the unit simplex T = {0 <= v <= u <= 1} by
chart(u, v) = P0 + u*(P1 - P0) + v*(P2 - P1), so the barycentric weights of
(u, v) are (1-u, u-v, v). The transforms require the shared sub-simplex to
come first in the vertex order of both triangles; `classify_pair` returns
the permutations that achieve this canonically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import QuadratureError

# Pair class codes equal the shared-vertex count.
DISJOINT = 0
COMMON_VERTEX = 1
COMMON_EDGE = 2
COINCIDENT = 3


@dataclass(frozen=True)
class QuadratureConfig:
    """Accuracy knobs for pairwise Galerkin quadrature.

    Parameters
    ----------
    order : int
        Gauss-Legendre points per dimension inside the regularizing 4D
        transforms (singular pair classes).
    far_order : int
        Base accuracy for well-separated pairs; each triangle factor uses a
        symmetric rule of polynomial strength ``far_order + 1``.
    near_threshold : float
        Disjoint pairs closer than ``near_threshold * max(diameters)``
        (centroid distance) are upgraded to strength ``far_order + 3``.
    """

    order: int = 5
    far_order: int = 3
    near_threshold: float = 1.5

    def __post_init__(self) -> None:
        if self.order < 1 or self.far_order < 1:
            raise QuadratureError("quadrature orders must be >= 1")
        if self.near_threshold < 0.0:
            raise QuadratureError("near_threshold must be nonnegative")


def gauss01(q: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [0, 1]."""
    if q < 1:
        raise QuadratureError("need at least one Gauss point")
    x, w = np.polynomial.legendre.leggauss(q)
    return 0.5 * (x + 1.0), 0.5 * w


def _orbit(points, weights, a, b, c, w):
    seen = set()
    for perm in ((a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)):
        if perm not in seen:
            seen.add(perm)
            points.append(perm)
            weights.append(w)


@lru_cache(maxsize=None)
def triangle_rule(strength: int) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric quadrature rule on a triangle, exact to `strength`.

    Returns barycentric coordinates (N, 3) and weights (N,) normalized to
    sum to one; multiply by the triangle area to integrate. Orders beyond
    the tabulated symmetric rules fall back to a collapsed tensor rule.
    """
    if strength < 1:
        raise QuadratureError("rule strength must be >= 1")
    pts: list[tuple[float, float, float]] = []
    wts: list[float] = []
    third = 1.0 / 3.0
    if strength == 1:
        pts.append((third, third, third))
        wts.append(1.0)
    elif strength == 2:
        _orbit(pts, wts, 2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0, third)
    elif strength in (3, 4):
        a = 0.445948490915965
        b = 0.091576213509771
        _orbit(pts, wts, 1.0 - 2.0 * a, a, a, 0.223381589678011)
        _orbit(pts, wts, 1.0 - 2.0 * b, b, b, 0.109951743655322)
    elif strength == 5:
        s15 = math.sqrt(15.0)
        a = (6.0 + s15) / 21.0
        b = (6.0 - s15) / 21.0
        pts.append((third, third, third))
        wts.append(9.0 / 40.0)
        _orbit(pts, wts, 1.0 - 2.0 * a, a, a, (155.0 + s15) / 1200.0)
        _orbit(pts, wts, 1.0 - 2.0 * b, b, b, (155.0 - s15) / 1200.0)
    elif strength == 6:
        a = 0.063089014491502
        b = 0.249286745170910
        _orbit(pts, wts, 1.0 - 2.0 * a, a, a, 0.050844906370207)
        _orbit(pts, wts, 1.0 - 2.0 * b, b, b, 0.116786275726379)
        _orbit(pts, wts, 0.636502499121399, 0.310352451033785, 0.053145049844816,
               0.082851075618374)
    else:
        return _collapsed_rule((strength + 3) // 2)
    return np.asarray(pts, dtype=np.float64), np.asarray(wts, dtype=np.float64)


def _collapsed_rule(q: int) -> tuple[np.ndarray, np.ndarray]:
    """Duffy-collapsed q*q tensor rule in simplex coordinates."""
    x, w = gauss01(q)
    u = np.repeat(x, q)
    v = u * np.tile(x, q)
    wt = np.repeat(w * x, q) * np.tile(w, q) * 2.0
    bary = np.column_stack([1.0 - u, u - v, v])
    return bary, wt


def bary_to_simplex(bary: np.ndarray) -> np.ndarray:
    """Map barycentric coordinates to (u, v) simplex coordinates."""
    bary = np.asarray(bary, dtype=np.float64)
    return np.column_stack([bary[..., 1] + bary[..., 2], bary[..., 2]])


# ----------------------------------------------------------------------
# Regularizing transforms. Each table row is (u_test, v_test, u_trial,
# v_trial, weight); weights include the subdomain Jacobians and sum to
# |T|^2 = 1/4 so that multiplying by (2*area_test)*(2*area_trial) and the
# kernel values integrates over the triangle product.
# ----------------------------------------------------------------------


def _coincident_maps(e1, e2, e3, xi):
    j = xi ** 3 * e1 ** 2 * e2
    a = (xi, xi * (1.0 - e1 + e1 * e2))
    b = (xi * (1.0 - e1 * e2 * e3), xi * (1.0 - e1))
    c = (xi, xi * e1 * (1.0 - e2 + e2 * e3))
    d = (xi * (1.0 - e1 * e2), xi * e1 * (1.0 - e2))
    e = (xi * (1.0 - e1 * e2 * e3), xi * e1 * (1.0 - e2 * e3))
    f = (xi, xi * e1 * (1.0 - e2))
    return [(a, b, j), (b, a, j), (c, d, j), (d, c, j), (e, f, j), (f, e, j)]


def _edge_maps(e1, e2, e3, xi):
    j1 = xi ** 3 * e1 ** 2
    j2 = xi ** 3 * e1 ** 2 * e2
    return [
        ((xi, xi * e1 * e3), (xi * (1.0 - e1 * e2), xi * e1 * (1.0 - e2)), j1),
        ((xi, xi * e1), (xi * (1.0 - e1 * e2 * e3), xi * e1 * e2 * (1.0 - e3)), j2),
        ((xi * (1.0 - e1 * e2), xi * e1 * (1.0 - e2)), (xi, xi * e1 * e2 * e3), j2),
        ((xi * (1.0 - e1 * e2 * e3), xi * e1 * e2 * (1.0 - e3)), (xi, xi * e1), j2),
        ((xi * (1.0 - e1 * e2 * e3), xi * e1 * (1.0 - e2 * e3)), (xi, xi * e1 * e2), j2),
    ]


def _vertex_maps(e1, e2, e3, xi):
    j = xi ** 3 * e2
    return [
        ((xi, xi * e1), (xi * e2, xi * e2 * e3), j),
        ((xi * e2, xi * e2 * e3), (xi, xi * e1), j),
    ]


@lru_cache(maxsize=None)
def transform_table(pair_class: int, order: int) -> np.ndarray:
    """Flattened 4D quadrature table for a singular pair class.

    Rows are (u_test, v_test, u_trial, v_trial, weight). The weight sums to
    1/4 (the measure of the simplex product) for every class.
    """
    if pair_class not in (COMMON_VERTEX, COMMON_EDGE, COINCIDENT):
        raise QuadratureError(f"no regularizing transform for class {pair_class}")
    maps = {COINCIDENT: _coincident_maps, COMMON_EDGE: _edge_maps,
            COMMON_VERTEX: _vertex_maps}[pair_class]
    x, w = gauss01(order)
    rows = []
    for i1, e1 in enumerate(x):
        for i2, e2 in enumerate(x):
            for i3, e3 in enumerate(x):
                for i4, xi in enumerate(x):
                    base = w[i1] * w[i2] * w[i3] * w[i4]
                    for (ut, vt), (us, vs), jac in maps(e1, e2, e3, xi):
                        rows.append((ut, vt, us, vs, base * jac))
    return np.asarray(rows, dtype=np.float64)


@lru_cache(maxsize=None)
def disjoint_table(strength: int) -> np.ndarray:
    """Tensor product of two symmetric triangle rules in simplex coords."""
    bary, w = triangle_rule(strength)
    uv = bary_to_simplex(bary)
    n = len(w)
    it, js = np.repeat(np.arange(n), n), np.tile(np.arange(n), n)
    rows = np.column_stack([uv[it, 0], uv[it, 1], uv[js, 0], uv[js, 1],
                            0.25 * w[it] * w[js]])
    return rows


def _match_key(p: np.ndarray) -> tuple:
    return (float(p[0]), float(p[1]), float(p[2]))


def classify_pair(tri_test: np.ndarray, tri_trial: np.ndarray):
    """Detect the pair class and canonical vertex orders.

    Vertices are matched by exact coordinate equality, which is how
    coincident front/back panel copies are constructed. Returns
    ``(pair_class, perm_test, perm_trial)`` where the permutations list the
    shared vertices first, in a deterministic order, so that the transforms
    of `transform_table` apply and coincident copies of the same physical
    pair produce bit-identical integrals.
    """
    tt = np.asarray(tri_test, dtype=np.float64)
    ts = np.asarray(tri_trial, dtype=np.float64)
    if tt.shape != (3, 3) or ts.shape != (3, 3):
        raise QuadratureError("triangles must be (3, 3) coordinate arrays")
    keys_t = [_match_key(tt[i]) for i in range(3)]
    keys_s = [_match_key(ts[i]) for i in range(3)]
    shared = sorted(set(keys_t) & set(keys_s))
    cls = len(shared)
    perm_t = sorted(range(3), key=lambda i: (keys_t[i] not in shared,
                                             shared.index(keys_t[i])
                                             if keys_t[i] in shared else 0,
                                             keys_t[i]))
    perm_s = sorted(range(3), key=lambda i: (keys_s[i] not in shared,
                                             shared.index(keys_s[i])
                                             if keys_s[i] in shared else 0,
                                             keys_s[i]))
    return cls, np.asarray(perm_t), np.asarray(perm_s)


def _chart(tri: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return (tri[0][None, :] + np.outer(u, tri[1] - tri[0])
            + np.outer(v, tri[2] - tri[1]))


def sauter_schwab_integral(kernel, tri_test, tri_trial,
                           cfg: QuadratureConfig | None = None) -> complex:
    """Integrate kernel(x, y) over the product of two triangles.

    The pair class is detected from exact vertex coincidence and the
    matching regularizing transform is applied; disjoint pairs use a plain
    symmetric product rule (upgraded when the triangles are near each
    other). `kernel` must accept two (N, 3) arrays and return (N,) values.

    This is the reference path; the production assembly uses the same
    tables inside compiled kernels.
    """
    cfg = cfg or QuadratureConfig()
    tt = np.asarray(tri_test, dtype=np.float64)
    ts = np.asarray(tri_trial, dtype=np.float64)
    cls, pt, ps = classify_pair(tt, ts)
    at = 0.5 * np.linalg.norm(np.cross(tt[1] - tt[0], tt[2] - tt[0]))
    as_ = 0.5 * np.linalg.norm(np.cross(ts[1] - ts[0], ts[2] - ts[0]))
    if at <= 0.0 or as_ <= 0.0:
        raise QuadratureError("degenerate triangle")
    if cls == DISJOINT:
        ct, cs = tt.mean(axis=0), ts.mean(axis=0)
        diam = max(np.linalg.norm(tt[i] - tt[j]) for i in range(3) for j in range(i))
        diam = max(diam, max(np.linalg.norm(ts[i] - ts[j])
                             for i in range(3) for j in range(i)))
        near = np.linalg.norm(ct - cs) < cfg.near_threshold * diam
        table = disjoint_table(cfg.far_order + (3 if near else 1))
        ordt, ords = tt, ts
    else:
        table = transform_table(cls, cfg.order)
        ordt, ords = tt[pt], ts[ps]
    x = _chart(ordt, table[:, 0], table[:, 1])
    y = _chart(ords, table[:, 2], table[:, 3])
    vals = np.asarray(kernel(x, y), dtype=np.complex128)
    return complex(np.sum(vals * table[:, 4]) * 4.0 * at * as_)
