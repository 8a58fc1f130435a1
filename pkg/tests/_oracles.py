"""Independent reference integrators used only by the tests.

Everything here avoids the package's quadrature module on purpose: Gauss
nodes come from numpy.polynomial, triangle charts and subdivision are
written out directly, and singular pair integrals of the static kernel
1/(4 pi r) are obtained from an exact midpoint-subdivision expansion.

The expansion uses that midpoint subdivision of any triangle produces
four children similar to it at scale 1/2, and that the kernel is
homogeneous of degree -1, so a singular pair integral equals 1/8 of the
parent one when both triangles shrink by 1/2 about a shared point.
Writing I = (sum over self-similar child pairs) + (cross terms) and
solving for I leaves only cross terms of strictly smaller adjacency,
hence a finite tree whose leaves are disjoint pairs handled by adaptive
Gauss quadrature.
"""

import numpy as np

FOUR_PI = 4.0 * np.pi


def kernel0(x, y):
    r = np.sqrt(((x - y) ** 2).sum(axis=-1))
    return 1.0 / (FOUR_PI * r)


def tri_area(T):
    return 0.5 * np.linalg.norm(np.cross(T[1] - T[0], T[2] - T[0]))


def tri_gauss(T, q):
    """Duffy tensor rule on one triangle: (points, weights)."""
    a, wa = np.polynomial.legendre.leggauss(q)
    a = 0.5 * (a + 1.0)
    wa = 0.5 * wa
    u = np.repeat(a, q)
    b = np.tile(a, q)
    w = np.repeat(wa, q) * np.tile(wa, q) * u
    v = u * b
    pts = T[0][None, :] + np.outer(u, T[1] - T[0]) + np.outer(v, T[2] - T[1])
    return pts, w * 2.0 * tri_area(T)


def pair_gauss(T1, T2, q):
    x, wx = tri_gauss(T1, q)
    y, wy = tri_gauss(T2, q)
    k = kernel0(x[:, None, :], y[None, :, :])
    return float(wx @ k @ wy)


def bary_duffy(q):
    """Barycentric Duffy rule: (lambdas (n,3), weights summing to 1)."""
    a, wa = np.polynomial.legendre.leggauss(q)
    a = 0.5 * (a + 1.0)
    wa = 0.5 * wa
    u = np.repeat(a, q)
    v = np.tile(a, q)
    w = 2.0 * np.repeat(wa, q) * np.tile(wa, q) * u
    lam = np.stack([1.0 - u, u * (1.0 - v), u * v], axis=1)
    return lam, w


def _diam(T):
    return max(np.linalg.norm(T[i] - T[j]) for i in range(3)
               for j in range(i))


def pair_regular(T1, T2, q=10, depth=6):
    """Disjoint pair integral with adaptive subdivision near contact."""
    d1, d2 = _diam(T1), _diam(T2)
    gap = np.linalg.norm(T1.mean(axis=0) - T2.mean(axis=0))
    if depth == 0 or gap > 1.5 * max(d1, d2):
        return pair_gauss(T1, T2, q)
    total = 0.0
    if d1 >= d2:
        for c in midpoint_children(T1):
            total += pair_regular(c, T2, q, depth - 1)
    else:
        for c in midpoint_children(T2):
            total += pair_regular(T1, c, q, depth - 1)
    return total


def midpoint_children(T):
    m01, m12, m20 = 0.5 * (T[0] + T[1]), 0.5 * (T[1] + T[2]), \
        0.5 * (T[2] + T[0])
    return (np.array([T[0], m01, m20]), np.array([m01, T[1], m12]),
            np.array([m20, m12, T[2]]), np.array([m01, m12, m20]))


def _keys(T):
    return [tuple(float(c) for c in v) for v in T]


def _corner_child(T, vertex_key):
    idx = _keys(T).index(vertex_key)
    return midpoint_children(T)[idx] if idx < 3 else None


def pair_singular(T1, T2, q=10):
    """Exact-series integral of 1/(4 pi r) over a touching triangle pair.

    Shared vertices are detected by exact coordinate equality. Works for
    coincident, edge-adjacent and vertex-adjacent pairs; disjoint pairs
    fall through to the adaptive regular rule.
    """
    T1 = np.asarray(T1, dtype=np.float64)
    T2 = np.asarray(T2, dtype=np.float64)
    k1, k2 = _keys(T1), _keys(T2)
    shared = [k for k in k1 if k in k2]
    cls = len(shared)
    if cls == 0:
        return pair_regular(T1, T2, q)
    c1, c2 = midpoint_children(T1), midpoint_children(T2)
    if cls == 3:
        total = 0.0
        for i in range(4):
            for j in range(4):
                if i != j:
                    total += pair_singular(c1[i], c1[j], q)
        return 2.0 * total
    self_pairs = []
    for v in shared:
        a, b = _corner_child(T1, v), _corner_child(T2, v)
        self_pairs.append((_keys(a), _keys(b)))
    total = 0.0
    for a in c1:
        for b in c2:
            if (_keys(a), _keys(b)) in self_pairs:
                continue
            total += pair_singular(a, b, q)
    return total / (1.0 - cls / 8.0)
