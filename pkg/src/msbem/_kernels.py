"""Compiled inner loops for Galerkin pair assembly.

Far (regular) pairs use tensor products of symmetric triangle rules; pairs
closer than a threshold (relative to element size) take an upgraded rule.
Singular pairs (coincident / shared edge / shared vertex, detected by
geometric vertex identity) are integrated with precomputed regularizing
transform tables in canonical vertex order.

Work is partitioned over test triangles: each test triangle owns its row
block of the chunk accumulator, so results are independent of the thread
count. Scatter from shape slots to basis functions happens outside, with
sparse matrix products in a fixed order.
"""

import numba
import numpy as np
from numba import njit, prange

FASTMATH = True


@njit(inline="always")
def _green(kappa, r):
    return np.exp(1j * kappa * r) / (12.566370614359172 * r)


@njit(cache=True, fastmath=FASTMATH, parallel=True)
def far_single_layer(coords_t, cents_t, diams_t, areas_t,
                     coords_s, cents_s, diams_s, areas_s,
                     sing_ptr, sing_idx,
                     fxy, fw, nxy, nw, threshold, kappa,
                     i0, i1, symmetric, nsh_t, nsh_s,
                     sptr, sdof, swt, R):
    """Single-layer far pairs for test triangles [i0, i1).

    R has shape (i1-i0, nsh_t, ncol); trial shape b of triangle j scatters
    through the CSR arrays (sptr, sdof, swt) over slots j*nsh_s + b. The
    symmetric flag requires test and trial arrays to alias one scene.
    """
    ntrial = cents_s.shape[0]
    nf = fxy.shape[0]
    nn = nxy.shape[0]
    for ii in prange(i1 - i0):
        i = i0 + ii
        p0x, p0y, p0z = coords_t[i, 0, 0], coords_t[i, 0, 1], coords_t[i, 0, 2]
        e1x, e1y, e1z = coords_t[i, 1, 0] - p0x, coords_t[i, 1, 1] - p0y, coords_t[i, 1, 2] - p0z
        e2x, e2y, e2z = coords_t[i, 2, 0] - p0x, coords_t[i, 2, 1] - p0y, coords_t[i, 2, 2] - p0z
        acc = np.empty((nsh_t, nsh_s), dtype=np.complex128)
        sbeg, send = sing_ptr[i], sing_ptr[i + 1]
        sp = sbeg
        jstart = i + 1 if symmetric else 0
        for j in range(jstart, ntrial):
            while sp < send and sing_idx[sp] < j:
                sp += 1
            if sp < send and sing_idx[sp] == j:
                continue
            dx = cents_t[i, 0] - cents_s[j, 0]
            dy = cents_t[i, 1] - cents_s[j, 1]
            dz = cents_t[i, 2] - cents_s[j, 2]
            dist = np.sqrt(dx * dx + dy * dy + dz * dz)
            dmax = diams_t[i] if diams_t[i] > diams_s[j] else diams_s[j]
            near = dist < threshold * dmax
            npts = nn if near else nf
            acc[:, :] = 0.0
            q0x, q0y, q0z = coords_s[j, 0, 0], coords_s[j, 0, 1], coords_s[j, 0, 2]
            f1x, f1y, f1z = coords_s[j, 1, 0] - q0x, coords_s[j, 1, 1] - q0y, coords_s[j, 1, 2] - q0z
            f2x, f2y, f2z = coords_s[j, 2, 0] - q0x, coords_s[j, 2, 1] - q0y, coords_s[j, 2, 2] - q0z
            for p in range(npts):
                if near:
                    u1, u2, wp = nxy[p, 0], nxy[p, 1], nw[p]
                else:
                    u1, u2, wp = fxy[p, 0], fxy[p, 1], fw[p]
                xx = p0x + u1 * e1x + u2 * e2x
                xy = p0y + u1 * e1y + u2 * e2y
                xz = p0z + u1 * e1z + u2 * e2z
                lt0 = 1.0 - u1 - u2
                for q in range(npts):
                    if near:
                        v1, v2, wq = nxy[q, 0], nxy[q, 1], nw[q]
                    else:
                        v1, v2, wq = fxy[q, 0], fxy[q, 1], fw[q]
                    yx = q0x + v1 * f1x + v2 * f2x
                    yy = q0y + v1 * f1y + v2 * f2y
                    yz = q0z + v1 * f1z + v2 * f2z
                    rx, ry, rz = xx - yx, xy - yy, xz - yz
                    r = np.sqrt(rx * rx + ry * ry + rz * rz)
                    g = _green(kappa, r) * (wp * wq)
                    if nsh_t == 1 and nsh_s == 1:
                        acc[0, 0] += g
                    else:
                        ls0 = 1.0 - v1 - v2
                        if nsh_t == 1:
                            acc[0, 0] += g * ls0
                            acc[0, 1] += g * v1
                            acc[0, 2] += g * v2
                        elif nsh_s == 1:
                            acc[0, 0] += g * lt0
                            acc[1, 0] += g * u1
                            acc[2, 0] += g * u2
                        else:
                            acc[0, 0] += g * lt0 * ls0
                            acc[0, 1] += g * lt0 * v1
                            acc[0, 2] += g * lt0 * v2
                            acc[1, 0] += g * u1 * ls0
                            acc[1, 1] += g * u1 * v1
                            acc[1, 2] += g * u1 * v2
                            acc[2, 0] += g * u2 * ls0
                            acc[2, 1] += g * u2 * v1
                            acc[2, 2] += g * u2 * v2
            scale = 4.0 * areas_t[i] * areas_s[j]
            for b in range(nsh_s):
                slot = j * nsh_s + b
                for e in range(sptr[slot], sptr[slot + 1]):
                    d = sdof[e]
                    w = swt[e] * scale
                    for a in range(nsh_t):
                        R[ii, a, d] += w * acc[a, b]


@njit(cache=True, fastmath=FASTMATH, parallel=True)
def far_hypersingular(coords_t, cents_t, diams_t, areas_t,
                      normals_t, curls_t,
                      coords_s, cents_s, diams_s, areas_s,
                      normals_s, curls_s,
                      sing_ptr, sing_idx,
                      fxy, fw, nxy, nw, threshold, kappa,
                      i0, i1, symmetric,
                      sptr, sdof, swt, R):
    """Hypersingular far pairs: G(x-y) (curl_a . curl_b - k^2 (n.n) la lb)."""
    ntrial = cents_s.shape[0]
    nf = fxy.shape[0]
    nn = nxy.shape[0]
    k2 = kappa * kappa
    for ii in prange(i1 - i0):
        i = i0 + ii
        p0x, p0y, p0z = coords_t[i, 0, 0], coords_t[i, 0, 1], coords_t[i, 0, 2]
        e1x, e1y, e1z = coords_t[i, 1, 0] - p0x, coords_t[i, 1, 1] - p0y, coords_t[i, 1, 2] - p0z
        e2x, e2y, e2z = coords_t[i, 2, 0] - p0x, coords_t[i, 2, 1] - p0y, coords_t[i, 2, 2] - p0z
        acc = np.empty((3, 3), dtype=np.complex128)
        lam_t = np.empty(3, dtype=np.float64)
        lam_s = np.empty(3, dtype=np.float64)
        sbeg, send = sing_ptr[i], sing_ptr[i + 1]
        sp = sbeg
        jstart = i + 1 if symmetric else 0
        for j in range(jstart, ntrial):
            while sp < send and sing_idx[sp] < j:
                sp += 1
            if sp < send and sing_idx[sp] == j:
                continue
            dx = cents_t[i, 0] - cents_s[j, 0]
            dy = cents_t[i, 1] - cents_s[j, 1]
            dz = cents_t[i, 2] - cents_s[j, 2]
            dist = np.sqrt(dx * dx + dy * dy + dz * dz)
            dmax = diams_t[i] if diams_t[i] > diams_s[j] else diams_s[j]
            near = dist < threshold * dmax
            npts = nn if near else nf
            nn_dot = (normals_t[i, 0] * normals_s[j, 0]
                      + normals_t[i, 1] * normals_s[j, 1]
                      + normals_t[i, 2] * normals_s[j, 2])
            cc = np.empty((3, 3), dtype=np.float64)
            for a in range(3):
                for b in range(3):
                    cc[a, b] = (curls_t[i, a, 0] * curls_s[j, b, 0]
                                + curls_t[i, a, 1] * curls_s[j, b, 1]
                                + curls_t[i, a, 2] * curls_s[j, b, 2])
            acc[:, :] = 0.0
            q0x, q0y, q0z = coords_s[j, 0, 0], coords_s[j, 0, 1], coords_s[j, 0, 2]
            f1x, f1y, f1z = coords_s[j, 1, 0] - q0x, coords_s[j, 1, 1] - q0y, coords_s[j, 1, 2] - q0z
            f2x, f2y, f2z = coords_s[j, 2, 0] - q0x, coords_s[j, 2, 1] - q0y, coords_s[j, 2, 2] - q0z
            for p in range(npts):
                if near:
                    u1, u2, wp = nxy[p, 0], nxy[p, 1], nw[p]
                else:
                    u1, u2, wp = fxy[p, 0], fxy[p, 1], fw[p]
                xx = p0x + u1 * e1x + u2 * e2x
                xy = p0y + u1 * e1y + u2 * e2y
                xz = p0z + u1 * e1z + u2 * e2z
                lam_t[0] = 1.0 - u1 - u2
                lam_t[1] = u1
                lam_t[2] = u2
                for q in range(npts):
                    if near:
                        v1, v2, wq = nxy[q, 0], nxy[q, 1], nw[q]
                    else:
                        v1, v2, wq = fxy[q, 0], fxy[q, 1], fw[q]
                    yx = q0x + v1 * f1x + v2 * f2x
                    yy = q0y + v1 * f1y + v2 * f2y
                    yz = q0z + v1 * f1z + v2 * f2z
                    rx, ry, rz = xx - yx, xy - yy, xz - yz
                    r = np.sqrt(rx * rx + ry * ry + rz * rz)
                    g = _green(kappa, r) * (wp * wq)
                    lam_s[0] = 1.0 - v1 - v2
                    lam_s[1] = v1
                    lam_s[2] = v2
                    for a in range(3):
                        ga = g * lam_t[a]
                        for b in range(3):
                            acc[a, b] += g * cc[a, b] \
                                - k2 * nn_dot * ga * lam_s[b]
            scale = 4.0 * areas_t[i] * areas_s[j]
            for b in range(3):
                slot = j * 3 + b
                for e in range(sptr[slot], sptr[slot + 1]):
                    d = sdof[e]
                    w = swt[e] * scale
                    for a in range(3):
                        R[ii, a, d] += w * acc[a, b]


@njit(cache=True, fastmath=FASTMATH, parallel=True)
def singular_single_layer(coords_t, areas_t, coords_s, areas_s,
                          pi, pj, perm_t, perm_s, cls,
                          table, table_off, kappa, nsh_t, nsh_s, out):
    """Singular pairs via transform tables, canonical vertex order.

    table rows: (u_t, v_t, u_s, v_s, weight); table_off[c]..table_off[c+1]
    select the rows of pair class c. Blocks accumulate in canonical index
    space so every panel copy of one geometric pair produces bit-identical
    numbers; coincident blocks are symmetrized there (they are
    analytically symmetric), then written back in native corner order.
    """
    for p in prange(len(pi)):
        i, j = pi[p], pj[p]
        c = cls[p]
        a0, a1, a2 = perm_t[p, 0], perm_t[p, 1], perm_t[p, 2]
        b0, b1, b2 = perm_s[p, 0], perm_s[p, 1], perm_s[p, 2]
        # canonical-order vertices
        P0x, P0y, P0z = coords_t[i, a0, 0], coords_t[i, a0, 1], coords_t[i, a0, 2]
        P1x, P1y, P1z = coords_t[i, a1, 0], coords_t[i, a1, 1], coords_t[i, a1, 2]
        P2x, P2y, P2z = coords_t[i, a2, 0], coords_t[i, a2, 1], coords_t[i, a2, 2]
        Q0x, Q0y, Q0z = coords_s[j, b0, 0], coords_s[j, b0, 1], coords_s[j, b0, 2]
        Q1x, Q1y, Q1z = coords_s[j, b1, 0], coords_s[j, b1, 1], coords_s[j, b1, 2]
        Q2x, Q2y, Q2z = coords_s[j, b2, 0], coords_s[j, b2, 1], coords_s[j, b2, 2]
        acc = np.zeros((3, 3), dtype=np.complex128)
        for row in range(table_off[c], table_off[c + 1]):
            ut, vt = table[row, 0], table[row, 1]
            us, vs = table[row, 2], table[row, 3]
            w = table[row, 4]
            # chart x = P0 + ut (P1-P0) + vt (P2-P1)
            xx = P0x + ut * (P1x - P0x) + vt * (P2x - P1x)
            xy = P0y + ut * (P1y - P0y) + vt * (P2y - P1y)
            xz = P0z + ut * (P1z - P0z) + vt * (P2z - P1z)
            yx = Q0x + us * (Q1x - Q0x) + vs * (Q2x - Q1x)
            yy = Q0y + us * (Q1y - Q0y) + vs * (Q2y - Q1y)
            yz = Q0z + us * (Q1z - Q0z) + vs * (Q2z - Q1z)
            rx, ry, rz = xx - yx, xy - yy, xz - yz
            r = np.sqrt(rx * rx + ry * ry + rz * rz)
            g = _green(kappa, r) * w
            if nsh_t == 1 and nsh_s == 1:
                acc[0, 0] += g
            else:
                lt0, lt1, lt2 = 1.0 - ut, ut - vt, vt
                ls0, ls1, ls2 = 1.0 - us, us - vs, vs
                if nsh_t == 1:
                    acc[0, 0] += g * ls0
                    acc[0, 1] += g * ls1
                    acc[0, 2] += g * ls2
                elif nsh_s == 1:
                    acc[0, 0] += g * lt0
                    acc[1, 0] += g * lt1
                    acc[2, 0] += g * lt2
                else:
                    acc[0, 0] += g * lt0 * ls0
                    acc[0, 1] += g * lt0 * ls1
                    acc[0, 2] += g * lt0 * ls2
                    acc[1, 0] += g * lt1 * ls0
                    acc[1, 1] += g * lt1 * ls1
                    acc[1, 2] += g * lt1 * ls2
                    acc[2, 0] += g * lt2 * ls0
                    acc[2, 1] += g * lt2 * ls1
                    acc[2, 2] += g * lt2 * ls2
        if c == 3 and nsh_t == 3 and nsh_s == 3:
            for a in range(3):
                for b in range(a + 1, 3):
                    v = 0.5 * (acc[a, b] + acc[b, a])
                    acc[a, b] = v
                    acc[b, a] = v
        scale = 4.0 * areas_t[i] * areas_s[j]
        if nsh_t == 1 and nsh_s == 1:
            out[p, 0, 0] = acc[0, 0] * scale
        elif nsh_t == 1:
            out[p, 0, b0] = acc[0, 0] * scale
            out[p, 0, b1] = acc[0, 1] * scale
            out[p, 0, b2] = acc[0, 2] * scale
        elif nsh_s == 1:
            out[p, a0, 0] = acc[0, 0] * scale
            out[p, a1, 0] = acc[1, 0] * scale
            out[p, a2, 0] = acc[2, 0] * scale
        else:
            for a in range(3):
                na = perm_t[p, a]
                for b in range(3):
                    out[p, na, perm_s[p, b]] = acc[a, b] * scale


@njit(cache=True, fastmath=FASTMATH, parallel=True)
def singular_hypersingular(coords_t, areas_t, normals_t, curls_t,
                           coords_s, areas_s, normals_s, curls_s,
                           pi, pj, perm_t, perm_s, cls,
                           table, table_off, kappa, out):
    k2 = kappa * kappa
    for p in prange(len(pi)):
        i, j = pi[p], pj[p]
        c = cls[p]
        a0, a1, a2 = perm_t[p, 0], perm_t[p, 1], perm_t[p, 2]
        b0, b1, b2 = perm_s[p, 0], perm_s[p, 1], perm_s[p, 2]
        P0x, P0y, P0z = coords_t[i, a0, 0], coords_t[i, a0, 1], coords_t[i, a0, 2]
        P1x, P1y, P1z = coords_t[i, a1, 0], coords_t[i, a1, 1], coords_t[i, a1, 2]
        P2x, P2y, P2z = coords_t[i, a2, 0], coords_t[i, a2, 1], coords_t[i, a2, 2]
        Q0x, Q0y, Q0z = coords_s[j, b0, 0], coords_s[j, b0, 1], coords_s[j, b0, 2]
        Q1x, Q1y, Q1z = coords_s[j, b1, 0], coords_s[j, b1, 1], coords_s[j, b1, 2]
        Q2x, Q2y, Q2z = coords_s[j, b2, 0], coords_s[j, b2, 1], coords_s[j, b2, 2]
        nn_dot = (normals_t[i, 0] * normals_s[j, 0]
                  + normals_t[i, 1] * normals_s[j, 1]
                  + normals_t[i, 2] * normals_s[j, 2])
        # curl dot products gathered in canonical order
        cc = np.empty((3, 3), dtype=np.float64)
        for at in range(3):
            na = perm_t[p, at]
            for bt in range(3):
                nb = perm_s[p, bt]
                cc[at, bt] = (curls_t[i, na, 0] * curls_s[j, nb, 0]
                              + curls_t[i, na, 1] * curls_s[j, nb, 1]
                              + curls_t[i, na, 2] * curls_s[j, nb, 2])
        acc = np.zeros((3, 3), dtype=np.complex128)
        lt = np.empty(3, dtype=np.float64)
        ls = np.empty(3, dtype=np.float64)
        for row in range(table_off[c], table_off[c + 1]):
            ut, vt = table[row, 0], table[row, 1]
            us, vs = table[row, 2], table[row, 3]
            w = table[row, 4]
            xx = P0x + ut * (P1x - P0x) + vt * (P2x - P1x)
            xy = P0y + ut * (P1y - P0y) + vt * (P2y - P1y)
            xz = P0z + ut * (P1z - P0z) + vt * (P2z - P1z)
            yx = Q0x + us * (Q1x - Q0x) + vs * (Q2x - Q1x)
            yy = Q0y + us * (Q1y - Q0y) + vs * (Q2y - Q1y)
            yz = Q0z + us * (Q1z - Q0z) + vs * (Q2z - Q1z)
            rx, ry, rz = xx - yx, xy - yy, xz - yz
            r = np.sqrt(rx * rx + ry * ry + rz * rz)
            g = _green(kappa, r) * w
            lt[0], lt[1], lt[2] = 1.0 - ut, ut - vt, vt
            ls[0], ls[1], ls[2] = 1.0 - us, us - vs, vs
            for at in range(3):
                for bt in range(3):
                    acc[at, bt] += g * (cc[at, bt]
                                        - k2 * nn_dot * lt[at] * ls[bt])
        if c == 3:
            # coincident blocks are analytically symmetric; enforcing this
            # in canonical index space keeps all panel copies consistent
            for at in range(3):
                for bt in range(at + 1, 3):
                    v = 0.5 * (acc[at, bt] + acc[bt, at])
                    acc[at, bt] = v
                    acc[bt, at] = v
        scale = 4.0 * areas_t[i] * areas_s[j]
        for at in range(3):
            na = perm_t[p, at]
            for bt in range(3):
                out[p, na, perm_s[p, bt]] = acc[at, bt] * scale


def set_threads(n: int) -> None:
    numba.set_num_threads(max(1, n))
