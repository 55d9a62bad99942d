"""Compiled kernel for generalized barycentric rows over all neighbor subsets.

Every neighbor subset of owner ``l`` is an ``(n+1)``-clique inside ``N_l``,
so ``l`` plus the subset is an ``(n+2)``-clique ``K`` of the range graph.
The points of ``K`` carry one affine dependency ``mu`` (``sum mu = 0``,
``sum mu_i x_i = 0``) and the barycentric row of owner ``k`` within ``K`` is
``-mu_j / mu_k``. This equals the bi-determinant ratio
``D(X_k; Y_kj) / D(X_k)`` because ``mu_j`` is proportional to the signed
volume of the face of ``K`` without point ``j``.

``mu`` is read off the Gram matrix ``G`` of the edge vectors from point 0 of
``K``, built from squared distances only. ``G`` has rank ``n``; its
adjugate columns are multiples of ``(mu_1, ..., mu_{n+1})`` and its diagonal
cofactors are the Cayley-Menger determinants of the faces through point 0.
"""

import numpy as np
from numba import njit

__all__ = ["accumulate_all_rows", "adjacency_bitsets"]


def adjacency_bitsets(m, pairs):
    """``(m, ceil(m/64))`` uint64 adjacency bitsets from index pairs."""
    words = max(1, (m + 63) // 64)
    bits = np.zeros((m, words), dtype=np.uint64)
    for a, b in pairs:
        bits[a, b >> 6] |= np.uint64(1) << np.uint64(b & 63)
        bits[b, a >> 6] |= np.uint64(1) << np.uint64(a & 63)
    return bits


@njit(cache=True)
def _low_bit_index(word):
    # isolated power of two converts to float exactly
    low = word & (~word + np.uint64(1))
    return int(np.log2(np.float64(low)) + 0.5)


@njit(cache=True)
def _next_bit(cand, start, words):
    """Smallest set bit index >= start in a bitset, or -1."""
    w = start >> 6
    if w >= words:
        return -1
    word = cand[w] >> np.uint64(start & 63)
    if word != 0:
        return start + _low_bit_index(word)
    w += 1
    while w < words:
        word = cand[w]
        if word != 0:
            return (w << 6) + _low_bit_index(word)
        w += 1
    return -1


@njit(cache=True)
def _det(A, k, work):
    """Determinant of the leading ``k x k`` block of ``A``."""
    if k == 1:
        return A[0, 0]
    if k == 2:
        return A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
    if k == 3:
        return (A[0, 0] * (A[1, 1] * A[2, 2] - A[1, 2] * A[2, 1])
                - A[0, 1] * (A[1, 0] * A[2, 2] - A[1, 2] * A[2, 0])
                + A[0, 2] * (A[1, 0] * A[2, 1] - A[1, 1] * A[2, 0]))
    for r in range(k):
        for c in range(k):
            work[r, c] = A[r, c]
    det = 1.0
    for c in range(k):
        piv = c
        best = abs(work[c, c])
        for r in range(c + 1, k):
            if abs(work[r, c]) > best:
                best = abs(work[r, c])
                piv = r
        if best == 0.0:
            return 0.0
        if piv != c:
            for q in range(k):
                tmp = work[c, q]
                work[c, q] = work[piv, q]
                work[piv, q] = tmp
            det = -det
        d = work[c, c]
        det *= d
        for r in range(c + 1, k):
            f = work[r, c] / d
            for q in range(c + 1, k):
                work[r, q] -= f * work[c, q]
    return det


@njit(cache=True)
def _cofactor(G, g, row, col, minor, work):
    """Signed cofactor ``(-1)^(row+col) det(G without row, col)``."""
    a = 0
    for r in range(g):
        if r == row:
            continue
        b = 0
        for c in range(g):
            if c == col:
                continue
            minor[a, b] = G[r, c]
            b += 1
        a += 1
    d = _det(minor, g - 1, work)
    return -d if (row + col) % 2 else d


@njit(cache=True)
def _dependency(G, g, col, mu, minor, work):
    """Fill ``mu`` from adjugate column ``col``; returns ``mu[col+1]`` (= C_col,col)."""
    total = 0.0
    for j in range(g):
        v = _cofactor(G, g, j, col, minor, work)
        mu[j + 1] = v
        total += v
    mu[0] = -total
    return mu[col + 1]


@njit(cache=True)
def _det3(a, b, c, d, e, f, g, h, i):
    return a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)


@njit(cache=True)
def _dependency3(G, col, mu):
    """Closed-form adjugate column of a symmetric 4x4 Gram matrix (n = 3)."""
    # rows/cols other than `col`, and the minor rows other than each j
    total = 0.0
    for j in range(4):
        r0, r1, r2 = (1, 2, 3) if j == 0 else ((0, 2, 3) if j == 1 else ((0, 1, 3) if j == 2 else (0, 1, 2)))
        c0, c1, c2 = (1, 2, 3) if col == 0 else ((0, 2, 3) if col == 1 else ((0, 1, 3) if col == 2 else (0, 1, 2)))
        v = _det3(G[r0, c0], G[r0, c1], G[r0, c2],
                  G[r1, c0], G[r1, c1], G[r1, c2],
                  G[r2, c0], G[r2, c1], G[r2, c2])
        if (j + col) % 2:
            v = -v
        mu[j + 1] = v
        total += v
    mu[0] = -total
    return mu[col + 1]


@njit(cache=True)
def _ipow(x, n):
    out = 1.0
    for _ in range(n):
        out *= x
    return out


@njit(cache=True)
def accumulate_all_rows(bits, sq, n, eps):
    """Sum of per-subset rows and usable-subset counts for every owner.

    ``bits`` are adjacency bitsets and ``sq`` the squared-distance matrix
    (only entries on edges are read). Returns ``(acc, counts)`` with
    ``acc[l, j]`` the summed weight at ``j`` over usable subsets of ``l``.
    """
    m, words = bits.shape
    s = n + 2
    g = n + 1
    acc = np.zeros((m, m))
    counts = np.zeros(m, dtype=np.int64)
    cand = np.zeros((s + 1, words), dtype=np.uint64)
    pos = np.zeros(s + 1, dtype=np.int64)
    clique = np.zeros(s, dtype=np.int64)
    local = np.zeros((s, s))
    scale = np.zeros(s)
    G = np.zeros((g, g))
    minor = np.zeros((g, g))
    work = np.zeros((g, g))
    mu = np.zeros(s)
    for v0 in range(m):
        clique[0] = v0
        for w in range(words):
            cand[1, w] = bits[v0, w]
        pos[1] = v0 + 1
        d = 1
        while d >= 1:
            b = _next_bit(cand[d], pos[d], words)
            if b < 0:
                d -= 1
                continue
            pos[d] = b + 1
            clique[d] = b
            if d < s - 1:
                for w in range(words):
                    cand[d + 1, w] = cand[d, w] & bits[b, w]
                pos[d + 1] = b + 1
                d += 1
                continue

            # scale[k]: largest squared distance in the face without point k
            for k in range(s):
                scale[k] = 0.0
            for i in range(s):
                for j in range(i + 1, s):
                    v = sq[clique[i], clique[j]]
                    local[i, j] = v
                    local[j, i] = v
                    for k in range(s):
                        if k != i and k != j and v > scale[k]:
                            scale[k] = v
            for i in range(g):
                for j in range(i, g):
                    v = 0.5 * (local[0, i + 1] + local[0, j + 1] - local[i + 1, j + 1])
                    G[i, j] = v
                    G[j, i] = v
            if n == 3:
                c_kk = _dependency3(G, 0, mu)
            else:
                c_kk = _dependency(G, g, 0, mu, minor, work)
            big = 0.0
            best = 0
            for j in range(g):
                if abs(mu[j + 1]) > big:
                    big = abs(mu[j + 1])
                    best = j
            # column 0 is poorly scaled when its own face is comparatively flat
            if best != 0 and abs(c_kk) < 0.25 * big:
                if n == 3:
                    c_kk = _dependency3(G, best, mu)
                else:
                    c_kk = _dependency(G, g, best, mu, minor, work)
            if c_kk <= 0.0:
                continue  # every face through point 0 is flat, so K is flat
            for k in range(s):
                # D(face without k) = mu_k^2 / C_kk for the chosen column
                if mu[k] * mu[k] / c_kk <= eps * _ipow(scale[k], n):
                    continue
                owner = clique[k]
                counts[owner] += 1
                inv = -1.0 / mu[k]
                for j in range(s):
                    if j != k:
                        acc[owner, clique[j]] += mu[j] * inv
    return acc, counts
