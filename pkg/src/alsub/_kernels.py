"""Numba kernels behind :mod:`alsub.sparse` and the scheme modules.

All kernels are race-free: every parallel loop writes only to output slots it
owns, so results do not depend on the worker count or scheduling.

Weight modes for the mapped SpMVs:
    0: constant ``const``
    1: per output slot ``per_out[out]``
    2: per stored entry ``per_entry[p]``
"""

import numpy as np
from numba import njit, prange

MODE_CONST = 0
MODE_PER_OUT = 1
MODE_PER_ENTRY = 2

KIND_COUNT = 0
KIND_FACE = 1
KIND_OPPOSITE = 2


@njit(cache=True, inline="always")
def _weight(mode, const, per_out, per_entry, out, p):
    if mode == 0:
        return const
    elif mode == 1:
        return per_out[out]
    return per_entry[p]


@njit(parallel=True, cache=True)
def spmv_transpose(col_offsets, row_indices, mode, const, per_out, per_entry, x, out):
    """out[j] = sum_p w * x[row_indices[p]] over column j; one worker per column."""
    ncols = col_offsets.size - 1
    dim = x.shape[1]
    for j in prange(ncols):
        for d in range(dim):
            out[j, d] = 0.0
        for p in range(col_offsets[j], col_offsets[j + 1]):
            w = _weight(mode, const, per_out, per_entry, j, p)
            i = row_indices[p]
            for d in range(dim):
                out[j, d] += w * x[i, d]


@njit(parallel=True, cache=True)
def spmv_direct(row_offsets, col_index, entry_pos, mode, const, per_out, per_entry, x, out):
    """out[i] = sum over the row-i entries of w * x[col]; gathers through a
    precomputed transpose index instead of scattering with atomics."""
    nrows = row_offsets.size - 1
    dim = x.shape[1]
    for i in prange(nrows):
        for d in range(dim):
            out[i, d] = 0.0
        for q in range(row_offsets[i], row_offsets[i + 1]):
            p = entry_pos[q]
            w = _weight(mode, const, per_out, per_entry, i, p)
            j = col_index[q]
            for d in range(dim):
                out[i, d] += w * x[j, d]


@njit(cache=True)
def transpose_index(col_offsets, row_indices, n_rows):
    """Counting sort of the entries by row.

    Returns ``(row_offsets, col_index, entry_pos)``: the entries of row ``i``
    are ``entry_pos[row_offsets[i]:row_offsets[i+1]]`` (positions into the
    column-major arrays), in ascending column order.
    """
    nnz = row_indices.size
    row_offsets = np.zeros(n_rows + 1, np.int64)
    for p in range(nnz):
        row_offsets[row_indices[p] + 1] += 1
    for i in range(n_rows):
        row_offsets[i + 1] += row_offsets[i]
    cursor = row_offsets[:-1].copy()
    col_index = np.empty(nnz, np.int64)
    entry_pos = np.empty(nnz, np.int64)
    ncols = col_offsets.size - 1
    for j in range(ncols):
        for p in range(col_offsets[j], col_offsets[j + 1]):
            i = row_indices[p]
            q = cursor[i]
            cursor[i] += 1
            col_index[q] = j
            entry_pos[q] = p
    return row_offsets, col_index, entry_pos


@njit(cache=True)
def exclusive_scan_i64(counts):
    out = np.empty(counts.size + 1, np.int64)
    out[0] = 0
    acc = 0
    for k in range(counts.size):
        acc += counts[k]
        out[k + 1] = acc
    return out


# ---------------------------------------------------------------------------
# implicit mapped SpGEMM  M {Q}[lambda] M^T


@njit(cache=True, inline="always")
def _distinct_offsets(powers, c, buf_off, buf_mul):
    """Collect the distinct circulant offsets (powers mod c) with multiplicity."""
    m = 0
    for t in range(powers.size):
        d = powers[t] % c
        if d < 0:
            d += c
        found = False
        for u in range(m):
            if buf_off[u] == d:
                buf_mul[u] += 1
                found = True
                break
        if not found:
            buf_off[m] = d
            buf_mul[m] = 1
            m += 1
    return m


@njit(parallel=True, cache=True)
def collision_counts(col_offsets, powers):
    """Per mesh-matrix entry: number of partner positions with a non-zero map
    value (the map-row non-zero count for the entry's cyclic position)."""
    nfaces = col_offsets.size - 1
    z = np.empty(col_offsets[nfaces], np.int64)
    for k in prange(nfaces):
        c = col_offsets[k + 1] - col_offsets[k]
        buf_off = np.empty(powers.size, np.int64)
        buf_mul = np.empty(powers.size, np.int64)
        m = _distinct_offsets(powers, c, buf_off, buf_mul)
        for p in range(col_offsets[k], col_offsets[k + 1]):
            z[p] = m
    return z


@njit(parallel=True, cache=True)
def column_counts_from_entries(row_offsets, entry_pos, z):
    nv = row_offsets.size - 1
    out = np.empty(nv, np.int64)
    for j in prange(nv):
        acc = 0
        for q in range(row_offsets[j], row_offsets[j + 1]):
            acc += z[entry_pos[q]]
        out[j] = acc
    return out


@njit(parallel=True, cache=True)
def entry_slots(row_offsets, entry_pos, z, col_ptr, nnz_m):
    """Output slot base for every mesh-matrix entry (its vertex's column)."""
    nv = row_offsets.size - 1
    base = np.empty(nnz_m, np.int64)
    for j in prange(nv):
        cur = col_ptr[j]
        for q in range(row_offsets[j], row_offsets[j + 1]):
            p = entry_pos[q]
            base[p] = cur
            cur += z[p]
    return base


@njit(parallel=True, cache=True)
def implicit_fill(col_offsets, row_indices, powers, kind, base, out_rows, out_vals):
    """Numeric pass, one worker per face.

    Entry (vertex j at cyclic position b of face k) receives, for each distinct
    offset d, the partner i at position a = b - d with Q(a, b) = multiplicity.
    """
    nfaces = col_offsets.size - 1
    for k in prange(nfaces):
        off = col_offsets[k]
        c = col_offsets[k + 1] - off
        buf_off = np.empty(powers.size, np.int64)
        buf_mul = np.empty(powers.size, np.int64)
        m = _distinct_offsets(powers, c, buf_off, buf_mul)
        for b in range(c):
            s = base[off + b]
            for u in range(m):
                a = (b - buf_off[u]) % c
                i = row_indices[off + a]
                if kind == 0:
                    v = buf_mul[u]
                elif kind == 1:
                    v = k + 1
                else:
                    v = row_indices[off + (3 - a - b)] + 1
                out_rows[s] = i
                out_vals[s] = v
                s += 1


@njit(parallel=True, cache=True)
def sort_merge_columns(col_ptr, rows, vals, drop_zeros):
    """Sort each column segment by row, sum duplicate rows in place.

    Returns the unique count per column; the merged entries occupy the head of
    each segment.
    """
    ncols = col_ptr.size - 1
    uniq = np.zeros(ncols, np.int64)
    for j in prange(ncols):
        lo = col_ptr[j]
        hi = col_ptr[j + 1]
        # insertion sort: columns are short (vertex valence scale)
        for p in range(lo + 1, hi):
            r = rows[p]
            v = vals[p]
            q = p - 1
            while q >= lo and rows[q] > r:
                rows[q + 1] = rows[q]
                vals[q + 1] = vals[q]
                q -= 1
            rows[q + 1] = r
            vals[q + 1] = v
        w = lo
        p = lo
        while p < hi:
            r = rows[p]
            acc = vals[p]
            p += 1
            while p < hi and rows[p] == r:
                acc += vals[p]
                p += 1
            if drop_zeros and acc == 0:
                continue
            rows[w] = r
            vals[w] = acc
            w += 1
        uniq[j] = w - lo
    return uniq


@njit(parallel=True, cache=True)
def compact_columns(col_ptr, rows, vals, new_ptr, out_rows, out_vals):
    ncols = col_ptr.size - 1
    for j in prange(ncols):
        src = col_ptr[j]
        for t in range(new_ptr[j + 1] - new_ptr[j]):
            out_rows[new_ptr[j] + t] = rows[src + t]
            out_vals[new_ptr[j] + t] = vals[src + t]


@njit(cache=True)
def bucket_by_column(cols, ncols):
    """Counting-sort permutation grouping triplets by column (stable)."""
    n = cols.size
    ptr = np.zeros(ncols + 1, np.int64)
    for t in range(n):
        ptr[cols[t] + 1] += 1
    for j in range(ncols):
        ptr[j + 1] += ptr[j]
    cursor = ptr[:-1].copy()
    perm = np.empty(n, np.int64)
    for t in range(n):
        j = cols[t]
        perm[cursor[j]] = t
        cursor[j] += 1
    return ptr, perm


# ---------------------------------------------------------------------------
# general SpGEMM (CSC x CSC)


@njit(parallel=True, cache=True)
def spgemm_symbolic(a_off, a_rows, b_off, b_rows, a_nrows, nchunks):
    ncols = b_off.size - 1
    counts = np.zeros(ncols, np.int64)
    for ch in prange(nchunks):
        marker = np.full(a_nrows, -1, np.int64)
        lo = ch * ncols // nchunks
        hi = (ch + 1) * ncols // nchunks
        for j in range(lo, hi):
            cnt = 0
            for pb in range(b_off[j], b_off[j + 1]):
                k = b_rows[pb]
                for pa in range(a_off[k], a_off[k + 1]):
                    i = a_rows[pa]
                    if marker[i] != j:
                        marker[i] = j
                        cnt += 1
            counts[j] = cnt
    return counts


@njit(parallel=True, cache=True)
def spgemm_numeric(a_off, a_rows, a_vals, b_off, b_rows, b_vals, a_nrows, nchunks,
                   c_off, c_rows, c_vals):
    ncols = b_off.size - 1
    for ch in prange(nchunks):
        marker = np.full(a_nrows, -1, np.int64)
        acc = np.zeros(a_nrows, np.float64)
        lo = ch * ncols // nchunks
        hi = (ch + 1) * ncols // nchunks
        for j in range(lo, hi):
            w = c_off[j]
            for pb in range(b_off[j], b_off[j + 1]):
                k = b_rows[pb]
                bv = b_vals[pb]
                for pa in range(a_off[k], a_off[k + 1]):
                    i = a_rows[pa]
                    if marker[i] != j:
                        marker[i] = j
                        acc[i] = 0.0
                        c_rows[w] = i
                        w += 1
                    acc[i] += a_vals[pa] * bv
            seg = c_rows[c_off[j]:c_off[j + 1]]
            seg.sort()
            for t in range(c_off[j], c_off[j + 1]):
                c_vals[t] = acc[c_rows[t]]


# ---------------------------------------------------------------------------
# sparse lookups


@njit(cache=True, inline="always")
def find_in_column(col_offsets, row_indices, j, i):
    """Position of entry (i, j) in a CSC matrix with sorted rows, or -1."""
    lo = col_offsets[j]
    hi = col_offsets[j + 1]
    while lo < hi:
        mid = (lo + hi) >> 1
        r = row_indices[mid]
        if r < i:
            lo = mid + 1
        elif r > i:
            hi = mid
        else:
            return mid
    return -1


@njit(parallel=True, cache=True)
def lookup_pairs(col_offsets, row_indices, rows, cols):
    """Positions of entries (rows[t], cols[t]), -1 where structurally zero."""
    n = rows.size
    out = np.empty(n, np.int64)
    for t in prange(n):
        out[t] = find_in_column(col_offsets, row_indices, cols[t], rows[t])
    return out


@njit(parallel=True, cache=True)
def next_in_face(col_offsets, row_indices):
    """For each mesh-matrix entry, the row index of the cyclically next vertex."""
    nfaces = col_offsets.size - 1
    out = np.empty(row_indices.size, np.int64)
    for k in prange(nfaces):
        lo = col_offsets[k]
        hi = col_offsets[k + 1]
        for p in range(lo, hi - 1):
            out[p] = row_indices[p + 1]
        out[hi - 1] = row_indices[lo]
    return out


# ---------------------------------------------------------------------------
# scheme evaluation kernels


@njit(parallel=True, cache=True)
def cc_edge_points(ev0, ev1, ef0, ef1, P, f, out):
    """Interior edges: (p_k + p_l + f_r + f_s) / 4. Boundary edges get the
    midpoint here; the boundary repair rewrites them identically."""
    ne = ev0.size
    dim = P.shape[1]
    for e in prange(ne):
        a = ev0[e]
        b = ev1[e]
        r = ef0[e]
        s = ef1[e]
        if r >= 0 and s >= 0:
            for d in range(dim):
                out[e, d] = 0.25 * (P[a, d] + P[b, d] + f[r, d] + f[s, d])
        else:
            for d in range(dim):
                out[e, d] = 0.5 * (P[a, d] + P[b, d])


@njit(parallel=True, cache=True)
def loop_edge_points(ev0, ev1, eo0, eo1, P, out):
    ne = ev0.size
    dim = P.shape[1]
    for e in prange(ne):
        a = ev0[e]
        b = ev1[e]
        c = eo0[e]
        g = eo1[e]
        for d in range(dim):
            out[e, d] = 0.375 * (P[a, d] + P[b, d]) + 0.125 * (P[c, d] + P[g, d])


@njit(parallel=True, cache=True)
def affine_combine(self_w, P, acc, out):
    """out[i] = self_w[i] * P[i] + acc[i]"""
    n = P.shape[0]
    dim = P.shape[1]
    for i in prange(n):
        for d in range(dim):
            out[i, d] = self_w[i] * P[i, d] + acc[i, d]


@njit(parallel=True, cache=True)
def affine_combine3(self_w, P, acc1, acc2, out):
    n = P.shape[0]
    dim = P.shape[1]
    for i in prange(n):
        for d in range(dim):
            out[i, d] = self_w[i] * P[i, d] + acc1[i, d] + acc2[i, d]


@njit(parallel=True, cache=True)
def csr_spmv_chunked(row_offsets, col_index, vals, chunk_rows, x, out):
    """out = R x for CSR ``R``; one worker per row chunk of ~equal non-zeros."""
    nchunks = chunk_rows.size - 1
    dim = x.shape[1]
    for t in prange(nchunks):
        for r in range(chunk_rows[t], chunk_rows[t + 1]):
            for d in range(dim):
                out[r, d] = 0.0
            for p in range(row_offsets[r], row_offsets[r + 1]):
                w = vals[p]
                j = col_index[p]
                for d in range(dim):
                    out[r, d] += w * x[j, d]
