# Compiled versions of the hot kernels. Must match icsel._accel.pure
# bit-for-bit: same tie rules, same left-to-right float accumulation.

import numpy as np

cimport numpy as cnp

cnp.import_array()

NAME = "compiled"


def topm_neighbors(object sim_in, int m):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] sim = np.ascontiguousarray(sim_in, dtype=np.float64)
    cdef Py_ssize_t n = sim.shape[0]
    cdef Py_ssize_t m_eff = m if m < n - 1 else n - 1
    if m_eff < 0:
        m_eff = 0
    cdef cnp.ndarray[cnp.int64_t, ndim=2] out_idx = np.empty((n, m_eff), dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out_val = np.empty((n, m_eff), dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] top_i = np.empty(m_eff + 1, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] top_s = np.empty(m_eff + 1, dtype=np.float64)
    cdef Py_ssize_t i, j, count, pos, k
    cdef double s
    for i in range(n):
        count = 0
        for j in range(n):
            if j == i:
                continue
            s = sim[i, j]
            if count == m_eff:
                # worse than (or tied-above by index with) the current worst?
                if s < top_s[count - 1] or (s == top_s[count - 1] and j > top_i[count - 1]):
                    continue
            pos = count
            while pos > 0 and (s > top_s[pos - 1] or (s == top_s[pos - 1] and j < top_i[pos - 1])):
                top_s[pos] = top_s[pos - 1]
                top_i[pos] = top_i[pos - 1]
                pos -= 1
            top_s[pos] = s
            top_i[pos] = j
            if count < m_eff:
                count += 1
        for k in range(m_eff):
            out_idx[i, k] = top_i[k]
            out_val[i, k] = top_s[k]
    return out_idx, out_val


def greedy_cover(object indptr_in, object members_in, int n_universe, int budget, object unc_in):
    cdef cnp.ndarray[cnp.int64_t, ndim=1] indptr = np.ascontiguousarray(indptr_in, dtype=np.int64)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] members = np.ascontiguousarray(members_in, dtype=np.int32)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] unc = np.ascontiguousarray(unc_in, dtype=np.float64)
    cdef Py_ssize_t n_sets = indptr.shape[0] - 1
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] covered = np.zeros(n_universe, dtype=np.uint8)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] active = np.ones(n_sets, dtype=np.uint8)
    cdef list picked = []
    cdef list gains = []
    cdef list candidates
    cdef Py_ssize_t s, x, best, n_cand, ci
    cdef long g, best_gain
    cdef double acc, best_unc
    while len(picked) < budget:
        best_gain = 0
        candidates = []
        for s in range(n_sets):
            if not active[s]:
                continue
            g = 0
            for x in range(indptr[s], indptr[s + 1]):
                if not covered[members[x]]:
                    g += 1
            if g > best_gain:
                best_gain = g
                candidates = [s]
            elif g == best_gain and g > 0:
                candidates.append(s)
        if best_gain == 0:
            break
        best = candidates[0]
        n_cand = len(candidates)
        if n_cand > 1:
            best_unc = -np.inf
            for ci in range(n_cand):
                s = candidates[ci]
                acc = 0.0
                for x in range(indptr[s], indptr[s + 1]):
                    if not covered[members[x]]:
                        acc += unc[members[x]]
                if acc > best_unc:
                    best_unc = acc
                    best = s
        for x in range(indptr[best], indptr[best + 1]):
            covered[members[x]] = 1
        active[best] = 0
        picked.append(best)
        gains.append(best_gain)
    return picked, covered.view(np.bool_), gains
