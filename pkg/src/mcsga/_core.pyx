# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
# distutils: language = c++
"""Compiled hot loops. ``mcsga._fallback`` mirrors every function here."""

import numpy as np

from libc.math cimport NAN
from libc.stdint cimport uint64_t
from libcpp.algorithm cimport nth_element, sort
from libcpp.pair cimport pair
from libcpp.vector cimport vector

ctypedef pair[double, int] Keyed

cdef double TAU = 1e-12


# ---------------------------------------------------------------- pAUC

cdef inline double _clip_trapezoid(double x0, double y0, double x1, double y1,
                                   double lo, double hi) noexcept nogil:
    cdef double a, b, ya, yb, slope
    if x1 <= lo or x0 >= hi or x1 == x0:
        return 0.0
    a = x0 if x0 > lo else lo
    b = x1 if x1 < hi else hi
    slope = (y1 - y0) / (x1 - x0)
    ya = y0 + slope * (a - x0)
    yb = y0 + slope * (b - x0)
    return (b - a) * (ya + yb) / 2.0


cdef double _sorted_window_area(vector[Keyed]& buf, Py_ssize_t n,
                                double lo, double hi) noexcept nogil:
    # buf[:n] holds (-score, is_positive) sorted ascending
    cdef Py_ssize_t i, n_pos = 0, n_neg
    for i in range(n):
        n_pos += buf[i].second
    n_neg = n - n_pos
    if n_pos == 0 or n_neg == 0:
        return NAN
    return _sweep(buf, n, n_pos, n_neg, lo, hi)


cdef double _sweep(vector[Keyed]& buf, Py_ssize_t n, Py_ssize_t n_pos, Py_ssize_t n_neg,
                   double lo, double hi) noexcept nogil:
    cdef Py_ssize_t i = 0
    cdef double key, area = 0.0, x0 = 0.0, y0 = 0.0, x1, y1
    cdef long tp = 0, fp = 0
    while i < n:
        key = buf[i].first
        while i < n and buf[i].first == key:
            if buf[i].second:
                tp += 1
            else:
                fp += 1
            i += 1
        x1 = <double>fp / n_neg
        y1 = <double>tp / n_pos
        area += _clip_trapezoid(x0, y0, x1, y1, lo, hi)
        x0 = x1
        y0 = y1
        if x0 >= hi:
            break
    return area


cdef double _select_window_area(vector[Keyed]& buf, Py_ssize_t n, double lo, double hi,
                                vector[double]& neg_keys) noexcept nogil:
    # Only rows ranked above the first negative past fpr == hi can touch the
    # window: select them with nth_element, sort just that prefix.
    cdef Py_ssize_t i, n_pos = 0, n_neg = 0, need, kept = 0
    cdef double cut
    for i in range(n):
        if buf[i].second:
            n_pos += 1
        else:
            neg_keys[n_neg] = buf[i].first
            n_neg += 1
    if n_pos == 0 or n_neg == 0:
        return NAN
    need = <Py_ssize_t>(hi * n_neg) + 1
    if need >= n_neg:
        sort(buf.begin(), buf.begin() + n)
        return _sorted_window_area(buf, n, lo, hi)
    nth_element(neg_keys.begin(), neg_keys.begin() + (need - 1), neg_keys.begin() + n_neg)
    cut = neg_keys[need - 1]
    for i in range(n):
        if buf[i].first <= cut:
            buf[kept], buf[i] = buf[i], buf[kept]
            kept += 1
    sort(buf.begin(), buf.begin() + kept)
    return _sweep(buf, kept, n_pos, n_neg, lo, hi)


def window_area(const double[::1] scores, const signed char[::1] positive,
                double fpr_lo, double fpr_hi):
    """Raw ROC area for fpr in [fpr_lo, fpr_hi]; NaN when one class is absent."""
    cdef Py_ssize_t i, n = scores.shape[0]
    cdef vector[Keyed] buf
    cdef vector[double] neg_keys
    cdef double out
    buf.resize(n)
    neg_keys.resize(n)
    with nogil:
        for i in range(n):
            buf[i] = Keyed(-scores[i], positive[i])
        out = _select_window_area(buf, n, fpr_lo, fpr_hi, neg_keys)
    return out


def fold_pauc_batch(const double[:, ::1] weights, const double[:, ::1] conf,
                    const signed char[::1] positive, const Py_ssize_t[::1] offsets,
                    double fpr_lo, double fpr_hi):
    """Normalized per-fold window area for every weight row.

    ``conf`` rows must be grouped by fold; fold f spans
    ``offsets[f]:offsets[f + 1]``. Returns a (n_weights, n_folds) array.
    """
    cdef Py_ssize_t n_w = weights.shape[0], m = weights.shape[1]
    cdef Py_ssize_t k = offsets.shape[0] - 1
    cdef Py_ssize_t p, f, r, c, start, stop
    cdef double s, width = fpr_hi - fpr_lo
    cdef vector[Keyed] buf
    cdef vector[double] neg_keys
    out = np.empty((n_w, k), dtype=np.float64)
    cdef double[:, ::1] out_v = out
    buf.resize(conf.shape[0])
    neg_keys.resize(conf.shape[0])
    with nogil:
        for p in range(n_w):
            for f in range(k):
                start = offsets[f]
                stop = offsets[f + 1]
                for r in range(start, stop):
                    s = 0.0
                    for c in range(m):
                        s += weights[p, c] * conf[r, c]
                    buf[r - start] = Keyed(-s, positive[r])
                out_v[p, f] = _select_window_area(buf, stop - start, fpr_lo, fpr_hi, neg_keys) / width
    return out


# ---------------------------------------------------------------- trees

cdef inline uint64_t _splitmix_next(uint64_t* state) noexcept nogil:
    cdef uint64_t z
    state[0] += <uint64_t>0x9E3779B97F4A7C15
    z = state[0]
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EB
    return z ^ (z >> 31)


def grow_tree(const double[:, ::1] X, const signed char[::1] positive,
              const Py_ssize_t[::1] sample, Py_ssize_t mtry,
              Py_ssize_t min_node_size, unsigned long long seed):
    """Grow one unpruned Gini tree on the rows listed in ``sample``.

    Returns (feature, threshold, left, right, value) node arrays in preorder;
    leaves carry feature == -1 and value == fraction of positives.
    """
    cdef Py_ssize_t n = sample.shape[0], d = X.shape[1]
    cdef uint64_t state = seed
    cdef vector[Py_ssize_t] idx, scratch, feats
    cdef vector[Keyed] col
    cdef vector[Py_ssize_t] st_node, st_start, st_end
    cdef vector[Py_ssize_t] feature, left, right
    cdef vector[double] threshold, value
    cdef Py_ssize_t node, start, end, n_node, pos, i, t, r, f, fi, tmp
    cdef Py_ssize_t best_f, nl, pl, nr, pr, write, n_left
    cdef double parent_score, best_score, score, thr, best_thr, v

    idx.resize(n)
    scratch.resize(n)
    col.resize(n)
    feats.resize(d)
    for i in range(n):
        idx[i] = sample[i]

    feature.push_back(-1)
    threshold.push_back(0.0)
    left.push_back(-1)
    right.push_back(-1)
    value.push_back(0.0)
    st_node.push_back(0)
    st_start.push_back(0)
    st_end.push_back(n)

    with nogil:
        while st_node.size() > 0:
            node = st_node.back()
            start = st_start.back()
            end = st_end.back()
            st_node.pop_back()
            st_start.pop_back()
            st_end.pop_back()

            n_node = end - start
            pos = 0
            for i in range(start, end):
                pos += positive[idx[i]]
            value[node] = <double>pos / n_node
            if pos == 0 or pos == n_node or n_node <= min_node_size:
                continue

            parent_score = (<double>pos * pos + <double>(n_node - pos) * (n_node - pos)) / n_node
            for i in range(d):
                feats[i] = i
            for t in range(mtry):
                r = t + <Py_ssize_t>(_splitmix_next(&state) % <uint64_t>(d - t))
                tmp = feats[t]
                feats[t] = feats[r]
                feats[r] = tmp

            best_f = -1
            best_score = parent_score
            best_thr = 0.0
            for fi in range(mtry):
                f = feats[fi]
                for i in range(n_node):
                    col[i] = Keyed(X[idx[start + i], f], positive[idx[start + i]])
                sort(col.begin(), col.begin() + n_node)
                nl = 0
                pl = 0
                for i in range(n_node - 1):
                    nl += 1
                    pl += col[i].second
                    if col[i].first < col[i + 1].first:
                        nr = n_node - nl
                        pr = pos - pl
                        score = ((<double>pl * pl + <double>(nl - pl) * (nl - pl)) / nl
                                 + (<double>pr * pr + <double>(nr - pr) * (nr - pr)) / nr)
                        if score > best_score:
                            best_score = score
                            best_f = f
                            thr = (col[i].first + col[i + 1].first) / 2.0
                            if thr >= col[i + 1].first:
                                thr = col[i].first
                            best_thr = thr
            if best_f < 0:
                continue

            # stable partition: left rows keep order, then right rows
            write = start
            n_left = 0
            for i in range(start, end):
                v = X[idx[i], best_f]
                if v <= best_thr:
                    idx[write] = idx[i]
                    write += 1
                else:
                    scratch[n_left] = idx[i]
                    n_left += 1
            for i in range(n_left):
                idx[write + i] = scratch[i]

            feature[node] = best_f
            threshold[node] = best_thr
            left[node] = feature.size()
            right[node] = feature.size() + 1
            for t in range(2):
                feature.push_back(-1)
                threshold.push_back(0.0)
                left.push_back(-1)
                right.push_back(-1)
                value.push_back(0.0)
            st_node.push_back(right[node])
            st_start.push_back(write)
            st_end.push_back(end)
            st_node.push_back(left[node])
            st_start.push_back(start)
            st_end.push_back(write)

    cdef Py_ssize_t n_nodes = feature.size()
    feat_a = np.empty(n_nodes, dtype=np.intp)
    thr_a = np.empty(n_nodes, dtype=np.float64)
    left_a = np.empty(n_nodes, dtype=np.intp)
    right_a = np.empty(n_nodes, dtype=np.intp)
    val_a = np.empty(n_nodes, dtype=np.float64)
    cdef Py_ssize_t[::1] fv = feat_a, lv = left_a, rv = right_a
    cdef double[::1] tv = thr_a, vv = val_a
    for i in range(n_nodes):
        fv[i] = feature[i]
        tv[i] = threshold[i]
        lv[i] = left[i]
        rv[i] = right[i]
        vv[i] = value[i]
    return feat_a, thr_a, left_a, right_a, val_a


def forest_votes(const double[:, ::1] X, const Py_ssize_t[::1] roots,
                 const Py_ssize_t[::1] feature, const double[::1] threshold,
                 const Py_ssize_t[::1] left, const Py_ssize_t[::1] right,
                 const double[::1] value):
    """Number of trees voting positive (leaf value >= 0.5) for each row."""
    cdef Py_ssize_t n = X.shape[0], n_trees = roots.shape[0], r, t, node
    votes = np.zeros(n, dtype=np.intp)
    cdef Py_ssize_t[::1] vv = votes
    with nogil:
        for r in range(n):
            for t in range(n_trees):
                node = roots[t]
                while feature[node] >= 0:
                    if X[r, feature[node]] <= threshold[node]:
                        node = left[node]
                    else:
                        node = right[node]
                if value[node] >= 0.5:
                    vv[r] += 1
    return votes


# ---------------------------------------------------------------- SMO

def smo_solve(const double[:, ::1] K, const signed char[::1] y, double C,
              double tol, long max_iter):
    """C-SVC dual by SMO with second-order working-set selection.

    Returns (alpha, gradient, iterations, converged).
    """
    cdef Py_ssize_t n = K.shape[0], t, i, j
    cdef long it = 0
    cdef bint converged = False
    cdef double gmax, gmax2, grad_diff, quad, obj, obj_min, val
    cdef double yi, yj, kij, old_ai, old_aj, ai, aj, delta, diff, total
    cdef double dai, daj
    alpha_a = np.zeros(n, dtype=np.float64)
    grad_a = -np.ones(n, dtype=np.float64)
    cdef double[::1] a = alpha_a
    cdef double[::1] G = grad_a

    with nogil:
        while it < max_iter:
            gmax = -1e300
            i = -1
            for t in range(n):
                if (y[t] == 1 and a[t] < C) or (y[t] == -1 and a[t] > 0):
                    val = -y[t] * G[t]
                    if val > gmax:
                        gmax = val
                        i = t
            gmax2 = -1e300
            j = -1
            obj_min = 1e300
            if i >= 0:
                for t in range(n):
                    if (y[t] == 1 and a[t] > 0) or (y[t] == -1 and a[t] < C):
                        val = y[t] * G[t]
                        if val > gmax2:
                            gmax2 = val
                        grad_diff = gmax + val
                        if grad_diff > 0:
                            quad = K[i, i] + K[t, t] - 2.0 * K[i, t]
                            if quad <= 0:
                                quad = TAU
                            obj = -(grad_diff * grad_diff) / quad
                            if obj < obj_min:
                                obj_min = obj
                                j = t
            if i < 0 or j < 0 or gmax + gmax2 < tol:
                converged = True
                break

            yi = y[i]
            yj = y[j]
            kij = K[i, j]
            old_ai = a[i]
            old_aj = a[j]
            ai = old_ai
            aj = old_aj
            if yi != yj:
                quad = K[i, i] + K[j, j] + 2.0 * (yi * yj * kij)
                if quad <= 0:
                    quad = TAU
                delta = (-G[i] - G[j]) / quad
                diff = ai - aj
                ai += delta
                aj += delta
                if diff > 0:
                    if aj < 0:
                        aj = 0
                        ai = diff
                else:
                    if ai < 0:
                        ai = 0
                        aj = -diff
                if diff > 0:
                    if ai > C:
                        ai = C
                        aj = C - diff
                else:
                    if aj > C:
                        aj = C
                        ai = C + diff
            else:
                quad = K[i, i] + K[j, j] - 2.0 * (yi * yj * kij)
                if quad <= 0:
                    quad = TAU
                delta = (G[i] - G[j]) / quad
                total = ai + aj
                ai -= delta
                aj += delta
                if total > C:
                    if ai > C:
                        ai = C
                        aj = total - C
                else:
                    if aj < 0:
                        aj = 0
                        ai = total
                if total > C:
                    if aj > C:
                        aj = C
                        ai = total - C
                else:
                    if ai < 0:
                        ai = 0
                        aj = total
            a[i] = ai
            a[j] = aj
            dai = ai - old_ai
            daj = aj - old_aj
            for t in range(n):
                G[t] += y[t] * (yi * K[i, t] * dai + yj * K[j, t] * daj)
            it += 1
    return alpha_a, grad_a, it, converged
