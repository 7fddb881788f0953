"""Pure-Python/numpy versions of the routines in ``_core.pyx``.

Same signatures, same arithmetic order and the same tie rules, so the two
backends agree to floating-point round-off (trees and SMO iterates match
exactly on well-conditioned inputs).
"""

import numpy as np

TAU = 1e-12
_MASK64 = (1 << 64) - 1


def _clip_trapezoid(x0, y0, x1, y1, lo, hi):
    if x1 <= lo or x0 >= hi or x1 == x0:
        return 0.0
    a = x0 if x0 > lo else lo
    b = x1 if x1 < hi else hi
    slope = (y1 - y0) / (x1 - x0)
    ya = y0 + slope * (a - x0)
    yb = y0 + slope * (b - x0)
    return (b - a) * (ya + yb) / 2.0


def _vertices(scores, positive):
    order = np.lexsort((positive, -scores))
    s = -scores[order]
    pos = positive[order].astype(np.int64)
    ends = np.flatnonzero(np.r_[s[1:] != s[:-1], True])
    tp = np.cumsum(pos)[ends]
    fp = (ends + 1) - tp
    return fp, tp


def window_area(scores, positive, fpr_lo, fpr_hi):
    scores = np.asarray(scores, dtype=np.float64)
    positive = np.asarray(positive, dtype=np.int8)
    n_pos = int(positive.sum())
    n_neg = len(positive) - n_pos
    if n_pos == 0 or n_neg == 0:
        return float("nan")
    fp, tp = _vertices(scores, positive)
    area = 0.0
    x0 = y0 = 0.0
    for f, t in zip(fp.tolist(), tp.tolist()):
        x1 = f / n_neg
        y1 = t / n_pos
        area += _clip_trapezoid(x0, y0, x1, y1, fpr_lo, fpr_hi)
        x0, y0 = x1, y1
        if x0 >= fpr_hi:
            break
    return area


def fold_pauc_batch(weights, conf, positive, offsets, fpr_lo, fpr_hi):
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    conf = np.ascontiguousarray(conf, dtype=np.float64)
    n_w, m = weights.shape
    k = len(offsets) - 1
    width = fpr_hi - fpr_lo
    out = np.empty((n_w, k))
    # left-to-right accumulation, as in the compiled loop
    scores = np.zeros((n_w, conf.shape[0]))
    for c in range(m):
        scores += weights[:, c : c + 1] * conf[:, c]
    for f in range(k):
        start, stop = offsets[f], offsets[f + 1]
        out[:, f] = _batch_window_area(scores[:, start:stop], positive[start:stop], fpr_lo, fpr_hi) / width
    return out


def _batch_window_area(scores, positive, lo, hi):
    """Vectorized clipped-trapezoid area for each row of ``scores``."""
    n_rows, n = scores.shape
    pos = np.asarray(positive, dtype=np.int64)
    n_pos = int(pos.sum())
    n_neg = n - n_pos
    if n_pos == 0 or n_neg == 0:
        return np.full(n_rows, np.nan)
    order = np.argsort(-scores, axis=1, kind="stable")
    s = np.take_along_axis(-scores, order, axis=1)
    tp = np.cumsum(pos[order], axis=1)
    fp = np.arange(1, n + 1) - tp
    # collinear points inside a tie group are moved onto the group's diagonal
    is_end = np.ones((n_rows, n), dtype=bool)
    is_end[:, :-1] = s[:, 1:] != s[:, :-1]
    group_start = np.zeros((n_rows, n), dtype=bool)
    group_start[:, 0] = True
    group_start[:, 1:] = is_end[:, :-1]
    x = fp / n_neg
    y = tp / n_pos
    x_end = _fill_backward(x, is_end)
    y_end = _fill_backward(y, is_end)
    x_prev = np.zeros((n_rows, n))
    y_prev = np.zeros((n_rows, n))
    x_prev[:, 1:] = x_end[:, :-1]
    y_prev[:, 1:] = y_end[:, :-1]
    x0 = _fill_forward(x_prev, group_start)
    y0 = _fill_forward(y_prev, group_start)
    # one segment per group: from the previous vertex to this group's end
    x0, y0, x1, y1 = (a[is_end] for a in (x0, y0, x_end, y_end))
    rows = np.nonzero(is_end)[0]
    a = np.maximum(x0, lo)
    b = np.minimum(x1, hi)
    live = (x1 > lo) & (x0 < hi) & (x1 != x0)
    dx = np.where(live, x1 - x0, 1.0)
    slope = (y1 - y0) / dx
    ya = y0 + slope * (a - x0)
    yb = y0 + slope * (b - x0)
    seg = np.where(live, (b - a) * (ya + yb) / 2.0, 0.0)
    return np.bincount(rows, weights=seg, minlength=n_rows)


def _fill_backward(values, mask):
    # value at the next True position at or after each index
    n = values.shape[1]
    idx = np.where(mask, np.arange(n), n)
    idx = np.minimum.accumulate(idx[:, ::-1], axis=1)[:, ::-1]
    return np.take_along_axis(values, idx, axis=1)


def _fill_forward(values, mask):
    n = values.shape[1]
    idx = np.where(mask, np.arange(n), 0)
    idx = np.maximum.accumulate(idx, axis=1)
    return np.take_along_axis(values, idx, axis=1)


def _splitmix_next(state):
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, z ^ (z >> 31)


def grow_tree(X, positive, sample, mtry, min_node_size, seed):
    X = np.asarray(X, dtype=np.float64)
    positive = np.asarray(positive, dtype=np.int8)
    d = X.shape[1]
    state = int(seed) & _MASK64
    idx = [int(i) for i in sample]
    feature, threshold, left, right, value = [-1], [0.0], [-1], [-1], [0.0]
    stack = [(0, 0, len(idx))]
    while stack:
        node, start, end = stack.pop()
        rows = idx[start:end]
        n_node = end - start
        pos = int(positive[rows].sum())
        value[node] = pos / n_node
        if pos == 0 or pos == n_node or n_node <= min_node_size:
            continue
        parent_score = (float(pos) * pos + float(n_node - pos) * (n_node - pos)) / n_node
        feats = list(range(d))
        for t in range(mtry):
            state, z = _splitmix_next(state)
            r = t + z % (d - t)
            feats[t], feats[r] = feats[r], feats[t]

        best_f, best_score, best_thr = -1, parent_score, 0.0
        y_node = positive[rows]
        for f in feats[:mtry]:
            vals = X[rows, f]
            order = np.lexsort((y_node, vals))
            v = vals[order]
            lab = y_node[order].astype(np.int64)
            nl = np.arange(1, n_node, dtype=np.float64)
            pl = np.cumsum(lab)[:-1].astype(np.float64)
            nr = n_node - nl
            pr = pos - pl
            score = (pl * pl + (nl - pl) * (nl - pl)) / nl + (pr * pr + (nr - pr) * (nr - pr)) / nr
            distinct = v[:-1] < v[1:]
            if not distinct.any():
                continue
            cand = np.where(distinct, score, -np.inf)
            i = int(np.argmax(cand))
            if cand[i] > best_score:
                best_score = float(cand[i])
                best_f = f
                thr = (v[i] + v[i + 1]) / 2.0
                if thr >= v[i + 1]:
                    thr = v[i]
                best_thr = float(thr)
        if best_f < 0:
            continue
        go_left = X[rows, best_f] <= best_thr
        left_rows = [r for r, g in zip(rows, go_left) if g]
        right_rows = [r for r, g in zip(rows, go_left) if not g]
        idx[start:end] = left_rows + right_rows
        mid = start + len(left_rows)
        feature[node] = best_f
        threshold[node] = best_thr
        left[node] = len(feature)
        right[node] = len(feature) + 1
        for _ in range(2):
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            value.append(0.0)
        stack.append((right[node], mid, end))
        stack.append((left[node], start, mid))
    return (
        np.array(feature, dtype=np.intp),
        np.array(threshold, dtype=np.float64),
        np.array(left, dtype=np.intp),
        np.array(right, dtype=np.intp),
        np.array(value, dtype=np.float64),
    )


def forest_votes(X, roots, feature, threshold, left, right, value):
    X = np.asarray(X, dtype=np.float64)
    rows = np.arange(X.shape[0])
    votes = np.zeros(X.shape[0], dtype=np.intp)
    for root in roots:
        node = np.full(X.shape[0], root, dtype=np.intp)
        inner = feature[node] >= 0
        while inner.any():
            cur = node[inner]
            go_left = X[rows[inner], feature[cur]] <= threshold[cur]
            node[inner] = np.where(go_left, left[cur], right[cur])
            inner = feature[node] >= 0
        votes += value[node] >= 0.5
    return votes


def smo_solve(K, y, C, tol, max_iter):
    K = np.asarray(K, dtype=np.float64)
    yf = np.asarray(y, dtype=np.float64)
    n = K.shape[0]
    diag = np.diag(K).copy()
    a = np.zeros(n)
    G = -np.ones(n)
    it = 0
    converged = False
    pos = yf == 1
    while it < max_iter:
        up = (pos & (a < C)) | (~pos & (a > 0))
        if not up.any():
            converged = True
            break
        i = int(np.argmax(np.where(up, -yf * G, -np.inf)))
        gmax = -yf[i] * G[i]
        low = (pos & (a > 0)) | (~pos & (a < C))
        val = yf * G
        gmax2 = val[low].max() if low.any() else -1e300
        grad_diff = gmax + val
        cand = low & (grad_diff > 0)
        if not cand.any() or gmax + gmax2 < tol:
            converged = True
            break
        quad = K[i, i] + diag - 2.0 * K[i]
        quad = np.where(quad <= 0, TAU, quad)
        obj = np.where(cand, -(grad_diff * grad_diff) / quad, np.inf)
        j = int(np.argmin(obj))

        yi, yj, kij = yf[i], yf[j], K[i, j]
        old_ai, old_aj = a[i], a[j]
        ai, aj = old_ai, old_aj
        if yi != yj:
            q = K[i, i] + K[j, j] + 2.0 * (yi * yj * kij)
            if q <= 0:
                q = TAU
            delta = (-G[i] - G[j]) / q
            diff = ai - aj
            ai += delta
            aj += delta
            if diff > 0:
                if aj < 0:
                    aj, ai = 0.0, diff
            elif ai < 0:
                ai, aj = 0.0, -diff
            if diff > 0:
                if ai > C:
                    ai, aj = C, C - diff
            elif aj > C:
                aj, ai = C, C + diff
        else:
            q = K[i, i] + K[j, j] - 2.0 * (yi * yj * kij)
            if q <= 0:
                q = TAU
            delta = (G[i] - G[j]) / q
            total = ai + aj
            ai -= delta
            aj += delta
            if total > C:
                if ai > C:
                    ai, aj = C, total - C
            elif aj < 0:
                aj, ai = 0.0, total
            if total > C:
                if aj > C:
                    aj, ai = C, total - C
            elif ai < 0:
                ai, aj = 0.0, total
        a[i], a[j] = ai, aj
        G += yf * (yi * K[i] * (ai - old_ai) + yj * K[j] * (aj - old_aj))
        it += 1
    return a, G, it, converged
