"""Compiled CART kernels.

Trees are stored as flat arrays (``feature``, ``threshold``, ``left``,
``right``, ``value``); ``feature == -1`` marks a leaf. A row goes left when
``x[feature] <= threshold``. Split search is exact greedy over midpoints of
consecutive distinct values; among equal gains the lowest feature index wins,
then the lowest threshold.
"""

import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


@njit(cache=True)
def _splitmix(state):
    state[0] += _GOLDEN
    z = state[0]
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


@njit(cache=True)
def _randbelow(state, n):
    return np.int64(_splitmix(state) % np.uint64(n))


@njit(cache=True)
def _midpoint(a, b):
    t = a + (b - a) / 2.0
    if t >= b:
        t = a
    return t


@njit(cache=True)
def _partition(X, idx, start, end, feature, threshold, buf):
    n_left = 0
    for i in range(start, end):
        if X[idx[i], feature] <= threshold:
            n_left += 1
    li = start
    ri = start + n_left
    for i in range(start, end):
        r = idx[i]
        if X[r, feature] <= threshold:
            buf[li] = r
            li += 1
        else:
            buf[ri] = r
            ri += 1
    for i in range(start, end):
        idx[i] = buf[i]
    return start + n_left


@njit(cache=True)
def build_gini_tree(X, y, rows, max_features, min_samples_split, max_depth, seed):
    """Classification tree on the (possibly repeated) row indices ``rows``.

    At each node features are visited in a random order until ``max_features``
    non-constant ones have been seen; the best Gini split among those is taken.
    ``max_depth < 0`` means unlimited. Leaf values are class-1 fractions.
    """
    n = rows.shape[0]
    m = X.shape[1]
    cap = 2 * n + 1
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros(cap)

    idx = rows.copy()
    buf = np.empty(n, dtype=np.int64)
    state = np.zeros(1, dtype=np.uint64)
    state[0] = np.uint64(seed)
    perm = np.arange(m)
    chosen = np.zeros(m, dtype=np.bool_)
    vals = np.empty(n)
    labs = np.empty(n)

    stack_node = np.empty(cap, dtype=np.int64)
    stack_start = np.empty(cap, dtype=np.int64)
    stack_end = np.empty(cap, dtype=np.int64)
    stack_depth = np.empty(cap, dtype=np.int64)
    top = 0
    stack_node[0] = 0
    stack_start[0] = 0
    stack_end[0] = n
    stack_depth[0] = 0
    top = 1
    n_nodes = 1

    while top > 0:
        top -= 1
        node = stack_node[top]
        start = stack_start[top]
        end = stack_end[top]
        depth = stack_depth[top]
        size = end - start
        pos = 0.0
        for i in range(start, end):
            pos += y[idx[i]]
        value[node] = pos / size
        if pos == 0.0 or pos == size or size < min_samples_split:
            continue
        if max_depth >= 0 and depth >= max_depth:
            continue

        # random feature order (Fisher-Yates), stop after max_features usable ones
        for j in range(m):
            perm[j] = j
            chosen[j] = False
        found = 0
        for j in range(m):
            s = j + _randbelow(state, m - j)
            tmp = perm[j]
            perm[j] = perm[s]
            perm[s] = tmp
            f = perm[j]
            lo = X[idx[start], f]
            hi = lo
            for i in range(start + 1, end):
                v = X[idx[i], f]
                if v < lo:
                    lo = v
                if v > hi:
                    hi = v
            if hi > lo:
                chosen[f] = True
                found += 1
                if found >= max_features:
                    break
        if found == 0:
            continue

        best_score = -1.0
        best_f = -1
        best_t = 0.0
        for f in range(m):
            if not chosen[f]:
                continue
            for i in range(size):
                vals[i] = X[idx[start + i], f]
                labs[i] = y[idx[start + i]]
            order = np.argsort(vals[:size])
            pos_l = 0.0
            for i in range(size - 1):
                pos_l += labs[order[i]]
                a = vals[order[i]]
                b = vals[order[i + 1]]
                if a == b:
                    continue
                n_l = i + 1.0
                n_r = size - n_l
                pos_r = pos - pos_l
                neg_l = n_l - pos_l
                neg_r = n_r - pos_r
                # maximizing this is minimizing weighted child Gini impurity
                score = (pos_l * pos_l + neg_l * neg_l) / n_l + (pos_r * pos_r + neg_r * neg_r) / n_r
                if score > best_score:
                    best_score = score
                    best_f = f
                    best_t = _midpoint(a, b)
        if best_f < 0:
            continue
        mid = _partition(X, idx, start, end, best_f, best_t, buf)
        feature[node] = best_f
        threshold[node] = best_t
        l_node = n_nodes
        r_node = n_nodes + 1
        n_nodes += 2
        left[node] = l_node
        right[node] = r_node
        # push right first so the left subtree is numbered first
        stack_node[top] = r_node
        stack_start[top] = mid
        stack_end[top] = end
        stack_depth[top] = depth + 1
        top += 1
        stack_node[top] = l_node
        stack_start[top] = start
        stack_end[top] = mid
        stack_depth[top] = depth + 1
        top += 1

    return (
        feature[:n_nodes].copy(),
        threshold[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        value[:n_nodes].copy(),
    )


@njit(cache=True)
def build_newton_tree(X, grad, hess, max_depth, reg_lambda, min_samples_split):
    """Regression tree on gradient/hessian pairs (second-order boosting).

    Split gain is ``GL^2/(HL+lam) + GR^2/(HR+lam) - G^2/(H+lam)``; a node is
    split only for strictly positive gain. Leaf value is ``-G/(H+lam)``.
    """
    n, m = X.shape
    cap = 2 ** (max_depth + 1)
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros(cap)

    idx = np.arange(n)
    buf = np.empty(n, dtype=np.int64)
    vals = np.empty(n)

    stack_node = np.empty(cap, dtype=np.int64)
    stack_start = np.empty(cap, dtype=np.int64)
    stack_end = np.empty(cap, dtype=np.int64)
    stack_depth = np.empty(cap, dtype=np.int64)
    stack_node[0] = 0
    stack_start[0] = 0
    stack_end[0] = n
    stack_depth[0] = 0
    top = 1
    n_nodes = 1

    while top > 0:
        top -= 1
        node = stack_node[top]
        start = stack_start[top]
        end = stack_end[top]
        depth = stack_depth[top]
        size = end - start
        G = 0.0
        H = 0.0
        for i in range(start, end):
            G += grad[idx[i]]
            H += hess[idx[i]]
        value[node] = -G / (H + reg_lambda)
        if depth >= max_depth or size < min_samples_split:
            continue
        parent = G * G / (H + reg_lambda)
        best_gain = 0.0
        best_f = -1
        best_t = 0.0
        for f in range(m):
            for i in range(size):
                vals[i] = X[idx[start + i], f]
            order = np.argsort(vals[:size])
            gl = 0.0
            hl = 0.0
            for i in range(size - 1):
                r = idx[start + order[i]]
                gl += grad[r]
                hl += hess[r]
                a = vals[order[i]]
                b = vals[order[i + 1]]
                if a == b:
                    continue
                gr = G - gl
                hr = H - hl
                gain = gl * gl / (hl + reg_lambda) + gr * gr / (hr + reg_lambda) - parent
                if gain > best_gain:
                    best_gain = gain
                    best_f = f
                    best_t = _midpoint(a, b)
        if best_f < 0:
            continue
        mid = _partition(X, idx, start, end, best_f, best_t, buf)
        feature[node] = best_f
        threshold[node] = best_t
        l_node = n_nodes
        r_node = n_nodes + 1
        n_nodes += 2
        left[node] = l_node
        right[node] = r_node
        stack_node[top] = r_node
        stack_start[top] = mid
        stack_end[top] = end
        stack_depth[top] = depth + 1
        top += 1
        stack_node[top] = l_node
        stack_start[top] = start
        stack_end[top] = mid
        stack_depth[top] = depth + 1
        top += 1

    return (
        feature[:n_nodes].copy(),
        threshold[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        value[:n_nodes].copy(),
    )


@njit(cache=True)
def predict_ensemble(X, offsets, feature, threshold, left, right, value):
    """Per-tree leaf values for every row, summed in tree order.

    ``offsets[t]`` is the first node of tree ``t`` in the concatenated arrays;
    child indices are local to their tree.
    """
    n = X.shape[0]
    n_trees = offsets.shape[0] - 1
    out = np.zeros(n)
    # tree-major loop keeps one tree hot in cache; each row still sums in tree order
    for t in range(n_trees):
        base = offsets[t]
        f_t = feature[base:offsets[t + 1]]
        th_t = threshold[base:offsets[t + 1]]
        l_t = left[base:offsets[t + 1]]
        r_t = right[base:offsets[t + 1]]
        v_t = value[base:offsets[t + 1]]
        for r in range(n):
            node = 0
            while f_t[node] >= 0:
                if X[r, f_t[node]] <= th_t[node]:
                    node = l_t[node]
                else:
                    node = r_t[node]
            out[r] += v_t[node]
    return out
