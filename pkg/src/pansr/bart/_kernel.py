"""Compiled sum-of-trees sampler.

Trees live in fixed-capacity node arrays indexed ``[tree, node]``. Node 0 is
the root. A node is a leaf when ``var == -1``. Splitting rules are stored as
``(variable, cut index)`` and send a row left when its rank in that variable
is ``<= cut``; ranks index the sorted distinct training values, so a cut
index ``c`` corresponds to the threshold ``x <= unique_values[c]``.

Each row's current leaf in every tree is cached in ``leaf_of`` so that a
structural proposal only touches the rows of the affected nodes.
"""

import numpy as np
from numba import njit

GROW, PRUNE, CHANGE = 0, 1, 2


@njit(cache=True)
def _log_ml(n, s, sigma2, tau2):
    # leaf marginal likelihood with mu integrated out, up to partition-invariant terms
    v = sigma2 + n * tau2
    return 0.5 * np.log(sigma2 / v) + 0.5 * tau2 * s * s / (sigma2 * v)


@njit(cache=True)
def _available(var, cut, left, parent, node, j, ncut_j, xj, xc, xside):
    """Inclusive range of cut indices of variable ``j`` usable at ``node``.

    ``xside`` >= 0 adds a hypothetical split ``(xj, xc)`` directly above
    ``node``, with ``node`` on its left (0) or right (1) side.
    """
    lo = 0
    hi = ncut_j - 1
    if xside >= 0 and xj == j:
        if xside == 0:
            hi = min(hi, xc - 1)
        else:
            lo = max(lo, xc + 1)
    child = node
    par = parent[child]
    while par >= 0:
        if var[par] == j:
            c = cut[par]
            if left[par] == child:
                hi = min(hi, c - 1)
            else:
                lo = max(lo, c + 1)
        child = par
        par = parent[child]
    return lo, hi


@njit(cache=True)
def _splittable(var, cut, left, parent, depth, node, gvars, ncut, xj, xc, xside):
    plen = depth[node] + (1 if xside >= 0 else 0)
    if gvars.size > plen:
        return True
    for k in range(gvars.size):
        j = gvars[k]
        lo, hi = _available(var, cut, left, parent, node, j, ncut[j], xj, xc, xside)
        if lo <= hi:
            return True
    return False


@njit(cache=True)
def _draw_rule(var, cut, left, parent, node, gvars, ncut):
    while True:
        j = gvars[np.random.randint(0, gvars.size)]
        lo, hi = _available(var, cut, left, parent, node, j, ncut[j], -1, -1, -1)
        if lo <= hi:
            return j, np.random.randint(lo, hi + 1)


@njit(cache=True)
def _p_split(alpha, beta, d):
    return alpha * (1.0 + d) ** (-beta)


@njit(cache=True)
def _free_slot(alive, start):
    for k in range(start, alive.size):
        if not alive[k]:
            return k
    return -1


@njit(cache=True)
def _step_tree(var, cut, left, right, parent, depth, alive, leaf_of, r, XrT, ncut, gvars,
               alpha, beta, sigma2, tau2, p_grow, p_prune, counts, scratch_a, scratch_b,
               proposed, accepted):
    cap = var.size
    n = r.size
    nl = 0
    nnog = 0
    for k in range(cap):
        if not alive[k]:
            continue
        if var[k] == -1:
            scratch_a[nl] = k
            nl += 1
        elif var[left[k]] == -1 and var[right[k]] == -1:
            scratch_b[nnog] = k
            nnog += 1

    if nl == 1:
        move = GROW
    else:
        u = np.random.random()
        if u < p_grow:
            move = GROW
        elif u < p_grow + p_prune:
            move = PRUNE
        else:
            move = CHANGE
    proposed[move] += 1

    if move == GROW:
        leaf = scratch_a[np.random.randint(0, nl)]
        d = depth[leaf]
        if not _splittable(var, cut, left, parent, depth, leaf, gvars, ncut, -1, -1, -1):
            return
        j, c = _draw_rule(var, cut, left, parent, leaf, gvars, ncut)
        nL = 0
        nR = 0
        sL = 0.0
        sR = 0.0
        xj = XrT[j]
        for i in range(n):
            if leaf_of[i] == leaf:
                if xj[i] <= c:
                    nL += 1
                    sL += r[i]
                else:
                    nR += 1
                    sR += r[i]
        if nL == 0 or nR == 0:
            return
        ps = _p_split(alpha, beta, d)
        pl = _p_split(alpha, beta, d + 1) if _splittable(var, cut, left, parent, depth, leaf, gvars, ncut, j, c, 0) else 0.0
        pr = _p_split(alpha, beta, d + 1) if _splittable(var, cut, left, parent, depth, leaf, gvars, ncut, j, c, 1) else 0.0
        nog_new = nnog + 1
        par = parent[leaf]
        if par >= 0:
            sib = right[par] if left[par] == leaf else left[par]
            if var[sib] == -1:
                nog_new -= 1
        pg = 1.0 if nl == 1 else p_grow
        log_r = (_log_ml(nL, sL, sigma2, tau2) + _log_ml(nR, sR, sigma2, tau2)
                 - _log_ml(nL + nR, sL + sR, sigma2, tau2)
                 + np.log(ps) + np.log(1.0 - pl) + np.log(1.0 - pr) - np.log(1.0 - ps)
                 + np.log(p_prune) - np.log(nog_new) - np.log(pg) + np.log(nl))
        if np.log(np.random.random()) >= log_r:
            return
        a = _free_slot(alive, 1)
        if a < 0:
            return
        alive[a] = True
        b = _free_slot(alive, a + 1)
        if b < 0:
            alive[a] = False
            return
        alive[b] = True
        for k in (a, b):
            var[k] = -1
            cut[k] = -1
            parent[k] = leaf
            depth[k] = d + 1
            left[k] = -1
            right[k] = -1
        var[leaf] = j
        cut[leaf] = c
        left[leaf] = a
        right[leaf] = b
        for i in range(n):
            if leaf_of[i] == leaf:
                leaf_of[i] = a if xj[i] <= c else b
        counts[j] += 1
        accepted[GROW] += 1

    elif move == PRUNE:
        node = scratch_b[np.random.randint(0, nnog)]
        d = depth[node]
        a = left[node]
        b = right[node]
        nL = 0
        nR = 0
        sL = 0.0
        sR = 0.0
        for i in range(n):
            if leaf_of[i] == a:
                nL += 1
                sL += r[i]
            elif leaf_of[i] == b:
                nR += 1
                sR += r[i]
        ps = _p_split(alpha, beta, d)
        pl = _p_split(alpha, beta, d + 1) if _splittable(var, cut, left, parent, depth, a, gvars, ncut, -1, -1, -1) else 0.0
        pr = _p_split(alpha, beta, d + 1) if _splittable(var, cut, left, parent, depth, b, gvars, ncut, -1, -1, -1) else 0.0
        nl_new = nl - 1
        pg_new = 1.0 if nl_new == 1 else p_grow
        log_r = (_log_ml(nL + nR, sL + sR, sigma2, tau2)
                 - _log_ml(nL, sL, sigma2, tau2) - _log_ml(nR, sR, sigma2, tau2)
                 + np.log(1.0 - ps) - np.log(ps) - np.log(1.0 - pl) - np.log(1.0 - pr)
                 + np.log(pg_new) - np.log(nl_new) - np.log(p_prune) + np.log(nnog))
        if np.log(np.random.random()) >= log_r:
            return
        counts[var[node]] -= 1
        var[node] = -1
        cut[node] = -1
        left[node] = -1
        right[node] = -1
        alive[a] = False
        alive[b] = False
        for i in range(n):
            if leaf_of[i] == a or leaf_of[i] == b:
                leaf_of[i] = node
        accepted[PRUNE] += 1

    else:
        node = scratch_b[np.random.randint(0, nnog)]
        d = depth[node]
        a = left[node]
        b = right[node]
        j0 = var[node]
        c0 = cut[node]
        j, c = _draw_rule(var, cut, left, parent, node, gvars, ncut)
        xj = XrT[j]
        oL = 0
        oR = 0
        soL = 0.0
        soR = 0.0
        nL = 0
        nR = 0
        sL = 0.0
        sR = 0.0
        for i in range(n):
            li = leaf_of[i]
            if li == a or li == b:
                if li == a:
                    oL += 1
                    soL += r[i]
                else:
                    oR += 1
                    soR += r[i]
                if xj[i] <= c:
                    nL += 1
                    sL += r[i]
                else:
                    nR += 1
                    sR += r[i]
        if nL == 0 or nR == 0:
            return
        pc = _p_split(alpha, beta, d + 1)
        plo = pc if _splittable(var, cut, left, parent, depth, a, gvars, ncut, -1, -1, -1) else 0.0
        pro = pc if _splittable(var, cut, left, parent, depth, b, gvars, ncut, -1, -1, -1) else 0.0
        var[node] = j
        cut[node] = c
        pln = pc if _splittable(var, cut, left, parent, depth, a, gvars, ncut, -1, -1, -1) else 0.0
        prn = pc if _splittable(var, cut, left, parent, depth, b, gvars, ncut, -1, -1, -1) else 0.0
        log_r = (_log_ml(nL, sL, sigma2, tau2) + _log_ml(nR, sR, sigma2, tau2)
                 - _log_ml(oL, soL, sigma2, tau2) - _log_ml(oR, soR, sigma2, tau2)
                 + np.log(1.0 - pln) + np.log(1.0 - prn) - np.log(1.0 - plo) - np.log(1.0 - pro))
        if np.log(np.random.random()) >= log_r:
            var[node] = j0
            cut[node] = c0
            return
        for i in range(n):
            li = leaf_of[i]
            if li == a or li == b:
                leaf_of[i] = a if xj[i] <= c else b
        counts[j0] -= 1
        counts[j] += 1
        accepted[CHANGE] += 1


@njit(cache=True)
def _draw_leaves(var, alive, mu, leaf_of, r, sigma2, tau2, nsum, ssum):
    cap = var.size
    for k in range(cap):
        nsum[k] = 0
        ssum[k] = 0.0
    for i in range(r.size):
        nsum[leaf_of[i]] += 1
        ssum[leaf_of[i]] += r[i]
    for k in range(cap):
        if alive[k] and var[k] == -1:
            post_var = 1.0 / (1.0 / tau2 + nsum[k] / sigma2)
            mu[k] = post_var * ssum[k] / sigma2 + np.sqrt(post_var) * np.random.standard_normal()


@njit(cache=True)
def _store_tree(var, cut, left, right, mu, s_var, s_cut, s_left, s_right, s_val, pos, stack):
    """Append one tree in pre-order with tree-relative child indices."""
    start = pos
    top = 0
    stack[0] = 0
    # slot in the flat arrays for each pending node, so parents can patch children
    slots = np.empty(var.size, np.int64)
    slots[0] = pos
    pos += 1
    while top >= 0:
        k = stack[top]
        top -= 1
        at = slots[k]
        s_var[at] = var[k]
        s_cut[at] = cut[k]
        s_val[at] = mu[k] if var[k] == -1 else 0.0
        if var[k] == -1:
            s_left[at] = -1
            s_right[at] = -1
        else:
            slots[left[k]] = pos
            slots[right[k]] = pos + 1
            s_left[at] = pos - start
            s_right[at] = pos + 1 - start
            pos += 2
            top += 1
            stack[top] = right[k]
            top += 1
            stack[top] = left[k]
    return pos


@njit(cache=True)
def _grow_store(s_var, s_cut, s_left, s_right, s_val, need):
    size = s_var.size
    if need <= size:
        return s_var, s_cut, s_left, s_right, s_val
    new = max(need, 2 * size)
    nv = np.empty(new, np.int32)
    nc = np.empty(new, np.int32)
    nl = np.empty(new, np.int32)
    nr = np.empty(new, np.int32)
    nval = np.empty(new, np.float64)
    nv[:size] = s_var
    nc[:size] = s_cut
    nl[:size] = s_left
    nr[:size] = s_right
    nval[:size] = s_val
    return nv, nc, nl, nr, nval


@njit(cache=True)
def run_chain(XrT, ncut, gvars, y, num_trees, burn_in, num_draws, alpha, beta, tau2,
              sigma2_init, nu, lam, p_grow, p_prune, fixed_sigma, keep_trees, cap, seed):
    np.random.seed(seed)
    p, n = XrT.shape
    M = num_trees
    var = np.full((M, cap), -1, np.int32)
    cut = np.full((M, cap), -1, np.int32)
    left = np.full((M, cap), -1, np.int32)
    right = np.full((M, cap), -1, np.int32)
    parent = np.full((M, cap), -1, np.int32)
    depth = np.zeros((M, cap), np.int32)
    alive = np.zeros((M, cap), np.bool_)
    mu = np.zeros((M, cap), np.float64)
    alive[:, 0] = True
    leaf_of = np.zeros((M, n), np.int32)

    f = np.zeros(n)
    old = np.empty(n)
    r = np.empty(n)
    counts = np.zeros(p, np.int64)
    scratch_a = np.empty(cap, np.int64)
    scratch_b = np.empty(cap, np.int64)
    nsum = np.empty(cap, np.int64)
    ssum = np.empty(cap, np.float64)
    proposed = np.zeros(3, np.int64)
    accepted = np.zeros(3, np.int64)

    sigma2 = sigma2_init
    out_sigma2 = np.empty(num_draws)
    out_counts = np.zeros((num_draws, p), np.int64)
    train_sum = np.zeros(n)

    est = num_draws * M * 7 if keep_trees else 1
    s_var = np.empty(est, np.int32)
    s_cut = np.empty(est, np.int32)
    s_left = np.empty(est, np.int32)
    s_right = np.empty(est, np.int32)
    s_val = np.empty(est, np.float64)
    offsets = np.zeros(num_draws * M + 1 if keep_trees else 1, np.int64)
    stack = np.empty(cap, np.int64)
    pos = 0

    for it in range(burn_in + num_draws):
        for t in range(M):
            mu_t = mu[t]
            lo_t = leaf_of[t]
            for i in range(n):
                old[i] = mu_t[lo_t[i]]
                r[i] = y[i] - f[i] + old[i]
            _step_tree(var[t], cut[t], left[t], right[t], parent[t], depth[t], alive[t], lo_t, r,
                       XrT, ncut, gvars, alpha, beta, sigma2, tau2, p_grow, p_prune, counts,
                       scratch_a, scratch_b, proposed, accepted)
            _draw_leaves(var[t], alive[t], mu_t, lo_t, r, sigma2, tau2, nsum, ssum)
            for i in range(n):
                f[i] += mu_t[lo_t[i]] - old[i]
        if not fixed_sigma:
            ssr = 0.0
            for i in range(n):
                e = y[i] - f[i]
                ssr += e * e
            sigma2 = (nu * lam + ssr) / (2.0 * np.random.gamma((nu + n) / 2.0, 1.0))
        if it >= burn_in:
            k = it - burn_in
            out_sigma2[k] = sigma2
            out_counts[k] = counts
            for i in range(n):
                train_sum[i] += f[i]
            if keep_trees:
                for t in range(M):
                    nodes = 0
                    for q in range(cap):
                        if alive[t, q]:
                            nodes += 1
                    s_var, s_cut, s_left, s_right, s_val = _grow_store(
                        s_var, s_cut, s_left, s_right, s_val, pos + nodes)
                    offsets[k * M + t] = pos
                    pos = _store_tree(var[t], cut[t], left[t], right[t], mu[t],
                                      s_var, s_cut, s_left, s_right, s_val, pos, stack)
                offsets[(k + 1) * M] = pos

    return (out_sigma2, out_counts, train_sum / num_draws, proposed, accepted,
            s_var[:pos], s_cut[:pos], s_left[:pos], s_right[:pos], s_val[:pos], offsets)


@njit(cache=True)
def predict_sum(var, thr, left, right, val, offsets, num_draws, num_trees, X):
    """Posterior mean of the tree sum at each row of ``X`` (rescaled units)."""
    m = X.shape[0]
    out = np.zeros(m)
    for i in range(m):
        acc = 0.0
        for d in range(num_draws):
            tot = 0.0
            for t in range(num_trees):
                start = offsets[d * num_trees + t]
                k = 0
                while var[start + k] >= 0:
                    if X[i, var[start + k]] <= thr[start + k]:
                        k = left[start + k]
                    else:
                        k = right[start + k]
                tot += val[start + k]
            acc += tot
        out[i] = acc / num_draws
    return out
