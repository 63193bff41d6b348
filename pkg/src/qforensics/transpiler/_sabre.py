"""Compiled inner loop of the lookahead SWAP router.

``dist`` holds hop counts (adjacency test, release valve); ``hdist`` is
the distance the SWAP heuristic minimises. Gates are given as a two-qubit
skeleton: ``g0[k], g1[k]`` are logical
operands, ``nxt0[k], nxt1[k]`` the next gate on each of those wires (or -1)
and ``npred[k]`` the number of unexecuted predecessors.

The event log uses ``k >= 0`` for "gate k executed" and ``-(s + 1)`` for
"swap s inserted".
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _grow(arr, size):
    out = np.empty(max(2 * arr.shape[0], size), arr.dtype)
    out[: arr.shape[0]] = arr
    return out


@njit(cache=True)
def _swap_delta(k, p, q, g0, g1, l2p, hdist):
    """Change in ``hdist`` of gate ``k`` if physical qubits ``p`` and ``q`` swap."""
    if k < 0:
        return 0.0
    a = l2p[g0[k]]
    b = l2p[g1[k]]
    old = hdist[a, b]
    if a == p:
        a = q
    elif a == q:
        a = p
    if b == p:
        b = q
    elif b == q:
        b = p
    return hdist[a, b] - old


@njit(cache=True)
def sabre_route(g0, g1, nxt0, nxt1, npred_init, l2p_init, dist, hdist, nbr, penalty,
                ext_size, ext_weight, decay_delta, decay_reset, noise_weight, seed):
    n = g0.shape[0]
    nphys = dist.shape[0]
    nlog = l2p_init.shape[0]
    l2p = l2p_init.copy()
    p2l = np.full(nphys, -1, np.int64)
    for lq in range(nlog):
        p2l[l2p[lq]] = lq
    if seed >= 0:
        np.random.seed(seed)

    npred = npred_init.copy()
    front = np.empty(max(n, 1), np.int64)
    nf = 0
    for k in range(n):
        if npred[k] == 0:
            front[nf] = k
            nf += 1

    events = np.empty(2 * n + 16, np.int64)
    ne = 0
    sa = np.empty(n + 16, np.int64)
    sb = np.empty(n + 16, np.int64)
    ns = 0
    pos0 = np.full(n, -1, np.int64)
    pos1 = np.full(n, -1, np.int64)

    decay = np.ones(nphys)
    ext = np.empty(max(ext_size, 1), np.int64)
    queue = np.empty(max(n, 1), np.int64)
    stamp = np.zeros(max(n, 1), np.int64)
    epoch = 0
    front_at = np.full(nphys, -1, np.int64)
    ext_head = np.full(nphys, -1, np.int64)
    ent_gate = np.empty(2 * max(ext_size, 1), np.int64)
    ent_next = np.empty(2 * max(ext_size, 1), np.int64)

    diameter = 0
    for i in range(nphys):
        for j in range(nphys):
            if dist[i, j] > diameter:
                diameter = dist[i, j]
    stall_limit = 3 * diameter + 5
    stall = 0
    nswap_since_reset = 0
    executed = 0

    while executed < n:
        progressed = True
        while progressed:
            progressed = False
            i = 0
            while i < nf:
                k = front[i]
                pa = l2p[g0[k]]
                pb = l2p[g1[k]]
                if dist[pa, pb] == 1:
                    if ne >= events.shape[0]:
                        events = _grow(events, ne + 1)
                    events[ne] = k
                    ne += 1
                    pos0[k] = pa
                    pos1[k] = pb
                    executed += 1
                    # keep front order stable
                    for j in range(i, nf - 1):
                        front[j] = front[j + 1]
                    nf -= 1
                    s = nxt0[k]
                    if s >= 0:
                        npred[s] -= 1
                        if npred[s] == 0:
                            front[nf] = s
                            nf += 1
                    s = nxt1[k]
                    if s >= 0:
                        npred[s] -= 1
                        if npred[s] == 0:
                            front[nf] = s
                            nf += 1
                    progressed = True
                else:
                    i += 1
            if progressed:
                stall = 0
                nswap_since_reset = 0
                for p in range(nphys):
                    decay[p] = 1.0
        if executed == n:
            break

        if stall >= stall_limit:
            # release valve: walk the closest front gate together along a shortest path
            best_k = front[0]
            best_d = dist[l2p[g0[best_k]], l2p[g1[best_k]]]
            for i in range(1, nf):
                k = front[i]
                d = dist[l2p[g0[k]], l2p[g1[k]]]
                if d < best_d:
                    best_d = d
                    best_k = k
            pa = l2p[g0[best_k]]
            pb = l2p[g1[best_k]]
            while dist[pa, pb] > 1:
                r = -1
                for j in range(nbr.shape[1]):
                    c = nbr[pa, j]
                    if c < 0:
                        break
                    if dist[c, pb] == dist[pa, pb] - 1:
                        r = c
                        break
                if ns >= sa.shape[0]:
                    sa = _grow(sa, ns + 1)
                    sb = _grow(sb, ns + 1)
                if ne >= events.shape[0]:
                    events = _grow(events, ne + 1)
                sa[ns] = pa
                sb[ns] = r
                events[ne] = -(ns + 1)
                ns += 1
                ne += 1
                la = p2l[pa]
                lb = p2l[r]
                p2l[pa] = lb
                p2l[r] = la
                if la >= 0:
                    l2p[la] = r
                if lb >= 0:
                    l2p[lb] = pa
                pa = r
            stall = 0
            continue

        # extended set: breadth-first successors of the front layer
        epoch += 1
        nq = 0
        nx = 0
        for i in range(nf):
            stamp[front[i]] = epoch
        for i in range(nf):
            k = front[i]
            for s in (nxt0[k], nxt1[k]):
                if s >= 0 and stamp[s] != epoch:
                    stamp[s] = epoch
                    queue[nq] = s
                    nq += 1
        head = 0
        while head < nq and nx < ext_size:
            k = queue[head]
            head += 1
            ext[nx] = k
            nx += 1
            for s in (nxt0[k], nxt1[k]):
                if s >= 0 and stamp[s] != epoch:
                    stamp[s] = epoch
                    queue[nq] = s
                    nq += 1

        # only gates touching p or q change when (p, q) is swapped, so score
        # each candidate as a delta from the current sums
        sf0 = 0.0
        for t in range(nf):
            kk = front[t]
            a = l2p[g0[kk]]
            b = l2p[g1[kk]]
            front_at[a] = kk
            front_at[b] = kk
            sf0 += hdist[a, b]
        se0 = 0.0
        for t in range(nx):
            kk = ext[t]
            a = l2p[g0[kk]]
            b = l2p[g1[kk]]
            se0 += hdist[a, b]
            ent_gate[2 * t] = kk
            ent_next[2 * t] = ext_head[a]
            ext_head[a] = 2 * t
            ent_gate[2 * t + 1] = kk
            ent_next[2 * t + 1] = ext_head[b]
            ext_head[b] = 2 * t + 1
        escale = ext_weight * nf / nx if nx > 0 else 0.0

        best = np.inf
        bp = -1
        bq = -1
        nties = 0
        for i in range(nf):
            k = front[i]
            for side in range(2):
                p = l2p[g0[k]] if side == 0 else l2p[g1[k]]
                for j in range(nbr.shape[1]):
                    q = nbr[p, j]
                    if q < 0:
                        break
                    df = _swap_delta(front_at[p], p, q, g0, g1, l2p, hdist)
                    kq = front_at[q]
                    if kq >= 0 and kq != front_at[p]:
                        df += _swap_delta(kq, p, q, g0, g1, l2p, hdist)
                    de = 0.0
                    e = ext_head[p]
                    while e >= 0:
                        de += _swap_delta(ent_gate[e], p, q, g0, g1, l2p, hdist)
                        e = ent_next[e]
                    e = ext_head[q]
                    while e >= 0:
                        kk = ent_gate[e]
                        if l2p[g0[kk]] != p and l2p[g1[kk]] != p:
                            de += _swap_delta(kk, p, q, g0, g1, l2p, hdist)
                        e = ent_next[e]
                    h = (sf0 + df) + escale * (se0 + de)
                    dmax = decay[p] if decay[p] > decay[q] else decay[q]
                    h = dmax * h + noise_weight * penalty[p, q]
                    if h < best - 1e-9:
                        best = h
                        bp = p
                        bq = q
                        nties = 1
                    elif h <= best + 1e-9:
                        nties += 1
                        if seed >= 0 and np.random.random() * nties < 1.0:
                            bp = p
                            bq = q

        for t in range(nf):
            kk = front[t]
            front_at[l2p[g0[kk]]] = -1
            front_at[l2p[g1[kk]]] = -1
        for t in range(nx):
            kk = ext[t]
            ext_head[l2p[g0[kk]]] = -1
            ext_head[l2p[g1[kk]]] = -1

        if ns >= sa.shape[0]:
            sa = _grow(sa, ns + 1)
            sb = _grow(sb, ns + 1)
        if ne >= events.shape[0]:
            events = _grow(events, ne + 1)
        sa[ns] = bp
        sb[ns] = bq
        events[ne] = -(ns + 1)
        ns += 1
        ne += 1
        la = p2l[bp]
        lb = p2l[bq]
        p2l[bp] = lb
        p2l[bq] = la
        if la >= 0:
            l2p[la] = bq
        if lb >= 0:
            l2p[lb] = bp
        decay[bp] += decay_delta
        decay[bq] += decay_delta
        nswap_since_reset += 1
        if nswap_since_reset >= decay_reset:
            nswap_since_reset = 0
            for p in range(nphys):
                decay[p] = 1.0
        stall += 1

    return events[:ne].copy(), sa[:ns].copy(), sb[:ns].copy(), pos0, pos1, l2p
