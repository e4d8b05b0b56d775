"""Numba kernel for multi-edge-type progressive edge growth."""

import numpy as np
from numba import njit


@njit(cache=True)
def _pick(cands, n_cands, check_cnt, tie_rank):
    best = -1
    for i in range(n_cands):
        c = cands[i]
        if best < 0 or check_cnt[c] < check_cnt[best] or (
                check_cnt[c] == check_cnt[best] and tie_rank[c] < tie_rank[best]):
            best = c
    return best


@njit(cache=True)
def _is_adjacent(var_adj, var_cnt, v, c):
    for k in range(var_cnt[v]):
        if var_adj[v, k] == c:
            return True
    return False


@njit(cache=True)
def peg_kernel(var_deg, check_cap, order, type_order, tie_rank, max_vdeg, max_cdeg):
    """Grow a Tanner graph edge by edge.

    var_deg[v, t]: required degree of variable v in edge type t.
    check_cap[c, t]: sockets of type t at check c (consumed as edges are placed).
    Each new edge goes to an eligible check (free socket of the right type, not
    yet adjacent) at maximum BFS distance from v; unreachable counts as infinitely
    far. Ties: lowest current check degree, then lowest ``tie_rank``.
    Returns (var_adj, var_cnt, check_adj, check_cnt, n_swaps).
    """
    n_vars, n_types = var_deg.shape
    m = check_cap.shape[0]
    free = check_cap.copy()
    var_adj = -np.ones((n_vars, max_vdeg), dtype=np.int64)
    var_type = -np.ones((n_vars, max_vdeg), dtype=np.int64)
    var_cnt = np.zeros(n_vars, dtype=np.int64)
    check_adj = -np.ones((m, max_cdeg), dtype=np.int64)
    check_cnt = np.zeros(m, dtype=np.int64)
    n_free = np.zeros(n_types, dtype=np.int64)
    for c in range(m):
        for t in range(n_types):
            if free[c, t] > 0:
                n_free[t] += 1

    check_seen = np.zeros(m, dtype=np.int64)   # stamp of last BFS that reached it
    var_seen = np.zeros(n_vars, dtype=np.int64)
    frontier = np.empty(n_vars, dtype=np.int64)
    nxt = np.empty(n_vars, dtype=np.int64)
    level = np.empty(m, dtype=np.int64)
    cands = np.empty(m, dtype=np.int64)
    stamp = 0
    n_swaps = 0

    for oi in range(order.size):
        v = order[oi]
        for ti in range(type_order.size):
            t = type_order[ti]
            for _ in range(var_deg[v, t]):
                # eligible checks: free socket of type t, not adjacent to v
                total_elig = n_free[t]
                for k in range(var_cnt[v]):
                    if free[var_adj[v, k], t] > 0:
                        total_elig -= 1
                chosen = -1
                if total_elig == 0:
                    chosen = -2
                elif var_cnt[v] == 0:
                    nc = 0
                    for c in range(m):
                        if free[c, t] > 0:
                            cands[nc] = c
                            nc += 1
                    chosen = _pick(cands, nc, check_cnt, tie_rank)
                else:
                    stamp += 1
                    var_seen[v] = stamp
                    frontier[0] = v
                    nf = 1
                    seen_elig = 0
                    while True:
                        nl = 0
                        for i in range(nf):
                            u = frontier[i]
                            for k in range(var_cnt[u]):
                                c = var_adj[u, k]
                                if check_seen[c] != stamp:
                                    check_seen[c] = stamp
                                    level[nl] = c
                                    nl += 1
                                    if free[c, t] > 0 and not _is_adjacent(var_adj, var_cnt, v, c):
                                        seen_elig += 1
                        if nl == 0:
                            # tree stopped growing: eligible checks not reached are farthest
                            nc = 0
                            for c in range(m):
                                if free[c, t] > 0 and check_seen[c] != stamp:
                                    cands[nc] = c
                                    nc += 1
                            chosen = _pick(cands, nc, check_cnt, tie_rank)
                            break
                        if seen_elig == total_elig:
                            nc = 0
                            for i in range(nl):
                                c = level[i]
                                if free[c, t] > 0 and not _is_adjacent(var_adj, var_cnt, v, c):
                                    cands[nc] = c
                                    nc += 1
                            chosen = _pick(cands, nc, check_cnt, tie_rank)
                            break
                        nf2 = 0
                        for i in range(nl):
                            c = level[i]
                            for k in range(check_cnt[c]):
                                u = check_adj[c, k]
                                if var_seen[u] != stamp:
                                    var_seen[u] = stamp
                                    nxt[nf2] = u
                                    nf2 += 1
                        for i in range(nf2):
                            frontier[i] = nxt[i]
                        nf = nf2

                if chosen >= 0:
                    c = chosen
                    var_adj[v, var_cnt[v]] = c
                    var_type[v, var_cnt[v]] = t
                    var_cnt[v] += 1
                    check_adj[c, check_cnt[c]] = v
                    check_cnt[c] += 1
                    free[c, t] -= 1
                    if free[c, t] == 0:
                        n_free[t] -= 1
                    continue

                # every check with a free t-socket already touches v: rewire an
                # existing t-edge (u, c2) to (u, cf) and connect v to c2
                cf = -1
                for c in range(m):
                    if free[c, t] > 0:
                        cf = c
                        break
                if cf < 0:
                    return var_adj, var_cnt, check_adj, check_cnt, -1
                done = False
                for u in range(n_vars):
                    if u == v or _is_adjacent(var_adj, var_cnt, u, cf):
                        continue
                    for k in range(var_cnt[u]):
                        c2 = var_adj[u, k]
                        if var_type[u, k] != t or _is_adjacent(var_adj, var_cnt, v, c2):
                            continue
                        var_adj[u, k] = cf
                        for j in range(check_cnt[c2]):
                            if check_adj[c2, j] == u:
                                check_adj[c2, j] = v
                                break
                        check_adj[cf, check_cnt[cf]] = u
                        check_cnt[cf] += 1
                        free[cf, t] -= 1
                        if free[cf, t] == 0:
                            n_free[t] -= 1
                        var_adj[v, var_cnt[v]] = c2
                        var_type[v, var_cnt[v]] = t
                        var_cnt[v] += 1
                        done = True
                        n_swaps += 1
                        break
                    if done:
                        break
                if not done:
                    return var_adj, var_cnt, check_adj, check_cnt, -1
    return var_adj, var_cnt, check_adj, check_cnt, n_swaps
