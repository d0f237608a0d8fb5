"""Numba kernels behind the statistics, sampler, annealer and enumeration hot paths.

All kernels operate on the compiled per-degree tables from `stats.py`:
``dgain[q, n]`` (per-endpoint add-tie gain by prior degree), ``phi[q, n]``
(per-node contribution by degree), ``nweight[q, n]`` (node covariate
weights) and the ``is_triangle`` / ``is_nodecov`` flags.  Adjacency is the
row-bitset layout of `network.Network` (uint64 words).  Stochastic kernels
consume pre-generated uniform streams so all randomness stays with
numpy's seeded PCG64 at the Python level.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

UONE = np.uint64(1)

_M1 = np.uint64(0x5555555555555555)
_M2 = np.uint64(0x3333333333333333)
_M4 = np.uint64(0x0F0F0F0F0F0F0F0F)
_H01 = np.uint64(0x0101010101010101)


@njit(cache=True, inline="always")
def _popcount(x):
    x = x - ((x >> np.uint64(1)) & _M1)
    x = (x & _M2) + ((x >> np.uint64(2)) & _M2)
    x = (x + (x >> np.uint64(4))) & _M4
    return np.int64((x * _H01) >> np.uint64(56))


@njit(cache=True, inline="always")
def _get_bit(words, i, j):
    return np.int64((words[i, j >> 6] >> np.uint64(j & 63)) & UONE)


@njit(cache=True, inline="always")
def _flip_pair(words, i, j):
    words[i, j >> 6] ^= UONE << np.uint64(j & 63)
    words[j, i >> 6] ^= UONE << np.uint64(i & 63)


@njit(cache=True, inline="always")
def _common_neighbors(words, i, j):
    nw = words.shape[1]
    c = np.int64(0)
    for k in range(nw):
        c += _popcount(words[i, k] & words[j, k])
    return c


@njit(cache=True)
def change_stats(dgain, nweight, is_tri, words, deg, i, j, out):
    """Write the add-tie change vector at dyad (i, j) into `out`.

    Degrees are adjusted to exclude the (i, j) tie itself, so the result
    is independent of the current tie value.  Returns that tie value.
    """
    tie = _get_bit(words, i, j)
    di = deg[i] - tie
    dj = deg[j] - tie
    cni = _common_neighbors(words, i, j)
    q = out.shape[0]
    for t in range(q):
        v = dgain[t, di] + dgain[t, dj] + nweight[t, i] + nweight[t, j]
        if is_tri[t]:
            v += cni
        out[t] = v
    return tie


@njit(cache=True)
def triangle_count(words, deg, n):
    tri = np.int64(0)
    for i in range(n):
        if deg[i] == 0:
            continue
        for j in range(i + 1, n):
            if _get_bit(words, i, j) == 1:
                tri += _common_neighbors(words, i, j)
    return tri // 3


@njit(cache=True)
def stat_vector_direct(phi, nweight, is_tri, is_ncov, words, deg):
    """T(a) from scratch: degree-table sums plus a bitset triangle count."""
    q = phi.shape[0]
    n = deg.shape[0]
    out = np.zeros(q, np.float64)
    tri = np.int64(-1)
    for t in range(q):
        if is_tri[t] == 1:
            if tri < 0:
                tri = triangle_count(words, deg, n)
            out[t] = tri
        elif is_ncov[t] == 1:
            s = 0.0
            for v in range(n):
                s += nweight[t, v] * deg[v]
            out[t] = s
        else:
            s = 0.0
            for v in range(n):
                s += phi[t, deg[v]]
            out[t] = s
    return out


@njit(cache=True, nogil=True)
def design_matrix(dgain, nweight, is_tri, words, deg, rows, cols, x_out, y_out):
    """One logistic-regression row per dyad: response = observed tie,
    covariates = change statistics with the rest of the network fixed."""
    d_count = rows.shape[0]
    for d in range(d_count):
        tie = change_stats(dgain, nweight, is_tri, words, deg, rows[d], cols[d], x_out[d])
        y_out[d] = tie


@njit(cache=True, nogil=True)
def chain_run(dgain, nweight, is_tri, words, deg, stats, theta,
              rows, cols, prop_kind, tie_prob,
              edges_d, slot, counters,
              u_prop, u_sel, u_acc,
              track, state_counts, code_state):
    """Run len(u_sel) Metropolis-Hastings single-toggle steps in place.

    prop_kind: 0 = uniform dyad, 1 = tie/no-tie mixture with the exact
    Hastings correction.  counters = [edge_count, accepted_count].
    edges_d / slot maintain the current tie list (swap-with-last deletes)
    so tie proposals are O(1).  When `track` is set, state_counts[code]
    is incremented once per step with the current dyad-bitmask code
    (only valid for dyad_count <= 62).
    """
    d_count = rows.shape[0]
    q = theta.shape[0]
    delta = np.empty(q, np.float64)
    steps = u_sel.shape[0]
    for s in range(steps):
        m = counters[0]
        if prop_kind == 1 and m > 0 and u_prop[s] < tie_prob:
            eidx = np.int64(u_sel[s] * m)
            if eidx >= m:
                eidx = m - 1
            d = edges_d[eidx]
        else:
            d = np.int64(u_sel[s] * d_count)
            if d >= d_count:
                d = d_count - 1
        i = rows[d]
        j = cols[d]
        tie = change_stats(dgain, nweight, is_tri, words, deg, i, j, delta)
        logr = 0.0
        for t in range(q):
            logr += theta[t] * delta[t]
        if tie == 1:
            logr = -logr
        if prop_kind == 1:
            pi = tie_prob
            if tie == 0:
                if m == 0:
                    logr += np.log(pi * d_count + (1.0 - pi))
                else:
                    logr += np.log(pi * d_count / ((1.0 - pi) * (m + 1)) + 1.0)
            else:
                if m == 1:
                    logr -= np.log(pi * d_count + (1.0 - pi))
                else:
                    logr += np.log((1.0 - pi) / d_count) - np.log(pi / m + (1.0 - pi) / d_count)
        if logr >= 0.0 or u_acc[s] < np.exp(logr):
            _flip_pair(words, i, j)
            sgn = 1 - 2 * tie
            deg[i] += sgn
            deg[j] += sgn
            for t in range(q):
                stats[t] += sgn * delta[t]
            if tie == 0:
                slot[d] = m
                edges_d[m] = d
                counters[0] = m + 1
            else:
                last = m - 1
                k = slot[d]
                dl = edges_d[last]
                edges_d[k] = dl
                slot[dl] = k
                slot[d] = -1
                counters[0] = last
            counters[1] += 1
            if track:
                code_state[0] ^= np.int64(1) << d
        if track:
            state_counts[code_state[0]] += 1


@njit(cache=True, inline="always")
def _weighted_l1(stats, target, weights):
    e = 0.0
    for t in range(stats.shape[0]):
        e += weights[t] * abs(stats[t] - target[t])
    return e


@njit(cache=True, nogil=True)
def anneal_run(dgain, nweight, is_tri, phi, is_ncov, words, deg, stats,
               target, weights, rows, cols,
               u_prop, u_acc,
               fstate, istate,
               cooling, spt, eps, reheat_temp, stall_window, max_reheats,
               checkpoint_every, trace, trace_stride,
               best_words, best_stats):
    """One chunk of single-toggle simulated annealing steps.

    fstate = [temperature, best_energy, max_checkpoint_drift]
    istate = [total_steps, steps_at_temp, steps_since_improve, reheats,
              trace_pos, success]
    Energy is the weighted L1 distance of the running statistics to the
    target, recomputed fresh each step from the incrementally maintained
    statistics (exact for integer-valued terms).  Every
    `checkpoint_every` steps the statistics are recomputed from scratch
    and the largest deviation is recorded in fstate[2].
    Returns the number of steps consumed (< len(u_prop) on early stop).
    """
    d_count = rows.shape[0]
    q = stats.shape[0]
    n = deg.shape[0]
    delta = np.empty(q, np.float64)
    steps = u_prop.shape[0]
    for s in range(steps):
        d = np.int64(u_prop[s] * d_count)
        if d >= d_count:
            d = d_count - 1
        i = rows[d]
        j = cols[d]
        tie = change_stats(dgain, nweight, is_tri, words, deg, i, j, delta)
        sgn = 1 - 2 * tie
        e_cur = 0.0
        e_new = 0.0
        for t in range(q):
            diff = stats[t] - target[t]
            e_cur += weights[t] * abs(diff)
            e_new += weights[t] * abs(diff + sgn * delta[t])
        de = e_new - e_cur
        if de <= 0.0 or u_acc[s] < np.exp(-de / fstate[0]):
            _flip_pair(words, i, j)
            deg[i] += sgn
            deg[j] += sgn
            for t in range(q):
                stats[t] += sgn * delta[t]
            e_cur = e_new
        istate[0] += 1
        istate[1] += 1
        istate[2] += 1
        if checkpoint_every > 0 and istate[0] % checkpoint_every == 0:
            fresh = stat_vector_direct(phi, nweight, is_tri, is_ncov, words, deg)
            drift = 0.0
            for t in range(q):
                dv = abs(fresh[t] - stats[t])
                if dv > drift:
                    drift = dv
                stats[t] = fresh[t]
            if drift > fstate[2]:
                fstate[2] = drift
            e_cur = _weighted_l1(stats, target, weights)
        if e_cur < fstate[1] - 1e-12:
            fstate[1] = e_cur
            istate[2] = 0
            for a in range(n):
                for b in range(words.shape[1]):
                    best_words[a, b] = words[a, b]
            for t in range(q):
                best_stats[t] = stats[t]
        if istate[1] >= spt:
            istate[1] = 0
            fstate[0] *= cooling
        if istate[2] >= stall_window and istate[3] < max_reheats:
            istate[3] += 1
            istate[2] = 0
            fstate[0] = reheat_temp
        if trace_stride > 0 and istate[0] % trace_stride == 0 and istate[4] < trace.shape[0]:
            trace[istate[4]] = e_cur
            istate[4] += 1
        if e_cur <= eps:
            if e_cur <= fstate[1]:
                fstate[1] = e_cur
                for a in range(n):
                    for b in range(words.shape[1]):
                        best_words[a, b] = words[a, b]
                for t in range(q):
                    best_stats[t] = stats[t]
            istate[5] = 1
            return s + 1
    return steps


# -- exhaustive enumeration ------------------------------------------------
#
# Both sweeps visit every network on n nodes exactly once in Gray-code
# order (consecutive states differ by one dyad toggle), maintaining the
# statistic vector incrementally.  The state space is partitioned on the
# top `b` dyad bits into 2^b blocks; within a block the low bits follow a
# (reflected) Gray code whose flipped bit at step r is the number of
# trailing zeros of r, so blocks are independent and parallelizable.
# Node masks are single uint64 words (enumeration is guarded to small n).


@njit(cache=True, parallel=True, nogil=True)
def sweep_dense(n, rows, cols, b, base_int, dgain_int, is_tri, empty_stats,
                strides, counts):
    """All-integer-term sweep accumulating into a dense multi-index table.

    counts has shape (2^b, cells); block p writes only row p, so the
    parallel blocks never race.  Statistic values index the flat cell
    via `strides` (values are bounded by the per-term maxima).
    """
    d_count = rows.shape[0]
    m = d_count - b
    q = base_int.shape[0]
    nblocks = np.int64(1) << b
    for p in prange(nblocks):
        masks = np.zeros(n, np.uint64)
        deg = np.zeros(n, np.int64)
        stats = np.empty(q, np.int64)
        for t in range(q):
            stats[t] = empty_stats[t]
        if b == 0:
            g0 = np.int64(0)
        else:
            g0 = ((p ^ (p >> 1)) << m) | ((np.int64(p) & 1) << (m - 1))
        for d in range(d_count):
            if (g0 >> d) & 1:
                i = rows[d]
                j = cols[d]
                cni = _popcount(masks[i] & masks[j])
                for t in range(q):
                    inc = base_int[t] + dgain_int[t, deg[i]] + dgain_int[t, deg[j]]
                    if is_tri[t]:
                        inc += cni
                    stats[t] += inc
                masks[i] |= UONE << np.uint64(j)
                masks[j] |= UONE << np.uint64(i)
                deg[i] += 1
                deg[j] += 1
        row = counts[p]
        idx = np.int64(0)
        for t in range(q):
            idx += stats[t] * strides[t]
        row[idx] += 1
        cur = g0
        last = (np.int64(1) << m) - 1
        for r in range(1, last + 1):
            d = np.int64(0)
            rr = r
            while (rr & 1) == 0:
                rr >>= 1
                d += 1
            i = rows[d]
            j = cols[d]
            tie = np.int64((cur >> d) & 1)
            di = deg[i] - tie
            dj = deg[j] - tie
            cni = _popcount(masks[i] & masks[j])
            sgn = 1 - 2 * tie
            for t in range(q):
                inc = base_int[t] + dgain_int[t, di] + dgain_int[t, dj]
                if is_tri[t]:
                    inc += cni
                stats[t] += sgn * inc
            masks[i] ^= UONE << np.uint64(j)
            masks[j] ^= UONE << np.uint64(i)
            deg[i] += sgn
            deg[j] += sgn
            cur ^= np.int64(1) << d
            idx = np.int64(0)
            for t in range(q):
                idx += stats[t] * strides[t]
            row[idx] += 1


@njit(cache=True, nogil=True)
def sweep_chunk_keys(n, rows, cols, prefix, b, dgain, nweight, is_tri,
                     integer_mask, empty_stats, quant, keys):
    """General sweep over one block, emitting one quantized key row per state.

    Continuous statistics are bucketed to `quant` before keying; integer
    statistics stay exact (float64 add-one increments are exact below
    2^53).  The caller aggregates the 2^(D-b) rows.
    """
    d_count = rows.shape[0]
    m = d_count - b
    q = dgain.shape[0]
    masks = np.zeros(n, np.uint64)
    deg = np.zeros(n, np.int64)
    stats = empty_stats.copy()
    delta = np.empty(q, np.float64)
    if b == 0:
        g0 = np.int64(0)
    else:
        p = np.int64(prefix)
        g0 = ((p ^ (p >> 1)) << m) | ((p & 1) << (m - 1))
    for d in range(d_count):
        if (g0 >> d) & 1:
            i = rows[d]
            j = cols[d]
            cni = _popcount(masks[i] & masks[j])
            for t in range(q):
                v = dgain[t, deg[i]] + dgain[t, deg[j]] + nweight[t, i] + nweight[t, j]
                if is_tri[t]:
                    v += cni
                stats[t] += v
            masks[i] |= UONE << np.uint64(j)
            masks[j] |= UONE << np.uint64(i)
            deg[i] += 1
            deg[j] += 1
    for t in range(q):
        if integer_mask[t]:
            keys[0, t] = np.int64(stats[t])
        else:
            keys[0, t] = np.int64(np.rint(stats[t] / quant))
    cur = g0
    last = (np.int64(1) << m) - 1
    for r in range(1, last + 1):
        d = np.int64(0)
        rr = r
        while (rr & 1) == 0:
            rr >>= 1
            d += 1
        i = rows[d]
        j = cols[d]
        tie = np.int64((cur >> d) & 1)
        di = deg[i] - tie
        dj = deg[j] - tie
        cni = _popcount(masks[i] & masks[j])
        sgn = 1 - 2 * tie
        for t in range(q):
            v = dgain[t, di] + dgain[t, dj] + nweight[t, i] + nweight[t, j]
            if is_tri[t]:
                v += cni
            stats[t] += sgn * v
        masks[i] ^= UONE << np.uint64(j)
        masks[j] ^= UONE << np.uint64(i)
        deg[i] += sgn
        deg[j] += sgn
        cur ^= np.int64(1) << d
        for t in range(q):
            if integer_mask[t]:
                keys[r, t] = np.int64(stats[t])
            else:
                keys[r, t] = np.int64(np.rint(stats[t] / quant))
