"""Hot loops: walks, loop erasure, soup sampling, greedy splicing, Frechet.

Every function here is written in the numba-compatible subset of Python and
decorated with :func:`loopsoup._accel.jit`.  Graph arguments use the CSR
triple ``(indptr, indices, cumq)`` where ``cumq`` holds the running sum of
transition probabilities along each row.
"""
import numpy as np

from ._accel import jit


# --------------------------------------------------------------------------
# buffers

@jit
def _grow_int(buf, n):
    out = np.empty(2 * buf.size + 16, np.int64)
    out[:n] = buf[:n]
    return out


# --------------------------------------------------------------------------
# walks

@jit
def step(indptr, indices, cumq, v, rng):
    """One transition from ``v``: a single uniform, then a scan of the row."""
    u = rng.random()
    lo = indptr[v]
    hi = indptr[v + 1]
    for k in range(lo, hi - 1):
        if u < cumq[k]:
            return indices[k]
    return indices[hi - 1]


@jit
def walk_to_mask(indptr, indices, cumq, start, stop, cap, rng):
    """Walk from ``start`` until a vertex with ``stop[v]`` is entered.

    Returns ``(path, ok)``; ``ok`` is False when ``cap`` steps were taken
    without stopping.
    """
    buf = np.empty(64, np.int64)
    buf[0] = start
    n = 1
    v = start
    while True:
        if n - 1 >= cap:
            return buf[:n].copy(), False
        v = step(indptr, indices, cumq, v, rng)
        if n == buf.size:
            buf = _grow_int(buf, n)
        buf[n] = v
        n += 1
        if stop[v]:
            return buf[:n].copy(), True


@jit
def walk_endpoints(indptr, indices, cumq, start, stop, trials, cap, rng):
    """Final vertex and length of ``trials`` independent stopped walks."""
    ends = np.empty(trials, np.int64)
    lengths = np.empty(trials, np.int64)
    for i in range(trials):
        v = start
        t = 0
        while True:
            if t >= cap:
                ends[i] = -1
                break
            v = step(indptr, indices, cumq, v, rng)
            t += 1
            if stop[v]:
                ends[i] = v
                break
        lengths[i] = t
    return ends, lengths


# --------------------------------------------------------------------------
# loop erasure

@jit
def loop_erase_indices(path, n_vertices):
    """Chronological loop erasure.

    Returns ``(starts, lasts)``: the core is ``path[starts]``, and the loop
    at core position k occupies ``path[starts[k] : lasts[k] + 1]``.  The
    final entry describes the terminal core vertex.
    """
    last = np.full(n_vertices, -1, np.int64)
    T = path.size - 1
    for t in range(T + 1):
        last[path[t]] = t
    starts = np.empty(T + 1, np.int64)
    lasts = np.empty(T + 1, np.int64)
    k = 0
    t = 0
    while True:
        lv = last[path[t]]
        starts[k] = t
        lasts[k] = lv
        k += 1
        if lv == T:
            break
        t = lv + 1
    return starts[:k].copy(), lasts[:k].copy()


# --------------------------------------------------------------------------
# loop canonical forms

@jit
def least_rotation(seq):
    """Start index of the lexicographically least rotation (two pointers)."""
    n = seq.size
    if n <= 1:
        return 0
    i = 0
    j = 1
    k = 0
    while i < n and j < n and k < n:
        a = seq[(i + k) % n]
        b = seq[(j + k) % n]
        if a == b:
            k += 1
            continue
        if a > b:
            i = i + k + 1
        else:
            j = j + k + 1
        if i == j:
            j += 1
        k = 0
    return min(i, j)


@jit
def rotation_period(seq):
    """Smallest d > 0 with seq rotated by d equal to seq."""
    n = seq.size
    if n <= 1:
        return n
    pi = np.zeros(n, np.int64)
    for q in range(1, n):
        k = pi[q - 1]
        while k > 0 and seq[q] != seq[k]:
            k = pi[k - 1]
        if seq[q] == seq[k]:
            k += 1
        pi[q] = k
    d = n - pi[n - 1]
    if n % d == 0:
        return d
    return n


@jit
def _emit_canonical(seg, out, n_out):
    p = seg.size
    s = least_rotation(seg)
    while n_out + p > out.size:
        out = _grow_int(out, n_out)
    for q in range(p):
        out[n_out + q] = seg[(s + q) % p]
    return out, n_out + p


# --------------------------------------------------------------------------
# loop soup sampling

@jit
def soup_by_walks(indptr, indices, cumq, order, killed0, cap, rng):
    """Loop soup from one killed walk per peeled vertex.

    For each ``u`` in ``order`` a walk runs from ``u`` until it enters a
    killed vertex.  Its excursions from ``u`` are i.i.d. and their number is
    geometric; cutting the sequence of excursions into blocks with the cycle
    sizes of a uniform random permutation turns it into a Poisson number of
    loops with logarithmic excursion counts.  ``u`` is killed afterwards.

    Returns ``(flat, offsets, ok)``; loops are canonical rotations without
    the repeated end vertex.
    """
    killed = killed0.copy()
    out = np.empty(256, np.int64)
    offs = np.empty(64, np.int64)
    offs[0] = 0
    n_out = 0
    n_loops = 0
    path = np.empty(256, np.int64)
    rets = np.empty(64, np.int64)
    for i in range(order.size):
        u = order[i]
        path[0] = u
        n = 1
        m = 0
        v = u
        t = 0
        while True:
            if t >= cap:
                return out[:n_out].copy(), offs[:n_loops + 1].copy(), False
            v = step(indptr, indices, cumq, v, rng)
            t += 1
            if killed[v]:
                break
            if n == path.size:
                path = _grow_int(path, n)
            path[n] = v
            n += 1
            if v == u:
                if m == rets.size:
                    rets = _grow_int(rets, m)
                rets[m] = n - 1
                m += 1
        pos = 0
        while pos < m:
            L = rng.integers(1, m - pos + 1)
            a = 0
            if pos > 0:
                a = rets[pos - 1]
            b = rets[pos + L - 1]
            out, n_out = _emit_canonical(path[a:b], out, n_out)
            if n_loops + 2 > offs.size:
                offs = _grow_int(offs, n_loops + 1)
            n_loops += 1
            offs[n_loops] = n_out
            pos += L
        killed[u] = 1
    return out[:n_out].copy(), offs[:n_loops + 1].copy(), True


@jit
def conditioned_loops(indptr, indices, hcum, u, counts, cap, rng):
    """Loops at ``u`` made of ``counts[j]`` h-transformed excursions each.

    ``hcum`` is the cumulative transformed transition law on the CSR layout;
    rows of vertices that cannot return carry no mass and are never entered.
    """
    out = np.empty(256, np.int64)
    offs = np.empty(counts.size + 1, np.int64)
    offs[0] = 0
    n_out = 0
    seg = np.empty(64, np.int64)
    for j in range(counts.size):
        n = 0
        for e in range(counts[j]):
            v = u
            t = 0
            while True:
                if n == seg.size:
                    seg = _grow_int(seg, n)
                seg[n] = v
                n += 1
                v = step(indptr, indices, hcum, v, rng)
                t += 1
                if v == u or t > cap:
                    break
        out, n_out = _emit_canonical(seg[:n], out, n_out)
        offs[j + 1] = n_out
    return out[:n_out].copy(), offs


# --------------------------------------------------------------------------
# greedy branch

@jit
def greedy_walk(indptr, indices, cumq, px, py, start, stop, eps, r, cap, rng):
    """Walk with the greedy segment rule; returns (path, taus, error, ok).

    Segment 1 ends on leaving the open ball B(start, eps); later segments end
    on leaving B(X(tau_k), r).  Entering ``stop`` always ends the walk.  A
    segment end inside the closed ball B(start, r) sets ``error``.
    """
    buf = np.empty(256, np.int64)
    taus = np.empty(16, np.int64)
    buf[0] = start
    n = 1
    k = 0
    sx = px[start]
    sy = py[start]
    cx = sx
    cy = sy
    rad2 = eps * eps
    r2 = r * r
    v = start
    error = False
    while True:
        if n - 1 >= cap:
            return buf[:n].copy(), taus[:k].copy(), error, False
        v = step(indptr, indices, cumq, v, rng)
        if n == buf.size:
            buf = _grow_int(buf, n)
        buf[n] = v
        n += 1
        if stop[v]:
            if k == taus.size:
                taus = _grow_int(taus, k)
            taus[k] = n - 1
            k += 1
            break
        dx = px[v] - cx
        dy = py[v] - cy
        if dx * dx + dy * dy >= rad2:
            if k == taus.size:
                taus = _grow_int(taus, k)
            taus[k] = n - 1
            k += 1
            ex = px[v] - sx
            ey = py[v] - sy
            if ex * ex + ey * ey <= r2:
                error = True
                break
            cx = px[v]
            cy = py[v]
            rad2 = r2
    return buf[:n].copy(), taus[:k].copy(), error, True


@jit
def greedy_iterations(indptr, indices, cumq, px, py, start, stop, eps, r,
                      replicas, cap, rng):
    """Iteration counts N and ERROR flags of independent greedy branches."""
    counts = np.empty(replicas, np.int64)
    errors = np.zeros(replicas, np.bool_)
    sx = px[start]
    sy = py[start]
    r2 = r * r
    for i in range(replicas):
        cx = sx
        cy = sy
        rad2 = eps * eps
        v = start
        k = 0
        t = 0
        while True:
            if t >= cap:
                k = -1
                break
            v = step(indptr, indices, cumq, v, rng)
            t += 1
            if stop[v]:
                k += 1
                break
            dx = px[v] - cx
            dy = py[v] - cy
            if dx * dx + dy * dy >= rad2:
                k += 1
                ex = px[v] - sx
                ey = py[v] - sy
                if ex * ex + ey * ey <= r2:
                    errors[i] = True
                    break
                cx = px[v]
                cy = py[v]
                rad2 = r2
        counts[i] = k
    return counts, errors


@jit
def greedy_splice(path, taus, n_vertices):
    """Splice data of a greedy transcript.

    Runs an incremental loop erasure along ``path`` and, at every segment end
    tau_k, records s_k (smallest index of the previous core hit during the
    segment), theta_k (last time in the segment at that core vertex) and the
    arc A_k = Y_k[s_k:].  Returns ``(s, theta, a_flat, a_off, core_lengths)``.
    """
    N = taus.size
    T = path.size
    stack = np.empty(T, np.int64)
    spos = np.full(n_vertices, -1, np.int64)
    ysnap = np.empty(T, np.int64)
    ypos = np.full(n_vertices, -1, np.int64)
    s_out = np.empty(N, np.int64)
    th_out = np.empty(N, np.int64)
    a_flat = np.empty(64, np.int64)
    a_off = np.empty(N + 1, np.int64)
    ylens = np.empty(N + 1, np.int64)
    v0 = path[0]
    stack[0] = v0
    spos[v0] = 0
    L = 1
    ysnap[0] = v0
    ypos[v0] = 0
    ylen = 1
    ylens[0] = 1
    a_off[0] = 0
    na = 0
    seg_start = 0
    for k in range(N):
        tau = taus[k]
        smin = ypos[path[seg_start]]
        for t in range(seg_start + 1, tau + 1):
            v = path[t]
            p = spos[v]
            if p >= 0:
                for q in range(p + 1, L):
                    spos[stack[q]] = -1
                L = p + 1
            else:
                stack[L] = v
                spos[v] = L
                L += 1
            yp = ypos[v]
            if yp >= 0 and yp < smin:
                smin = yp
        target = ysnap[smin]
        th = tau
        while path[th] != target:
            th -= 1
        s_out[k] = smin
        th_out[k] = th
        while na + (L - smin) > a_flat.size:
            a_flat = _grow_int(a_flat, na)
        for q in range(smin, L):
            a_flat[na] = stack[q]
            na += 1
        a_off[k + 1] = na
        for q in range(smin + 1, ylen):
            ypos[ysnap[q]] = -1
        for q in range(smin + 1, L):
            ysnap[q] = stack[q]
            ypos[stack[q]] = q
        ylen = L
        ylens[k + 1] = L
        seg_start = tau
    return s_out, th_out, a_flat[:na].copy(), a_off, ylens


@jit
def greedy_prefix(s, a_flat, a_off, yfinal):
    """Common-prefix length of each running core Y_n with ``yfinal``."""
    N = s.size
    cp = np.empty(N + 1, np.int64)
    cp[0] = 1
    for n in range(1, N + 1):
        sn = s[n - 1]
        prev = cp[n - 1]
        if prev <= sn:
            cp[n] = prev
            continue
        c = sn + 1
        lo = a_off[n - 1]
        hi = a_off[n]
        for q in range(lo + 1, hi):
            idx = sn + (q - lo)
            if idx < yfinal.size and yfinal[idx] == a_flat[q]:
                c += 1
            else:
                break
        cp[n] = c
    return cp


# --------------------------------------------------------------------------
# Frechet

@jit
def _free_interval(cx, cy, ax, ay, bx, by, eps):
    # t in [0,1] with |a + t(b-a) - c| <= eps
    dx = bx - ax
    dy = by - ay
    fx = ax - cx
    fy = ay - cy
    A = dx * dx + dy * dy
    B = 2.0 * (fx * dx + fy * dy)
    C = fx * fx + fy * fy - eps * eps
    if A == 0.0:
        if C <= 0.0:
            return 0.0, 1.0
        return 1.0, 0.0
    disc = B * B - 4.0 * A * C
    if disc < 0.0:
        return 1.0, 0.0
    sq = np.sqrt(disc)
    t1 = (-B - sq) / (2.0 * A)
    t2 = (-B + sq) / (2.0 * A)
    lo = max(t1, 0.0)
    hi = min(t2, 1.0)
    return lo, hi


@jit
def frechet_decide(P, Q, eps):
    """Free-space decision: is the Frechet distance of P and Q at most eps?

    P, Q are (m, 2) and (n, 2) arrays with m, n >= 2.
    """
    m = P.shape[0]
    n = Q.shape[0]
    e2 = eps * eps
    d0 = (P[0, 0] - Q[0, 0]) ** 2 + (P[0, 1] - Q[0, 1]) ** 2
    d1 = (P[m - 1, 0] - Q[n - 1, 0]) ** 2 + (P[m - 1, 1] - Q[n - 1, 1]) ** 2
    if d0 > e2 or d1 > e2:
        return False
    # reachable intervals on the left side of each cell in the current column
    # (point P_i against segment Q_j Q_j+1), indexed by j
    llo = np.empty(n - 1)
    lhi = np.empty(n - 1)
    ok = True
    for j in range(n - 1):
        lo, hi = _free_interval(P[0, 0], P[0, 1], Q[j, 0], Q[j, 1],
                                Q[j + 1, 0], Q[j + 1, 1], eps)
        if ok and lo <= hi and lo == 0.0:
            llo[j] = lo
            lhi[j] = hi
            ok = hi >= 1.0
        else:
            llo[j] = 1.0
            lhi[j] = 0.0
            ok = False
    # bottom reachability along row 0: point Q_0 against segment P_i P_i+1
    bottom_ok = True
    for i in range(m - 1):
        lo, hi = _free_interval(Q[0, 0], Q[0, 1], P[i, 0], P[i, 1],
                                P[i + 1, 0], P[i + 1, 1], eps)
        if bottom_ok and lo <= hi and lo == 0.0:
            blo = lo
            bhi = hi
            bottom_ok = hi >= 1.0
        else:
            blo = 1.0
            bhi = 0.0
            bottom_ok = False
        # sweep up column i
        nlo = np.empty(n - 1)
        nhi = np.empty(n - 1)
        for j in range(n - 1):
            # right side: point P_i+1 vs segment Q_j Q_j+1
            flo, fhi = _free_interval(P[i + 1, 0], P[i + 1, 1], Q[j, 0], Q[j, 1],
                                      Q[j + 1, 0], Q[j + 1, 1], eps)
            # top side: point Q_j+1 vs segment P_i P_i+1
            tlo, thi = _free_interval(Q[j + 1, 0], Q[j + 1, 1], P[i, 0], P[i, 1],
                                      P[i + 1, 0], P[i + 1, 1], eps)
            left_reach = llo[j] <= lhi[j]
            bot_reach = blo <= bhi
            if bot_reach:
                rlo = flo
                rhi = fhi
            elif left_reach:
                rlo = max(flo, llo[j])
                rhi = fhi
            else:
                rlo = 1.0
                rhi = 0.0
            if left_reach:
                ulo = tlo
                uhi = thi
            elif bot_reach:
                ulo = max(tlo, blo)
                uhi = thi
            else:
                ulo = 1.0
                uhi = 0.0
            nlo[j] = rlo
            nhi[j] = rhi
            blo = ulo
            bhi = uhi
        llo = nlo
        lhi = nhi
    return llo[n - 2] <= lhi[n - 2] and lhi[n - 2] >= 1.0


@jit
def discrete_frechet(P, Q):
    m = P.shape[0]
    n = Q.shape[0]
    prev = np.empty(n)
    cur = np.empty(n)
    for i in range(m):
        for j in range(n):
            d = np.sqrt((P[i, 0] - Q[j, 0]) ** 2 + (P[i, 1] - Q[j, 1]) ** 2)
            if i == 0 and j == 0:
                best = d
            elif i == 0:
                best = max(cur[j - 1], d)
            elif j == 0:
                best = max(prev[j], d)
            else:
                best = max(min(prev[j], prev[j - 1], cur[j - 1]), d)
            cur[j] = best
        for j in range(n):
            prev[j] = cur[j]
    return prev[n - 1]


@jit
def frechet_critical_c(P, Q):
    """Type-C critical values: bisector of two P vertices meets a Q edge."""
    m = P.shape[0]
    n = Q.shape[0]
    out = np.empty(m * (m - 1) // 2 * (n - 1))
    c = 0
    for k in range(m):
        for l in range(k + 1, m):
            mx = 0.5 * (P[k, 0] + P[l, 0])
            my = 0.5 * (P[k, 1] + P[l, 1])
            nx = P[l, 0] - P[k, 0]
            ny = P[l, 1] - P[k, 1]
            for j in range(n - 1):
                ax = Q[j, 0]
                ay = Q[j, 1]
                dx = Q[j + 1, 0] - ax
                dy = Q[j + 1, 1] - ay
                den = nx * dx + ny * dy
                if den == 0.0:
                    continue
                t = (nx * (mx - ax) + ny * (my - ay)) / den
                if t < 0.0 or t > 1.0:
                    continue
                x = ax + t * dx
                y = ay + t * dy
                out[c] = np.sqrt((x - P[k, 0]) ** 2 + (y - P[k, 1]) ** 2)
                c += 1
    return out[:c].copy()


@jit
def closed_shift(B, k, f):
    """Closed polyline B (first = last) restarted at B[k] + f (B[k+1] - B[k])."""
    m = B.shape[0] - 1
    sx = B[k, 0] + f * (B[k + 1, 0] - B[k, 0])
    sy = B[k, 1] + f * (B[k + 1, 1] - B[k, 1])
    extra = 1 if f > 0.0 else 0
    out = np.empty((m + 1 + extra, 2))
    out[0, 0] = sx
    out[0, 1] = sy
    c = 1
    for q in range(1, m + 1):
        idx = (k + q) % m
        out[c, 0] = B[idx, 0]
        out[c, 1] = B[idx, 1]
        c += 1
    if extra == 1:
        out[c, 0] = sx
        out[c, 1] = sy
    return out


@jit
def loop_decide(A, B, eps, subdiv):
    """True if some shift of closed B has Frechet distance <= eps to A."""
    m = B.shape[0] - 1
    for k in range(m):
        for s in range(subdiv):
            Bs = closed_shift(B, k, s / subdiv)
            if frechet_decide(A, Bs, eps):
                return True
    return False


@jit
def loop_discrete_upper(A, B):
    """Smallest discrete Frechet distance over vertex shifts of closed B."""
    m = B.shape[0] - 1
    best = np.inf
    for k in range(m):
        d = discrete_frechet(A, closed_shift(B, k, 0.0))
        if d < best:
            best = d
    return best
