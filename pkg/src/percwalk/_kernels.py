"""numba-jitted kernels. See _kernel_api for the backend contract."""

from __future__ import annotations

import numpy as np
from numba import njit

# uint64 constants mirroring rng.py; frozen
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_EX = np.uint64(0x9E3779B97F4A7C15)
_EY = np.uint64(0xC2B2AE3D27D4EB4F)
_EO = np.uint64(0x165667B19E3779F9)
_WS = np.uint64(0x27D4EB2F165667C5)
_TS = np.uint64(0xD6E8FEB86659FD93)
_SS = np.uint64(0x632BE59BD9B4E019)

_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_ONE = np.uint64(1)

_KEY_OFF = np.uint64(1 << 30)
_U01 = 2.0**-64


@njit(inline="always")
def _mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(inline="always")
def _pack_key(x, y, o):
    ux = np.uint64(x) + _KEY_OFF
    uy = np.uint64(y) + _KEY_OFF
    return (ux << np.uint64(32)) | (uy << _ONE) | np.uint64(o)


@njit(inline="always")
def _edge_open(seed, thr, force, okeys, ovals, x, y, o):
    if okeys.size > 0:
        k = _pack_key(x, y, o)
        i = np.searchsorted(okeys, k)
        if i < okeys.size and okeys[i] == k:
            return ovals[i] != 0
    if force > 0:
        return True
    if force < 0:
        return False
    h = _mix64(seed + _EX * np.uint64(x) + _EY * np.uint64(y) + _EO * np.uint64(o + 1))
    return h < thr


@njit(cache=True)
def simulate_walk(env_seed, thr, force, okeys, ovals, walk_seed, beta, n_steps, x0, y0):
    seed = np.uint64(env_seed)
    thr_u = np.uint64(thr)
    wseed = np.uint64(walk_seed)
    X = np.empty(n_steps + 1, np.int64)
    Y = np.empty(n_steps + 1, np.int64)
    x = x0
    y = y0
    X[0] = x
    Y[0] = y
    for i in range(1, n_steps + 1):
        r = _edge_open(seed, thr_u, force, okeys, ovals, x, y, 0)
        lft = _edge_open(seed, thr_u, force, okeys, ovals, x - 1, y, 0)
        up = _edge_open(seed, thr_u, force, okeys, ovals, x, y, 1)
        dn = _edge_open(seed, thr_u, force, okeys, ovals, x, y - 1, 1)
        nopen = int(r) + int(lft) + int(up) + int(dn)
        if nopen == 0:
            return X[:i], Y[:i], i - 1
        u01 = np.float64(_mix64(wseed + _WS * np.uint64(i))) * _U01
        if r:
            denom = beta + np.float64(nopen - 1)
            pr = beta / denom
            po = 1.0 / denom
        else:
            pr = 0.0
            po = 1.0 / np.float64(nopen)
        # fixed draw order right, left, up, down; residual fp mass goes to
        # the last open direction so a draw never lands on a closed edge
        c = 0.0
        moved = False
        if r:
            c += pr
            if u01 < c:
                x += 1
                moved = True
        if not moved and lft:
            c += po
            if u01 < c:
                x -= 1
                moved = True
        if not moved and up:
            c += po
            if u01 < c:
                y += 1
                moved = True
        if not moved:
            if dn:
                y -= 1
            elif up:
                y += 1
            elif lft:
                x -= 1
            else:
                x += 1
        X[i] = x
        Y[i] = y
    return X, Y, n_steps


@njit(inline="always")
def _find(parent, a):
    while parent[a] != a:
        parent[a] = parent[parent[a]]
        a = parent[a]
    return a


@njit(cache=True)
def label_clusters(h_open, v_open):
    nx, ny = h_open.shape
    n = nx * ny
    parent = np.arange(n, dtype=np.int64)
    used = np.zeros(n, np.uint8)
    for i in range(nx):
        for j in range(ny):
            f = i * ny + j
            if i + 1 < nx and h_open[i, j]:
                g = f + ny
                used[f] = 1
                used[g] = 1
                ra = _find(parent, f)
                rb = _find(parent, g)
                if ra != rb:
                    parent[rb] = ra
            if j + 1 < ny and v_open[i, j]:
                g = f + 1
                used[f] = 1
                used[g] = 1
                ra = _find(parent, f)
                rb = _find(parent, g)
                if ra != rb:
                    parent[rb] = ra
    labels = np.full((nx, ny), -1, np.int64)
    remap = np.full(n, -1, np.int64)
    nxt = 0
    for i in range(nx):
        for j in range(ny):
            f = i * ny + j
            if used[f]:
                r = _find(parent, f)
                if remap[r] < 0:
                    remap[r] = nxt
                    nxt += 1
                labels[i, j] = remap[r]
    return labels


@njit(cache=True)
def halfplane_reaches_left(
    env_seed, thr, force, okeys, ovals, x0, y0, x_goal, y_lo, y_hi, include_line_verticals
):
    seed = np.uint64(env_seed)
    thr_u = np.uint64(thr)
    nx = x0 - x_goal + 1
    ny = y_hi - y_lo + 1
    if nx <= 0 or y0 < y_lo or y0 > y_hi:
        return False
    if x0 == x_goal:
        return True
    visited = np.zeros((nx, ny), np.uint8)
    sx = np.empty(nx * ny, np.int64)
    sy = np.empty(nx * ny, np.int64)
    top = 0
    sx[top] = x0
    sy[top] = y0
    top += 1
    visited[x0 - x_goal, y0 - y_lo] = 1
    while top > 0:
        top -= 1
        x = sx[top]
        y = sy[top]
        # left
        if x - 1 >= x_goal and _edge_open(seed, thr_u, force, okeys, ovals, x - 1, y, 0):
            if x - 1 == x_goal:
                return True
            if visited[x - 1 - x_goal, y - y_lo] == 0:
                visited[x - 1 - x_goal, y - y_lo] = 1
                sx[top] = x - 1
                sy[top] = y
                top += 1
        # right, staying in the half-plane
        if x + 1 <= x0 and _edge_open(seed, thr_u, force, okeys, ovals, x, y, 0):
            if visited[x + 1 - x_goal, y - y_lo] == 0:
                visited[x + 1 - x_goal, y - y_lo] = 1
                sx[top] = x + 1
                sy[top] = y
                top += 1
        if x < x0 or include_line_verticals:
            if y + 1 <= y_hi and _edge_open(seed, thr_u, force, okeys, ovals, x, y, 1):
                if visited[x - x_goal, y + 1 - y_lo] == 0:
                    visited[x - x_goal, y + 1 - y_lo] = 1
                    sx[top] = x
                    sy[top] = y + 1
                    top += 1
            if y - 1 >= y_lo and _edge_open(seed, thr_u, force, okeys, ovals, x, y - 1, 1):
                if visited[x - x_goal, y - 1 - y_lo] == 0:
                    visited[x - x_goal, y - 1 - y_lo] = 1
                    sx[top] = x
                    sy[top] = y - 1
                    top += 1
    return False


@njit(cache=True)
def _right_cluster_impl(
    seed, thr, force, okeys, ovals, x0, y0, d_cap, y_cap, size_cap, xs_out, ys_out, ck_out, visited, touched_x, touched_y
):
    # visited grid covers x - x0 in [0, d_cap+1], y - y0 in [-y_cap-1, y_cap+1]
    ysz = 2 * y_cap + 3
    yoff = y_cap + 1
    for k in range(ck_out.size):
        ck_out[k] = 0
    n_sites = 0
    n_touched = 0
    status = 0
    top = 0
    xs_out[top] = x0
    ys_out[top] = y0
    top += 1
    visited[0, yoff] = 1
    touched_x[n_touched] = 0
    touched_y[n_touched] = yoff
    n_touched += 1
    n_sites = 1
    head = 0
    while head < n_sites and status == 0:
        x = xs_out[head]
        y = ys_out[head]
        head += 1
        for d in range(4):
            if d == 0:
                nbx, nby = x + 1, y
                ex, ey, eo = x, y, 0
            elif d == 1:
                nbx, nby = x - 1, y
                ex, ey, eo = x - 1, y, 0
                if nbx < x0:
                    continue
            elif d == 2:
                nbx, nby = x, y + 1
                ex, ey, eo = x, y, 1
            else:
                nbx, nby = x, y - 1
                ex, ey, eo = x, y - 1, 1
            if not _edge_open(seed, thr, force, okeys, ovals, ex, ey, eo):
                continue
            if nbx - x0 > d_cap:
                status = 1
                break
            if nby - y0 > y_cap or nby - y0 < -y_cap:
                status = 2
                break
            gi = nbx - x0
            gj = nby - y0 + yoff
            if visited[gi, gj]:
                continue
            if n_sites >= size_cap:
                status = 2
                break
            visited[gi, gj] = 1
            touched_x[n_touched] = gi
            touched_y[n_touched] = gj
            n_touched += 1
            xs_out[n_sites] = nbx
            ys_out[n_sites] = nby
            n_sites += 1
    depth = 0
    n_line = 0
    n_open = 0
    n_closed = 0
    n_line_h = 0
    if status == 0:
        # stats pass: each site owns its right and up edge; closed in-scope
        # edges owned by non-cluster sites are counted from the inside
        for s in range(n_sites):
            x = xs_out[s]
            y = ys_out[s]
            dx = x - x0
            if dx > depth:
                depth = dx
            if dx == 0:
                n_line += 1
            if _edge_open(seed, thr, force, okeys, ovals, x, y, 0):
                n_open += 1
                ck_out[dx + 1] += 1
                if dx == 0:
                    n_line_h += 1
            else:
                n_closed += 1
            if _edge_open(seed, thr, force, okeys, ovals, x, y, 1):
                n_open += 1
                ck_out[dx] += 1
            else:
                n_closed += 1
            if x - 1 >= x0 and visited[x - 1 - x0, y - y0 + yoff] == 0:
                n_closed += 1
            if visited[x - x0, y - 1 - y0 + yoff] == 0:
                n_closed += 1
    # reset for reuse
    for t in range(n_touched):
        visited[touched_x[t], touched_y[t]] = 0
    return status, n_sites, depth, n_line, n_open, n_closed, n_line_h


@njit(cache=True)
def right_cluster(env_seed, thr, force, okeys, ovals, x0, y0, d_cap, y_cap, size_cap, xs_out, ys_out, ck_out):
    seed = np.uint64(env_seed)
    thr_u = np.uint64(thr)
    visited = np.zeros((d_cap + 2, 2 * y_cap + 3), np.uint8)
    touched_x = np.empty(size_cap + 8, np.int64)
    touched_y = np.empty(size_cap + 8, np.int64)
    return _right_cluster_impl(
        seed, thr_u, force, okeys, ovals, x0, y0, d_cap, y_cap, size_cap, xs_out, ys_out, ck_out, visited, touched_x, touched_y
    )


@njit(cache=True)
def gamma_census(
    base_seed,
    thr,
    force,
    n_attempts,
    d_cap,
    y_cap,
    size_cap,
    conditioned,
    left_depth,
    left_ycap,
    hit_depth,
    hit_nline,
    hit_nlineh,
    hit_nopen,
    hit_nclosed,
    hit_ck,
):
    base = np.uint64(base_seed)
    thr_u = np.uint64(thr)
    okeys = np.empty(0, np.uint64)
    ovals = np.empty(0, np.uint8)
    visited = np.zeros((d_cap + 2, 2 * y_cap + 3), np.uint8)
    touched_x = np.empty(size_cap + 8, np.int64)
    touched_y = np.empty(size_cap + 8, np.int64)
    xs = np.empty(size_cap + 8, np.int64)
    ys = np.empty(size_cap + 8, np.int64)
    ck = np.empty(d_cap + 2, np.int64)
    n_accepted = 0
    n_hits = 0
    n_unresolved = 0
    for a in range(n_attempts):
        seed = _mix64(base + _TS * np.uint64(a) + _SS * np.uint64(3) + _ONE)
        if conditioned:
            if not halfplane_reaches_left(
                seed, thr_u, force, okeys, ovals, 0, 0, -left_depth, -left_ycap, left_ycap, False
            ):
                continue
        n_accepted += 1
        status, n_sites, depth, n_line, n_open, n_closed, n_line_h = _right_cluster_impl(
            seed, thr_u, force, okeys, ovals, 0, 0, d_cap, y_cap, size_cap, xs, ys, ck, visited, touched_x, touched_y
        )
        if status == 2:
            n_unresolved += 1
        elif status == 0:
            hit_depth[n_hits] = depth
            hit_nline[n_hits] = n_line
            hit_nlineh[n_hits] = n_line_h
            hit_nopen[n_hits] = n_open
            hit_nclosed[n_hits] = n_closed
            for k in range(d_cap + 2):
                hit_ck[n_hits, k] = ck[k]
            n_hits += 1
    return n_accepted, n_hits, n_unresolved
