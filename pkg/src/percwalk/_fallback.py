"""Pure NumPy/Python backend. See _kernel_api for the contract.

Every routine mirrors its numba twin decision-for-decision (same hash, same
draw order, same traversal order) so the two backends are bit-identical.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from . import rng

_KEY_OFF = 1 << 30


def pack_key(x: int, y: int, o: int) -> int:
    return ((x + _KEY_OFF) << 32) | ((y + _KEY_OFF) << 1) | o


def _edge_open(seed, thr, force, okeys, ovals, x, y, o):
    if okeys.size > 0:
        k = np.uint64(pack_key(x, y, o))
        i = int(np.searchsorted(okeys, k))
        if i < okeys.size and okeys[i] == k:
            return bool(ovals[i])
    if force > 0:
        return True
    if force < 0:
        return False
    return rng.edge_hash(seed, x, y, o) < thr


def simulate_walk(env_seed, thr, force, okeys, ovals, walk_seed, beta, n_steps, x0, y0):
    X = np.empty(n_steps + 1, np.int64)
    Y = np.empty(n_steps + 1, np.int64)
    x, y = x0, y0
    X[0] = x
    Y[0] = y
    cache: dict[tuple[int, int, int], bool] = {}

    def edge(ex, ey, eo):
        key = (ex, ey, eo)
        state = cache.get(key)
        if state is None:
            state = _edge_open(env_seed, thr, force, okeys, ovals, ex, ey, eo)
            cache[key] = state
        return state

    beta = float(beta)
    for i in range(1, n_steps + 1):
        r = edge(x, y, 0)
        lft = edge(x - 1, y, 0)
        up = edge(x, y, 1)
        dn = edge(x, y - 1, 1)
        nopen = int(r) + int(lft) + int(up) + int(dn)
        if nopen == 0:
            return X[:i], Y[:i], i - 1
        u01 = rng.walk_u01(walk_seed, i)
        if r:
            denom = beta + float(nopen - 1)
            pr = beta / denom
            po = 1.0 / denom
        else:
            pr = 0.0
            po = 1.0 / float(nopen)
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


def label_clusters(h_open, v_open):
    nx, ny = h_open.shape
    # doubled grid: sites at even cells, open edges as bridge cells
    grid = np.zeros((2 * nx - 1, 2 * ny - 1), bool)
    grid[::2, ::2] = True
    grid[1::2, ::2] = h_open[: nx - 1, :]
    grid[::2, 1::2] = v_open[:, : ny - 1]
    lab, _ = ndimage.label(grid)
    site_lab = lab[::2, ::2]
    has_edge = np.zeros((nx, ny), bool)
    has_edge[: nx - 1, :] |= h_open[: nx - 1, :]
    has_edge[1:, :] |= h_open[: nx - 1, :]
    has_edge[:, : ny - 1] |= v_open[:, : ny - 1]
    has_edge[:, 1:] |= v_open[:, : ny - 1]
    flat = site_lab.ravel()
    valid = has_edge.ravel()
    ids = flat[valid]
    labels = np.full(nx * ny, -1, np.int64)
    if ids.size:
        uniq, first = np.unique(ids, return_index=True)
        order = np.argsort(first, kind="stable")
        remap = np.empty(uniq.max() + 1, np.int64)
        remap[uniq[order]] = np.arange(uniq.size)
        labels[valid] = remap[ids]
    return labels.reshape(nx, ny)


def halfplane_reaches_left(
    env_seed, thr, force, okeys, ovals, x0, y0, x_goal, y_lo, y_hi, include_line_verticals
):
    if x0 - x_goal < 0 or y0 < y_lo or y0 > y_hi:
        return False
    if x0 == x_goal:
        return True

    def edge(ex, ey, eo):
        return _edge_open(env_seed, thr, force, okeys, ovals, ex, ey, eo)

    visited = {(x0, y0)}
    stack = [(x0, y0)]
    while stack:
        x, y = stack.pop()
        if x - 1 >= x_goal and edge(x - 1, y, 0):
            if x - 1 == x_goal:
                return True
            if (x - 1, y) not in visited:
                visited.add((x - 1, y))
                stack.append((x - 1, y))
        if x + 1 <= x0 and edge(x, y, 0):
            if (x + 1, y) not in visited:
                visited.add((x + 1, y))
                stack.append((x + 1, y))
        if x < x0 or include_line_verticals:
            if y + 1 <= y_hi and edge(x, y, 1) and (x, y + 1) not in visited:
                visited.add((x, y + 1))
                stack.append((x, y + 1))
            if y - 1 >= y_lo and edge(x, y - 1, 1) and (x, y - 1) not in visited:
                visited.add((x, y - 1))
                stack.append((x, y - 1))
    return False


def right_cluster(env_seed, thr, force, okeys, ovals, x0, y0, d_cap, y_cap, size_cap, xs_out, ys_out, ck_out):
    def edge(ex, ey, eo):
        return _edge_open(env_seed, thr, force, okeys, ovals, ex, ey, eo)

    ck_out[:] = 0
    visited = {(x0, y0)}
    xs_out[0] = x0
    ys_out[0] = y0
    n_sites = 1
    head = 0
    status = 0
    while head < n_sites and status == 0:
        x = int(xs_out[head])
        y = int(ys_out[head])
        head += 1
        for d in range(4):
            if d == 0:
                nbx, nby, ex, ey, eo = x + 1, y, x, y, 0
            elif d == 1:
                nbx, nby, ex, ey, eo = x - 1, y, x - 1, y, 0
                if nbx < x0:
                    continue
            elif d == 2:
                nbx, nby, ex, ey, eo = x, y + 1, x, y, 1
            else:
                nbx, nby, ex, ey, eo = x, y - 1, x, y - 1, 1
            if not edge(ex, ey, eo):
                continue
            if nbx - x0 > d_cap:
                status = 1
                break
            if abs(nby - y0) > y_cap:
                status = 2
                break
            if (nbx, nby) in visited:
                continue
            if n_sites >= size_cap:
                status = 2
                break
            visited.add((nbx, nby))
            xs_out[n_sites] = nbx
            ys_out[n_sites] = nby
            n_sites += 1
    depth = n_line = n_open = n_closed = n_line_h = 0
    if status == 0:
        for s in range(n_sites):
            x = int(xs_out[s])
            y = int(ys_out[s])
            dx = x - x0
            depth = max(depth, dx)
            if dx == 0:
                n_line += 1
            if edge(x, y, 0):
                n_open += 1
                ck_out[dx + 1] += 1
                if dx == 0:
                    n_line_h += 1
            else:
                n_closed += 1
            if edge(x, y, 1):
                n_open += 1
                ck_out[dx] += 1
            else:
                n_closed += 1
            if x - 1 >= x0 and (x - 1, y) not in visited:
                n_closed += 1
            if (x, y - 1) not in visited:
                n_closed += 1
    return status, n_sites, depth, n_line, n_open, n_closed, n_line_h


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
    okeys = np.empty(0, np.uint64)
    ovals = np.empty(0, np.uint8)
    xs = np.empty(size_cap + 8, np.int64)
    ys = np.empty(size_cap + 8, np.int64)
    ck = np.empty(d_cap + 2, np.int64)
    n_accepted = 0
    n_hits = 0
    n_unresolved = 0
    for a in range(n_attempts):
        seed = rng.derive_seed(base_seed, a, rng.STREAM_MC)
        if conditioned and not halfplane_reaches_left(
            seed, thr, force, okeys, ovals, 0, 0, -left_depth, -left_ycap, left_ycap, False
        ):
            continue
        n_accepted += 1
        status, n_sites, depth, n_line, n_open, n_closed, n_line_h = right_cluster(
            seed, thr, force, okeys, ovals, 0, 0, d_cap, y_cap, size_cap, xs, ys, ck
        )
        if status == 2:
            n_unresolved += 1
        elif status == 0:
            hit_depth[n_hits] = depth
            hit_nline[n_hits] = n_line
            hit_nlineh[n_hits] = n_line_h
            hit_nopen[n_hits] = n_open
            hit_nclosed[n_hits] = n_closed
            hit_ck[n_hits, : d_cap + 2] = ck[: d_cap + 2]
            n_hits += 1
    return n_accepted, n_hits, n_unresolved
