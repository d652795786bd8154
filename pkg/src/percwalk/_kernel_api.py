"""Contract shared by the numba kernels and the pure-Python fallbacks.

Both _kernels (numba) and _fallback (NumPy/Python) expose these callables
with identical semantics and bit-identical outputs:

simulate_walk(env_seed, thr, force, okeys, ovals, walk_seed, beta,
              n_steps, x0, y0) -> (X, Y, steps_done)
    Biased walk on the percolation environment.  X, Y are int64 arrays of
    length steps_done+1; steps_done < n_steps only if the walker's site has
    no open incident edge.

label_clusters(h_open, v_open) -> labels
    Union-find labels of the open subgraph realized on a window.  h_open
    and v_open are (nx, ny) boolean arrays (edge from site (i,j) to
    (i+1,j) resp. (i,j+1); the last column of h_open / row of v_open is
    ignored).  labels is int64 (nx, ny): -1 for isolated sites, otherwise
    consecutive ids in row-major order of first appearance.

halfplane_reaches_left(env_seed, thr, force, okeys, ovals, x0, y0,
                       x_goal, y_lo, y_hi, include_line_verticals)
    -> bool.  BFS from (x0,y0) over sites with x_goal <= x <= x0 and
    y_lo <= y <= y_hi; uses only edges with both endpoints x <= x0, and
    skips vertical edges on the column x == x0 unless
    include_line_verticals.  True iff some visited site has x == x_goal.

right_cluster(env_seed, thr, force, okeys, ovals, x0, y0, d_cap, y_cap,
              size_cap, xs_out, ys_out, ck_out)
    -> (status, n_sites, depth, n_line, n_open, n_closed, n_line_h)
    BFS of the cluster of (x0,y0) restricted to x >= x0.  status: 0 the
    cluster is finite within the caps (a dead-end candidate), 1 it reaches
    x > x0 + d_cap, 2 it leaves |y - y0| <= y_cap or exceeds size_cap
    (unresolved).  On status 0 the site list is written to xs_out/ys_out
    and ck_out[k] counts open in-scope edges of weight exponent k
    (re-anchored to x0); n_line counts cluster sites on the anchor column,
    n_line_h the open horizontal edges leaving that column, n_open/n_closed
    the open/closed in-scope edge totals.

gamma_census(base_seed, thr, force, n_attempts, d_cap, y_cap, size_cap,
             conditioned, left_depth, left_ycap,
             hit_depth, hit_nline, hit_nlineh, hit_nopen, hit_nclosed,
             hit_ck) -> (n_accepted, n_hits, n_unresolved)
    Monte Carlo dead-end census at the origin over n_attempts independent
    environments derived from base_seed.  When conditioned, environments
    whose origin does not reach x = -left_depth inside the left half-plane
    minus the anchor-column verticals are rejected (not counted in
    n_accepted).  Each accepted environment with a finite right cluster
    (status 0) appends one row to the hit arrays.
"""
