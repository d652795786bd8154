"""Dead-end records, the shape census in both engines, and the threshold fit."""

import itertools

import numpy as np
import pytest

from percwalk import deadend as de
from percwalk import network as net
from percwalk.errors import (
    ParameterError,
    ResourceLimitError,
    TruncationError,
)
from percwalk.lattice import HORIZONTAL, VERTICAL, BondConfiguration, Rect, Site

ORIGIN = Site(0, 0)


def test_singleton_record():
    r = de.build_record(ORIGIN, {ORIGIN}, set(), 0.6)
    assert (r.n_open, r.n_closed, r.n_line, r.depth) == (0, 3, 1, 0)
    assert abs(r.p_a - 0.4**3) < 1e-15
    assert de.gamma_contribution(r, 2.0) == 0.0
    assert de.sojourn_time(r, 2.0) == 0.0


def test_two_vertex_record():
    r = de.build_record(ORIGIN, {ORIGIN, Site(1, 0)}, {(0, 0, HORIZONTAL)}, 0.6)
    assert (r.n_open, r.n_closed, r.n_line, r.depth) == (1, 5, 1, 1)
    assert abs(r.p_a - 0.6 * 0.4**5) < 1e-15
    assert abs(de.gamma_contribution(r, 2.0) - 0.6 * 0.4**5 * 2.0) < 1e-15
    # one edge of weight beta, line measure beta: two visits of the edge
    assert abs(de.sojourn_time(r, 2.0) - 2.0) < 1e-15


def set_return_oracle(rec, beta):
    """First-return time to the anchor-column site set on the unmerged
    conductance chain, entered from its stationary slice.  Loop-free by
    construction, so no merged-vertex convention enters the computation."""
    verts = sorted({v for e in rec.open_edges for v in (e.a, e.b)})
    idx = {v: i for i, v in enumerate(verts)}
    x0 = rec.anchor.x
    n = len(verts)
    W = np.zeros((n, n))
    for e in rec.open_edges:
        w = beta ** (max(e.a.x, e.b.x) - x0)
        W[idx[e.a], idx[e.b]] += w
        W[idx[e.b], idx[e.a]] += w
    pi = W.sum(axis=1)
    P = W / pi[:, None]
    line = [idx[v] for v in verts if v.x == x0]
    interior = [i for i in range(n) if i not in set(line)]
    t = np.zeros(n)
    if interior:
        Q = P[np.ix_(interior, interior)]
        t[interior] = np.linalg.solve(np.eye(len(interior)) - Q, np.ones(len(interior)))
    entry = pi[line] / pi[line].sum()
    return float(entry @ (1.0 + P[line] @ t))


def test_sojourn_matches_chain_oracle_small_shapes():
    for rec in de.enumerate_shapes(0.6, 1, height_cap=1, max_edges=4):
        want = de.sojourn_time(rec, 2.0)
        if rec.n_open == 0:
            assert want == 0.0
            continue
        assert abs(set_return_oracle(rec, 2.0) - want) < 1e-12, rec
        nw, line_name = de.to_network(rec, 2.0)
        got = net.expected_return_time_to_line(nw, line_name)
        assert abs(got - want) < 1e-12, rec


def test_gamma_contribution_monotone_in_beta():
    r = de.build_record(ORIGIN, {ORIGIN, Site(1, 0)}, {(0, 0, HORIZONTAL)}, 0.6)
    vals = [de.gamma_contribution(r, b) for b in (1.2, 1.5, 2.0, 3.0, 5.0)]
    assert all(a < b for a, b in zip(vals, vals[1:]))


def test_gamma_contribution_anchor_invariant():
    base = de.build_record(ORIGIN, {ORIGIN, Site(1, 0)}, {(0, 0, HORIZONTAL)}, 0.6)
    shifted = de.build_record(
        Site(7, -3), {Site(7, -3), Site(8, -3)}, {(7, -3, HORIZONTAL)}, 0.6
    )
    for b in (1.5, 2.0, 4.0):
        assert abs(de.gamma_contribution(base, b) - de.gamma_contribution(shifted, b)) < 1e-15
        assert abs(de.sojourn_time(base, b) - de.sojourn_time(shifted, b)) < 1e-15


def brute_shapes(d_max, height_cap, max_edges):
    """All connected open-edge sets containing the origin inside the box."""
    universe = []
    for x in range(0, d_max + 1):
        for y in range(-height_cap, height_cap):
            universe.append((x, y, VERTICAL))
    for x in range(0, d_max):
        for y in range(-height_cap, height_cap + 1):
            universe.append((x, y, HORIZONTAL))

    def endpoints(key):
        x, y, o = key
        return Site(x, y), Site(x + 1, y) if o == HORIZONTAL else Site(x, y + 1)

    def connected_with_origin(keys):
        if not keys:
            return True
        adj = {}
        verts = set()
        for k in keys:
            a, b = endpoints(k)
            verts |= {a, b}
            adj.setdefault(a, []).append(b)
            adj.setdefault(b, []).append(a)
        if ORIGIN not in verts:
            return False
        seen = {ORIGIN}
        stack = [ORIGIN]
        while stack:
            u = stack.pop()
            for w in adj.get(u, ()):
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return seen == verts

    out = set()
    for k in range(max_edges + 1):
        for combo in itertools.combinations(range(len(universe)), k):
            keys = frozenset(universe[i] for i in combo)
            if connected_with_origin(keys):
                out.add(keys)
    return out


def test_enumeration_matches_brute_force():
    want = brute_shapes(1, 1, 4)
    got = de.enumerate_shapes(0.6, 1, height_cap=1, max_edges=4)
    got_keys = set()
    for r in got:
        ks = []
        for e in r.open_edges:
            orient = HORIZONTAL if e.a.x != e.b.x else VERTICAL
            ks.append((e.a.x, e.a.y, orient))
        got_keys.add(frozenset(ks))
    assert len(got) == len(got_keys)  # no duplicates
    assert got_keys == want


def test_enumeration_guard_trips():
    with pytest.raises(ResourceLimitError):
        de.enumerate_shapes(0.6, 2, max_edges=12, max_shapes=50_000)


def test_streaming_census_matches_record_level_sum():
    records = de.enumerate_shapes(0.6, 1, height_cap=1, max_edges=4)
    want = np.zeros(2)
    for r in records:
        want[r.depth] += de.gamma_contribution(r, 2.0)
    est = de.gamma_exact(0.6, 1, height_cap=1, max_edges=4)
    got, err = est.gamma_by_depth(2.0)
    assert int(est.depth_counts.sum()) == len(records)
    assert np.allclose(got, want, rtol=1e-13)
    assert np.all(err == 0.0)


def test_exact_census_rejects_foreign_cap():
    est = de.gamma_exact(0.6, 1, height_cap=1, max_edges=4)
    with pytest.raises(ParameterError):
        est.gamma_by_depth(2.0, max_open=3)


def test_dead_end_at_p_one_none():
    assert de.dead_end_at(BondConfiguration(5, 1.0), ORIGIN, Rect.centered(40)) is None


def test_dead_end_at_overlay_singleton():
    cfg = BondConfiguration(
        seed=5, p=0.9,
        overrides={
            (0, 0, HORIZONTAL): False,
            (0, 0, VERTICAL): False,
            (0, -1, VERTICAL): False,
            **{(x, 0, HORIZONTAL): True for x in range(-40, 0)},
        },
    )
    rec = de.dead_end_at(cfg, ORIGIN, Rect.centered(40))
    assert rec is not None
    assert rec.sites == frozenset({ORIGIN}) and rec.n_closed == 3


def test_dead_end_at_requires_left_infinity():
    # origin sealed off inside the left half-plane: not a dead-end beginning
    cfg = BondConfiguration(
        seed=5, p=0.9,
        overrides={
            (0, 0, HORIZONTAL): False,
            (0, 0, VERTICAL): False,
            (0, -1, VERTICAL): False,
            (-1, 0, HORIZONTAL): False,
            **{(-1, y, VERTICAL): False for y in range(-41, 41)},
            **{(0, y, VERTICAL): False for y in range(-41, 41)},
        },
    )
    assert de.dead_end_at(cfg, ORIGIN, Rect.centered(40)) is None


def test_dead_end_at_right_spanning_is_none():
    # open corridor from the origin past the right window edge, sealed
    # sides: reaching the right column is the infinity proxy, so no record
    ov = {(x, 0, HORIZONTAL): True for x in range(-40, 41)}
    for x in range(0, 41):
        ov[(x, 0, VERTICAL)] = False
        ov[(x, -1, VERTICAL)] = False
    cfg = BondConfiguration(seed=5, p=1.0, overrides=ov)
    assert de.dead_end_at(cfg, ORIGIN, Rect.centered(20)) is None


def test_dead_end_at_y_leak_truncation():
    # tall open column on the anchor line escaping the window vertically:
    # finite in x, undecidable in y
    ov = {(x, 0, HORIZONTAL): True for x in range(-40, 0)}
    ov.update({(0, y, VERTICAL): True for y in range(0, 41)})
    cfg = BondConfiguration(seed=5, p=0.0, overrides=ov)
    with pytest.raises(TruncationError):
        de.dead_end_at(cfg, ORIGIN, Rect.centered(20))


def test_census_rows_schema():
    est = de.gamma_exact(0.6, 1, height_cap=1, max_edges=4)
    rows = est.rows(2.0)
    assert [r[0] for r in rows] == [0, 1]
    for depth, count, gamma, stderr in rows:
        assert count >= 0 and gamma >= 0.0 and stderr >= 0.0


def test_monte_carlo_census_agrees_with_exact():
    exact = de.gamma_exact(0.6, 2, max_edges=10)
    mc = de.gamma_census(0.6, 2, 120_000, base_seed=123)
    g_mc, e_mc = mc.gamma_by_depth(2.0, max_open=10)
    g_ex, _ = exact.gamma_by_depth(2.0)
    z = (g_mc - g_ex) / np.where(e_mc > 0, e_mc, 1.0)
    assert np.all(np.abs(z) < 4.0), z
    assert mc.n_samples > 0


def test_gamma_census_deterministic():
    a = de.gamma_census(0.6, 1, 20_000, base_seed=7)
    b = de.gamma_census(0.6, 1, 20_000, base_seed=7)
    ga, _ = a.gamma_by_depth(2.0)
    gb, _ = b.gamma_by_depth(2.0)
    assert np.array_equal(ga, gb)
    assert a.n_samples == b.n_samples


def test_gamma_truncated_dispatch():
    est, g, e = de.gamma_truncated(0.6, 2.0, 1, engine="exact-enumeration", max_edges=4)
    assert est.engine == "exact-enumeration" and g.shape == (2,)
    with pytest.raises(ParameterError):
        de.gamma_truncated(0.6, 2.0, 5, engine="exact-enumeration")
    with pytest.raises(ParameterError):
        de.gamma_truncated(0.6, 2.0, 1, engine="guesswork")


def test_estimate_beta_u_validation():
    with pytest.raises(ParameterError):
        de.estimate_beta_u(0.6, d_range=(2, 4))
    exact = de.gamma_exact(0.6, 2, max_edges=6)
    with pytest.raises(ParameterError):
        de.estimate_beta_u(0.6, d_range=(0, 3), census=exact)
    mc = de.gamma_census(0.6, 3, 5_000, base_seed=1)
    with pytest.raises(ParameterError):
        de.estimate_beta_u(0.55, d_range=(0, 3), census=mc)  # wrong p


def test_estimate_beta_u_small_budget_runs():
    # low-depth fit on a small budget: finite, > 1, bracket ordered
    est = de.estimate_beta_u(0.6, d_range=(1, 4), budget=60_000, seed=3)
    assert est.value > 1.0 and np.isfinite(est.value)
    lo, hi = est.bracket
    assert lo <= est.value <= hi
    assert est.diagnostics["n_samples"] > 0


def test_record_invariants_recomputable():
    for rec in de.enumerate_shapes(0.55, 1, height_cap=1, max_edges=4):
        assert rec.anchor in rec.sites
        assert rec.n_line == sum(1 for s in rec.sites if s.x == rec.anchor.x)
        assert rec.depth == max(s.x for s in rec.sites) - rec.anchor.x
        want_pa = 0.55**rec.n_open * 0.45**rec.n_closed
        assert abs(rec.p_a - want_pa) < 1e-15
