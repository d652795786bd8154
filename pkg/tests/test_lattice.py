"""Environment realization: edge states, windows, clusters, conditioning."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from percwalk.errors import ParameterError, SamplingBudgetError
from percwalk.lattice import (
    HORIZONTAL,
    VERTICAL,
    BondConfiguration,
    Edge,
    Rect,
    Site,
    ClusterLabeling,
    clusters,
    condition_left_halfplane,
    condition_spanning,
    realize_window,
    spanning_proxy,
)

SMALL_INT = st.integers(min_value=-200, max_value=200)


def test_p_one_every_edge_open():
    cfg = BondConfiguration(seed=3, p=1.0)
    for x, y in ((0, 0), (-5, 7), (100, -3)):
        assert cfg.is_open(x, y, HORIZONTAL)
        assert cfg.is_open(x, y, VERTICAL)


def test_p_zero_every_edge_closed():
    cfg = BondConfiguration(seed=3, p=0.0)
    for x, y in ((0, 0), (-5, 7), (100, -3)):
        assert not cfg.is_open(x, y, HORIZONTAL)
        assert not cfg.is_open(x, y, VERTICAL)


def test_same_seed_same_environment():
    a = BondConfiguration(seed=42, p=0.6)
    b = BondConfiguration(seed=42, p=0.6)
    wa = realize_window(a, Rect(-40, 40, -40, 40))
    wb = realize_window(b, Rect(-40, 40, -40, 40))
    assert np.array_equal(wa.h_open, wb.h_open)
    assert np.array_equal(wa.v_open, wb.v_open)
    c = BondConfiguration(seed=43, p=0.6)
    wc = realize_window(c, Rect(-40, 40, -40, 40))
    assert not np.array_equal(wa.h_open, wc.h_open)


def test_open_fraction_at_half():
    # ~1.3e6 realized edges at p=0.5; binomial 4 sigma band
    cfg = BondConfiguration(seed=42, p=0.5)
    win = realize_window(cfg, Rect(0, 800, 0, 800))
    n_open = int(win.h_inside.sum() + win.v_inside.sum())
    n = win.h_inside.size + win.v_inside.size
    assert n > 1_000_000
    sd = np.sqrt(n * 0.25)
    assert abs(n_open - 0.5 * n) < 4 * sd


def test_overrides_pin_edges():
    cfg = BondConfiguration(seed=1, p=0.0, overrides={(0, 0, HORIZONTAL): True})
    assert cfg.is_open(0, 0, HORIZONTAL)
    assert not cfg.is_open(1, 0, HORIZONTAL)
    cfg2 = cfg.with_overrides({(1, 0, HORIZONTAL): True})
    assert cfg2.is_open(1, 0, HORIZONTAL)
    # original untouched
    assert not cfg.is_open(1, 0, HORIZONTAL)


def test_edge_between_normalizes_endpoint_order():
    e1 = Edge.between(Site(2, 3), Site(3, 3))
    e2 = Edge.between(Site(3, 3), Site(2, 3))
    assert e1 == e2 and e1.orientation == "horizontal"
    ev = Edge.between(Site(2, 3), Site(2, 4))
    assert ev.orientation == "vertical"
    with pytest.raises(ParameterError):
        Edge.between(Site(0, 0), Site(1, 1))


def test_edge_state_matches_is_open():
    cfg = BondConfiguration(seed=9, p=0.5)
    e = Edge.between(Site(4, -2), Site(5, -2))
    assert cfg.edge_state(e) == cfg.is_open(4, -2, HORIZONTAL)


def test_open_neighbors_enumerates_open_edges():
    ov = {
        (0, 0, HORIZONTAL): True,   # right
        (-1, 0, HORIZONTAL): False, # left
        (0, 0, VERTICAL): True,     # up
        (0, -1, VERTICAL): False,   # down
    }
    cfg = BondConfiguration(seed=1, p=0.0, overrides=ov)
    assert set(cfg.open_neighbors(Site(0, 0))) == {Site(1, 0), Site(0, 1)}


@given(SMALL_INT, SMALL_INT, st.integers(0, 50), st.integers(0, 50))
@settings(max_examples=50)
def test_rect_format_parse_round_trip(x0, y0, w, h):
    r = Rect(x0, x0 + w, y0, y0 + h)
    assert Rect.parse(r.format()) == r


def test_rect_validation_and_contains():
    with pytest.raises(ParameterError):
        Rect(5, 4, 0, 0)
    r = Rect.centered(3)
    assert r == Rect(-3, 3, -3, 3)
    assert r.contains(Site(3, -3)) and not r.contains(Site(4, 0))
    assert r.nx == 7 and r.ny == 7
    assert len(list(r.sites())) == 49


def _bfs_labels(win, rect):
    """Reference 4-connected labeling over open edges."""
    lab = -np.ones((rect.nx, rect.ny), np.int64)
    nxt = 0
    for i in range(rect.nx):
        for j in range(rect.ny):
            if lab[i, j] >= 0:
                continue
            lab[i, j] = nxt
            stack = [(i, j)]
            while stack:
                a, b = stack.pop()
                if a + 1 < rect.nx and win.h_open[a, b] and lab[a + 1, b] < 0:
                    lab[a + 1, b] = nxt
                    stack.append((a + 1, b))
                if a > 0 and win.h_open[a - 1, b] and lab[a - 1, b] < 0:
                    lab[a - 1, b] = nxt
                    stack.append((a - 1, b))
                if b + 1 < rect.ny and win.v_open[a, b] and lab[a, b + 1] < 0:
                    lab[a, b + 1] = nxt
                    stack.append((a, b + 1))
                if b > 0 and win.v_open[a, b - 1] and lab[a, b - 1] < 0:
                    lab[a, b - 1] = nxt
                    stack.append((a, b - 1))
            nxt += 1
    return lab


@pytest.mark.parametrize("seed,p", [(1, 0.5), (2, 0.6), (3, 0.9), (4, 0.51)])
def test_cluster_labels_match_bfs_oracle(seed, p):
    rect = Rect(-16, 15, -16, 15)
    cfg = BondConfiguration(seed=seed, p=p)
    lab = clusters(cfg, rect)
    win = realize_window(cfg, rect)
    ref = _bfs_labels(win, rect)
    # same partition over edge-bearing sites; -1 marks isolated sites
    mine = lab.labels.ravel()
    theirs = ref.ravel()
    sizes = np.bincount(theirs)
    pairing = {}
    back = {}
    for m, t in zip(mine.tolist(), theirs.tolist()):
        if m < 0:
            assert sizes[t] == 1  # isolated in the oracle too
            continue
        assert pairing.setdefault(m, t) == t
        assert back.setdefault(t, m) == m


def test_label_of_isolated_and_out_of_window():
    rect = Rect(-4, 4, -4, 4)
    lab = clusters(BondConfiguration(seed=1, p=0.0), rect)
    assert lab.label_of(Site(0, 0)) is None  # isolated site carries no label
    with pytest.raises(ParameterError):
        clusters(BondConfiguration(seed=1, p=0.7), rect).label_of(Site(99, 0))


def test_spanning_proxy_trivials():
    win = Rect.centered(8)
    assert spanning_proxy(BondConfiguration(seed=1, p=1.0), win, Site(0, 0))
    assert not spanning_proxy(BondConfiguration(seed=1, p=0.0), win, Site(0, 0))


def test_spanning_proxy_frequency_supercritical():
    # at p=0.9 the origin joins a window-spanning cluster most of the time
    win = Rect.centered(64)
    hits = sum(
        spanning_proxy(BondConfiguration(seed=s, p=0.9), win, Site(0, 0)) for s in range(30)
    )
    assert hits / 30 > 0.7


def test_spanning_monotone_under_opening():
    # forcing a full open row through z can only create spanning, never destroy it
    win = Rect.centered(12)
    row = {(x, 0, HORIZONTAL): True for x in range(win.x_min, win.x_max)}
    for s in range(20):
        base = BondConfiguration(seed=s, p=0.7)
        forced = base.with_overrides(row)
        assert spanning_proxy(forced, win, Site(0, 0))
        if spanning_proxy(base, win, Site(0, 0)):
            # opening one more edge keeps it
            e = base.with_overrides({(0, 0, VERTICAL): True})
            assert spanning_proxy(e, win, Site(0, 0))


def test_condition_left_halfplane_p_one_accepts_first():
    res = condition_left_halfplane(5, 1.0, Rect.centered(32))
    assert res.rejections == 0 and res.attempts == 1


def test_condition_left_halfplane_acceptance_rate():
    win = Rect.centered(48)
    rejections = [condition_left_halfplane(s, 0.9, win).rejections for s in range(20)]
    # acceptance rate comfortably above 1/2 at p=0.9
    accepted_first = sum(r == 0 for r in rejections)
    assert accepted_first >= 12
    res = condition_left_halfplane(0, 0.55, win)
    assert res.attempts == res.rejections + 1


def test_condition_left_halfplane_window_must_straddle_origin():
    with pytest.raises(ParameterError):
        condition_left_halfplane(5, 0.9, Rect(0, 10, -5, 5))


def test_condition_spanning_accepts_and_exhausts():
    win = Rect.centered(16)
    res = condition_spanning(7, 0.8, win)
    assert spanning_proxy(res.config, win, Site(0, 0))
    # sealed window: no candidate can ever span
    sealed = {(x, y, o): False
              for x in range(-17, 18) for y in range(-17, 18) for o in (0, 1)}
    with pytest.raises(SamplingBudgetError) as ei:
        condition_spanning(7, 0.8, win, overrides=sealed, budget=10)
    assert ei.value.attempts == 10


def test_condition_spanning_z_outside_window():
    with pytest.raises(ParameterError):
        condition_spanning(7, 0.8, Rect.centered(4), z=Site(10, 0))


def test_describe_round_trips_key_fields():
    cfg = BondConfiguration(seed=11, p=0.65)
    d = cfg.describe()
    assert int(d["seed"]) == 11
    assert float(d["p"]) == 0.65
