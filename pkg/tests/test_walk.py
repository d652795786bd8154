"""Walk simulation: transition law, epoch detection, speed estimators."""

import math
import os
import tempfile
from fractions import Fraction

import numpy as np
import pytest

from percwalk import network as net
from percwalk import walk as wk
from percwalk.deadend import dead_end_at
from percwalk.errors import DeadWalkerError, InsufficientDataError, ParameterError
from percwalk.lattice import HORIZONTAL, VERTICAL, BondConfiguration, Rect, Site
from percwalk.rng import STREAM_ENV, STREAM_WALK, derive_seed

ORIGIN = Site(0, 0)


def pattern_config(mask):
    """Open-edge pattern at the origin: mask = (right, left, up, down)."""
    return BondConfiguration(1, 1.0).with_overrides({
        (0, 0, HORIZONTAL): bool(mask[0]),
        (-1, 0, HORIZONTAL): bool(mask[1]),
        (0, 0, VERTICAL): bool(mask[2]),
        (0, -1, VERTICAL): bool(mask[3]),
    })


def test_transition_law_all_open():
    dist = wk.transition_distribution(BondConfiguration(1, 1.0), 2, ORIGIN)
    assert dist[Site(1, 0)] == Fraction(2, 5)
    for z in (Site(-1, 0), Site(0, 1), Site(0, -1)):
        assert dist[z] == Fraction(1, 5)


def test_transition_law_right_closed_uniform():
    cfg = BondConfiguration(1, 1.0).with_overrides({(0, 0, HORIZONTAL): False})
    dist = wk.transition_distribution(cfg, 2, ORIGIN)
    assert Site(1, 0) not in dist
    assert all(v == Fraction(1, 3) for v in dist.values())
    assert sum(dist.values()) == 1


def test_transition_law_all_patterns_sum_to_one():
    for pat in range(1, 16):
        mask = [(pat >> k) & 1 for k in range(4)]
        cfg = pattern_config(mask)
        for beta in (Fraction(3, 2), 2, 4):
            d = wk.transition_distribution(cfg, beta, ORIGIN)
            assert sum(d.values()) == 1
            if mask[0]:
                l = sum(mask)
                assert d[Site(1, 0)] == Fraction(beta) / (Fraction(beta) + l - 1)


def test_transition_law_equals_conductance_ratios():
    # the step rule and the edge-weight chain are the same chain, exactly
    for pat in range(1, 16):
        mask = [(pat >> k) & 1 for k in range(4)]
        cfg = pattern_config(mask)
        for beta in (Fraction(3, 2), Fraction(2), Fraction(4)):
            dist = wk.transition_distribution(cfg, beta, ORIGIN)
            # weights at x=0: right edge beta^1, left beta^0, verticals beta^0
            w = {}
            if mask[0]:
                w[Site(1, 0)] = beta
            if mask[1]:
                w[Site(-1, 0)] = Fraction(1)
            if mask[2]:
                w[Site(0, 1)] = Fraction(1)
            if mask[3]:
                w[Site(0, -1)] = Fraction(1)
            total = sum(w.values())
            assert set(dist) == set(w)
            for z in w:
                assert dist[z] == w[z] / total, (pat, beta, z)


def test_isolated_walker_refused():
    with pytest.raises(DeadWalkerError):
        wk.transition_distribution(BondConfiguration(1, 0.0), 2, ORIGIN)


def test_step_frequencies_match_law():
    cfg = pattern_config([1, 0, 1, 1])
    dist = wk.transition_distribution(cfg, 2.0, ORIGIN)
    counts = {z: 0 for z in dist}
    n_draws = 100_000
    for i in range(n_draws):
        nxt = wk.step(cfg, 2.0, wk.WalkerState(ORIGIN, i), walk_rng=99)
        counts[nxt.position] += 1
    for z, pr in dist.items():
        want = float(pr) * n_draws
        sd = math.sqrt(float(pr) * (1 - float(pr)) * n_draws)
        assert abs(counts[z] - want) < 4 * sd, (z, counts[z], want)


def test_python_step_matches_kernel_trajectory():
    cfg = BondConfiguration(31415, 0.85)
    traj = wk.run_walk(cfg, 2718, 1.7, 2000, ORIGIN)
    state = wk.WalkerState(ORIGIN, 0)
    for n in range(1, 2001):
        state = wk.step(cfg, 1.7, state, walk_rng=2718)
        assert (state.position.x, state.position.y) == (traj.X[n], traj.Y[n]), n


def test_run_deterministic_and_seed_sensitive():
    t1 = wk.run(5, 6, 0.9, 1.2, 20_000)
    t2 = wk.run(5, 6, 0.9, 1.2, 20_000)
    assert np.array_equal(t1.X, t2.X) and np.array_equal(t1.Y, t2.Y)
    t3 = wk.run(5, 7, 0.9, 1.2, 20_000)
    assert not np.array_equal(t1.X, t3.X)


def test_run_near_ballistic_at_huge_bias():
    traj = wk.run(1, 2, 1.0, 1e6, 50_000)
    assert traj.X[-1] / 50_000 > 0.99


def test_transience_batch():
    for trial in range(10):
        t = wk.run(derive_seed(42, trial, STREAM_ENV), derive_seed(42, trial, STREAM_WALK),
                   0.9, 1.2, 50_000)
        assert t.X[-1] > 0, trial


def synthetic(X):
    """Trajectory with the given X-process; Y zig-zags to keep steps unit."""
    X = np.asarray(X, np.int64)
    Y = np.zeros_like(X)
    for i in range(1, len(X)):
        Y[i] = Y[i - 1] if X[i] != X[i - 1] else Y[i - 1] + 1
    return wk.Trajectory(Site(int(X[0]), 0), X, Y, 2.0, 0.9, 0, 0)


def test_fresh_epoch_worked_examples():
    assert wk.fresh_epochs(synthetic([0, 1, 0, 1, 2, 3])).tolist() == [1, 4, 5]
    assert wk.fresh_epochs(synthetic(range(8))).tolist() == list(range(1, 8))


def test_regeneration_worked_examples():
    t = synthetic(range(8))
    assert wk.regeneration_epochs(t, 1).tolist() == list(range(1, 7))
    t = synthetic([0, 1, 2, 1, 2, 3, 4])
    assert wk.regeneration_epochs(t, 1).tolist() == [5]
    with pytest.raises(ParameterError):
        wk.regeneration_epochs(t, 0)


def fresh_brute(X):
    return [n for n in range(1, len(X)) if all(X[n] > X[k] for k in range(n))]


def regen_brute(X, margin):
    out = []
    for n in fresh_brute(X):
        future = X[n + 1:]
        if future and min(future) > X[n] and max(future) >= X[n] + margin:
            out.append(n)
    return out


def test_epoch_detectors_match_brute_force():
    margins = np.random.default_rng(0).integers(1, 30, size=30)
    for trial in range(30):
        try:
            t = wk.run(derive_seed(7, trial, STREAM_ENV), derive_seed(7, trial, STREAM_WALK),
                       0.75, 1.5, 800)
        except DeadWalkerError:
            continue  # isolated start site; valid refusal
        X = t.X.tolist()
        m = int(margins[trial])
        assert wk.fresh_epochs(t).tolist() == fresh_brute(X), trial
        assert wk.regeneration_epochs(t, m).tolist() == regen_brute(X, m), (trial, m)


def test_reported_regenerations_never_revisited():
    t = wk.run(31, 32, 0.8, 1.6, 30_000)
    ann = wk.annotate(t)
    assert set(ann.regeneration) <= set(ann.fresh)
    for n in ann.regeneration.tolist():
        assert t.X[n + 1:].min() > t.X[n]


def test_speed_trivials():
    t = synthetic(range(1025))
    sp = wk.speed_empirical(t)
    assert sp.value == 1.0 and np.all(sp.checkpoint_rates == 1.0)
    assert sp.checkpoint_steps[-1] == 1024
    rs = wk.speed_regeneration(t, wk.annotate(t, censor_margin=1))
    assert rs.value == 1.0 and rs.stderr == 0.0
    flat = synthetic([0] * 100)
    assert wk.speed_empirical(flat).value == 0.0


def test_speed_estimators_agree_moderate_run():
    t = wk.run(11, 12, 0.9, 1.2, 120_000)
    ann = wk.annotate(t)
    emp = wk.speed_empirical(t)
    reg = wk.speed_regeneration(t, ann)
    assert emp.value > 0 and reg.value > 0
    assert abs(reg.value - emp.value) / emp.value < 0.15
    dn, dx = wk.regeneration_increments(t, ann)
    pooled = wk.pooled_regeneration_speed([(dn, dx)])
    assert abs(pooled.value - reg.value) < 1e-12


def test_speed_regeneration_needs_data():
    t = wk.run(11, 12, 0.9, 1.2, 200)
    with pytest.raises(InsufficientDataError):
        wk.speed_regeneration(t, wk.annotate(t))


def test_default_censor_margin_floor():
    t = synthetic(range(200))
    assert wk.default_censor_margin(t) >= 50


def test_lag1_autocorrelation_edge_cases():
    r = wk.lag1_autocorrelation([[1.0, 2.0, 1.5, 2.5, 1.0, 3.0]])
    assert r.n_pairs == 5 and abs(r.value) <= 1.0
    with pytest.raises(InsufficientDataError):
        wk.lag1_autocorrelation([[1.0]])
    with pytest.raises(InsufficientDataError):
        wk.lag1_autocorrelation([[2.0, 2.0, 2.0, 2.0]])


def test_lag1_near_zero_for_independent_draws():
    rng_ = np.random.default_rng(8)
    r = wk.lag1_autocorrelation([rng_.exponential(size=400) for _ in range(3)])
    assert abs(r.z) < 3


def test_ladder_empty_without_dead_ends():
    t = wk.run(3, 4, 1.0, 3.0, 2000)
    assert wk.ladder_epochs(BondConfiguration(3, 1.0), t) == []


def test_ladder_corridor_overlay():
    # sealed row 0 with one closed edge at x=5: one dead end, one ladder epoch
    corridor = {}
    for x in range(-80, 11):
        corridor[(x, 0, VERTICAL)] = False
        corridor[(x, -1, VERTICAL)] = False
    corridor[(5, 0, HORIZONTAL)] = False
    cfg = BondConfiguration(9, 1.0, corridor)
    t = wk.run_walk(cfg, 17, 3.0, 600, ORIGIN)
    assert int(t.X.max()) == 5 and np.all(t.Y == 0)
    ladders = wk.ladder_epochs(cfg, t, window_pad=20)
    first_visit_x1 = int(np.nonzero(t.X == 1)[0][0])
    assert ladders == [first_visit_x1]


def test_ladder_matches_direct_recursion():
    n_found = 0
    for trial in range(6):
        es = derive_seed(100, trial, STREAM_ENV)
        ws = derive_seed(100, trial, STREAM_WALK)
        try:
            t = wk.run(es, ws, 0.6, 3.0, 4000)
        except DeadWalkerError:
            continue
        cfg = BondConfiguration(es, 0.6)
        got = wk.ladder_epochs(cfg, t, window_pad=40, depth_cap=16)
        want = []
        threshold = None
        for n in wk.fresh_epochs(t):
            z = t.position(int(n))
            if threshold is not None and z.x <= threshold:
                continue
            rec = dead_end_at(cfg, z, Rect(z.x - 40, z.x + 17, z.y - 64, z.y + 64))
            if rec is not None:
                want.append(int(n))
                threshold = z.x + rec.depth
        assert got == want, trial
        n_found += len(got)
    assert n_found > 0


def test_csv_exports():
    with tempfile.TemporaryDirectory() as d:
        t = wk.run(5, 6, 0.9, 1.5, 50)
        ann = wk.annotate(t, censor_margin=5)
        traj_path = os.path.join(d, "traj.csv")
        ep_path = os.path.join(d, "epochs.csv")
        wk.write_trajectory_csv(t, traj_path)
        wk.write_epochs_csv(ann, ep_path)
        lines = open(traj_path).read().splitlines()
        assert lines[0] == "step,x,y" and len(lines) == 52
        s, x, y = lines[7].split(",")
        assert (int(s), int(x), int(y)) == (6, t.X[6], t.Y[6])
        lines = open(ep_path).read().splitlines()
        assert lines[0] == "epoch,type"
        assert {ln.split(",")[1] for ln in lines[1:]} <= {"fresh", "regen", "ladder"}
