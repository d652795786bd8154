"""Biased walk on the percolation cluster: simulation and epoch analysis.

The walker at z with l open incident edges steps to the right neighbor
with probability beta/(beta+l-1) when the right edge is open and to each
other open neighbor with probability 1/(beta+l-1); when the right edge is
closed it picks uniformly among the open neighbors.  Speed estimation rests
on regeneration epochs: fresh records of the X-process that the future
never revisits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._backend import kernels
from .deadend import dead_end_at
from .errors import DeadWalkerError, InsufficientDataError, ParameterError
from .lattice import HORIZONTAL, VERTICAL, BondConfiguration, Rect, Site
from .rng import walk_u01

#: minimum censoring margin, in lattice columns
CENSOR_FLOOR = 50

#: draw order frozen to match the step kernel: right, left, up, down
_MOVES = ((1, 0), (-1, 0), (0, 1), (0, -1))


@dataclass(frozen=True)
class WalkerState:
    """Walker position plus the number of steps already taken."""

    position: Site
    step_count: int = 0


@dataclass(frozen=True)
class Trajectory:
    """A realized walk: start site, coordinate arrays, and its seed pair.

    Consecutive positions differ by one lattice step; every move crosses an
    open edge of the environment that generated the walk.  X[n] is the
    first coordinate after n steps.
    """

    start: Site
    X: np.ndarray
    Y: np.ndarray
    beta: float
    p: float
    env_seed: int
    walk_seed: int

    def __post_init__(self):
        if self.X.shape != self.Y.shape or self.X.ndim != 1 or self.X.size < 1:
            raise ParameterError("trajectory arrays must be 1-d and equal length")
        if self.X[0] != self.start.x or self.Y[0] != self.start.y:
            raise ParameterError("trajectory does not begin at its start site")
        if self.X.size > 1:
            step = np.abs(np.diff(self.X)) + np.abs(np.diff(self.Y))
            if not np.all(step == 1):
                raise ParameterError("trajectory contains a non-unit step")

    @property
    def n_steps(self) -> int:
        return self.X.size - 1

    def position(self, n: int) -> Site:
        return Site(int(self.X[n]), int(self.Y[n]))


@dataclass(frozen=True)
class EpochAnnotations:
    """Detected epochs of one trajectory; regeneration is a subset of fresh."""

    fresh: np.ndarray
    regeneration: np.ndarray
    censor_margin: int
    ladder: np.ndarray | None = None


def open_neighbor_mask(config: BondConfiguration, z) -> tuple:
    """(right, left, up, down) open-edge indicators at z."""
    z = Site(*z)
    return (
        config.is_open(z.x, z.y, HORIZONTAL),
        config.is_open(z.x - 1, z.y, HORIZONTAL),
        config.is_open(z.x, z.y, VERTICAL),
        config.is_open(z.x, z.y - 1, VERTICAL),
    )


def transition_distribution(config: BondConfiguration, beta, z) -> dict:
    """Exact one-step law at z as {neighbor Site: Fraction}.

    beta may be an int, Fraction, or float (floats convert exactly, so 1.5
    means the dyadic rational 3/2).
    """
    b = Fraction(beta)
    if b <= 1:
        raise ParameterError(f"beta must exceed 1, got {beta}")
    z = Site(*z)
    mask = open_neighbor_mask(config, z)
    l = sum(mask)
    if l == 0:
        raise DeadWalkerError(f"no open edges at {z}")
    out = {}
    if mask[0]:
        denom = b + l - 1
        p_right, p_other = b / denom, Fraction(1, 1) / denom
    else:
        p_right, p_other = Fraction(0), Fraction(1, l)
    for open_, (dx, dy) in zip(mask, _MOVES):
        if open_:
            out[Site(z.x + dx, z.y + dy)] = p_right if dx == 1 else p_other
    return out


def step(config: BondConfiguration, beta: float, state: WalkerState, walk_rng: int) -> WalkerState:
    """Advance one step; walk_rng is the walk seed (the step index is the
    counter, so replay is exact).

    Mirrors the kernel draw bit for bit: cumulative thresholds in the order
    right, left, up, down with any residual floating-point mass assigned to
    the last open direction.
    """
    if beta <= 1.0:
        raise ParameterError(f"beta must exceed 1, got {beta}")
    z = state.position
    mask = open_neighbor_mask(config, z)
    nopen = sum(mask)
    if nopen == 0:
        raise DeadWalkerError(f"no open edges at {z} after {state.step_count} steps")
    u = walk_u01(walk_rng, state.step_count + 1)
    if mask[0]:
        denom = beta + float(nopen - 1)
        probs = (beta / denom, 1.0 / denom, 1.0 / denom, 1.0 / denom)
    else:
        probs = (0.0, 1.0 / nopen, 1.0 / nopen, 1.0 / nopen)
    c = 0.0
    chosen = None
    for k in range(4):
        if not mask[k]:
            continue
        c += probs[k]
        if u < c:
            chosen = k
            break
        chosen = k  # residual mass lands on the last open direction
    dx, dy = _MOVES[chosen]
    return WalkerState(Site(z.x + dx, z.y + dy), state.step_count + 1)


def run_walk(
    config: BondConfiguration,
    walk_seed: int,
    beta: float,
    n_steps: int,
    start=Site(0, 0),
) -> Trajectory:
    """Simulate n_steps steps in a lazily realized environment.

    The walk is never clipped by a window: edges are hashed on demand.
    Deterministic given (config, walk_seed).  Raises DeadWalkerError if the
    walker reaches a site with no open edges, which cannot happen when the
    start lies on the cluster proxy.
    """
    if beta <= 1.0:
        raise ParameterError(f"beta must exceed 1, got {beta}")
    if n_steps < 0:
        raise ParameterError("n_steps must be >= 0")
    start = Site(*start)
    seed, thr, force, okeys, ovals = config.rule()
    X, Y, done = kernels.simulate_walk(
        seed, thr, force, okeys, ovals, int(walk_seed), float(beta), int(n_steps),
        start.x, start.y,
    )
    if done < n_steps:
        raise DeadWalkerError(
            f"walker stuck at ({X[-1]}, {Y[-1]}) after {done} of {n_steps} steps"
        )
    return Trajectory(start, X, Y, float(beta), config.p, config.seed, int(walk_seed))


def run(env_seed: int, walk_seed: int, p: float, beta: float, n_steps: int, start=Site(0, 0)) -> Trajectory:
    """Fresh-environment convenience wrapper around run_walk."""
    return run_walk(BondConfiguration(env_seed, p), walk_seed, beta, n_steps, start)


def fresh_epochs(traj: Trajectory) -> np.ndarray:
    """Epochs n > 0 with X_n > X_k for all k < n."""
    X = traj.X
    if X.size < 2:
        return np.empty(0, np.int64)
    prior_max = np.maximum.accumulate(X)[:-1]
    return (np.nonzero(X[1:] > prior_max)[0] + 1).astype(np.int64)


def regeneration_epochs(traj: Trajectory, censor_margin: int) -> np.ndarray:
    """Fresh epochs the recorded future never revisits, kept only when the
    future maximum clears X_n + censor_margin (guards against calling an
    epoch a regeneration merely because the trajectory ends)."""
    if censor_margin < 1:
        raise ParameterError("censor_margin must be >= 1")
    X = traj.X
    n = X.size
    fresh = fresh_epochs(traj)
    if fresh.size == 0:
        return fresh
    # suffix scans over the strict future of each epoch
    suffix_min = np.minimum.accumulate(X[::-1])[::-1]
    suffix_max = np.maximum.accumulate(X[::-1])[::-1]
    keep = fresh[fresh < n - 1]
    future_min = suffix_min[keep + 1]
    future_max = suffix_max[keep + 1]
    ok = (future_min > X[keep]) & (future_max >= X[keep] + censor_margin)
    return keep[ok]


def default_censor_margin(traj: Trajectory) -> int:
    """Twice the 99th percentile of fresh-epoch overshoots (how far below a
    fresh record the future ever dips), floored at CENSOR_FLOOR."""
    fresh = fresh_epochs(traj)
    if fresh.size == 0:
        return CENSOR_FLOOR
    suffix_min = np.minimum.accumulate(traj.X[::-1])[::-1]
    overshoot = traj.X[fresh] - suffix_min[fresh]
    margin = int(math.ceil(2.0 * float(np.percentile(overshoot, 99))))
    return max(CENSOR_FLOOR, margin)


def annotate(traj: Trajectory, censor_margin: int | None = None) -> EpochAnnotations:
    if censor_margin is None:
        censor_margin = default_censor_margin(traj)
    return EpochAnnotations(
        fresh_epochs(traj), regeneration_epochs(traj, censor_margin), censor_margin
    )


@dataclass(frozen=True)
class EmpiricalSpeed:
    """Final X_n/n plus the same ratio at dyadic checkpoints."""

    value: float
    checkpoint_steps: np.ndarray
    checkpoint_rates: np.ndarray


def speed_empirical(traj: Trajectory) -> EmpiricalSpeed:
    n = traj.n_steps
    if n < 1:
        raise ParameterError("speed needs at least one step")
    ks = []
    k = 1
    while k < n:
        ks.append(k)
        k *= 2
    ks.append(n)
    steps = np.array(ks, np.int64)
    rates = (traj.X[steps] - traj.start.x).astype(np.float64) / steps
    return EmpiricalSpeed(float(rates[-1]), steps, rates)


def regeneration_increments(traj: Trajectory, annotations: EpochAnnotations):
    """(dn, dx) arrays between consecutive regenerations.

    Pairs start at the first regeneration, so the differently distributed
    initial block is dropped automatically.
    """
    regs = annotations.regeneration
    if regs.size < 2:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    return np.diff(regs), np.diff(traj.X[regs])


@dataclass(frozen=True)
class RegenerationSpeed:
    value: float
    stderr: float
    n_increments: int


def _ratio_estimate(dn: np.ndarray, dx: np.ndarray) -> RegenerationSpeed:
    m = dn.size
    mean_dn = float(dn.mean())
    v = float(dx.sum()) / float(dn.sum())
    resid = dx - v * dn
    var = float(resid.var(ddof=1)) if m > 1 else 0.0
    se = math.sqrt(var / m) / mean_dn
    return RegenerationSpeed(v, se, m)


def speed_regeneration(traj: Trajectory, annotations: EpochAnnotations) -> RegenerationSpeed:
    """Ratio-of-means speed over regeneration blocks with a delta-method
    standard error; needs at least 10 uncensored regenerations."""
    if annotations.regeneration.size < 10:
        raise InsufficientDataError(
            f"{annotations.regeneration.size} regenerations found, need >= 10"
        )
    dn, dx = regeneration_increments(traj, annotations)
    return _ratio_estimate(dn, dx)


def pooled_regeneration_speed(increments) -> RegenerationSpeed:
    """Pool (dn, dx) increment pairs across independent trajectories."""
    dns = [np.asarray(q[0]) for q in increments]
    dxs = [np.asarray(q[1]) for q in increments]
    dn = np.concatenate(dns) if dns else np.empty(0, np.int64)
    if dn.size < 10:
        raise InsufficientDataError(f"{dn.size} pooled increments, need >= 10")
    return _ratio_estimate(dn, np.concatenate(dxs))


@dataclass(frozen=True)
class Lag1Result:
    value: float
    null_sigma: float
    n_pairs: int

    @property
    def z(self) -> float:
        return self.value / self.null_sigma


def lag1_autocorrelation(sequences) -> Lag1Result:
    """Lag-1 Pearson correlation over (v_i, v_{i+1}) pairs formed within
    each sequence, with the null sigma 1/sqrt(n_pairs) of an i.i.d. draw."""
    heads = []
    tails = []
    for s in sequences:
        s = np.asarray(s, np.float64)
        if s.size >= 2:
            heads.append(s[:-1])
            tails.append(s[1:])
    if not heads:
        raise InsufficientDataError("no lag-1 pairs available")
    a = np.concatenate(heads)
    b = np.concatenate(tails)
    if a.size < 3:
        raise InsufficientDataError(f"{a.size} lag-1 pairs, need >= 3")
    va = a - a.mean()
    vb = b - b.mean()
    denom = math.sqrt(float((va**2).sum()) * float((vb**2).sum()))
    if denom == 0.0:
        raise InsufficientDataError("degenerate (constant) increment sequence")
    return Lag1Result(float((va * vb).sum()) / denom, 1.0 / math.sqrt(a.size), a.size)


def ladder_epochs(
    config: BondConfiguration,
    traj: Trajectory,
    window: Rect | None = None,
    window_pad: int = 64,
    depth_cap: int = 24,
) -> list:
    """Ladder sequence: the first fresh epoch beginning a dead end, then
    recursively the first fresh epoch whose X clears the previous ladder
    point's X plus its dead-end depth and begins a dead end.

    Each candidate is probed inside a window reaching window_pad to the
    left (the left-infinite proxy depth) and depth_cap to the right (a
    cluster crossing depth_cap columns counts as escaped, not a dead end).
    The probe is 4x taller than deep so escape resolves in x before the
    y-range can truncate.  A fixed `window` overrides the per-site probe.
    Empty list when no dead end is found.
    """
    y_pad = 4 * depth_cap
    out = []
    threshold = None
    for n in fresh_epochs(traj):
        x = int(traj.X[n])
        if threshold is not None and x <= threshold:
            continue
        z = traj.position(n)
        win = window
        if win is None:
            win = Rect(z.x - window_pad, z.x + depth_cap + 1,
                       z.y - y_pad, z.y + y_pad)
        rec = dead_end_at(config, z, win)
        if rec is None:
            continue
        out.append(int(n))
        threshold = x + rec.depth
    return out


def write_trajectory_csv(traj: Trajectory, path) -> None:
    """CSV export with header step,x,y."""
    with open(path, "w") as fh:
        fh.write("step,x,y\n")
        for i in range(traj.X.size):
            fh.write(f"{i},{traj.X[i]},{traj.Y[i]}\n")


def write_epochs_csv(annotations: EpochAnnotations, path) -> None:
    """Companion CSV with header epoch,type; type in fresh/regen/ladder."""
    rows = [(int(n), "fresh") for n in annotations.fresh]
    rows += [(int(n), "regen") for n in annotations.regeneration]
    if annotations.ladder is not None:
        rows += [(int(n), "ladder") for n in annotations.ladder]
    rows.sort()
    with open(path, "w") as fh:
        fh.write("epoch,type\n")
        for n, kind in rows:
            fh.write(f"{n},{kind}\n")
