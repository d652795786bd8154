"""Site classification on the cluster: goodness, traps, and block coarse-graining.

A site is *good* when an infinite staircase starts there: steps (+1, +1) or
(+1, -1), each realized by its two lattice edges (across, then up or down)
being open.  On a finite window "infinite" is replaced by "reaches a horizon
column"; the horizon excess over the region is the caveat every consumer
should report.  *Bad* sites are cluster sites that are not good; their
4-connected components are traps, and the even-connected variants (steps of
L1-distance 2 within one parity class) bound trap dimensions from above.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.stats import beta as _beta_dist

from . import rng
from ._backend import kernels
from .errors import ParameterError, TruncationError
from .lattice import (
    BondConfiguration,
    ClusterLabeling,
    Rect,
    Site,
    Window,
    condition_left_halfplane,
    realize_window,
)

GOODNESS_HORIZON = 64
MIN_HORIZON_MARGIN = 8

CLASS_OFF = 0
CLASS_GOOD = 1
CLASS_BAD = 2

_CLASS_NAMES = {CLASS_OFF: "off", CLASS_GOOD: "good", CLASS_BAD: "bad"}

#: even-adjacency offsets: L1-distance exactly 2
EVEN_OFFSETS = ((1, 1), (1, -1), (-1, 1), (-1, -1), (0, 2), (0, -2), (2, 0), (-2, 0))


def staircase_reach(h_open: np.ndarray, v_open: np.ndarray, ix_horizon: int) -> np.ndarray:
    """Column-sweep reachability: reach[i, j] iff a staircase runs from
    window site (i, j) to some site in column ix_horizon.

    A step from (i, j) uses the horizontal edge h_open[i, j] plus either
    v_open[i+1, j] (up) or v_open[i+1, j-1] (down).  Sites in the horizon
    column count as reached.  Rows at the array boundary lose the exiting
    diagonal, so callers must pad the window by the cone height.
    """
    nx, ny = h_open.shape
    if not (0 <= ix_horizon < nx):
        raise ParameterError(f"horizon column {ix_horizon} outside window of {nx} columns")
    reach = np.zeros((ix_horizon + 1, ny), bool)
    reach[ix_horizon, :] = True
    for ix in range(ix_horizon - 1, -1, -1):
        nxt = reach[ix + 1]
        vcol = v_open[ix + 1]
        up = np.zeros(ny, bool)
        up[:-1] = nxt[1:] & vcol[:-1]
        dn = np.zeros(ny, bool)
        dn[1:] = nxt[:-1] & vcol[:-1]
        reach[ix] = h_open[ix] & (up | dn)
    return reach


def is_good(config: BondConfiguration, z, horizon: int | None = None) -> bool:
    """True iff a staircase runs from z to the column x = horizon."""
    z = Site(*z)
    if horizon is None:
        horizon = z.x + GOODNESS_HORIZON
    if horizon <= z.x:
        raise ParameterError(f"horizon {horizon} must exceed z.x = {z.x}")
    span = horizon - z.x
    rect = Rect(z.x, horizon, z.y - span, z.y + span)
    win = realize_window(config, rect)
    reach = staircase_reach(win.h_open, win.v_open, span)
    return bool(reach[0, span])


def staircase_witness(config: BondConfiguration, z, horizon: int | None = None) -> list[Site] | None:
    """An explicit staircase path from z to the horizon, or None."""
    z = Site(*z)
    if horizon is None:
        horizon = z.x + GOODNESS_HORIZON
    if horizon <= z.x:
        raise ParameterError(f"horizon {horizon} must exceed z.x = {z.x}")
    span = horizon - z.x
    rect = Rect(z.x, horizon, z.y - span, z.y + span)
    win = realize_window(config, rect)
    reach = staircase_reach(win.h_open, win.v_open, span)
    if not reach[0, span]:
        return None
    path = [z]
    iy = span
    for ix in range(span):
        nxt = reach[ix + 1]
        vcol = win.v_open[ix + 1]
        if iy + 1 < rect.ny and win.h_open[ix, iy] and vcol[iy] and nxt[iy + 1]:
            iy += 1
        elif iy - 1 >= 0 and win.h_open[ix, iy] and vcol[iy - 1] and nxt[iy - 1]:
            iy -= 1
        else:  # pragma: no cover - contradiction with reach
            raise AssertionError("witness extraction diverged from reachability")
        path.append(Site(rect.x_min + ix + 1, rect.y_min + iy))
    return path


@dataclass(frozen=True)
class GoodnessMap:
    """Classified window: per-site good/bad/off plus the raw geometry."""

    region: Rect
    horizon: int
    window: Window
    labels: np.ndarray
    spanning: np.ndarray
    good: np.ndarray
    classes: np.ndarray

    @property
    def rect(self) -> Rect:
        return self.window.rect

    def class_of(self, site) -> str:
        x, y = site
        r = self.rect
        if not r.contains(site):
            raise ParameterError(f"{site} outside classified window {r}")
        return _CLASS_NAMES[int(self.classes[x - r.x_min, y - r.y_min])]

    @property
    def bad(self) -> np.ndarray:
        return self.classes == CLASS_BAD


def classify(
    config: BondConfiguration,
    region: Rect,
    horizon: int | None = None,
    min_margin: int = MIN_HORIZON_MARGIN,
) -> GoodnessMap:
    """Assign good/bad/off to every site of `region` (and its whole support
    window), using the spanning proxy for cluster membership."""
    if horizon is None:
        horizon = region.x_max + GOODNESS_HORIZON
    if horizon - region.x_max < min_margin:
        raise ParameterError(
            f"horizon {horizon} closer than {min_margin} columns to region edge {region.x_max}"
        )
    span = horizon - region.x_min
    rect = Rect(region.x_min, horizon, region.y_min - span, region.y_max + span)
    win = realize_window(config, rect)
    labels = kernels.label_clusters(win.h_open, win.v_open)
    lab = ClusterLabeling(rect, labels, int(labels.max()) + 1)
    spanning = lab.spanning_mask()
    reach = staircase_reach(win.h_open, win.v_open, rect.nx - 1)
    classes = np.zeros((rect.nx, rect.ny), np.int8)
    classes[reach] = CLASS_GOOD
    classes[spanning & ~reach] = CLASS_BAD
    return GoodnessMap(region, horizon, win, labels, spanning, reach, classes)


@dataclass(frozen=True)
class TrapRecord:
    """A trap component with its length (x-extent) and width (y-extent)."""

    sites: frozenset
    length: int
    width: int

    @property
    def size(self) -> int:
        return self.length + self.width

    @classmethod
    def empty(cls) -> "TrapRecord":
        return cls(frozenset(), 0, 0)

    @classmethod
    def from_sites(cls, sites) -> "TrapRecord":
        sites = frozenset(Site(*s) for s in sites)
        if not sites:
            return cls.empty()
        xs = [s.x for s in sites]
        ys = [s.y for s in sites]
        return cls(sites, max(xs) - min(xs), max(ys) - min(ys))


def _component_bfs(gmap: GoodnessMap, z: Site, offsets, restrict_min_x: int | None = None):
    """Generic component search over the bad mask; returns (sites, touches)."""
    r = gmap.rect
    bad = gmap.bad
    margin = 1 if len(offsets) == 4 else 2

    def is_bad(s):
        return r.contains(s) and bad[s[0] - r.x_min, s[1] - r.y_min]

    seen = {z}
    stack = [z]
    touches = False
    while stack:
        cur = stack.pop()
        if (
            cur.x - r.x_min < margin
            or r.x_max - cur.x < margin
            or cur.y - r.y_min < margin
            or r.y_max - cur.y < margin
        ):
            touches = True
        for dx, dy in offsets:
            nb = Site(cur.x + dx, cur.y + dy)
            if nb in seen or not is_bad(nb):
                continue
            if restrict_min_x is not None and nb.x < restrict_min_x:
                continue
            seen.add(nb)
            stack.append(nb)
    return seen, touches


def _trap_component(gmap: GoodnessMap, z, offsets, restrict_min_x=None) -> TrapRecord:
    z = Site(*z)
    if not gmap.rect.contains(z):
        raise ParameterError(f"{z} outside classified window")
    if gmap.class_of(z) != "bad":
        return TrapRecord.empty()
    sites, touches = _component_bfs(gmap, z, offsets, restrict_min_x)
    if touches:
        raise TruncationError(f"component of {z} touches the classified window boundary")
    return TrapRecord.from_sites(sites)


def trap_of(gmap: GoodnessMap, z) -> TrapRecord:
    """4-connected bad component containing z; empty when z is not bad."""
    return _trap_component(gmap, z, ((1, 0), (-1, 0), (0, 1), (0, -1)))


def even_trap_of(gmap: GoodnessMap, z) -> TrapRecord:
    """Even-connected (L1-distance-2) bad component of z within its parity class."""
    return _trap_component(gmap, z, EVEN_OFFSETS)


def right_hand_even_trap(gmap: GoodnessMap, z) -> TrapRecord:
    """Even-connected bad component of z restricted to x >= z.x.

    For a good z the record is empty (so its length is 0 by convention).
    """
    z = Site(*z)
    return _trap_component(gmap, z, EVEN_OFFSETS, restrict_min_x=z.x)


_FOUR_CONN = ndimage.generate_binary_structure(2, 1)
_EIGHT_CONN = np.ones((3, 3), bool)


def _extents_by_id(ids: np.ndarray, xs: np.ndarray, ys: np.ndarray, n: int):
    big = np.iinfo(np.int64).max
    min_x = np.full(n + 1, big, np.int64)
    max_x = np.full(n + 1, -big, np.int64)
    min_y = np.full(n + 1, big, np.int64)
    max_y = np.full(n + 1, -big, np.int64)
    np.minimum.at(min_x, ids, xs)
    np.maximum.at(max_x, ids, xs)
    np.minimum.at(min_y, ids, ys)
    np.maximum.at(max_y, ids, ys)
    return min_x, max_x, min_y, max_y


def _even_labels(gmap: GoodnessMap):
    """Per-site even-component ids for the window's bad mask.

    Even adjacency within one parity class maps to king-move (8-)adjacency
    under (x, y) -> ((x+y-par)/2, (x-y-par)/2), so scipy labeling applies.
    Returns (ids grid with 0 for non-bad, n_components, per-id extent arrays,
    per-id truncation flags).
    """
    r = gmap.rect
    bad = gmap.bad
    bx, by = np.nonzero(bad)
    gx = bx + r.x_min
    gy = by + r.y_min
    ids_grid = np.zeros(bad.shape, np.int64)
    n_total = 0
    trunc = [False]
    res_min_x = [0]
    res_max_x = [0]
    res_min_y = [0]
    res_max_y = [0]
    near = (bx < 2) | (bx >= r.nx - 2) | (by < 2) | (by >= r.ny - 2)
    for par in (0, 1):
        sel = ((gx + gy) & 1) == par
        if not np.any(sel):
            continue
        u = (gx[sel] + gy[sel] - par) >> 1
        v = (gx[sel] - gy[sel] - par) >> 1
        u0, v0 = u.min(), v.min()
        grid = np.zeros((u.max() - u0 + 1, v.max() - v0 + 1), bool)
        grid[u - u0, v - v0] = True
        lab, n = ndimage.label(grid, structure=_EIGHT_CONN)
        comp = lab[u - u0, v - v0] + n_total
        ids_grid[bx[sel], by[sel]] = comp
        mnx, mxx, mny, mxy = _extents_by_id(comp, gx[sel], gy[sel], n_total + n)
        res_min_x.extend(mnx[n_total + 1 :])
        res_max_x.extend(mxx[n_total + 1 :])
        res_min_y.extend(mny[n_total + 1 :])
        res_max_y.extend(mxy[n_total + 1 :])
        t = np.zeros(n_total + n + 1, bool)
        np.logical_or.at(t, comp, near[sel])
        trunc.extend(t[n_total + 1 :])
        n_total += n
    return (
        ids_grid,
        n_total,
        np.asarray(res_min_x),
        np.asarray(res_max_x),
        np.asarray(res_min_y),
        np.asarray(res_max_y),
        np.asarray(trunc, bool),
    )


def fact34_check(gmap: GoodnessMap, region: Rect | None = None):
    """Check L(z) <= L(C_e(z)) + 2 and W(z) <= W(C_e(z)) + 2 for bad sites.

    Sites whose 4-component or even component touches the window boundary
    are skipped (their extents are not trustworthy).  Returns a dict with
    n_checked, n_violations, n_skipped.
    """
    r = gmap.rect
    region = region or gmap.region
    bad = gmap.bad
    lab4, n4 = ndimage.label(bad, structure=_FOUR_CONN)
    bx, by = np.nonzero(bad)
    if bx.size == 0:
        return {"n_checked": 0, "n_violations": 0, "n_skipped": 0}
    gx = bx + r.x_min
    gy = by + r.y_min
    ids4 = lab4[bx, by]
    mnx4, mxx4, mny4, mxy4 = _extents_by_id(ids4, gx, gy, n4)
    near4 = (bx < 1) | (bx >= r.nx - 1) | (by < 1) | (by >= r.ny - 1)
    trunc4 = np.zeros(n4 + 1, bool)
    np.logical_or.at(trunc4, ids4, near4)
    idsE_grid, nE, mnxE, mxxE, mnyE, mxyE, truncE = _even_labels(gmap)
    idsE = idsE_grid[bx, by]
    in_region = (
        (gx >= region.x_min) & (gx <= region.x_max) & (gy >= region.y_min) & (gy <= region.y_max)
    )
    usable = in_region & ~trunc4[ids4] & ~truncE[idsE]
    L4 = (mxx4 - mnx4)[ids4]
    W4 = (mxy4 - mny4)[ids4]
    LE = (mxxE - mnxE)[idsE]
    WE = (mxyE - mnyE)[idsE]
    viol = usable & ((L4 > LE + 2) | (W4 > WE + 2))
    return {
        "n_checked": int(usable.sum()),
        "n_violations": int(viol.sum()),
        "n_skipped": int((in_region & ~usable).sum()),
    }


def traps_in(gmap: GoodnessMap, include_truncated: bool = False) -> list[TrapRecord]:
    """All 4-connected traps in the classified window (smallest-site order)."""
    r = gmap.rect
    lab4, n4 = ndimage.label(gmap.bad, structure=_FOUR_CONN)
    out = []
    bx, by = np.nonzero(gmap.bad)
    for comp in range(1, n4 + 1):
        sel = lab4[bx, by] == comp
        sites = [Site(int(x + r.x_min), int(y + r.y_min)) for x, y in zip(bx[sel], by[sel])]
        touches = any(
            x - r.x_min < 1 or r.x_max - x < 1 or y - r.y_min < 1 or r.y_max - y < 1
            for x, y in sites
        )
        if touches and not include_truncated:
            continue
        out.append(TrapRecord.from_sites(sites))
    return out


def binomial_ci(k: int, n: int, alpha: float = 0.05) -> tuple[float, float]:
    """Two-sided Clopper-Pearson interval for a binomial proportion."""
    if n == 0:
        return (0.0, 1.0)
    lo = 0.0 if k == 0 else float(_beta_dist.ppf(alpha / 2, k, n - k + 1))
    hi = 1.0 if k == n else float(_beta_dist.ppf(1 - alpha / 2, k + 1, n - k))
    return lo, hi


def binomial_upper(k: int, n: int, confidence: float = 0.95) -> float:
    """One-sided Clopper-Pearson upper bound for a binomial proportion."""
    if n == 0:
        return 1.0
    if k >= n:
        return 1.0
    return float(_beta_dist.ppf(confidence, k + 1, n - k))


@dataclass(frozen=True)
class TailTable:
    """Empirical tail P(stat >= n) with per-row binomial intervals."""

    statistic: str
    n_samples: int
    counts: np.ndarray  # counts[i] = #{stat >= i+1}, i = 0..n_max-1

    def rows(self):
        out = []
        for i, k in enumerate(self.counts):
            lo, hi = binomial_ci(int(k), self.n_samples)
            out.append(
                {
                    "n": i + 1,
                    "count": int(k),
                    "estimate": int(k) / self.n_samples if self.n_samples else 0.0,
                    "ci_low": lo,
                    "ci_high": hi,
                }
            )
        return out

    def tail_ratio_upper(self, n: int, confidence: float = 0.95) -> float:
        """Upper confidence bound for P(stat >= n+1 | stat >= n)."""
        if not (1 <= n < len(self.counts) + 1):
            raise ParameterError(f"n={n} outside tail table range")
        denom = int(self.counts[n - 1])
        num = int(self.counts[n]) if n < len(self.counts) else 0
        return binomial_upper(num, denom, confidence)

    def fit_decay(self) -> float:
        """Least-squares geometric decay rate of the tail over positive rows."""
        ks = self.counts.astype(float)
        ns = np.arange(1, len(ks) + 1, dtype=float)
        pos = ks > 0
        if pos.sum() < 2:
            return float("nan")
        coef = np.polyfit(ns[pos], np.log(ks[pos] / self.n_samples), 1, w=np.sqrt(ks[pos]))
        return float(np.exp(coef[0]))


@dataclass(frozen=True)
class TrapTailStats:
    length: TailTable
    width: TailTable
    n_trials: int
    n_excluded_truncated: int
    n_excluded_off_proxy: int
    fact34: dict
    window: Rect
    region: Rect
    horizon: int


def trap_tail_stats(
    p: float,
    trials: int,
    n_max: int,
    window: Rect | None = None,
    seed: int = 0,
    region_half: int | None = None,
    horizon: int | None = None,
    check_fact34: bool = True,
) -> TrapTailStats:
    """Monte Carlo tails of L(0), W(0) under the left-half-plane conditioning.

    Each trial draws a conditioned environment, classifies a region around
    the origin, and records the origin's trap extents (0 when the origin is
    good).  Trials whose origin trap touches the window boundary are
    excluded (reported), as are trials where the origin fails the spanning
    proxy despite the conditioning.
    """
    if not (0.5 < p <= 1.0):
        raise ParameterError(f"p={p} outside the supercritical range (0.5, 1]")
    if trials < 1:
        raise ParameterError("trials must be positive")
    window = window or Rect.centered(128)
    region_half = region_half or max(12, 2 * n_max + 6)
    region = Rect.centered(region_half)
    countL = np.zeros(n_max, np.int64)
    countW = np.zeros(n_max, np.int64)
    n_valid = 0
    n_trunc = 0
    n_off = 0
    fact = {"n_checked": 0, "n_violations": 0, "n_skipped": 0}
    horizon = horizon if horizon is not None else region.x_max + GOODNESS_HORIZON
    for t in range(trials):
        base = rng.derive_seed(seed, t, rng.STREAM_ENV)
        res = condition_left_halfplane(base, p, window)
        gmap = classify(res.config, region, horizon=horizon)
        if check_fact34:
            f = fact34_check(gmap)
            for key in fact:
                fact[key] += f[key]
        cls = gmap.class_of(Site(0, 0))
        if cls == "off":
            n_off += 1
            continue
        if cls == "good":
            n_valid += 1
            continue
        try:
            rec = trap_of(gmap, Site(0, 0))
        except TruncationError:
            n_trunc += 1
            continue
        n_valid += 1
        for n in range(1, n_max + 1):
            if rec.length >= n:
                countL[n - 1] += 1
            if rec.width >= n:
                countW[n - 1] += 1
    return TrapTailStats(
        TailTable("L", n_valid, countL),
        TailTable("W", n_valid, countW),
        n_valid,
        n_trunc,
        n_off,
        fact,
        window,
        region,
        horizon,
    )
