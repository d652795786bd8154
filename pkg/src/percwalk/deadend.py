"""Dead-end detection and the Gamma census behind the zero-speed threshold.

A site z begins a dead end when its cluster restricted to {x <= z.x}
reaches far left (infinite-cluster proxy) while its cluster restricted to
{x >= z.x} is finite.  The finite piece A, together with the exact set of
open in-scope edges E_A, has probability p_A = p^|E_A| (1-p)^|B_A| where
B_A are the closed in-scope edges touching A; in-scope means both endpoints
at x >= z.x, anchor-column verticals included.

Gamma(p, beta) sums p_A N(A)^-1 sum_{e in E_A} beta^(x1 v x2) over all
shapes anchored at the origin; its convergence threshold in beta is the
zero-speed point beta_u.  Per-depth terms Gamma_d are polynomials in beta,
so one census serves every beta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .errors import (
    EstimationError,
    InsufficientDataError,
    ParameterError,
    ResourceLimitError,
    TruncationError,
)
from .lattice import HORIZONTAL, VERTICAL, BondConfiguration, Edge, Rect, Site
from .network import WeightedNetwork
from .rng import STREAM_ENV, derive_seed, open_threshold

CENSUS_CHUNK = 250_000


@dataclass(frozen=True)
class DeadEndRecord:
    """A finite right-cluster A hanging off a left-infinite anchor.

    edge_exponent_counts[k] counts open in-scope edges of weight exponent
    anchor.x + k, so contributions are translation-invariant by
    construction.
    """

    anchor: Site
    sites: frozenset
    open_edges: tuple
    n_open: int
    n_closed: int
    n_line: int
    depth: int
    p: float
    edge_exponent_counts: tuple
    n_line_horizontal: int

    @property
    def p_a(self) -> float:
        return self.p**self.n_open * (1.0 - self.p) ** self.n_closed

    def weight_sum(self, beta: float) -> float:
        return float(sum(c * beta**k for k, c in enumerate(self.edge_exponent_counts)))

    def log_weight_sum(self, beta: float) -> float:
        """log of weight_sum, stable for large depth * log(beta)."""
        ks = [k for k, c in enumerate(self.edge_exponent_counts) if c]
        if not ks:
            return -math.inf
        km = max(ks)
        s = sum(
            c * beta ** (k - km) for k, c in enumerate(self.edge_exponent_counts) if c
        )
        return km * math.log(beta) + math.log(s)

    def validate(self):
        if self.anchor not in self.sites:
            raise ParameterError("anchor must belong to the dead end")
        if self.n_line < 1:
            raise ParameterError("a dead end has at least its anchor on the line")
        if self.depth != max(s.x for s in self.sites) - self.anchor.x:
            raise ParameterError("depth disagrees with the site set")


def gamma_contribution(record: DeadEndRecord, beta: float) -> float:
    """p_A N(A)^-1 sum_{e in E_A} beta^(exponent), re-anchored to x = 0."""
    return record.p_a / record.n_line * record.weight_sum(beta)


def sojourn_time(record: DeadEndRecord, beta: float) -> float:
    """Expected return time to the (merged) anchor line: pi(A)/pi(merged).

    Line verticals become self-loops at the merged vertex and count once
    per endpoint, i.e. twice; an edgeless dead end cannot be entered, so
    its sojourn is 0.
    """
    if record.n_open == 0:
        return 0.0
    c0 = record.edge_exponent_counts[0]
    denom = 2.0 * c0 + record.n_line_horizontal * beta
    return 2.0 * record.weight_sum(beta) / denom


def to_network(record: DeadEndRecord, beta: float):
    """(merged WeightedNetwork, line-vertex name) for this dead end, with
    weights re-anchored so the anchor column has exponent 0."""
    x0 = record.anchor.x
    edges = []
    for e in record.open_edges:
        k = max(e.a.x, e.b.x) - x0
        edges.append((e.a, e.b, beta**k))
    nw = WeightedNetwork.from_edge_list(edges)
    line_sites = [s for s in record.sites if s.x == x0 and s in nw._index]
    if not line_sites:
        if record.n_open == 0:
            return WeightedNetwork.from_edge_list([]), "line"
        raise ParameterError("dead end has open edges but no line site on them")
    return nw.merge(line_sites, "line"), "line"


def _edge_key(x: int, y: int, orient: int):
    return (x, y, orient)


def _incident_keys(s: Site):
    """The 4 lattice edges at s as (key, other endpoint)."""
    return (
        (_edge_key(s.x, s.y, HORIZONTAL), Site(s.x + 1, s.y)),
        (_edge_key(s.x - 1, s.y, HORIZONTAL), Site(s.x - 1, s.y)),
        (_edge_key(s.x, s.y, VERTICAL), Site(s.x, s.y + 1)),
        (_edge_key(s.x, s.y - 1, VERTICAL), Site(s.x, s.y - 1)),
    )


def _in_scope(key, x0: int) -> bool:
    # horizontal based at x spans [x, x+1]; vertical sits on column x:
    # either way both endpoints are right of the line iff the base is
    return key[0] >= x0


def build_record(anchor: Site, sites, open_keys, p: float) -> DeadEndRecord:
    """Assemble a DeadEndRecord from its site set and open in-scope edges."""
    sites = frozenset(Site(*s) for s in sites)
    x0 = anchor.x
    depth = max(s.x for s in sites) - x0
    n_line = sum(1 for s in sites if s.x == x0)
    ck = [0] * (depth + 2)
    n_line_h = 0
    open_edges = []
    for x, y, orient in sorted(open_keys):
        if orient == HORIZONTAL:
            a, b = Site(x, y), Site(x + 1, y)
            k = x + 1 - x0
            if x == x0:
                n_line_h += 1
        else:
            a, b = Site(x, y), Site(x, y + 1)
            k = x - x0
        ck[k] += 1
        open_edges.append(Edge(a, b))
    closed = set()
    for s in sites:
        for key, _ in _incident_keys(s):
            if _in_scope(key, x0) and key not in open_keys:
                closed.add(key)
    rec = DeadEndRecord(
        anchor,
        sites,
        tuple(open_edges),
        len(open_keys),
        len(closed),
        n_line,
        depth,
        p,
        tuple(ck[: depth + 2]),
        n_line_h,
    )
    rec.validate()
    return rec


def dead_end_at(config: BondConfiguration, z, window: Rect) -> DeadEndRecord | None:
    """The dead end beginning at z, or None.

    None when z's left-restricted cluster misses the left window edge, or
    when the right-restricted cluster reaches the window's right column
    (infinite-cluster proxy).  A right cluster that stays inside in x but
    leaks past the window's y-range is undecidable: TruncationError.
    """
    z = Site(*z)
    if not window.contains(z):
        raise ParameterError(f"{z} outside the window")
    seed, thr, force, okeys, ovals = config.rule()
    left_ok = kernels.halfplane_reaches_left(
        seed, thr, force, okeys, ovals,
        z.x, z.y, window.x_min, window.y_min, window.y_max, True,
    )
    if not left_ok:
        return None
    d_cap = window.x_max - z.x - 1
    y_cap = min(z.y - window.y_min, window.y_max - z.y) - 1
    if d_cap < 0 or y_cap < 0:
        raise ParameterError("window leaves no room to the right of z")
    size_cap = (d_cap + 1) * (2 * y_cap + 1) + 1
    xs = np.empty(size_cap + 1, np.int64)
    ys = np.empty(size_cap + 1, np.int64)
    ck = np.zeros(d_cap + 2, np.int64)
    status, n_sites, _, _, _, _, _ = kernels.right_cluster(
        seed, thr, force, okeys, ovals, z.x, z.y, d_cap, y_cap, size_cap, xs, ys, ck
    )
    if status == 1:
        return None
    if status == 2:
        raise TruncationError(f"right cluster of {z} leaves the window's y-range")
    sites = {Site(int(xs[i]), int(ys[i])) for i in range(n_sites)}
    open_keys = set()
    for s in sites:
        if Site(s.x + 1, s.y) in sites and config.is_open(s.x, s.y, HORIZONTAL):
            open_keys.add(_edge_key(s.x, s.y, HORIZONTAL))
        if Site(s.x, s.y + 1) in sites and config.is_open(s.x, s.y, VERTICAL):
            open_keys.add(_edge_key(s.x, s.y, VERTICAL))
    return build_record(z, sites, open_keys, config.p)


def enumerate_shapes(
    p: float,
    d_max: int,
    height_cap: int | None = None,
    max_edges: int = 12,
    max_shapes: int = 200_000,
) -> list[DeadEndRecord]:
    """All dead-end shapes anchored at the origin with depth <= d_max,
    vertices within |y| <= height_cap, and at most max_edges open edges.

    A shape is the pair (site set, open edge set): the same sites with
    different internal open edges are distinct (disjoint) outcomes.
    Materializes one record per shape, so the count is capped; use
    gamma_exact for census totals at production caps.
    """
    if d_max < 0:
        raise ParameterError("d_max must be >= 0")
    if height_cap is None:
        height_cap = 2 * d_max + 2
    # edge universe: in-scope edges whose endpoints satisfy the caps
    universe = []
    for x in range(0, d_max + 1):
        for y in range(-height_cap, height_cap):
            universe.append(_edge_key(x, y, VERTICAL))
    for x in range(0, d_max):
        for y in range(-height_cap, height_cap + 1):
            universe.append(_edge_key(x, y, HORIZONTAL))
    eidx = {k: i for i, k in enumerate(universe)}
    ends = []
    for x, y, orient in universe:
        if orient == HORIZONTAL:
            ends.append((Site(x, y), Site(x + 1, y)))
        else:
            ends.append((Site(x, y), Site(x, y + 1)))
    at_site: dict = {}
    for i, (a, b) in enumerate(ends):
        at_site.setdefault(a, []).append(i)
        at_site.setdefault(b, []).append(i)
    origin = Site(0, 0)
    records = [build_record(origin, {origin}, set(), p)]
    # connected edge-subgraph enumeration: extend by frontier edges in index
    # order, forbidding skipped ones down the subtree so each set appears once
    def recurse(chosen: list, verts: set, forbidden: set):
        if len(chosen) >= max_edges:
            return
        frontier = sorted(
            {
                i
                for v in verts
                for i in at_site.get(v, ())
                if i not in forbidden
            }
            - set(chosen)
        )
        for pos, i in enumerate(frontier):
            chosen.append(i)
            a, b = ends[i]
            added = [s for s in (a, b) if s not in verts]
            verts.update(added)
            if len(records) >= max_shapes:
                raise ResourceLimitError(
                    f"more than {max_shapes} shapes at d_max={d_max}, "
                    f"max_edges={max_edges}; raise max_shapes or use gamma_exact"
                )
            records.append(
                build_record(origin, verts, {universe[j] for j in chosen}, p)
            )
            recurse(chosen, verts, forbidden | set(frontier[:pos]))
            for s in added:
                verts.discard(s)
            chosen.pop()

    recurse([], {origin}, set())
    return records


@dataclass(frozen=True)
class GammaEstimate:
    """Per-depth Gamma contributions, evaluable at any beta.

    The exact engine stores per-depth polynomial coefficients (Gamma_d is a
    polynomial in beta); Monte Carlo keeps its per-hit rows so standard
    errors come out at the requested beta.
    """

    p: float
    d_max: int
    engine: str
    n_samples: int
    n_unresolved: int
    hit_depth: np.ndarray
    hit_inv_nline: np.ndarray
    hit_ck: np.ndarray
    hit_n_open: np.ndarray
    hit_n_line_h: np.ndarray
    coeffs: np.ndarray | None = None
    depth_counts: np.ndarray | None = None
    depth_mass: np.ndarray | None = None
    max_edges: int | None = None

    def gamma_by_depth(self, beta: float, max_open: int | None = None):
        """(gamma_d, stderr_d) arrays for d = 0..d_max at this beta."""
        if beta <= 1.0:
            raise ParameterError(f"beta must exceed 1, got {beta}")
        if self.engine == "exact-enumeration":
            if max_open is not None and max_open != self.max_edges:
                raise ParameterError(
                    "exact engine is pre-capped at max_edges; re-enumerate to change it"
                )
            powers = beta ** np.arange(self.coeffs.shape[1], dtype=np.float64)
            return self.coeffs @ powers, np.zeros(self.d_max + 1)
        powers = beta ** np.arange(self.hit_ck.shape[1], dtype=np.float64)
        per_hit = self.hit_inv_nline * (self.hit_ck @ powers)
        keep = np.ones(len(per_hit), bool)
        if max_open is not None:
            keep = self.hit_n_open <= max_open
        gamma = np.zeros(self.d_max + 1)
        err = np.zeros(self.d_max + 1)
        n = self.n_samples
        for d in range(self.d_max + 1):
            vals = per_hit[keep & (self.hit_depth == d)]
            # mean over all accepted samples; non-hits contribute 0
            s1 = float(vals.sum())
            s2 = float((vals**2).sum())
            gamma[d] = s1 / n
            var = max(s2 / n - (s1 / n) ** 2, 0.0) / n
            err[d] = math.sqrt(var)
        return gamma, err

    def total(self, beta: float):
        g, e = self.gamma_by_depth(beta)
        return float(g.sum()), float(np.sqrt((e**2).sum()))

    def hits_by_depth(self) -> np.ndarray:
        if self.engine == "exact-enumeration":
            return self.depth_counts.copy()
        out = np.zeros(self.d_max + 1, np.int64)
        for d in range(self.d_max + 1):
            out[d] = int((self.hit_depth == d).sum())
        return out

    def rows(self, beta: float) -> list[tuple]:
        """(depth, n_shapes_or_samples, gamma_d, stderr) per depth."""
        g, e = self.gamma_by_depth(beta)
        counts = self.hits_by_depth()
        return [
            (d, int(counts[d]), float(g[d]), float(e[d]))
            for d in range(self.d_max + 1)
        ]

    def sojourn_values(self, beta: float) -> np.ndarray:
        """Per-hit expected return times 2 sum c_k beta^k / (2 c_0 + n_lh beta);
        edgeless hits contribute 0.  Monte Carlo engine only."""
        if self.engine != "monte-carlo":
            raise ParameterError("per-hit sojourns need the monte-carlo engine")
        powers = beta ** np.arange(self.hit_ck.shape[1], dtype=np.float64)
        num = 2.0 * (self.hit_ck @ powers)
        den = 2.0 * self.hit_ck[:, 0] + self.hit_n_line_h * beta
        out = np.zeros(len(num))
        live = den > 0
        out[live] = num[live] / den[live]
        return out


def _stream_exact(p: float, d_max: int, height_cap: int, max_edges: int):
    """Depth-first pass over all shapes, accumulating per-depth polynomial
    coefficients without materializing records.

    Shape identity is the open edge set; p_A needs |B_A| = (in-scope edges
    incident to the vertex set) - |E_A|, maintained incrementally as
    sum-of-degrees minus adjacent-pairs-within-A.
    """
    universe = []
    for x in range(0, d_max + 1):
        for y in range(-height_cap, height_cap):
            universe.append((x, y, VERTICAL))
    for x in range(0, d_max):
        for y in range(-height_cap, height_cap + 1):
            universe.append((x, y, HORIZONTAL))
    ends = []
    expo = []
    for x, y, o in universe:
        if o == HORIZONTAL:
            ends.append(((x, y), (x + 1, y)))
            expo.append(x + 1)
        else:
            ends.append(((x, y), (x, y + 1)))
            expo.append(x)
    site_mask: dict = {}
    for i, (a, b) in enumerate(ends):
        site_mask[a] = site_mask.get(a, 0) | (1 << i)
        site_mask[b] = site_mask.get(b, 0) | (1 << i)
    p_pow = [p**a for a in range(max_edges + 1)]
    q_pow = [(1.0 - p) ** b for b in range(4 * max_edges + 12)]
    coeffs = np.zeros((d_max + 1, d_max + 2))
    counts = np.zeros(d_max + 1, np.int64)
    mass = np.zeros(d_max + 1)
    verts = {(0, 0)}
    ck = [0] * (d_max + 2)
    st = {"sig": 3, "pairs": 0, "nline": 1, "maxx": 0, "ne": 0}

    def emit():
        b = st["sig"] - st["pairs"] - st["ne"]
        pa = p_pow[st["ne"]] * q_pow[b]
        d = st["maxx"]
        counts[d] += 1
        mass[d] += pa
        w = pa / st["nline"]
        for k in range(d + 2):
            if ck[k]:
                coeffs[d, k] += w * ck[k]

    emit()

    def rec(chosen_mask: int, incident_mask: int, forbidden: int):
        if st["ne"] >= max_edges:
            return
        cand = incident_mask & ~chosen_mask & ~forbidden
        passed = 0
        while cand:
            low = cand & -cand
            cand ^= low
            i = low.bit_length() - 1
            a, b = ends[i]
            added = [s for s in (a, b) if s not in verts]
            old_maxx = st["maxx"]
            inc2 = incident_mask
            for s in added:
                verts.add(s)
                st["sig"] += 3 if s[0] == 0 else 4
                x, y = s
                for w in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
                    if w in verts:
                        st["pairs"] += 1
                if s[0] == 0:
                    st["nline"] += 1
                if s[0] > st["maxx"]:
                    st["maxx"] = s[0]
                inc2 |= site_mask[s]
            k = expo[i]
            ck[k] += 1
            st["ne"] += 1
            emit()
            rec(chosen_mask | low, inc2, forbidden | passed)
            ck[k] -= 1
            st["ne"] -= 1
            st["maxx"] = old_maxx
            for s in added:
                verts.discard(s)
                st["sig"] -= 3 if s[0] == 0 else 4
                x, y = s
                for w in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
                    if w in verts:
                        st["pairs"] -= 1
                if s[0] == 0:
                    st["nline"] -= 1
            passed |= low

    rec(0, site_mask[(0, 0)], 0)
    return coeffs, counts, mass


def gamma_exact(
    p: float, d_max: int, height_cap: int | None = None, max_edges: int = 12
) -> GammaEstimate:
    """Exact-enumeration census: per-depth polynomials summed shape by
    shape within the height and edge caps."""
    if d_max < 0:
        raise ParameterError("d_max must be >= 0")
    if height_cap is None:
        height_cap = 2 * d_max + 2
    coeffs, counts, mass = _stream_exact(p, d_max, height_cap, max_edges)
    empty_i = np.empty(0, np.int64)
    empty_f = np.empty(0, np.float64)
    return GammaEstimate(
        p, d_max, "exact-enumeration", int(counts.sum()), 0,
        empty_i, empty_f, np.empty((0, d_max + 2), np.int64), empty_i, empty_i,
        coeffs, counts, mass, max_edges,
    )


def gamma_census(
    p: float,
    d_max: int,
    n_attempts: int,
    base_seed: int,
    conditioned: bool = True,
    left_depth: int = 24,
    left_ycap: int = 64,
    y_cap: int | None = None,
    chunk: int = CENSUS_CHUNK,
) -> GammaEstimate:
    """Monte Carlo census at the origin over independent environments.

    Conditioning rejects environments whose origin does not reach
    x = -left_depth in the left half-plane without the anchor-column
    verticals; that event is independent of every in-scope edge, so
    accepted right environments carry exactly their unconditioned
    probability p_A and the per-depth averages are unbiased.
    """
    if not 0.0 < p < 1.0:
        raise ParameterError(f"census needs p in (0,1), got {p}")
    if n_attempts < 1:
        raise ParameterError("n_attempts must be positive")
    if y_cap is None:
        y_cap = 4 * d_max + 16
    thr, force = open_threshold(p)
    size_cap = (d_max + 1) * (2 * y_cap + 1) + 1
    n_acc = 0
    n_unres = 0
    parts = []
    n_chunks = (n_attempts + chunk - 1) // chunk
    for c in range(n_chunks):
        todo = min(chunk, n_attempts - c * chunk)
        seed_c = derive_seed(base_seed, c, STREAM_ENV)
        hd = np.empty(todo, np.int64)
        hn = np.empty(todo, np.int64)
        hh = np.empty(todo, np.int64)
        ho = np.empty(todo, np.int64)
        hc = np.empty(todo, np.int64)
        hk = np.empty((todo, d_max + 2), np.int64)
        acc, hits, unres = kernels.gamma_census(
            seed_c, thr, force, todo, d_max, y_cap, size_cap,
            conditioned, left_depth, left_ycap,
            hd, hn, hh, ho, hc, hk,
        )
        n_acc += int(acc)
        n_unres += int(unres)
        parts.append((hd[:hits].copy(), hn[:hits].copy(), hh[:hits].copy(),
                      ho[:hits].copy(), hk[:hits].copy()))
    hit_depth = np.concatenate([q[0] for q in parts])
    hit_nline = np.concatenate([q[1] for q in parts])
    hit_nlineh = np.concatenate([q[2] for q in parts])
    hit_nopen = np.concatenate([q[3] for q in parts])
    hit_ck = np.concatenate([q[4] for q in parts], axis=0)
    return GammaEstimate(
        p, d_max, "monte-carlo", n_acc, n_unres,
        hit_depth, 1.0 / hit_nline, hit_ck, hit_nopen, hit_nlineh,
    )


def gamma_truncated(
    p: float,
    beta: float,
    d_max: int,
    engine: str = "exact-enumeration",
    budget: int = 500_000,
    seed: int = 0,
    max_edges: int = 12,
):
    """Gamma truncated at depth d_max: (GammaEstimate, per-depth values,
    per-depth stderr) at the given beta."""
    if engine == "exact-enumeration":
        if d_max > 3:
            raise ParameterError("exact enumeration supports d_max <= 3")
        est = gamma_exact(p, d_max, max_edges=max_edges)
    elif engine == "monte-carlo":
        est = gamma_census(p, d_max, budget, seed)
    else:
        raise ParameterError(f"unknown census engine {engine!r}")
    g, e = est.gamma_by_depth(beta)
    return est, g, e


@dataclass(frozen=True)
class BetaUEstimate:
    """Bisection estimate of the Gamma-convergence threshold."""

    p: float
    value: float
    bracket: tuple
    d_range: tuple
    diagnostics: dict


def _growth_rate(est: GammaEstimate, beta: float, d_lo: int, d_hi: int):
    """Weighted log-LS slope of log Gamma_d over d in [d_lo, d_hi]:
    returns (log r, stderr of log r)."""
    g, e = est.gamma_by_depth(beta)
    ds = np.arange(d_lo, d_hi + 1)
    gd = g[d_lo : d_hi + 1]
    ed = e[d_lo : d_hi + 1]
    if np.any(gd <= 0):
        raise EstimationError(
            "empty Gamma depth in the fit range",
            diagnostics={"beta": beta, "gamma": gd.tolist(), "stderr": ed.tolist()},
        )
    sigma = np.where(ed > 0, ed / gd, 1e-3)
    w = 1.0 / sigma**2
    x = ds.astype(np.float64)
    y = np.log(gd)
    xm = float((w * x).sum() / w.sum())
    ym = float((w * y).sum() / w.sum())
    sxx = float((w * (x - xm) ** 2).sum())
    slope = float((w * (x - xm) * (y - ym)).sum()) / sxx
    return slope, 1.0 / math.sqrt(sxx)


def estimate_beta_u(
    p: float,
    d_range: tuple = (2, 6),
    budget: int = 1_200_000,
    seed: int = 0,
    beta_cap: float = 1e6,
    census: GammaEstimate | None = None,
) -> BetaUEstimate:
    """Bisect the per-depth geometric growth rate r(beta) for r = 1.

    The bracket reported is where the +-1 stderr growth-rate curves cross
    1, so it reflects Monte Carlo noise, not just bisection width.  Pass a
    pre-computed Monte Carlo `census` (covering d_range) to reuse samples;
    budget and seed are ignored then.
    """
    d_lo, d_hi = d_range
    if d_hi - d_lo + 1 < 4:
        raise ParameterError("d_range must span at least 4 depths")
    if census is not None:
        if census.engine != "monte-carlo":
            raise ParameterError("growth fit needs a monte-carlo census")
        if census.p != p or census.d_max < d_hi:
            raise ParameterError(
                f"census (p={census.p}, d_max={census.d_max}) does not cover p={p}, d_hi={d_hi}"
            )
        est = census
    else:
        est = gamma_census(p, d_hi, budget, seed)
    hits = est.hits_by_depth()
    if int(hits[d_lo : d_hi + 1].min()) < 10:
        raise InsufficientDataError(
            f"too few dead-end hits per depth for a growth fit: {hits.tolist()}"
        )

    def slope(beta, shift=0.0):
        s, se = _growth_rate(est, beta, d_lo, d_hi)
        return s + shift * se

    def solve(shift):
        lo = 1.0 + 1e-9
        if slope(lo, shift) >= 0.0:
            raise EstimationError(
                "growth rate already >= 1 at beta = 1",
                diagnostics={"p": p, "hits": hits.tolist()},
            )
        hi = 2.0
        while slope(hi, shift) < 0.0:
            hi *= 2.0
            if hi > beta_cap:
                raise EstimationError(
                    "no divergence detected below the beta cap",
                    diagnostics={"p": p, "beta_cap": beta_cap, "hits": hits.tolist()},
                )
        for _ in range(80):
            mid = math.sqrt(lo * hi)
            if slope(mid, shift) < 0.0:
                lo = mid
            else:
                hi = mid
        return math.sqrt(lo * hi)

    center = solve(0.0)
    # +1 sigma on the slope pushes the crossing down, -1 sigma up
    b_lo = solve(+1.0)
    b_hi = solve(-1.0)
    g_at, e_at = est.gamma_by_depth(center)
    return BetaUEstimate(
        p,
        center,
        (min(b_lo, b_hi), max(b_lo, b_hi)),
        (d_lo, d_hi),
        {
            "hits_by_depth": hits.tolist(),
            "n_samples": est.n_samples,
            "n_unresolved": est.n_unresolved,
            "gamma_at_estimate": g_at.tolist(),
            "stderr_at_estimate": e_at.tolist(),
        },
    )
