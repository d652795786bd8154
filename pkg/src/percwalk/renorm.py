"""Block-scale (renormalized) classification for p near criticality.

Blocks are squares Q_N(v) of side 5N/4 centered at v in N*Z^2 (N divisible
by 8).  A center is in A_p when its square contains one open component
joining all four faces and no other open component of L-infinity diameter
exceeding N/10.  Block staircases of A_p pairs (v_k and its right partner
v_k + (N,0)) define p-good squares, and point classes (p-good / p-bad /
p-OK) follow from square classes plus big-cluster membership.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from ._backend import kernels
from .errors import ParameterError
from .lattice import BondConfiguration, ClusterLabeling, Rect, Site, Window, realize_window
from .structure import TrapRecord, _FOUR_CONN

DEFAULT_BLOCK_N = 16


def block_square(v, n_scale: int) -> Rect:
    """The square Q_N(v) of side 5N/4 centered at block center v."""
    _validate_scale(n_scale)
    half = 5 * n_scale // 8
    vx, vy = v
    return Rect(vx - half, vx + half, vy - half, vy + half)


def _validate_scale(n_scale: int):
    if n_scale <= 0 or n_scale % 8 != 0:
        raise ParameterError(f"block scale N must be a positive multiple of 8, got {n_scale}")


def _square_in_ap(h_open: np.ndarray, v_open: np.ndarray, n_scale: int):
    """Evaluate the A_p condition on one realized square.

    Returns (in_ap, labels, big_label); big_label is the label of the
    unique all-four-faces component, or -1.
    """
    labels = kernels.label_clusters(h_open, v_open)
    n = int(labels.max()) + 1
    if n == 0:
        return False, labels, -1
    nx, ny = labels.shape
    touches = np.zeros((n, 4), bool)
    for face, line in enumerate((labels[0, :], labels[-1, :], labels[:, 0], labels[:, -1])):
        ids = np.unique(line)
        touches[ids[ids >= 0], face] = True
    all_four = np.nonzero(touches.all(axis=1))[0]
    if all_four.size != 1:
        return False, labels, -1
    big = int(all_four[0])
    xs, ys = np.nonzero(labels >= 0)
    ids = labels[xs, ys]
    big_int = np.iinfo(np.int64).max
    mnx = np.full(n, big_int, np.int64)
    mxx = np.full(n, -big_int, np.int64)
    mny = np.full(n, big_int, np.int64)
    mxy = np.full(n, -big_int, np.int64)
    np.minimum.at(mnx, ids, xs)
    np.maximum.at(mxx, ids, xs)
    np.minimum.at(mny, ids, ys)
    np.maximum.at(mxy, ids, ys)
    diam = np.maximum(mxx - mnx, mxy - mny)
    others = np.arange(n) != big
    # L-infinity diameter must not exceed N/10: exact integer comparison
    if np.any(10 * diam[others] > n_scale):
        return False, labels, -1
    return True, labels, big


def block_in_ap(config: BondConfiguration, v, n_scale: int) -> bool:
    """Is the block center v in A_p?"""
    sq = block_square(v, n_scale)
    win = realize_window(config, sq)
    ok, _, _ = _square_in_ap(win.h_open, win.v_open, n_scale)
    return ok


@dataclass
class BlockClassification:
    """Square-level classification over a block range plus its DP cone."""

    config: BondConfiguration
    n_scale: int
    bi_min: int
    bi_max: int
    bj_min: int
    bj_max: int
    horizon_blocks: int
    ext_bi_min: int
    ext_bj_min: int
    in_ap: np.ndarray
    p_good: np.ndarray
    window: Window
    labels: np.ndarray
    spanning: np.ndarray
    _squares: dict = field(default_factory=dict, repr=False)

    @property
    def bi_horizon(self) -> int:
        return self.bi_max + self.horizon_blocks

    def _index(self, v) -> tuple[int, int]:
        vx, vy = v
        if vx % self.n_scale or vy % self.n_scale:
            raise ParameterError(f"{v} is not a block center at scale {self.n_scale}")
        return vx // self.n_scale, vy // self.n_scale

    def in_ap_at(self, v) -> bool:
        bi, bj = self._index(v)
        i, j = bi - self.ext_bi_min, bj - self.ext_bj_min
        if not (0 <= i < self.in_ap.shape[0] and 0 <= j < self.in_ap.shape[1]):
            raise ParameterError(f"block center {v} outside classified range")
        return bool(self.in_ap[i, j])

    def p_good_square_at(self, v) -> bool:
        bi, bj = self._index(v)
        if bi > self.bi_horizon:
            raise ParameterError(f"block center {v} beyond the block horizon")
        i, j = bi - self.ext_bi_min, bj - self.ext_bj_min
        if not (0 <= i < self.p_good.shape[0] and 0 <= j < self.p_good.shape[1]):
            raise ParameterError(f"block center {v} outside classified range")
        return bool(self.p_good[i, j])

    def square_labels(self, v):
        """(labels, big_label) of Q_N(v), cached."""
        bi, bj = self._index(v)
        key = (bi, bj)
        if key not in self._squares:
            sq = block_square(v, self.n_scale)
            r = self.window.rect
            sl = (
                slice(sq.x_min - r.x_min, sq.x_max - r.x_min + 1),
                slice(sq.y_min - r.y_min, sq.y_max - r.y_min + 1),
            )
            ok, labels, big = _square_in_ap(
                self.window.h_open[sl], self.window.v_open[sl], self.n_scale
            )
            self._squares[key] = (labels, big)
        return self._squares[key]

    def containing_centers(self, z) -> list[Site]:
        """Block centers v with z inside Q_N(v)."""
        x, y = z
        half = 5 * self.n_scale // 8
        out = []
        lo_i = -((half - x) // self.n_scale)
        hi_i = (half + x) // self.n_scale
        lo_j = -((half - y) // self.n_scale)
        hi_j = (half + y) // self.n_scale
        for bi in range(lo_i, hi_i + 1):
            for bj in range(lo_j, hi_j + 1):
                out.append(Site(bi * self.n_scale, bj * self.n_scale))
        return out


def classify_blocks(
    config: BondConfiguration,
    bi_range: tuple[int, int],
    bj_range: tuple[int, int],
    n_scale: int = DEFAULT_BLOCK_N,
    horizon_blocks: int = 8,
) -> BlockClassification:
    """Evaluate A_p and the p-good-square DP over a block rectangle.

    The table is extended to the right by horizon_blocks (+1 column for the
    (N,0) partners) and vertically by the staircase cone.
    """
    _validate_scale(n_scale)
    bi_min, bi_max = bi_range
    bj_min, bj_max = bj_range
    if bi_min > bi_max or bj_min > bj_max:
        raise ParameterError("empty block range")
    if horizon_blocks < 1:
        raise ParameterError("horizon_blocks must be >= 1")
    bi_hor = bi_max + horizon_blocks
    span = bi_hor - bi_min
    ext_bi_min, ext_bi_max = bi_min, bi_hor + 1
    ext_bj_min, ext_bj_max = bj_min - span, bj_max + span
    half = 5 * n_scale // 8
    rect = Rect(
        ext_bi_min * n_scale - half,
        ext_bi_max * n_scale + half,
        ext_bj_min * n_scale - half,
        ext_bj_max * n_scale + half,
    )
    win = realize_window(config, rect)
    labels = kernels.label_clusters(win.h_open, win.v_open)
    lab = ClusterLabeling(rect, labels, int(labels.max()) + 1)
    spanning = lab.spanning_mask()
    nbi = ext_bi_max - ext_bi_min + 1
    nbj = ext_bj_max - ext_bj_min + 1
    in_ap = np.zeros((nbi, nbj), bool)
    squares = {}
    for i in range(nbi):
        for j in range(nbj):
            v = Site((ext_bi_min + i) * n_scale, (ext_bj_min + j) * n_scale)
            sq = block_square(v, n_scale)
            sl = (
                slice(sq.x_min - rect.x_min, sq.x_max - rect.x_min + 1),
                slice(sq.y_min - rect.y_min, sq.y_max - rect.y_min + 1),
            )
            ok, sq_labels, big = _square_in_ap(win.h_open[sl], win.v_open[sl], n_scale)
            in_ap[i, j] = ok
            squares[(ext_bi_min + i, ext_bj_min + j)] = (sq_labels, big)
    # staircase DP on A_p pairs, right-to-left; missing neighbors count False
    cond = np.zeros((nbi, nbj), bool)
    cond[:-1, :] = in_ap[:-1, :] & in_ap[1:, :]
    p_good = np.zeros((nbi, nbj), bool)
    ih = bi_hor - ext_bi_min
    p_good[ih, :] = cond[ih, :]
    for i in range(ih - 1, -1, -1):
        up = np.zeros(nbj, bool)
        up[:-1] = p_good[i + 1, 1:]
        dn = np.zeros(nbj, bool)
        dn[1:] = p_good[i + 1, :-1]
        p_good[i, :] = cond[i, :] & (up | dn)
    blocks = BlockClassification(
        config,
        n_scale,
        bi_min,
        bi_max,
        bj_min,
        bj_max,
        horizon_blocks,
        ext_bi_min,
        ext_bj_min,
        in_ap,
        p_good,
        win,
        labels,
        spanning,
    )
    blocks._squares.update(squares)
    return blocks


def p_good_square(blocks: BlockClassification, v) -> bool:
    """Is Q_N(v) p-good (A_p staircase with right partners, block DP)?"""
    return blocks.p_good_square_at(v)


def covered_core(blocks: BlockClassification) -> Rect:
    """Largest rectangle whose every site has all containing block centers
    inside the requested block range."""
    ns = blocks.n_scale
    pad = 3 * ns // 8 - 1
    return Rect(
        blocks.bi_min * ns - pad,
        blocks.bi_max * ns + pad,
        blocks.bj_min * ns - pad,
        blocks.bj_max * ns + pad,
    )


def _in_proxy(blocks: BlockClassification, z) -> bool:
    r = blocks.window.rect
    if not r.contains(z):
        raise ParameterError(f"{z} outside the realized block window")
    return bool(blocks.spanning[z[0] - r.x_min, z[1] - r.y_min])


def _in_big_cluster(blocks: BlockClassification, v, z) -> bool:
    labels, big = blocks.square_labels(v)
    if big < 0:
        return False
    sq = block_square(v, blocks.n_scale)
    return int(labels[z[0] - sq.x_min, z[1] - sq.y_min]) == big


def _rightward_witness(blocks: BlockClassification, z, depth: int | None = None) -> bool:
    """Open path from z whose every later site has x > z.x, reaching
    x = z.x + depth (window-clipped)."""
    win = blocks.window
    r = win.rect
    x0, y0 = z
    if depth is None:
        depth = blocks.horizon_blocks * blocks.n_scale
    target = min(x0 + depth, r.x_max)
    if target <= x0:
        return True
    if not win.h_open[x0 - r.x_min, y0 - r.y_min]:
        return False
    start = Site(x0 + 1, y0)
    seen = {start}
    stack = [start]
    while stack:
        x, y = stack.pop()
        if x >= target:
            return True
        i, j = x - r.x_min, y - r.y_min
        nbrs = []
        if x + 1 <= r.x_max and win.h_open[i, j]:
            nbrs.append(Site(x + 1, y))
        if x - 1 > x0 and win.h_open[i - 1, j]:
            nbrs.append(Site(x - 1, y))
        if y + 1 <= r.y_max and win.v_open[i, j]:
            nbrs.append(Site(x, y + 1))
        if y - 1 >= r.y_min and win.v_open[i, j - 1]:
            nbrs.append(Site(x, y - 1))
        for nb in nbrs:
            if nb not in seen:
                seen.add(nb)
                stack.append(nb)
    return False


def p_point_class(blocks: BlockClassification, z) -> str:
    """Class of a point: 'p_good', 'p_bad', 'p_ok', or 'none'.

    Precedence: outside the cluster proxy -> none; any containing square
    p-bad -> p_bad; in the big cluster of a containing p-good square ->
    p_good when a strictly-rightward escape path exists, else p_ok;
    otherwise none.
    """
    z = Site(*z)
    centers = blocks.containing_centers(z)
    for v in centers:
        bi, bj = v.x // blocks.n_scale, v.y // blocks.n_scale
        if not (
            blocks.bi_min <= bi <= blocks.bi_max and blocks.bj_min <= bj <= blocks.bj_max
        ):
            raise ParameterError(
                f"{z} not covered: containing square {v} outside classified block range"
            )
    if not _in_proxy(blocks, z):
        return "none"
    if any(not blocks.p_good_square_at(v) for v in centers):
        return "p_bad"
    anchored = [v for v in centers if _in_big_cluster(blocks, v, z)]
    if not anchored:
        return "none"
    if _rightward_witness(blocks, z):
        return "p_good"
    return "p_ok"


def p_traps(
    blocks: BlockClassification, region: Rect, include_truncated: bool = False
) -> list[TrapRecord]:
    """4-connected components of p-bad points inside `region`.

    Components touching the region boundary are clipped; they are skipped
    unless include_truncated is set.
    """
    mask = _p_bad_mask(blocks, region)
    lab, n = ndimage.label(mask, structure=_FOUR_CONN)
    out = []
    for comp in range(1, n + 1):
        xs, ys = np.nonzero(lab == comp)
        truncated = (
            xs.min() == 0
            or xs.max() == region.nx - 1
            or ys.min() == 0
            or ys.max() == region.ny - 1
        )
        if truncated and not include_truncated:
            continue
        out.append(
            TrapRecord.from_sites(
                [(int(x + region.x_min), int(y + region.y_min)) for x, y in zip(xs, ys)]
            )
        )
    return out


def _p_bad_mask(blocks: BlockClassification, region: Rect) -> np.ndarray:
    core = covered_core(blocks)
    if not (
        core.x_min <= region.x_min
        and region.x_max <= core.x_max
        and core.y_min <= region.y_min
        and region.y_max <= core.y_max
    ):
        raise ParameterError("scan region outside the covered block core")
    r = blocks.window.rect
    ns = blocks.n_scale
    half = 5 * ns // 8
    mask = np.zeros((region.nx, region.ny), bool)
    for bi in range(blocks.bi_min, blocks.bi_max + 1):
        for bj in range(blocks.bj_min, blocks.bj_max + 1):
            if blocks.p_good[bi - blocks.ext_bi_min, bj - blocks.ext_bj_min]:
                continue
            x_lo = max(bi * ns - half, region.x_min)
            x_hi = min(bi * ns + half, region.x_max)
            y_lo = max(bj * ns - half, region.y_min)
            y_hi = min(bj * ns + half, region.y_max)
            if x_lo > x_hi or y_lo > y_hi:
                continue
            mask[
                x_lo - region.x_min : x_hi - region.x_min + 1,
                y_lo - region.y_min : y_hi - region.y_min + 1,
            ] = True
    sp = blocks.spanning[
        region.x_min - r.x_min : region.x_max - r.x_min + 1,
        region.y_min - r.y_min : region.y_max - r.y_min + 1,
    ]
    return mask & sp


def claim_boundary_ok(blocks: BlockClassification, region: Rect) -> dict:
    """Scan p-traps in `region`; classify every cluster-proxy boundary point.

    A trap's boundary points are the proxy sites 4-adjacent to it but not in
    it.  Returns counts plus any violations (boundary points that are
    neither p-OK nor p-good).
    """
    traps = p_traps(blocks, region)
    r = blocks.window.rect
    violations = []
    n_boundary = 0
    for trap in traps:
        boundary = set()
        for s in trap.sites:
            for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                nb = Site(s.x + dx, s.y + dy)
                if nb not in trap.sites:
                    boundary.add(nb)
        for nb in sorted(boundary):
            if not r.contains(nb) or not _in_proxy(blocks, nb):
                continue
            n_boundary += 1
            cls = p_point_class(blocks, nb)
            if cls not in ("p_ok", "p_good"):
                violations.append((nb, cls))
    return {
        "n_traps": len(traps),
        "n_boundary_checked": n_boundary,
        "violations": violations,
    }
