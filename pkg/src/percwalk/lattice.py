"""Bond-percolation environments on the square lattice.

A configuration assigns every nearest-neighbour edge an open/closed state,
lazily: states are hashed from `(seed, edge)` on first use, so windows of
any size and walks of any length see one consistent environment without a
global realization.  A small override table supports hand-built local
geometry (forced pockets, dead ends) on top of the random background.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, NamedTuple

import numpy as np

from . import rng
from ._backend import kernels
from .errors import ParameterError, ResourceLimitError, SamplingBudgetError

#: overlay coordinates must satisfy |x|, |y| < COORD_LIMIT (packed-key range)
COORD_LIMIT = 1 << 30

HORIZONTAL = 0
VERTICAL = 1


class Site(NamedTuple):
    x: int
    y: int


@dataclass(frozen=True, order=True)
class Edge:
    """Nearest-neighbour lattice edge, canonically oriented.

    `a` is the lexicographically smaller endpoint, so a horizontal edge is
    (x,y)-(x+1,y) and a vertical edge (x,y)-(x,y+1) with base `a`.
    """

    a: Site
    b: Site

    def __post_init__(self):
        dx = self.b.x - self.a.x
        dy = self.b.y - self.a.y
        if (abs(dx) + abs(dy)) != 1 or (dx, dy) not in ((1, 0), (0, 1)):
            raise ParameterError(f"not a canonical lattice edge: {self.a} - {self.b}")

    @classmethod
    def between(cls, u, v) -> "Edge":
        u = Site(*u)
        v = Site(*v)
        if (u.x, u.y) > (v.x, v.y):
            u, v = v, u
        return cls(u, v)

    @property
    def orientation(self) -> str:
        return "horizontal" if self.a.y == self.b.y else "vertical"

    @property
    def key(self) -> tuple[int, int, int]:
        return (self.a.x, self.a.y, HORIZONTAL if self.a.y == self.b.y else VERTICAL)


def _normalize_edge_key(edge) -> tuple[int, int, int]:
    if isinstance(edge, Edge):
        return edge.key
    if isinstance(edge, tuple) and len(edge) == 3:
        x, y, o = edge
        if o not in (HORIZONTAL, VERTICAL):
            raise ParameterError(f"orientation must be 0 or 1, got {o!r}")
        return (int(x), int(y), int(o))
    if isinstance(edge, tuple) and len(edge) == 2:
        return Edge.between(*edge).key
    raise ParameterError(f"cannot interpret {edge!r} as a lattice edge")


@dataclass(frozen=True)
class Rect:
    """Inclusive axis-aligned site rectangle."""

    x_min: int
    x_max: int
    y_min: int
    y_max: int

    def __post_init__(self):
        if self.x_min > self.x_max or self.y_min > self.y_max:
            raise ParameterError(f"empty rectangle {self}")

    @property
    def nx(self) -> int:
        return self.x_max - self.x_min + 1

    @property
    def ny(self) -> int:
        return self.y_max - self.y_min + 1

    def contains(self, site) -> bool:
        x, y = site
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max

    def sites(self) -> Iterator[Site]:
        for x in range(self.x_min, self.x_max + 1):
            for y in range(self.y_min, self.y_max + 1):
                yield Site(x, y)

    def format(self) -> str:
        return f"{self.x_min},{self.x_max},{self.y_min},{self.y_max}"

    @classmethod
    def parse(cls, text: str) -> "Rect":
        parts = text.split(",")
        if len(parts) != 4:
            raise ParameterError(f"window must be 'x_min,x_max,y_min,y_max', got {text!r}")
        return cls(*(int(p) for p in parts))

    @classmethod
    def centered(cls, half: int, center=Site(0, 0)) -> "Rect":
        cx, cy = center
        return cls(cx - half, cx + half, cy - half, cy + half)


@dataclass(frozen=True)
class BondConfiguration:
    """Lazy percolation environment: seed, parameter p, local overrides."""

    seed: int
    p: float
    overrides: Mapping = field(default_factory=dict)

    def __post_init__(self):
        if not (0.0 <= self.p <= 1.0):
            raise ParameterError(f"p must lie in [0, 1], got {self.p}")
        if not (0 <= self.seed <= rng.MASK64):
            raise ParameterError("seed must be an unsigned 64-bit integer")
        norm = {}
        for edge, state in dict(self.overrides).items():
            x, y, o = _normalize_edge_key(edge)
            if not (-COORD_LIMIT < x < COORD_LIMIT and -COORD_LIMIT < y < COORD_LIMIT):
                raise ParameterError(f"override coordinate out of range: {(x, y)}")
            norm[(x, y, o)] = bool(state)
        object.__setattr__(self, "overrides", norm)
        thr, force = rng.open_threshold(self.p)
        packed = {
            (((x + COORD_LIMIT) << 32) | ((y + COORD_LIMIT) << 1) | o): norm[(x, y, o)]
            for x, y, o in norm
        }
        keys = np.array(sorted(packed), dtype=np.uint64)
        vals = np.array([packed[int(k)] for k in keys], dtype=np.uint8)
        object.__setattr__(self, "_thr", thr)
        object.__setattr__(self, "_force", force)
        object.__setattr__(self, "_okeys", keys)
        object.__setattr__(self, "_ovals", vals)

    def rule(self) -> tuple[int, int, int, np.ndarray, np.ndarray]:
        """Kernel-facing view: (seed, threshold, force, override keys, states)."""
        return (self.seed, self._thr, self._force, self._okeys, self._ovals)

    def is_open(self, x: int, y: int, orientation: int) -> bool:
        """State of the edge with base site (x, y) and the given orientation."""
        state = self.overrides.get((x, y, orientation))
        if state is not None:
            return state
        if self._force > 0:
            return True
        if self._force < 0:
            return False
        return rng.edge_hash(self.seed, x, y, orientation) < self._thr

    def edge_state(self, edge) -> bool:
        return self.is_open(*_normalize_edge_key(edge))

    def open_neighbors(self, site) -> list[Site]:
        x, y = site
        out = []
        if self.is_open(x, y, HORIZONTAL):
            out.append(Site(x + 1, y))
        if self.is_open(x - 1, y, HORIZONTAL):
            out.append(Site(x - 1, y))
        if self.is_open(x, y, VERTICAL):
            out.append(Site(x, y + 1))
        if self.is_open(x, y - 1, VERTICAL):
            out.append(Site(x, y - 1))
        return out

    def with_overrides(self, extra: Mapping) -> "BondConfiguration":
        merged = dict(self.overrides)
        for edge, state in dict(extra).items():
            merged[_normalize_edge_key(edge)] = bool(state)
        return BondConfiguration(self.seed, self.p, merged)

    def describe(self) -> dict:
        out = {"seed": str(self.seed), "p": repr(self.p)}
        if self.overrides:
            out["overrides"] = len(self.overrides)
        return out


@dataclass(frozen=True)
class Window:
    """Realized edge states over a rectangle.

    h_open[i, j] is the horizontal edge based at (x_min+i, y_min+j); the
    base column x_max rows lead outside the rectangle.  Same for v_open
    vertically.
    """

    rect: Rect
    h_open: np.ndarray
    v_open: np.ndarray

    @property
    def h_inside(self) -> np.ndarray:
        return self.h_open[: self.rect.nx - 1, :]

    @property
    def v_inside(self) -> np.ndarray:
        return self.v_open[:, : self.rect.ny - 1]


def realize_window(config: BondConfiguration, rect: Rect, max_cells: int = 1 << 26) -> Window:
    """Evaluate every edge state with base site inside `rect` (vectorized)."""
    if rect.nx * rect.ny > max_cells:
        raise ResourceLimitError(
            f"window {rect.nx}x{rect.ny} exceeds the {max_cells}-cell budget"
        )
    xs = np.arange(rect.x_min, rect.x_max + 1, dtype=np.int64)[:, None]
    ys = np.arange(rect.y_min, rect.y_max + 1, dtype=np.int64)[None, :]
    seed, thr, force, _, _ = config.rule()
    if force > 0:
        h = np.ones((rect.nx, rect.ny), bool)
        v = np.ones((rect.nx, rect.ny), bool)
    elif force < 0:
        h = np.zeros((rect.nx, rect.ny), bool)
        v = np.zeros((rect.nx, rect.ny), bool)
    else:
        t = np.uint64(thr)
        h = rng.edge_hash_array(seed, xs, ys, HORIZONTAL) < t
        v = rng.edge_hash_array(seed, xs, ys, VERTICAL) < t
    for (x, y, o), state in config.overrides.items():
        if rect.x_min <= x <= rect.x_max and rect.y_min <= y <= rect.y_max:
            (h if o == HORIZONTAL else v)[x - rect.x_min, y - rect.y_min] = state
    return Window(rect, h, v)


@dataclass(frozen=True)
class ClusterLabeling:
    """Connected components of the open subgraph inside a window."""

    rect: Rect
    labels: np.ndarray
    n_clusters: int

    def label_of(self, site) -> int | None:
        if not self.rect.contains(site):
            raise ParameterError(f"{site} outside labeled window {self.rect}")
        x, y = site
        lab = int(self.labels[x - self.rect.x_min, y - self.rect.y_min])
        return None if lab < 0 else lab

    def spanning_labels(self) -> np.ndarray:
        """Labels whose cluster touches both the left and right window edge."""
        left = np.unique(self.labels[0])
        right = np.unique(self.labels[-1])
        both = np.intersect1d(left[left >= 0], right[right >= 0])
        return both

    def spanning_mask(self) -> np.ndarray:
        both = self.spanning_labels()
        return np.isin(self.labels, both)


def clusters(config: BondConfiguration, rect: Rect, max_cells: int = 1 << 26) -> ClusterLabeling:
    """Label the open clusters of `config` within `rect`."""
    win = realize_window(config, rect, max_cells=max_cells)
    labels = kernels.label_clusters(win.h_open, win.v_open)
    n = int(labels.max()) + 1 if labels.size else 0
    return ClusterLabeling(rect, labels, n)


def spanning_proxy(config: BondConfiguration, window: Rect, z, labeling: ClusterLabeling | None = None) -> bool:
    """Does z's cluster inside `window` touch both vertical window edges?

    Desk-scale stand-in for membership in the unique infinite cluster; the
    quality of the proxy depends on the window size, which callers should
    report alongside anything estimated through it.
    """
    if labeling is None:
        labeling = clusters(config, window)
    lab = labeling.label_of(Site(*z))
    if lab is None:
        return False
    return lab in labeling.spanning_labels()


@dataclass(frozen=True)
class ConditionResult:
    config: BondConfiguration
    rejections: int
    attempts: int


def condition_left_halfplane(
    seed_stream,
    p: float,
    window: Rect,
    overrides: Mapping | None = None,
    budget: int = 100_000,
) -> ConditionResult:
    """Accept the first seed whose origin is left-infinite (window proxy).

    The proxy event: the origin's cluster restricted to {x <= 0} reaches the
    left window edge.  `seed_stream` is either a base seed (int), expanded
    into a derived candidate stream, or an iterable of candidate seeds.
    Raises SamplingBudgetError when `budget` candidates are all rejected.
    """
    if not (window.x_min < 0 <= window.x_max and window.y_min <= 0 <= window.y_max):
        raise ParameterError(f"window {window} must straddle the origin with x_min < 0")
    if isinstance(seed_stream, (int, np.integer)):
        base = int(seed_stream)
        candidates: Iterable[int] = (
            rng.derive_seed(base, k, rng.STREAM_CONDITION) for k in range(budget)
        )
    else:
        candidates = seed_stream
    probe = BondConfiguration(0, p, overrides or {})
    _, thr, force, okeys, ovals = probe.rule()
    rejections = 0
    for attempt, seed in enumerate(candidates):
        if attempt >= budget:
            break
        if kernels.halfplane_reaches_left(
            int(seed), thr, force, okeys, ovals, 0, 0, window.x_min, window.y_min, window.y_max, True
        ):
            return ConditionResult(
                BondConfiguration(int(seed), p, overrides or {}), rejections, rejections + 1
            )
        rejections += 1
    raise SamplingBudgetError(
        f"no left-infinite origin found in {rejections} candidates at p={p}", rejections
    )


def condition_spanning(
    seed_stream,
    p: float,
    window: Rect,
    z=Site(0, 0),
    overrides: Mapping | None = None,
    budget: int = 100_000,
) -> ConditionResult:
    """Accept the first seed placing z in a window-spanning cluster.

    Desk-scale conditioning on infinite-cluster membership, as used for
    walk starts; same candidate-stream convention as
    condition_left_halfplane.
    """
    if not window.contains(z):
        raise ParameterError(f"window {window} does not contain {tuple(z)}")
    if isinstance(seed_stream, (int, np.integer)):
        base = int(seed_stream)
        candidates: Iterable[int] = (
            rng.derive_seed(base, k, rng.STREAM_CONDITION) for k in range(budget)
        )
    else:
        candidates = seed_stream
    rejections = 0
    for attempt, seed in enumerate(candidates):
        if attempt >= budget:
            break
        config = BondConfiguration(int(seed), p, overrides or {})
        if spanning_proxy(config, window, z):
            return ConditionResult(config, rejections, rejections + 1)
        rejections += 1
    raise SamplingBudgetError(
        f"no window-spanning cluster at {tuple(z)} in {rejections} candidates at p={p}",
        rejections,
    )
