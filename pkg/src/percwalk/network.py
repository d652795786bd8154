"""Electrical-network view of the biased walk.

Every open edge e carries conductance beta^(x1 v x2), the larger endpoint
x-coordinate: horizontal edges {(x,y),(x+1,y)} get beta^(x+1) and vertical
edges beta^x.  The walk is the reversible chain proportional to these
weights, so conductance ratios control hitting and escape probabilities.

Weights are stored rescaled by beta^(-k0) (k0 = smallest exponent in play)
with the true natural-log weight kept alongside; probabilities and all
bound ratios are invariant under the rescale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.linalg import cg

from .errors import ParameterError, ResourceLimitError, SolverError, WeightRangeError
from .lattice import BondConfiguration, Rect, Site, realize_window

DENSE_SOLVE_MAX = 500
SOLVER_RTOL = 1e-12
VC_VERTEX_CAP = 400
# float64 overflows just past exp(709)
LOG_RANGE_LIMIT = 700.0


@dataclass(frozen=True)
class WeightedNetwork:
    """Finite conductance network, possibly with merged super-vertices.

    Edge arrays run in parallel: (ei[k], ej[k]) with rescaled linear weight
    weight[k] and true log-weight log_weight[k].  Self-loops (ei == ej, as
    produced by merging) contribute their weight twice to pi, once per
    endpoint.
    """

    vertices: tuple
    ei: np.ndarray
    ej: np.ndarray
    weight: np.ndarray
    log_weight: np.ndarray
    log_scale: float = 0.0
    _index: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self._index.update({v: i for i, v in enumerate(self.vertices)})

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.weight)

    def index(self, v) -> int:
        try:
            return self._index[v]
        except KeyError:
            raise ParameterError(f"vertex {v!r} not in network") from None

    @classmethod
    def from_edge_list(cls, edges, log_scale: float = 0.0) -> "WeightedNetwork":
        """Build from (u, v, weight) triples; vertex order is first appearance."""
        verts = []
        index = {}
        ei, ej, w = [], [], []
        for u, v, wt in edges:
            if wt < 0:
                raise ParameterError(f"negative conductance {wt} on edge ({u!r}, {v!r})")
            for s in (u, v):
                if s not in index:
                    index[s] = len(verts)
                    verts.append(s)
            ei.append(index[u])
            ej.append(index[v])
            w.append(float(wt))
        w = np.asarray(w, np.float64)
        with np.errstate(divide="ignore"):
            logw = np.log(w) + log_scale
        return cls(
            tuple(verts),
            np.asarray(ei, np.int64),
            np.asarray(ej, np.int64),
            w,
            logw,
            log_scale,
        )

    def pi_rescaled(self, z) -> float:
        """Vertex measure in the network's internal (rescaled) units.

        One contribution per edge endpoint, so a self-loop counts twice;
        pi is then the stationary measure of the conductance chain and
        sums to twice the total edge weight."""
        i = self.index(z)
        total = float(self.weight[self.ei == i].sum() + self.weight[self.ej == i].sum())
        if total <= 0.0:
            raise ParameterError(f"vertex {z!r} is isolated (pi = 0)")
        return total

    def pi(self, z) -> float:
        """True vertex measure; may overflow for wide coordinate spans."""
        return self.pi_rescaled(z) * math.exp(self.log_scale)

    def total_weight_rescaled(self) -> float:
        return float(self.weight.sum())

    def merge(self, group, name) -> "WeightedNetwork":
        """Identify `group` as the single vertex `name`; internal edges
        become self-loops (counted once in pi)."""
        group = set(group)
        if not group:
            raise ParameterError("cannot merge an empty vertex group")
        if name in self._index and name not in group:
            raise ParameterError(f"merged name {name!r} collides with an existing vertex")
        gidx = {self.index(v) for v in group}
        remap = {}
        verts = [name]
        for i, v in enumerate(self.vertices):
            if i in gidx:
                remap[i] = 0
            else:
                remap[i] = len(verts)
                verts.append(v)
        ei = np.array([remap[i] for i in self.ei], np.int64)
        ej = np.array([remap[j] for j in self.ej], np.int64)
        return WeightedNetwork(
            tuple(verts), ei, ej, self.weight.copy(), self.log_weight.copy(), self.log_scale
        )

    def neighbors(self):
        """Adjacency over positive-weight, non-loop edges: list of lists of
        (neighbor index, edge index)."""
        adj = [[] for _ in range(self.n_vertices)]
        for k in range(self.n_edges):
            i, j = int(self.ei[k]), int(self.ej[k])
            if i == j or self.weight[k] <= 0.0:
                continue
            adj[i].append((j, k))
            adj[j].append((i, k))
        return adj

    def dump_edges(self) -> list[str]:
        """Deterministic text dump, one edge per line: x1 y1 x2 y2 log_weight."""
        rows = []
        for k in range(self.n_edges):
            u = self.vertices[int(self.ei[k])]
            v = self.vertices[int(self.ej[k])]
            if not (isinstance(u, Site) and isinstance(v, Site)):
                raise ParameterError("edge dump requires pure lattice vertices")
            a, b = sorted((u, v))
            rows.append((a.x, a.y, b.x, b.y, float(self.log_weight[k])))
        rows.sort()
        return [f"{x1} {y1} {x2} {y2} {lw:.12g}" for x1, y1, x2, y2, lw in rows]


def walk_weights(config: BondConfiguration, beta: float, region: Rect) -> WeightedNetwork:
    """Conductance network over the open edges inside `region`.

    Vertices are the non-isolated sites; weights beta^(x1 v x2) rescaled by
    the smallest exponent present.
    """
    if beta <= 1.0:
        raise ParameterError(f"beta must exceed 1, got {beta}")
    win = realize_window(config, region)
    log_beta = math.log(beta)
    hx, hy = np.nonzero(win.h_inside)
    vx, vy = np.nonzero(win.v_inside)
    # exponent = larger endpoint x: x+1 for horizontal, x for vertical
    k_h = hx + region.x_min + 1
    k_v = vx + region.x_min
    exps = np.concatenate([k_h, k_v])
    if exps.size == 0:
        return WeightedNetwork.from_edge_list([])
    k0 = int(exps.min())
    span = int(exps.max()) - k0
    if span * log_beta > LOG_RANGE_LIMIT:
        raise WeightRangeError(
            f"exponent span {span} at beta={beta} exceeds float64 even after rescaling"
        )
    edges = []
    for x, y, k in zip(hx, hy, k_h):
        a = Site(int(x + region.x_min), int(y + region.y_min))
        edges.append((a, Site(a.x + 1, a.y), beta ** int(k - k0)))
    for x, y, k in zip(vx, vy, k_v):
        a = Site(int(x + region.x_min), int(y + region.y_min))
        edges.append((a, Site(a.x, a.y + 1), beta ** int(k - k0)))
    return WeightedNetwork.from_edge_list(edges, log_scale=k0 * log_beta)


@dataclass(frozen=True)
class DirichletSolution:
    """Potential (1 at source, 0 on target) and the resulting conductance.

    `conductance` is in the network's rescaled units; multiply by
    exp(network.log_scale) for the true value.
    """

    potential: dict
    conductance: float
    residual: float
    disconnected: bool
    method: str


def _reachable(adj, start: int) -> np.ndarray:
    seen = np.zeros(len(adj), bool)
    seen[start] = True
    stack = [start]
    while stack:
        i = stack.pop()
        for j, _ in adj[i]:
            if not seen[j]:
                seen[j] = True
                stack.append(j)
    return seen


def effective_conductance(
    network: WeightedNetwork, z, target, grounded=()
) -> DirichletSolution:
    """Effective conductance from z to `target` (plus optional extra
    grounded vertices), via the discrete Dirichlet problem."""
    zi = network.index(z)
    tset = {network.index(t) for t in target}
    gset = {network.index(g) for g in grounded}
    if not tset:
        raise ParameterError("target set is empty")
    if zi in tset or zi in gset:
        raise ParameterError("source vertex lies in the absorbing set")
    adj = network.neighbors()
    reach = _reachable(adj, zi)
    zero_set = tset | gset
    if not any(reach[t] for t in zero_set):
        pot = {v: 0.0 for v in network.vertices}
        pot[z] = 1.0
        return DirichletSolution(pot, 0.0, 0.0, True, "disconnected")
    n = network.n_vertices
    fixed = np.full(n, -1.0)
    fixed[zi] = 1.0
    for t in zero_set:
        fixed[t] = 0.0
    # only vertices reachable from z matter; unreachable ones float at 0
    interior = [i for i in range(n) if fixed[i] < 0.0 and reach[i]]
    pos = {i: r for r, i in enumerate(interior)}
    m = len(interior)
    phi = np.where(fixed >= 0.0, fixed, 0.0)
    if m > 0:
        rows, cols, vals = [], [], []
        diag = np.zeros(m)
        b = np.zeros(m)
        for k in range(network.n_edges):
            i, j = int(network.ei[k]), int(network.ej[k])
            if i == j:
                continue
            w = float(network.weight[k])
            if w <= 0.0:
                continue
            for a, bb in ((i, j), (j, i)):
                if a in pos:
                    diag[pos[a]] += w
                    if bb in pos:
                        rows.append(pos[a])
                        cols.append(pos[bb])
                        vals.append(-w)
                    elif fixed[bb] > 0.0:
                        b[pos[a]] += w * fixed[bb]
        if m <= DENSE_SOLVE_MAX:
            lap = np.zeros((m, m))
            np.add.at(lap, (rows, cols), vals)
            lap[np.arange(m), np.arange(m)] += diag
            try:
                x = np.linalg.solve(lap, b)
            except np.linalg.LinAlgError as exc:
                raise SolverError(f"dense Dirichlet solve failed: {exc}") from exc
            method = "dense"
        else:
            lap = csr_matrix((vals, (rows, cols)), shape=(m, m))
            lap += csr_matrix((diag, (np.arange(m), np.arange(m))), shape=(m, m))
            inv_diag = 1.0 / diag
            precond = csr_matrix((inv_diag, (np.arange(m), np.arange(m))), shape=(m, m))
            x, info = cg(lap, b, rtol=SOLVER_RTOL, atol=0.0, M=precond)
            if info != 0:
                res = float(np.linalg.norm(lap @ x - b) / max(np.linalg.norm(b), 1e-300))
                raise SolverError(f"conjugate gradient stalled (info={info})", residual=res)
            method = "cg"
        lap_x = lap @ x
        bnorm = float(np.linalg.norm(b))
        residual = float(np.linalg.norm(lap_x - b) / bnorm) if bnorm > 0 else 0.0
        for i, r in pos.items():
            phi[i] = min(max(float(x[r]), 0.0), 1.0)
    else:
        residual = 0.0
        method = "boundary-only"
    current = 0.0
    for k in range(network.n_edges):
        i, j = int(network.ei[k]), int(network.ej[k])
        if i == j:
            continue
        w = float(network.weight[k])
        if w <= 0.0:
            continue
        if i == zi:
            current += w * (1.0 - phi[j])
        elif j == zi:
            current += w * (1.0 - phi[i])
    pot = {v: float(phi[i]) for i, v in enumerate(network.vertices)}
    return DirichletSolution(pot, max(current, 0.0), residual, False, method)


def hitting_bound(network: WeightedNetwork, z, a_set, b_set) -> float:
    """Upper bound C_{z,B}/C_{z,A} on the probability of hitting B before A."""
    a_set, b_set = set(a_set), set(b_set)
    if a_set & b_set:
        raise ParameterError("A and B must be disjoint")
    if z in a_set or z in b_set:
        raise ParameterError("z must lie outside A and B")
    c_a = effective_conductance(network, z, a_set).conductance
    c_b = effective_conductance(network, z, b_set).conductance
    if c_a <= 0.0:
        return math.inf
    return c_b / c_a


def return_probability(network: WeightedNetwork, z, outer_boundary) -> float:
    """1 - C_{z,boundary}/pi(z): chance of ever revisiting z before the
    absorbing boundary (finite stand-in for escape to infinity)."""
    sol = effective_conductance(network, z, outer_boundary)
    value = 1.0 - sol.conductance / network.pi_rescaled(z)
    return min(max(value, 0.0), 1.0)


def nash_williams_bound(network: WeightedNetwork, cutsets, z=None, target=None) -> float:
    """Lower bound sum_j (sum_{e in cutset_j} w(e))^-1 on the effective
    resistance; cutsets are pairwise disjoint edge sets, each separating z
    from the target when those are supplied."""
    edge_of = {}
    for k in range(network.n_edges):
        i, j = int(network.ei[k]), int(network.ej[k])
        u, v = network.vertices[i], network.vertices[j]
        edge_of[(u, v)] = k
        edge_of[(v, u)] = k
    seen = set()
    indexed = []
    for cut in cutsets:
        ks = []
        for pair in cut:
            u, v = pair
            if (u, v) not in edge_of:
                raise ParameterError(f"cutset edge ({u!r}, {v!r}) not in network")
            ks.append(edge_of[(u, v)])
        if not ks:
            raise ParameterError("empty cutset")
        if seen & set(ks):
            raise ParameterError("cutsets must be pairwise disjoint")
        seen |= set(ks)
        indexed.append(ks)
    if z is not None and target is not None:
        zi = network.index(z)
        tgt = {network.index(t) for t in target}
        adj = network.neighbors()
        for ks in indexed:
            blocked = set(ks)
            pruned = [[(j, k) for j, k in row if k not in blocked] for row in adj]
            if any(_reachable(pruned, zi)[t] for t in tgt):
                raise ParameterError("a cutset fails to separate z from the target")
    total = 0.0
    for ks in indexed:
        s = sum(float(network.weight[k]) for k in ks)
        if s <= 0.0:
            return math.inf
        total += 1.0 / s
    return total


@dataclass(frozen=True)
class PhiValue:
    """phi(s) = beta^s (s^2 + 2/(beta-1)) (3+beta) plus its quadratic-
    exponent envelope constant."""

    value: float
    c_beta: float
    bound_ok: bool


def phi(beta: float, s: int) -> PhiValue:
    if beta <= 1.0:
        raise ParameterError(f"beta must exceed 1, got {beta}")
    if s < 1 or int(s) != s:
        raise ParameterError(f"s must be a positive integer, got {s}")
    s = int(s)
    value = beta**s * (s * s + 2.0 / (beta - 1.0)) * (3.0 + beta)
    # envelope C(beta) = max_t phi(t)/beta^(2t); the ratio beta^-t t^2 decays
    # once t exceeds 2/log(beta), so a bounded scan finds the max
    t_hi = max(s, int(math.ceil(2.0 / math.log(beta))) * 4 + 10)
    c_beta = 0.0
    for t in range(1, t_hi + 1):
        ratio = beta ** (-t) * (t * t + 2.0 / (beta - 1.0)) * (3.0 + beta)
        c_beta = max(c_beta, ratio)
    bound_ok = value <= c_beta * beta ** (2 * s) * (1.0 + 1e-12)
    return PhiValue(value, c_beta, bound_ok)


@dataclass(frozen=True)
class VCReport:
    """Worst-case ratio of n-step probabilities to the universal
    2 sqrt(pi(b)/pi(a)) exp(-d^2/2n) envelope."""

    max_ratio: float
    worst: tuple
    n_max: int
    n_pairs: int

    @property
    def ok(self) -> bool:
        return self.max_ratio <= 1.0 + 1e-12


def vc_check(network: WeightedNetwork, n_max: int = 50, vertex_cap: int = VC_VERTEX_CAP) -> VCReport:
    """Verify P^n(a,b) <= 2 sqrt(pi(b)/pi(a)) exp(-d(a,b)^2/(2n)) for all
    vertex pairs and 1 <= n <= n_max, by dense matrix powers."""
    n = network.n_vertices
    if n > vertex_cap:
        raise ResourceLimitError(f"{n} vertices exceeds the vc_check cap {vertex_cap}")
    if n_max < 1 or n_max > 200:
        raise ParameterError("n_max must lie in 1..200")
    w = np.zeros((n, n))
    for k in range(network.n_edges):
        i, j = int(network.ei[k]), int(network.ej[k])
        wt = float(network.weight[k])
        if wt <= 0.0:
            continue
        if i == j:
            # both endpoints coincide: the loop enters the row twice
            w[i, i] += 2.0 * wt
        else:
            w[i, j] += wt
            w[j, i] += wt
    pi_vec = w.sum(axis=1)
    live = pi_vec > 0.0
    if not live.any():
        return VCReport(0.0, (), n_max, 0)
    p = np.zeros((n, n))
    p[live] = w[live] / pi_vec[live, None]
    # BFS graph distances over positive edges
    dist = np.full((n, n), np.inf)
    adj = network.neighbors()
    for s in range(n):
        if not live[s]:
            continue
        dist[s, s] = 0.0
        queue = [s]
        while queue:
            nxt = []
            for u in queue:
                for v, _ in adj[u]:
                    if dist[s, v] == np.inf:
                        dist[s, v] = dist[s, u] + 1.0
                        nxt.append(v)
            queue = nxt
    with np.errstate(divide="ignore", invalid="ignore"):
        pi_ratio = np.sqrt(np.outer(1.0 / pi_vec, pi_vec))
    max_ratio = 0.0
    worst = ()
    pn = np.eye(n)
    finite = np.isfinite(dist) & live[:, None] & live[None, :]
    n_pairs = int(finite.sum())
    for step in range(1, n_max + 1):
        pn = pn @ p
        bound = 2.0 * pi_ratio * np.exp(-(dist**2) / (2.0 * step))
        with np.errstate(invalid="ignore", divide="ignore"):
            ratios = np.where(finite & (bound > 0), pn / bound, 0.0)
        k = int(np.argmax(ratios))
        a, b = divmod(k, n)
        if ratios[a, b] > max_ratio:
            max_ratio = float(ratios[a, b])
            worst = (network.vertices[a], network.vertices[b], step)
    return VCReport(max_ratio, worst, n_max, n_pairs)


def expected_return_time_to_line(network: WeightedNetwork, line_vertex) -> float:
    """pi(A)/pi(merged line vertex) for a dead-end network whose line sites
    are already merged.  pi counts every edge endpoint, so pi(A) is twice
    the total edge weight and the value is exactly the Kac return time of
    the merged conductance chain (self-loops cross in one step)."""
    if network.n_edges == 0:
        # walk cannot enter an edgeless dead end: 0-excursion convention
        return 0.0
    pi_total = 2.0 * network.total_weight_rescaled()
    return pi_total / network.pi_rescaled(line_vertex)
