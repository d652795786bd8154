"""Reproducible experiment runs: config, dispatch, manifests.

Every experiment consumes exactly two master seeds (environment, walk),
expands them by trial index, writes flat-file outputs (results.csv,
summary.json, optional extras) into one directory, and finishes with a
manifest listing each output's SHA-256.  Re-running a config must
reproduce every output byte for byte; only the manifest's wall-clock
field may differ.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import time
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__, deadend, figures, network, renorm, structure, walk
from .errors import (
    EstimationError,
    InsufficientDataError,
    ParameterError,
    PercwalkError,
)
from .lattice import BondConfiguration, Rect, condition_spanning
from .rng import MASK64, STREAM_ENV, STREAM_WALK, derive_seed

EXPERIMENTS = ("speed", "traps", "regen", "deadend", "renorm", "figures", "bounds")

TRAP_TAIL_NMAX = 8


def _opt_int(text: str):
    return None if text in ("", "none") else int(text)


_FIELD_PARSERS = {
    "experiment": str,
    "p": float,
    "beta": float,
    "window": int,
    "n_steps": int,
    "trials": int,
    "seed_env": int,
    "seed_walk": int,
    "censor_margin": _opt_int,
    "horizon": _opt_int,
    "block_n": int,
    "depth_max": int,
    "out_dir": str,
}


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment invocation; round-trips through key=value text.

    n_steps is the per-trial walk length for walk experiments and the
    Monte Carlo attempt budget for the deadend census.  window is the
    half-extent of the conditioning / classification window around the
    origin.  censor_margin and horizon default to per-module automatics
    when left unset.
    """

    experiment: str
    p: float = 0.6
    beta: float = 2.0
    window: int = 64
    n_steps: int = 100_000
    trials: int = 8
    seed_env: int = 1
    seed_walk: int = 2
    censor_margin: int | None = None
    horizon: int | None = None
    block_n: int = 16
    depth_max: int = 4
    out_dir: str = "runs"

    def __post_init__(self):
        bad = []
        if self.experiment not in EXPERIMENTS:
            bad.append(f"experiment={self.experiment!r} (one of {', '.join(EXPERIMENTS)})")
        if not 0.5 < self.p < 1.0:
            bad.append(f"p={self.p} (need 0.5 < p < 1)")
        if not self.beta > 1.0:
            bad.append(f"beta={self.beta} (need beta > 1)")
        for name in ("window", "n_steps", "trials", "block_n", "depth_max"):
            if getattr(self, name) < 1:
                bad.append(f"{name}={getattr(self, name)} (need >= 1)")
        for name in ("seed_env", "seed_walk"):
            if not 0 <= getattr(self, name) <= MASK64:
                bad.append(f"{name}={getattr(self, name)} (need unsigned 64-bit)")
        for name in ("censor_margin", "horizon"):
            v = getattr(self, name)
            if v is not None and v < 1:
                bad.append(f"{name}={v} (need >= 1 or unset)")
        if not self.out_dir:
            bad.append("out_dir= (need a directory)")
        if bad:
            raise ParameterError("invalid config fields: " + "; ".join(bad))

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            lines.append(f"{f.name}={'none' if v is None else v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, **overrides) -> "ExperimentConfig":
        kv = {}
        for ln_no, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, val = line.partition("=")
            key = key.strip()
            if not sep:
                raise ParameterError(f"config line {ln_no}: expected key=value, got {raw!r}")
            if key not in _FIELD_PARSERS:
                raise ParameterError(f"config line {ln_no}: unknown key {key!r}")
            try:
                kv[key] = _FIELD_PARSERS[key](val.strip())
            except ValueError as exc:
                raise ParameterError(f"config line {ln_no}: bad value for {key}: {exc}") from None
        kv.update(overrides)
        if "experiment" not in kv:
            raise ParameterError("config is missing 'experiment'")
        return cls(**kv)


@dataclass(frozen=True)
class RunManifest:
    """Record of one run: config echo, code version, expanded seeds,
    wall-clock, and a digest per output file.  The manifest plus the
    package version pin down every output byte."""

    config: ExperimentConfig
    version: str
    trial_seeds: tuple
    wall_clock: float
    outputs: dict

    def to_json(self) -> str:
        doc = {
            "config": {f.name: getattr(self.config, f.name) for f in fields(self.config)},
            "version": self.version,
            "trial_seeds": [list(s) for s in self.trial_seeds],
            "wall_clock_seconds": self.wall_clock,
            "outputs": self.outputs,
        }
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _jnum(v):
    # summary JSON stays strict: non-finite floats become null
    v = float(v)
    return v if math.isfinite(v) else None


def _write_json(path: Path, obj):
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def run_experiment(config: ExperimentConfig) -> RunManifest:
    """Execute the configured experiment and write its manifest.

    Deterministic given the config: all randomness is derived from
    (seed_env, seed_walk) expanded by trial index.  Raises ParameterError
    on configs the modules reject; other library errors carry a trial
    note and propagate.
    """
    runner = _RUNNERS[config.experiment]
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    trial_seeds = tuple(
        (derive_seed(config.seed_env, t, STREAM_ENV), derive_seed(config.seed_walk, t, STREAM_WALK))
        for t in range(config.trials)
    )
    t0 = time.perf_counter()
    rel_files = runner(config, trial_seeds, out)
    wall = time.perf_counter() - t0
    digests = {rel: _sha256(out / rel) for rel in sorted(rel_files)}
    manifest = RunManifest(config, __version__, trial_seeds, wall, digests)
    (out / "manifest.json").write_text(manifest.to_json())
    return manifest


def _note(exc: PercwalkError, experiment: str, trial: int):
    if hasattr(exc, "add_note"):
        exc.add_note(f"during {experiment} trial {trial}")
    return exc


def _conditioned_walk(config: ExperimentConfig, env_seed: int, walk_seed: int):
    """Spanning-conditioned environment plus one annotated walk from the
    origin."""
    window = Rect.centered(config.window)
    res = condition_spanning(env_seed, config.p, window)
    traj = walk.run_walk(res.config, walk_seed, config.beta, config.n_steps)
    ann = walk.annotate(traj, censor_margin=config.censor_margin)
    return res, traj, ann


# ---------------------------------------------------------------- speed


def _run_speed(config, trial_seeds, out):
    rows = []
    for t, (es, ws) in enumerate(trial_seeds):
        try:
            res, traj, ann = _conditioned_walk(config, es, ws)
            emp = walk.speed_empirical(traj)
            dn, dx = walk.regeneration_increments(traj, ann)
            try:
                reg = walk.speed_regeneration(traj, ann)
                rspeed, rse = reg.value, reg.stderr
            except InsufficientDataError:
                rspeed, rse = float("nan"), float("nan")
            rows.append(
                (
                    t, es, ws, res.config.seed, res.rejections, traj.n_steps,
                    int(traj.X[-1]), emp.value, ann.censor_margin,
                    dn.size, int(dn.sum()), int(dx.sum()), rspeed, rse,
                )
            )
        except PercwalkError as exc:
            raise _note(exc, "speed", t)
    header = (
        "trial", "seed_env", "seed_walk", "accepted_env_seed", "rejections",
        "n_steps", "final_x", "empirical_speed", "censor_margin",
        "n_increments", "sum_dn", "sum_dx", "regen_speed", "regen_stderr",
    )
    _write_csv(out / "results.csv", header, rows)
    _write_json(out / "summary.json", speed_summary(config, rows))
    return ["results.csv", "summary.json"]


def speed_summary(config: ExperimentConfig, rows) -> dict:
    """Aggregate the per-trial speed table; every statistic here is a
    function of the results.csv columns alone."""
    emp = np.array([r[7] for r in rows], np.float64)
    reg = np.array([r[12] for r in rows], np.float64)
    sum_dn = sum(int(r[10]) for r in rows)
    sum_dx = sum(int(r[11]) for r in rows)
    pooled = sum_dx / sum_dn if sum_dn > 0 else float("nan")
    ok = np.isfinite(reg)
    if ok.sum() >= 2:
        mean_r = float(reg[ok].mean())
        se_r = float(reg[ok].std(ddof=1) / math.sqrt(ok.sum()))
    else:
        mean_r, se_r = float("nan"), float("nan")
    emp_mean = float(emp.mean())
    gap = abs(pooled - emp_mean) / emp_mean if emp_mean > 0 and math.isfinite(pooled) else float("nan")
    return {
        "experiment": "speed",
        "p": config.p,
        "beta": config.beta,
        "n_steps": config.n_steps,
        "trials": config.trials,
        "empirical_mean": _jnum(emp_mean),
        "empirical_min": _jnum(emp.min()),
        "empirical_max": _jnum(emp.max()),
        "pooled_regen_speed": _jnum(pooled),
        "regen_trial_mean": _jnum(mean_r),
        "regen_trial_stderr": _jnum(se_r),
        "regen_ci95": [_jnum(mean_r - 1.96 * se_r), _jnum(mean_r + 1.96 * se_r)],
        "relative_gap": _jnum(gap),
        "n_increments_total": sum(int(r[9]) for r in rows),
    }


# ---------------------------------------------------------------- regen


def _run_regen(config, trial_seeds, out):
    rows = []
    seq_dn, seq_dx, per_trial = [], [], []
    for t, (es, ws) in enumerate(trial_seeds):
        try:
            res, traj, ann = _conditioned_walk(config, es, ws)
        except PercwalkError as exc:
            raise _note(exc, "regen", t)
        dn, dx = walk.regeneration_increments(traj, ann)
        rows.extend((t, k, int(dn[k]), int(dx[k])) for k in range(dn.size))
        seq_dn.append(dn)
        seq_dx.append(dx)
        per_trial.append(
            {
                "trial": t,
                "seed_env": es,
                "seed_walk": ws,
                "accepted_env_seed": res.config.seed,
                "rejections": res.rejections,
                "censor_margin": ann.censor_margin,
                "n_fresh": int(ann.fresh.size),
                "n_regen": int(ann.regeneration.size),
            }
        )
    _write_csv(out / "results.csv", ("trial", "k", "dn", "dx"), rows)
    summary = regen_summary(config, seq_dn, seq_dx)
    summary["per_trial"] = per_trial
    _write_json(out / "summary.json", summary)
    return ["results.csv", "summary.json"]


def regen_summary(config: ExperimentConfig, seq_dn, seq_dx) -> dict:
    """Pooled regeneration statistics from per-trial increment sequences
    (exactly the rows of results.csv grouped by trial)."""
    out = {
        "experiment": "regen",
        "p": config.p,
        "beta": config.beta,
        "n_steps": config.n_steps,
        "trials": config.trials,
        "n_increments": int(sum(len(q) for q in seq_dn)),
    }
    try:
        pooled = walk.pooled_regeneration_speed(list(zip(seq_dn, seq_dx)))
        out["pooled_speed"] = _jnum(pooled.value)
        out["pooled_stderr"] = _jnum(pooled.stderr)
        out["pooled_ci95"] = [
            _jnum(pooled.value - 1.96 * pooled.stderr),
            _jnum(pooled.value + 1.96 * pooled.stderr),
        ]
    except InsufficientDataError as exc:
        out["pooled_speed"] = None
        out["pooled_note"] = str(exc)
    for name, seqs in (("lag1_dx", seq_dx), ("lag1_dn", seq_dn)):
        try:
            lag = walk.lag1_autocorrelation(seqs)
            out[name] = {
                "value": _jnum(lag.value),
                "null_sigma": _jnum(lag.null_sigma),
                "z": _jnum(lag.z),
                "n_pairs": lag.n_pairs,
            }
        except InsufficientDataError as exc:
            out[name] = {"note": str(exc)}
    return out


# ---------------------------------------------------------------- traps


def _run_traps(config, trial_seeds, out):
    stats = structure.trap_tail_stats(
        config.p,
        config.trials,
        TRAP_TAIL_NMAX,
        window=Rect.centered(config.window),
        seed=config.seed_env,
        horizon=config.horizon,
    )
    rows = []
    for table in (stats.length, stats.width):
        for r in table.rows():
            rows.append(
                (table.statistic, r["n"], r["count"], r["estimate"], r["ci_low"], r["ci_high"])
            )
    _write_csv(
        out / "results.csv",
        ("statistic", "n", "count", "estimate", "ci_low", "ci_high"),
        rows,
    )
    ratios = {
        f"n={n}": _jnum(stats.length.tail_ratio_upper(n))
        for n in range(1, TRAP_TAIL_NMAX)
    }
    summary = {
        "experiment": "traps",
        "p": config.p,
        "trials": config.trials,
        "n_valid": stats.n_trials,
        "n_excluded_truncated": stats.n_excluded_truncated,
        "n_excluded_off_proxy": stats.n_excluded_off_proxy,
        "fact34": stats.fact34,
        "length_tail_ratio_upper95": ratios,
        "length_fit_decay": _jnum(stats.length.fit_decay()),
        "width_fit_decay": _jnum(stats.width.fit_decay()),
        "window": stats.window.format(),
        "region": stats.region.format(),
        "horizon": stats.horizon,
    }
    _write_json(out / "summary.json", summary)
    return ["results.csv", "summary.json"]


# ---------------------------------------------------------------- deadend


def _run_deadend(config, trial_seeds, out):
    # n_steps is the attempt budget here; each attempt is one fresh
    # conditioned environment probed at the origin
    est = deadend.gamma_census(config.p, config.depth_max, config.n_steps, config.seed_env)
    _write_csv(
        out / "results.csv",
        ("depth", "n_shapes_or_samples", "gamma_d", "stderr"),
        est.rows(config.beta),
    )
    g, e = est.gamma_by_depth(config.beta)
    sj = est.sojourn_values(config.beta)
    hit = sj > 0
    summary = {
        "experiment": "deadend",
        "p": config.p,
        "beta": config.beta,
        "engine": est.engine,
        "budget": config.n_steps,
        "depth_max": config.depth_max,
        "n_accepted": est.n_samples,
        "n_unresolved": est.n_unresolved,
        "gamma": [_jnum(v) for v in g],
        "stderr": [_jnum(v) for v in e],
        "hits_by_depth": est.hits_by_depth().tolist(),
        "sojourn_mean": _jnum(sj[hit].mean()) if hit.any() else None,
        "sojourn_max": _jnum(sj.max()) if sj.size else None,
    }
    files = ["results.csv", "summary.json"]
    if config.depth_max <= 2:
        exact = deadend.gamma_exact(config.p, config.depth_max)
        _write_csv(
            out / "exact.csv",
            ("depth", "n_shapes_or_samples", "gamma_d", "stderr"),
            exact.rows(config.beta),
        )
        gx, _ = exact.gamma_by_depth(config.beta)
        gc, ec = est.gamma_by_depth(config.beta, max_open=exact.max_edges)
        z = np.where(ec > 0, (gc - gx) / np.where(ec > 0, ec, 1.0), 0.0)
        summary["exact"] = {
            "gamma": [_jnum(v) for v in gx],
            "n_shapes": exact.hits_by_depth().tolist(),
            "max_edges": exact.max_edges,
            "capped_mc_gamma": [_jnum(v) for v in gc],
            "z_scores": [_jnum(v) for v in z],
        }
        files.append("exact.csv")
    if config.depth_max >= 5:
        d_range = (max(1, config.depth_max - 4), config.depth_max)
        try:
            bu = deadend.estimate_beta_u(config.p, d_range=d_range, census=est)
            summary["beta_u"] = {
                "status": "ok",
                "value": _jnum(bu.value),
                "bracket": [_jnum(bu.bracket[0]), _jnum(bu.bracket[1])],
                "d_range": list(bu.d_range),
                "diagnostics": bu.diagnostics,
            }
        except (InsufficientDataError, EstimationError) as exc:
            summary["beta_u"] = {"status": "failed", "reason": str(exc)}
    else:
        summary["beta_u"] = {
            "status": "skipped",
            "reason": "growth fit needs depth_max >= 5",
        }
    _write_json(out / "summary.json", summary)
    return files


# ---------------------------------------------------------------- renorm


def _run_renorm(config, trial_seeds, out):
    ns = config.block_n
    nb = max(2, config.window // ns)
    bi_range = (0, nb)
    bj_range = (-(nb // 2 + 1), nb // 2 + 1)
    rows = []
    for t, (es, _ws) in enumerate(trial_seeds):
        try:
            cfg = BondConfiguration(es, config.p)
            blocks = renorm.classify_blocks(cfg, bi_range, bj_range, n_scale=ns)
            core = renorm.covered_core(blocks)
            i_sl = slice(blocks.bi_min - blocks.ext_bi_min, blocks.bi_max - blocks.ext_bi_min + 1)
            j_sl = slice(blocks.bj_min - blocks.ext_bj_min, blocks.bj_max - blocks.ext_bj_min + 1)
            n_sq = (blocks.bi_max - blocks.bi_min + 1) * (blocks.bj_max - blocks.bj_min + 1)
            n_ap = int(blocks.in_ap[i_sl, j_sl].sum())
            n_good = int(blocks.p_good[i_sl, j_sl].sum())
            traps = renorm.p_traps(blocks, core)
            claim = renorm.claim_boundary_ok(blocks, core)
            rows.append(
                (
                    t, es, ns, n_sq, n_ap, n_good,
                    len(traps),
                    max((tr.size for tr in traps), default=0),
                    claim["n_boundary_checked"],
                    len(claim["violations"]),
                )
            )
        except PercwalkError as exc:
            raise _note(exc, "renorm", t)
    header = (
        "trial", "seed_env", "n_scale", "n_squares", "n_ap", "n_p_good",
        "n_p_traps", "max_trap_size", "n_boundary_checked", "n_violations",
    )
    _write_csv(out / "results.csv", header, rows)
    n_sq_tot = sum(r[3] for r in rows)
    summary = {
        "experiment": "renorm",
        "p": config.p,
        "n_scale": ns,
        "trials": config.trials,
        "block_range": [list(bi_range), list(bj_range)],
        "frac_ap": _jnum(sum(r[4] for r in rows) / n_sq_tot),
        "frac_p_good": _jnum(sum(r[5] for r in rows) / n_sq_tot),
        "n_p_traps_total": sum(r[6] for r in rows),
        "n_boundary_checked": sum(r[8] for r in rows),
        "n_violations": sum(r[9] for r in rows),
        "all_boundaries_ok": all(r[9] == 0 for r in rows),
    }
    _write_json(out / "summary.json", summary)
    return ["results.csv", "summary.json"]


# ---------------------------------------------------------------- figures


def _run_figures(config, trial_seeds, out):
    es, ws = trial_seeds[0]
    try:
        res, traj, ann = _conditioned_walk(config, es, ws)
    except PercwalkError as exc:
        raise _note(exc, "figures", 0)
    figdir = out / "figures"
    figdir.mkdir(exist_ok=True)
    (figdir / "path.svg").write_text(
        figures.render_path_figure(traj, ann, label=f"p={config.p}, beta={config.beta}")
    )
    region = Rect.centered(min(config.window, 20))
    gmap = structure.classify(res.config, region, horizon=config.horizon)
    (figdir / "traps.svg").write_text(
        figures.render_trap_figure(gmap, label=f"p={config.p}")
    )
    drawn = [
        tr for tr in structure.traps_in(gmap)
        if any(region.contains(s) for s in tr.sites)
    ]
    walk.write_trajectory_csv(traj, out / "trajectory.csv")
    walk.write_epochs_csv(ann, out / "results.csv")
    emp = walk.speed_empirical(traj)
    summary = {
        "experiment": "figures",
        "p": config.p,
        "beta": config.beta,
        "n_steps": config.n_steps,
        "final_x": int(traj.X[-1]),
        "empirical_speed": _jnum(emp.value),
        "censor_margin": ann.censor_margin,
        "n_fresh": int(ann.fresh.size),
        "n_regen": int(ann.regeneration.size),
        "n_traps_drawn": len(drawn),
        "trap_region": region.format(),
        "figures": ["figures/path.svg", "figures/traps.svg"],
    }
    _write_json(out / "summary.json", summary)
    return [
        "results.csv",
        "trajectory.csv",
        "summary.json",
        "figures/path.svg",
        "figures/traps.svg",
    ]


# ---------------------------------------------------------------- bounds


def random_grid_network(rng_, nx: int, ny: int, p_open: float) -> network.WeightedNetwork:
    """Random weighted grid subnetwork on nx*ny sites; every emitted edge
    carries a uniform (0.1, 10) conductance."""
    edges = []
    for x in range(nx):
        for y in range(ny):
            if x + 1 < nx and rng_.random() < p_open:
                edges.append(((x, y), (x + 1, y), float(rng_.uniform(0.1, 10.0))))
            if y + 1 < ny and rng_.random() < p_open:
                edges.append(((x, y), (x, y + 1), float(rng_.uniform(0.1, 10.0))))
    if not edges:  # keep the network nonempty for vertex picks
        edges.append(((0, 0), (1, 0), 1.0))
    return network.WeightedNetwork.from_edge_list(edges)


def absorbing_return_oracle(net, z, boundary) -> float:
    """P(walk from z revisits z before the boundary), by the absorbing
    chain: solve h on non-absorbing states, average h over z's first step."""
    n = net.n_vertices
    w = np.zeros((n, n))
    for k in range(net.n_edges):
        i, j = int(net.ei[k]), int(net.ej[k])
        if i == j:
            continue
        wt = float(net.weight[k])
        w[i, j] += wt
        w[j, i] += wt
    pi = w.sum(axis=1)
    live = pi > 0
    P = np.zeros_like(w)
    P[live] = w[live] / pi[live, None]
    zi = net.index(z)
    bs = {net.index(b) for b in boundary}
    # states outside z's component never hit z (h = 0 there); keeping them
    # in the solve would make I - Q singular
    comp = np.zeros(n, bool)
    stack = [zi]
    comp[zi] = True
    while stack:
        i = stack.pop()
        for j in np.nonzero(w[i] > 0)[0]:
            if not comp[j]:
                comp[j] = True
                stack.append(int(j))
    free = [i for i in range(n) if i != zi and i not in bs and comp[i]]
    h = np.zeros(n)
    h[zi] = 1.0
    if free:
        A = np.eye(len(free)) - P[np.ix_(free, free)]
        b = P[np.ix_(free, [zi])].sum(axis=1)
        sol = np.linalg.solve(A, b)
        for i, v in zip(free, sol):
            h[i] = v
    return float(P[zi] @ h)


def mc_hitting(net, z, a_set, b_set, n_walkers: int, seed: int, step_cap: int = 20_000):
    """Monte Carlo P(hit B before A) from z with its binomial sigma.
    Walkers still free at step_cap count as not hitting B."""
    n = net.n_vertices
    w = np.zeros((n, n))
    for k in range(net.n_edges):
        i, j = int(net.ei[k]), int(net.ej[k])
        if i == j or net.weight[k] <= 0:
            continue
        w[i, j] += float(net.weight[k])
        w[j, i] += float(net.weight[k])
    deg = w.sum(axis=1)
    live = deg > 0
    w[live] /= deg[live, None]
    cum = w.cumsum(axis=1)
    a_idx = np.array(sorted(net.index(v) for v in a_set))
    b_idx = np.array(sorted(net.index(v) for v in b_set))
    rng_ = np.random.default_rng(seed)
    pos = np.full(n_walkers, net.index(z))
    active = np.ones(n_walkers, bool)
    hit_b = np.zeros(n_walkers, bool)
    for _ in range(step_cap):
        if not active.any():
            break
        rows_ = cum[pos[active]]
        # scale the uniforms by the row totals so rounding in the cumsum
        # can never leave a draw above every threshold
        u = rng_.random(int(active.sum())) * rows_[:, -1]
        pos[active] = (rows_ > u[:, None]).argmax(axis=1)
        in_a = np.isin(pos, a_idx) & active
        in_b = np.isin(pos, b_idx) & active
        hit_b |= in_b
        active &= ~(in_a | in_b)
    phat = float(hit_b.mean())
    sigma = math.sqrt(phat * (1.0 - phat) / n_walkers)
    return phat, sigma


def _run_bounds(config, trial_seeds, out):
    rows = []
    for t, (es, ws) in enumerate(trial_seeds):
        try:
            g_rng = np.random.default_rng(es)

            # escape identity vs absorbing-chain oracle
            net1 = random_grid_network(g_rng, 6, 6, 0.85)
            verts = list(net1.vertices)
            picks = g_rng.choice(len(verts), size=min(3, len(verts)), replace=False)
            z1 = verts[picks[0]]
            boundary = [verts[i] for i in picks[1:]]
            mine = network.return_probability(net1, z1, boundary)
            want = absorbing_return_oracle(net1, z1, boundary)
            diff = abs(mine - want)
            rows.append(("escape", t, diff, 1e-10, int(diff <= 1e-10)))

            # hitting bound vs Monte Carlo minus 3 sigma
            net2 = random_grid_network(g_rng, 6, 5, 0.9)
            verts = list(net2.vertices)
            picks = g_rng.choice(len(verts), size=min(5, len(verts)), replace=False)
            z2 = verts[picks[0]]
            a_set = [verts[i] for i in picks[1:3]]
            b_set = [verts[i] for i in picks[3:]]
            bound = network.hitting_bound(net2, z2, a_set, b_set)
            phat, sigma = mc_hitting(net2, z2, a_set, b_set, 3000, ws)
            stat = phat - 3.0 * sigma
            rows.append(("hitting", t, stat, bound, int(stat <= bound + 1e-12)))

            # universal n-step envelope
            net3 = random_grid_network(g_rng, 5, 3, 0.9)
            rep = network.vc_check(net3, n_max=50)
            rows.append(("varopoulos-carne", t, rep.max_ratio, 1.0, int(rep.ok)))

            # cutset lower bound vs true effective resistance
            nx, ny = 6, 4
            net4 = random_grid_network(g_rng, nx, ny, 1.0)
            z4 = (0, int(g_rng.integers(ny)))
            target = [(nx - 1, y) for y in range(ny)]
            cutsets = [
                [((x, y), (x + 1, y)) for y in range(ny)]
                for x in range(nx - 1)
            ]
            c_eff = network.effective_conductance(net4, z4, target).conductance
            r_eff = 1.0 / c_eff
            nw = network.nash_williams_bound(net4, cutsets, z=z4, target=target)
            rows.append(("nash-williams", t, nw, r_eff, int(nw <= r_eff * (1 + 1e-9))))
        except PercwalkError as exc:
            raise _note(exc, "bounds", t)
    _write_csv(out / "results.csv", ("suite", "trial", "statistic", "bound", "ok"), rows)
    suites = {}
    for suite in ("escape", "hitting", "varopoulos-carne", "nash-williams"):
        mine = [r for r in rows if r[0] == suite]
        suites[suite] = {"n": len(mine), "n_ok": sum(r[4] for r in mine)}
    summary = {
        "experiment": "bounds",
        "trials": config.trials,
        "suites": suites,
        "all_pass": all(s["n_ok"] == s["n"] for s in suites.values()),
    }
    _write_json(out / "summary.json", summary)
    return ["results.csv", "summary.json"]


_RUNNERS = {
    "speed": _run_speed,
    "traps": _run_traps,
    "regen": _run_regen,
    "deadend": _run_deadend,
    "renorm": _run_renorm,
    "figures": _run_figures,
    "bounds": _run_bounds,
}
