"""Command-line front end: `percwalk <experiment> [flags]`.

Flags override a key=value config file (--config); the file in turn
overrides the built-in defaults.  Exit codes: 0 success, 2 invalid
configuration, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import ParameterError, PercwalkError
from .experiments import EXPERIMENTS, ExperimentConfig, run_experiment

_HELP = {
    "speed": "empirical and regeneration speed estimates over independent walks",
    "traps": "trap tails and goodness-structure checks on conditioned environments",
    "regen": "regeneration increments, pooled speed, and i.i.d. diagnostics",
    "deadend": "Monte Carlo dead-end census, exact cross-check, threshold fit",
    "renorm": "block-scale crossing events, p-good squares, p-trap boundaries",
    "figures": "SVG sample path with regeneration marks plus a trap overlay",
    "bounds": "escape/hitting/envelope/cutset bound suites on random networks",
}

# (flag, config field, type, help)
_FLAGS = (
    ("--p", "p", float, "edge-open probability, in (0.5, 1)"),
    ("--beta", "beta", float, "rightward bias, > 1"),
    ("--steps", "n_steps", int,
     "steps per walk; for deadend, the Monte Carlo attempt budget"),
    ("--trials", "trials", int, "number of independent trials"),
    ("--seed-env", "seed_env", int, "master seed for environments"),
    ("--seed-walk", "seed_walk", int, "master seed for walk steps"),
    ("--window", "window", int, "half-extent of the window around the origin"),
    ("--out", "out_dir", str, "output directory (created if missing)"),
    ("--horizon", "horizon", int, "goodness horizon column (default: automatic)"),
    ("--block-n", "block_n", int, "block scale N for renorm (multiple of 8)"),
    ("--depth-max", "depth_max", int, "deepest census depth for deadend"),
    ("--censor-margin", "censor_margin", int,
     "explicit regeneration censor margin (default: automatic)"),
)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="percwalk",
        description="Biased-walk-on-percolation experiments with reproducible outputs.",
    )
    sub = ap.add_subparsers(dest="experiment", required=True, metavar="experiment")
    for name in EXPERIMENTS:
        sp = sub.add_parser(name, help=_HELP[name])
        sp.add_argument("--config", type=str, default=None,
                        help="key=value config file; explicit flags win")
        for flag, dest, typ, help_text in _FLAGS:
            sp.add_argument(flag, dest=dest, type=typ, default=None, help=help_text)
    return ap


def config_from_args(ns: argparse.Namespace) -> ExperimentConfig:
    provided = {
        dest: getattr(ns, dest)
        for _, dest, _, _ in _FLAGS
        if getattr(ns, dest) is not None
    }
    provided["experiment"] = ns.experiment
    if ns.config is not None:
        try:
            text = Path(ns.config).read_text()
        except OSError as exc:
            raise ParameterError(f"cannot read config file {ns.config}: {exc}") from None
        return ExperimentConfig.from_text(text, **provided)
    return ExperimentConfig(**provided)


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        config = config_from_args(ns)
        manifest = run_experiment(config)
    except ParameterError as exc:
        print(f"percwalk: invalid configuration: {exc}", file=sys.stderr)
        return 2
    except PercwalkError as exc:
        notes = "; ".join(getattr(exc, "__notes__", ()))
        detail = f" ({notes})" if notes else ""
        print(f"percwalk: {type(exc).__name__}: {exc}{detail}", file=sys.stderr)
        return 3
    print(
        f"{config.experiment}: {len(manifest.outputs)} outputs + manifest.json "
        f"in {config.out_dir} ({manifest.wall_clock:.1f}s)"
    )
    for rel in sorted(manifest.outputs):
        print(f"  {rel}  sha256={manifest.outputs[rel][:12]}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
