"""Command-line entry point: ``afc baseline|train|evaluate|analyze|config``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import yaml

from afc.errors import AfcError

log = logging.getLogger("afc")


def _load(args):
    from afc.orchestrator.config import load_config
    return load_config(args.config, args.set)


def cmd_baseline(args):
    from afc.envs.cylinder import run_baseline
    from afc.orchestrator.rollout import cylinder_config

    cfg = _load(args).replace(env_kind="cylinder", n_marl=1)
    c = cfg.cylinder
    env_cfg = cylinder_config(cfg)
    out = args.output or c.baseline_dir

    def progress(t, total):
        log.info("baseline t = %.1f / %.1f", t, total)

    stats, _ = run_baseline(env_cfg, out, c.baseline_transient, c.baseline_window, progress=progress)
    print(stats.to_text(), end="")
    return 0


def cmd_train(args):
    from afc.orchestrator.training import train

    cfg = _load(args)

    def progress(step, reward):
        print(f"step {step:4d}  mean local reward {reward:+.5f}", flush=True)

    result = train(cfg, progress)
    print(f"final checkpoint: {result.checkpoint}")
    return 0


def cmd_evaluate(args):
    from afc.orchestrator.training import evaluate

    cfg = _load(args)
    out = args.output or str(Path(cfg.output_dir) / "evaluation")
    res = evaluate(cfg, args.checkpoint, duration=args.duration, out_dir=out)
    s = res.summary
    print(f"window {res.window[0]:.2f}..{res.window[1]:.2f}: C_l {s.C_l_mean:.5f}  C_d {s.C_d_mean:.5f}  "
          f"C_l_rms {s.C_l_rms:.5f}  mean local reward {res.mean_reward:+.5f}")
    print(f"wrote {out}/forces.csv and {out}/actions.csv")
    return 0


def cmd_analyze(args):
    from afc.analysis import analyze_directory

    out = analyze_directory(args.input, transient=args.transient, out_dir=args.output)
    json.dump(out, sys.stdout, indent=2)
    print()
    return 0


def cmd_config(args):
    cfg = _load(args)
    yaml.safe_dump(cfg.to_dict(), sys.stdout, sort_keys=False)
    return 0


def build_parser():
    ap = argparse.ArgumentParser(prog="afc", description="Multi-agent RL for jet-based flow control")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def with_config(p, required=True):
        p.add_argument("--config", required=required, help="YAML run configuration")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config value, e.g. --set ppo.lr=1e-4 (repeatable)")
        return p

    p = with_config(sub.add_parser("baseline", help="run the unactuated cylinder flow"))
    p.add_argument("--output", help="directory for the snapshot and stats (default cylinder.baseline_dir)")
    p.set_defaults(func=cmd_baseline)

    p = with_config(sub.add_parser("train", help="train a shared policy"))
    p.set_defaults(func=cmd_train)

    p = with_config(sub.add_parser("evaluate", help="run a checkpoint deterministically"))
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--duration", type=float, help="convective units (default evaluation.duration)")
    p.add_argument("--output", help="output directory (default <output_dir>/evaluation)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("analyze", help="summarise forces.csv/actions.csv in a directory")
    p.add_argument("--input", required=True)
    p.add_argument("--output", help="where to write summary.json and psd.csv (default: input)")
    p.add_argument("--transient", type=float, default=15.0)
    p.set_defaults(func=cmd_analyze)

    p = with_config(sub.add_parser("config", help="print the effective configuration"), required=False)
    p.set_defaults(func=cmd_config)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except AfcError as exc:
        print(f"afc: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
