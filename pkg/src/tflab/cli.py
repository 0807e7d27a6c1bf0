"""Command-line experiment runner.

    tflab <experiment> --config cfg.json [--out DIR] [--threads K] [--seed N]
    tflab <experiment> --emit-defaults

Experiments: frames, decay, twopath, compactness, psdo, mixed (or `all`).
The config is a single JSON document; flags override config fields. Exit
status is 0 exactly when every in-config assertion passed.
"""

import argparse
import json
import sys
from contextlib import nullcontext

from tflab.experiments import default_config, load_config, run

_EXPERIMENTS = ("frames", "decay", "twopath", "compactness", "psdo", "mixed")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tflab",
                                 description="time-frequency operator laboratory")
    ap.add_argument("experiment", choices=_EXPERIMENTS + ("all",))
    ap.add_argument("--config", help="JSON config file (defaults otherwise)")
    ap.add_argument("--out", help="output directory (overrides config)")
    ap.add_argument("--threads", type=int, help="cap BLAS/runtime threads")
    ap.add_argument("--seed", type=int, help="seed override")
    ap.add_argument("--emit-defaults", action="store_true",
                    help="print the annotated default config and exit")
    return ap


def _thread_limit(k):
    if k is None:
        return nullcontext()
    try:
        from threadpoolctl import threadpool_limits
        return threadpool_limits(limits=k)
    except ImportError:
        sys.stderr.write("threadpoolctl not available; --threads ignored\n")
        return nullcontext()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)

    if args.emit_defaults:
        json.dump(default_config(args.experiment), sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")
        return 0

    overrides = {}
    if args.out is not None:
        overrides["out"] = args.out
    if args.seed is not None:
        overrides["seed"] = args.seed

    names = _EXPERIMENTS if args.experiment == "all" else (args.experiment,)
    failures = []
    with _thread_limit(args.threads):
        for name in names:
            cfg = load_config(name, args.config, overrides)
            if args.experiment == "all":
                cfg["out"] = f"{cfg.get('out', 'out')}/{name}"
            doc, passed = run(cfg)
            status = "ok" if passed else "FAILED"
            sys.stdout.write(f"{name}: {status}  (summary: {cfg['out']}/summary.json)\n")
            if not passed:
                failures.append({
                    "experiment": name,
                    "failed": [c for c in doc["assertions"] if not c["passed"]],
                })
    if failures:
        sys.stdout.write(json.dumps({"failures": failures}, indent=1, sort_keys=True) + "\n")
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
