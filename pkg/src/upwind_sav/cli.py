"""Command line: ``run``, ``recipe`` and ``sweep``.

Exit codes: 0 success, 2 configuration error, 3 solver failure,
4 certificate violation.  Relative output paths are resolved against
``--out``, else ``$UPWIND_SAV_OUTPUT_DIR``, else the working directory.
"""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import config as cfgmod
from .errors import ConfigError
from .runner import EXIT_CONFIG, output_root, run_status


def _run_cmd(args) -> int:
    cfg = cfgmod.load(args.config, args.set)
    return run_status(cfg, args.out, args.progress)


def _recipe_cmd(args) -> int:
    cfg = cfgmod.recipe(args.name, args.set)
    if args.dump:
        sys.stdout.write(cfgmod.dumps(cfg))
        return 0
    return run_status(cfg, args.out, args.progress)


def _variant(job):
    text, overrides, out = job
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = cfgmod.loads(text, overrides)
    except ConfigError as exc:
        logging.error("%s", exc)
        return EXIT_CONFIG
    return run_status(cfg, out)


def _sweep_cmd(args) -> int:
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
    key, _, values = args.vary.partition("=")
    if not values:
        raise ConfigError("--vary needs key=v1,v2,...")
    sec, name, _ = cfgmod.split_override(f"{key}=0")
    root = output_root(args.out)
    jobs = []
    for v in values.split(","):
        v = v.strip()
        overrides = list(args.set) + [f"{sec}.{name}={v}"]
        # validate eagerly so a bad value fails before anything runs
        cfgmod.loads(text, overrides)
        jobs.append((text, overrides, str(root / f"{name}={v}")))
    with ProcessPoolExecutor(max_workers=args.jobs) as pool:
        codes = list(pool.map(_variant, jobs))
    for (_, _, out), code in zip(jobs, codes):
        print(f"{out}\t{code}")
    return max(codes) if codes else 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="upwind-sav", description="Upwind SAV Cahn-Hilliard solver")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)

    def common(p):
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config key (section.key or a unique key)")
        p.add_argument("--out", default=None, help="output directory")

    p = sub.add_parser("run", help="run a config file")
    p.add_argument("config")
    common(p)
    p.add_argument("--progress", action="store_true")
    p.set_defaults(func=_run_cmd)

    p = sub.add_parser("recipe", help="run a named experiment")
    p.add_argument("name", choices=cfgmod.RECIPES)
    common(p)
    p.add_argument("--dump", action="store_true", help="print the config instead of running")
    p.add_argument("--progress", action="store_true")
    p.set_defaults(func=_recipe_cmd)

    p = sub.add_parser("sweep", help="run variants of a config concurrently")
    p.add_argument("config")
    p.add_argument("--vary", required=True, metavar="KEY=V1,V2,...")
    p.add_argument("--jobs", type=int, default=None)
    common(p)
    p.set_defaults(func=_sweep_cmd)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        logging.error("%s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
