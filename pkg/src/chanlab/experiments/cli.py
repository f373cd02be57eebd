"""Command line entry point: ``chanlab <subcommand> --config FILE``."""

import argparse
import json
import logging
import sys
import time

from ..weingarten import MomentQuery, evaluate_query, fraction_str
from .config import KINDS, ConfigError, load_config, tomllib
from .emit import emit
from .runners import run

log = logging.getLogger("chanlab")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_GATE = 3

SUBCOMMAND_KIND = {sub: kind for kind, sub in KINDS.items()}


def _parser():
    parser = argparse.ArgumentParser(
        prog="chanlab",
        description="Random covariant quantum channel experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMAND_KIND:
        p = sub.add_parser(name, help=f"run a {SUBCOMMAND_KIND[name]} experiment")
        p.add_argument("--config", required=True, help="TOML experiment config")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--threads", type=int, default=None, help="worker threads")
    p = sub.add_parser("oracle", help="print an exact moment as JSON")
    p.add_argument("--config", default=None, help="TOML file with a [query] table")
    p.add_argument("--target", default=None)
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--s", type=int, default=None)
    p.add_argument("--p", type=int, default=None)
    p.add_argument("--seed", type=int, default=None, help="accepted for uniformity; unused")
    p.add_argument("--out", default=None, help="also write the JSON to this file")
    p.add_argument("--threads", type=int, default=None, help="accepted for uniformity; unused")
    return parser


def _oracle(args):
    query = {}
    if args.config:
        try:
            with open(args.config, "rb") as fh:
                query = dict(tomllib.load(fh).get("query", {}))
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise ConfigError(f"cannot read {args.config}: {exc}") from exc
    for key in ("target", "d", "s", "p"):
        if getattr(args, key) is not None:
            query[key] = getattr(args, key)
    missing = [k for k in ("target", "d", "s", "p") if k not in query]
    if missing:
        raise ConfigError(f"oracle query is missing {missing}")
    try:
        q = MomentQuery(query["d"], query["s"], query["p"], query["target"])
        value = evaluate_query(q)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    text = json.dumps({"query": q.as_dict(), "exact": fraction_str(value), "approx": float(value)})
    print(text)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    return EXIT_OK


def main(argv=None):
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = _parser().parse_args(argv)
    try:
        if args.command == "oracle":
            return _oracle(args)
        cfg = load_config(args.config, seed=args.seed, output=args.out, threads=args.threads)
        expected = SUBCOMMAND_KIND[args.command]
        if cfg.kind != expected:
            raise ConfigError(f"subcommand {args.command!r} needs kind = {expected!r}, config has {cfg.kind!r}")
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    out_dir = cfg.output or f"results/{args.command}"
    start = time.perf_counter()
    result = run(cfg)
    emit(cfg, result, out_dir)
    log.info("wrote %s in %.1f s", out_dir, time.perf_counter() - start)
    if not result.gate_passed:
        log.error("statistical gate failed; see %s/summary.json", out_dir)
        return EXIT_GATE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
