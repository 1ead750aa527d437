"""``bwvi run|snr|contour <config>`` command-line entry point.

Exit status: 0 success, 2 config error, 3 runtime failure (partial outputs
are kept).
"""

import argparse
import logging
import sys

from .exceptions import BwviError, ConfigError
from .harness import load_config, run_experiment, write_contours

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

log = logging.getLogger("bwvi")


def _parser():
    p = argparse.ArgumentParser(prog="bwvi", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("run", "run the configured experiment"),
        ("snr", "run an snr_sweep experiment"),
        ("contour", "write log-density contour grids"),
    ):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("config", help="INI experiment config")
        sp.add_argument("--seed", type=int, default=None, help="override the seed list with one seed")
        sp.add_argument("--out", default=None, help="override experiment.output_dir")
        sp.add_argument("--force", action="store_true", help="overwrite outputs from another config")
        sp.add_argument("--threads", type=int, default=1, help="parallel runs (processes)")
    return p


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    try:
        if args.threads < 1:
            raise ConfigError("--threads: must be at least 1")
        cfg = load_config(args.config, seed=args.seed, output_dir=args.out)
        if args.command == "snr" and cfg.kind != "snr_sweep":
            raise ConfigError(f"experiment.kind: snr needs kind = snr_sweep, got {cfg.kind!r}")
        if args.command == "contour":
            for path in write_contours(cfg, args.force):
                log.info("wrote %s", path)
            return EXIT_OK
        index = run_experiment(cfg, args.force, args.threads)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except (BwviError, OSError) as exc:
        log.error("runtime failure: %s", exc)
        return EXIT_RUNTIME
    failed = [r for r in index["runs"] if r["status"] != "ok"]
    for r in failed:
        log.error("%s seed %s failed: %s", r["method"], r["seed"], r["error"])
    log.info("%d runs, %d failed, output in %s", len(index["runs"]), len(failed), cfg.output_dir)
    return EXIT_RUNTIME if failed else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
