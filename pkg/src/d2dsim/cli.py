"""Command-line entry point: run schemes, write CSV/summary/trace outputs.

Exit codes:
  0  success
  2  usage error (unknown flag, bad argument)
  3  configuration error (unreadable or invalid config, bad MCS table)
  4  output directory or trace path not writable

Every output file is written to a temporary name in the target directory and
renamed into place, so no file is ever left partially written.
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile
from pathlib import Path

from .config import load_config
from .engine import simulate
from .metrics import (SUBSET_LABELS, compute_headlines, write_cdf_csv,
                      write_sensor_csv, write_summary)
from .scenario import ConfigError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_OUTPUT = 4

SCHEMES = ("r12", "r13", "context")

_EPILOG = """\
exit codes:
  0  success
  2  usage error (unknown flag, bad argument value)
  3  configuration error (unreadable or invalid config or MCS table)
  4  output directory or trace path not writable

outputs (per scheme S): sensors_S.csv, cdf_S_all.csv, cdf_S_in.csv,
cdf_S_out.csv; plus summary.txt covering all schemes run.
"""


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="d2dsim",
        description="Day-stepped simulation of battery-constrained sensors "
                    "under cellular, relay-assisted and baseline schemes.",
        epilog=_EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p.add_argument("--config", required=True,
                   help="path to the flat key=value configuration file")
    p.add_argument("--scheme", default="all",
                   choices=SCHEMES + ("all",),
                   help="which scheme to run (default: all)")
    p.add_argument("--out", default="out",
                   help="output directory (default: ./out)")
    p.add_argument("--seed", type=int, default=None,
                   help="override rng_seed from the config")
    p.add_argument("--sensors", type=int, default=None,
                   help="override n_sensors from the config")
    p.add_argument("--horizon-days", type=int, default=None,
                   help="override horizon_days from the config")
    p.add_argument("--trace", default=None,
                   help="write signaling transcripts to this path")
    p.add_argument("--mcs-table", default=None,
                   help="override the MCS table file")
    return p


def _atomic_write(out_dir: Path, name: str, writer) -> None:
    fd, tmp = tempfile.mkstemp(prefix=f".{name}.", dir=out_dir)
    os.close(fd)
    try:
        writer(tmp)
        os.replace(tmp, out_dir / name)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.scenario.rng_seed = args.seed
        if args.sensors is not None:
            cfg.scenario.n_sensors = args.sensors
        if args.horizon_days is not None:
            cfg.scenario.horizon_days = args.horizon_days
        if args.mcs_table is not None:
            cfg.mcs_table_path = args.mcs_table
        cfg.validate()
        cfg.mcs_table()           # fail early on a bad table
    except ConfigError as exc:
        print(f"d2dsim: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out_dir = Path(args.out)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        probe = tempfile.TemporaryFile(dir=out_dir)
        probe.close()
    except OSError as exc:
        print(f"d2dsim: cannot write to output directory {out_dir}: {exc}",
              file=sys.stderr)
        return EXIT_OUTPUT

    trace_fh = None
    if args.trace is not None:
        try:
            trace_fh = open(args.trace, "w")
        except OSError as exc:
            print(f"d2dsim: cannot open trace path {args.trace}: {exc}",
                  file=sys.stderr)
            return EXIT_OUTPUT

    schemes = SCHEMES if args.scheme == "all" else (args.scheme,)
    results = {}
    try:
        for scheme in schemes:
            result = simulate(cfg, scheme, trace_fh=trace_fh)
            results[scheme] = result
            _atomic_write(out_dir, f"sensors_{scheme}.csv",
                          lambda p, r=result: write_sensor_csv(r, p))
            for subset in SUBSET_LABELS:
                _atomic_write(out_dir, f"cdf_{scheme}_{subset}.csv",
                              lambda p, r=result, s=subset: write_cdf_csv(r, s, p))
        headlines = compute_headlines(results)
        _atomic_write(out_dir, "summary.txt",
                      lambda p: write_summary(headlines, p))
    finally:
        if trace_fh is not None:
            trace_fh.close()
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
