"""Command-line interface.

Subcommands:
  run       full pipeline: trajectory, profiles, equilibration, metadata
  spectrum  normal-mode frequencies and degeneracy report only
  gge       generalized temperatures and charge residuals only
  scan      sweep one scalar parameter, snapshot diagnostics per value
  validate  run the structural invariant suite on the configured system

Exit codes: 0 success, 1 numeric failure (instability, invariant violation),
2 configuration error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import sys
from contextlib import nullcontext
from pathlib import Path

EXIT_OK = 0
EXIT_NUMERIC = 1
EXIT_CONFIG = 2
EXIT_IO = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quenchkit",
        description="Quench dynamics and local thermometry for coupled harmonic lattices",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("run", "simulate and write all requested diagnostics"),
        ("spectrum", "write normal-mode spectrum and degeneracy report"),
        ("gge", "write generalized temperatures and charge residuals"),
        ("scan", "sweep one scalar parameter at a fixed snapshot time"),
        ("validate", "check structural invariants of the configured system"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="experiment config file")
        p.add_argument("--output-dir", default=None, help="override output.dir")
        p.add_argument("--threads", type=int, default=None, help="cap BLAS thread count")
        p.add_argument("--quiet", action="store_true", help="suppress progress output")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)

    import numpy as np

    from .config import ConfigError, load_config
    from .gaussian import GaussianError
    from .lattice import LatticeError
    from .runner import QuenchExperiment, _write_csv

    if args.threads is not None:
        from threadpoolctl import threadpool_limits

        limits = threadpool_limits(limits=args.threads)
    else:
        limits = nullcontext()

    try:
        cfg = load_config(args.config, output_dir_override=args.output_dir)
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out_dir = Path(cfg.output_dir)
    try:
        with limits:
            exp = QuenchExperiment(cfg)
            if args.command == "run":
                written = exp.write_outputs(out_dir, quiet=args.quiet)
                if not args.quiet:
                    print(f"wrote {', '.join(written)} to {out_dir}")
            elif args.command == "spectrum":
                exp.write_spectrum(out_dir)
                if not args.quiet:
                    print(f"wrote spectrum.csv, metadata.json to {out_dir}")
            elif args.command == "gge":
                exp.write_gge(out_dir)
                if not args.quiet:
                    print(f"wrote gge.csv, metadata.json to {out_dir}")
            elif args.command == "scan":
                header, rows = exp.scan_rows()
                out_dir.mkdir(parents=True, exist_ok=True)
                _write_csv(out_dir / "scan.csv", header, rows)
                if not args.quiet:
                    print(f"wrote scan.csv to {out_dir}")
            elif args.command == "validate":
                checks = exp.validate_invariants()
                failed = [c for c in checks if not c[1]]
                for name, ok, value, limit in checks:
                    print(f"{'PASS' if ok else 'FAIL'} {name}: {value:.3e} (limit {limit:.3e})")
                if failed:
                    print(f"{len(failed)} invariant check(s) failed", file=sys.stderr)
                    return EXIT_NUMERIC
                if not args.quiet:
                    print(f"all {len(checks)} invariant checks passed")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (GaussianError, LatticeError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except np.linalg.LinAlgError as exc:
        print(f"numeric error: eigen/linear solver failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
