"""Command-line entry point: ``adelic <experiment> [flags]``.

Exit codes: 0 success, 1 audit failure, 2 invalid config, 3 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from dataclasses import fields

from .experiments import EXPERIMENTS, ConfigError, ExperimentConfig, failed, run, to_csv, to_json
from .projection import twisted_product_scan

log = logging.getLogger("adelic")

OUTPUT_DIR_ENV = "ADELIC_OUTPUT_DIR"

EXIT_OK, EXIT_AUDIT, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3


def _floats(s: str) -> tuple[float, ...]:
    return tuple(float(v) for v in s.split(",") if v.strip())


def _ints(s: str) -> tuple[int, ...]:
    return tuple(int(v) for v in s.split(",") if v.strip())


def _bool(s: str) -> bool:
    return str(s).strip().lower() in ("1", "true", "yes", "on")


# config key -> (flag, parser)
KEYS = {
    "betas": ("beta", _floats),
    "chis": ("chi", lambda s: tuple(v for v in s.split("|") if v.strip())),
    "x_max": ("xmax", lambda s: int(float(s))),
    "n": ("n", lambda s: int(float(s))),
    "seed": ("seed", int),
    "eps": ("eps", float),
    "out": ("out", str),
    "t": ("t", float),
    "events": ("events", int),
    "pairs": ("pairs", int),
    "primes": ("primes", _ints),
    "levels": ("levels", _ints),
    "n_max": ("nmax", int),
    "A": ("A", _ints),
    "x": ("x", str),
    "function": ("function", str),
    "shuffle_order": ("shuffle_order", _bool),
}


def read_config_file(path: str) -> dict[str, str]:
    """``key=value`` lines; ``#`` starts a comment. Keys are flag names."""
    out = {}
    with open(path) as fp:
        for lineno, line in enumerate(fp, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            k, v = line.split("=", 1)
            out[k.strip().replace("-", "_")] = v.strip()
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="adelic", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="key=value file; flags override it")
        sp.add_argument("--beta", help="comma-separated beta grid")
        sp.add_argument("--chi", help="character(s) 'p^m:c[,c5];...', several separated by '|'")
        sp.add_argument("--xmax", help="largest prime in scans (<= 1e7)")
        sp.add_argument("--n", help="Monte Carlo sample count")
        sp.add_argument("--seed")
        sp.add_argument("--eps", help="target certified tolerance")
        sp.add_argument("--out", help="output file (default: stdout or $%s)" % OUTPUT_DIR_ENV)
        sp.add_argument("--t", help="twist t of the projection / product")
        sp.add_argument("--events")
        sp.add_argument("--pairs")
        sp.add_argument("--primes", help="prime set B for the basis audit")
        sp.add_argument("--levels", help="levels m_p aligned with --primes")
        sp.add_argument("--nmax", help="largest n in N_B for the basis audit")
        sp.add_argument("--A", help="prime set A for 'project'")
        sp.add_argument("--x", help="representative, e.g. '2=3,3=1' or '2=3/2'")
        sp.add_argument("--function", help="cylinder function JSON file for 'project'")
        sp.add_argument("--shuffle-order", dest="shuffle_order", action="store_const", const="1")
        sp.add_argument("--scan-out", help="phase-scan: also stream per-prime partial products here")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--timing", action="store_true", help="add a wall_time column")
        sp.add_argument("-v", "--verbose", action="store_true")
    return ap


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    raw = read_config_file(args.config) if args.config else {}
    known = {f.name for f in fields(ExperimentConfig)}
    flag_to_key = {flag: key for key, (flag, _) in KEYS.items()}
    values = {}
    for k, v in raw.items():
        key = flag_to_key.get(k, k)
        if key not in known or key == "experiment":
            raise ConfigError(f"unknown config key {k!r}")
        values[key] = v
    for key, (flag, _) in KEYS.items():
        v = getattr(args, flag, None)
        if v is not None:
            values[key] = v
    try:
        parsed = {k: KEYS[k][1](v) for k, v in values.items()}
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return ExperimentConfig(experiment=args.experiment, **parsed)


def _output_path(cfg: ExperimentConfig, fmt: str) -> str | None:
    if cfg.out:
        return cfg.out
    d = os.environ.get(OUTPUT_DIR_ENV)
    if d:
        return os.path.join(d, f"{cfg.experiment}.{fmt}")
    return None


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
    except (ConfigError, ValueError) as exc:
        print(f"adelic: invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"adelic: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO

    t0 = time.perf_counter()
    try:
        rows = run(cfg)
    except OSError as exc:
        print(f"adelic: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"adelic: invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    log.info("%s finished in %.2fs", cfg.experiment, time.perf_counter() - t0)

    text = to_json(rows, args.timing) if args.format == "json" else to_csv(rows, args.timing)
    path = _output_path(cfg, args.format)
    try:
        if path is None:
            sys.stdout.write(text)
        else:
            with open(path, "w", newline="") as fp:
                fp.write(text)
        if args.scan_out and cfg.experiment == "phase-scan":
            with open(args.scan_out, "w", newline="") as fp:
                for beta in sorted(cfg.betas):
                    for chi in cfg.characters:
                        twisted_product_scan(beta, cfg.t, chi, cfg.x_max).write_csv(fp)
    except OSError as exc:
        print(f"adelic: cannot write {exc.filename}: {exc.strerror}", file=sys.stderr)
        return EXIT_IO

    bad = failed(rows)
    for r in bad:
        print(f"adelic: audit failed: {r.quantity} {r.as_dict()['params']} value={r.value!r} tol={r.tolerance}", file=sys.stderr)
    return EXIT_AUDIT if bad else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
