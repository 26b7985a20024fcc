"""
Command-line front end.

    python cli.py reduce network.json [--route ito|strat|both] [--tol T] [--out FILE]
    python cli.py convert component.json --to slh|strat
    python cli.py check network.json
    python cli.py series second.json first.json
    python cli.py examples --out DIR

stdout carries model documents only; diagnostics go to stderr as JSON
{error, detail, block, smallest_pivot}. `reduce --route both` also writes
{"discrepancy": x} to stderr on success. Exit codes: 0 success, 2 when the
requested reduction or form does not exist, 1 for everything else.
"""

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import List, Literal, Optional, TextIO

from pydantic import BaseModel, Field, ValidationError

from errors import ConfigError, NetlistSyntaxError, QFNError
from example_catalog import example_names, example_text
from linalg_core import Tolerances, default_tolerances
from netlist_io import (
    FORMS,
    ROUTES,
    NetworkSpec,
    convert_network,
    network_diagnostics,
    parse_network,
    reduce_network,
    serialize_model,
    series_network,
)

logger = logging.getLogger("qfn.cli")

LOG_LEVEL = os.environ.get("QFN_LOG_LEVEL", "WARNING").upper()
LOG_FORMAT = "[%(name)s] %(levelname)s %(message)s"


class CliConfig(BaseModel):
    """Validated invocation, built from argv."""

    command: Literal["reduce", "convert", "check", "series", "examples"]
    inputs: List[str] = []
    route: Literal["ito", "strat", "both"] = "ito"
    to: Optional[Literal["slh", "strat"]] = None
    tol: Optional[float] = Field(default=None, gt=0)
    out: Optional[str] = None

    def tolerances(self) -> Tolerances:
        if self.tol is None:
            return default_tolerances()
        return Tolerances.with_eq_tol(self.tol)


class _Parser(argparse.ArgumentParser):
    """Usage errors become ConfigError so they are reported like every other failure."""

    def error(self, message):
        raise ConfigError(message, block="argv")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="qfn",
        description="Reduce quantum feedback networks in SLH and Stratonovich form",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  qfn examples --out docs/
  qfn reduce docs/beamsplitter_gamma0.json --route ito
  qfn reduce docs/beamsplitter.json --route both --tol 1e-8
  qfn convert docs/mirror.json --to strat
        """,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, with_out=True):
        p.add_argument("--tol", type=float, help="eq_tol for this run (default: $QFN_TOL or 1e-9)")
        if with_out:
            p.add_argument("--out", "-o", type=str, help="Write the document here instead of stdout")

    p = sub.add_parser("reduce", help="Eliminate every connected channel")
    p.add_argument("file")
    p.add_argument("--route", choices=ROUTES, default="ito")
    add_common(p)

    p = sub.add_parser("convert", help="Convert a single-component document to the other form")
    p.add_argument("file")
    p.add_argument("--to", choices=FORMS, required=True)
    add_common(p)

    p = sub.add_parser("check", help="Well-posedness and representability diagnostics")
    p.add_argument("file")
    add_common(p, with_out=False)

    p = sub.add_parser("series", help="second ◁ first for two single-component documents")
    p.add_argument("second")
    p.add_argument("first")
    add_common(p)

    p = sub.add_parser("examples", help="Write the bundled example documents")
    p.add_argument("--out", "-o", type=str, required=True, help="Target directory")
    return parser


def parse_config(argv: List[str]) -> CliConfig:
    args = build_parser().parse_args(argv)
    inputs = [args.second, args.first] if args.command == "series" else (
        [args.file] if hasattr(args, "file") else [])
    try:
        return CliConfig(
            command=args.command,
            inputs=inputs,
            route=getattr(args, "route", "ito"),
            to=getattr(args, "to", None),
            tol=getattr(args, "tol", None),
            out=getattr(args, "out", None),
        )
    except ValidationError as e:
        first = e.errors()[0]
        raise ConfigError(f"{'.'.join(str(p) for p in first['loc'])}: {first['msg']}", block="argv") from e


def _load(path: str, tol: Tolerances) -> NetworkSpec:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"Cannot read {path}: {e.strerror}", block=path) from e
    except UnicodeDecodeError as e:
        raise NetlistSyntaxError(f"{path} is not valid UTF-8 (byte offset {e.start})") from e
    return parse_network(text, tol)


def _emit(text: str, config: CliConfig, stdout: TextIO):
    if config.out:
        Path(config.out).write_text(text, encoding="utf-8")
        logger.info(f"Wrote {config.out}")
    else:
        stdout.write(text)


def _run(config: CliConfig, stdout: TextIO, stderr: TextIO):
    if config.command == "examples":
        target = Path(config.out)
        target.mkdir(parents=True, exist_ok=True)
        for name in example_names():
            path = target / f"{name}.json"
            path.write_text(example_text(name), encoding="utf-8")
            stdout.write(f"{path}\n")
        logger.info(f"Wrote {len(example_names())} example document(s) to {target}")
        return

    tol = config.tolerances()
    if config.command == "reduce":
        result = reduce_network(_load(config.inputs[0], tol), config.route, tol)
        if result.discrepancy is not None:
            logger.info(f"Cross-check discrepancy {result.discrepancy:.3e}")
            stderr.write(json.dumps({"discrepancy": result.discrepancy}) + "\n")
        _emit(serialize_model(result), config, stdout)
    elif config.command == "convert":
        _emit(serialize_model(convert_network(_load(config.inputs[0], tol), config.to, tol)), config, stdout)
    elif config.command == "series":
        second, first = (_load(p, tol) for p in config.inputs)
        _emit(serialize_model(series_network(second, first, tol)), config, stdout)
    elif config.command == "check":
        stdout.write(json.dumps(network_diagnostics(_load(config.inputs[0], tol), tol), indent=2) + "\n")


def run_cli(argv: List[str], stdout: TextIO = None, stderr: TextIO = None) -> int:
    """Run one command; returns the exit code."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        config = parse_config(argv)
        _run(config, stdout, stderr)
    except QFNError as e:
        logger.debug(f"{type(e).__name__}: {e.detail}")
        stderr.write(json.dumps(e.to_dict()) + "\n")
        return e.exit_code
    return 0


def main() -> int:
    logging.basicConfig(stream=sys.stderr, level=LOG_LEVEL, format=LOG_FORMAT)
    return run_cli(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
