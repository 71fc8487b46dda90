"""Command line entry point: ``fxmst analyze`` and ``fxmst synth``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path

from . import ingest, msttree, scaling, spectrum, synth

logger = logging.getLogger("fxmst")


@dataclass
class RunConfig:
    input: str
    out: Path
    base: str = "all"
    despike_sigma: float = 5.0
    fit_mode: str = "two"
    groups: str | None = None
    tau: int = 1
    quote: str | None = None
    workers: int = 1

    def __post_init__(self):
        if self.despike_sigma <= 0:
            raise ValueError("--despike-sigma must be positive")
        if self.fit_mode not in ("two", "unit"):
            raise ValueError("--fit-mode must be 'two' or 'unit'")
        if self.tau < 1:
            raise ValueError("--tau must be a positive integer")


def write_atomic(path: Path, data: bytes) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read_input(path: str) -> bytes:
    if path == "-":
        return sys.stdin.buffer.read()
    return Path(path).read_bytes()


def cmd_analyze(cfg: RunConfig) -> int:
    panel = ingest.synchronize(ingest.parse_rates(_read_input(cfg.input), quote=cfg.quote))
    groups = ingest.load_groups(cfg.groups)
    available = set(panel.currencies) | ({panel.quote} if panel.quote else set())
    if cfg.base == "all":
        bases = None
    else:
        if cfg.base not in available:
            print(f"error: base currency {cfg.base} is not in the panel", file=sys.stderr)
            return 2
        bases = [cfg.base]

    result = scaling.sweep_report(
        panel,
        groups,
        despike_threshold=cfg.despike_sigma,
        unit_amplitude=cfg.fit_mode == "unit",
        tau=cfg.tau,
        bases=bases,
        workers=cfg.workers,
    )

    cfg.out.mkdir(parents=True, exist_ok=True)
    for r in result.reports:
        if not r.ok:
            continue
        write_atomic(cfg.out / f"{r.base}_mst.dot", msttree.export_tree(r.tree, "dot", name=r.base))
        write_atomic(cfg.out / f"{r.base}_fk.csv", msttree.distribution_to_csv(r.distribution))
        write_atomic(cfg.out / f"{r.base}_spectrum.csv", spectrum.spectrum_to_csv(r.base, r.spectrum))
    write_atomic(cfg.out / "report.csv", scaling.report_to_csv(result))
    write_atomic(cfg.out / "scatter.csv", scaling.scatter_to_csv(result))
    summary = json.dumps(scaling.beta_summary(result), indent=2, sort_keys=True) + "\n"
    write_atomic(cfg.out / "beta_fit.json", summary.encode("utf-8"))

    for r in result.failures:
        print(f"base {r.base} failed: {r.error}", file=sys.stderr)
    return 1 if result.failures else 0


def cmd_synth(args: argparse.Namespace) -> int:
    if args.model == "walk":
        panel = synth.random_walk_panel(args.n or 60, args.t, args.seed)
    elif args.model == "hier":
        spec = synth.HierarchySpec(
            args.m, args.levels, args.corr, args.noise, args.seed, loading_ratio=args.loading_ratio
        )
        panel = synth.hierarchical_panel(spec, args.t, n=args.n)
    else:
        panel = synth.one_factor_panel(args.n or 60, args.t, args.strength, args.seed)
    sys.stdout.buffer.write(ingest.serialize_rates(panel))
    sys.stdout.flush()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fxmst", description="Currency-network MST analysis")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="sweep base currencies and write reports")
    a.add_argument("--input", required=True, help="panel CSV path, or - for stdin")
    a.add_argument("--out", required=True, type=Path, help="output directory")
    a.add_argument("--base", default="all", help="base currency code or 'all'")
    a.add_argument("--despike-sigma", type=float, default=5.0)
    a.add_argument("--fit-mode", choices=("two", "unit"), default="two")
    a.add_argument("--groups", default=None, help="JSON group assignment (default: bundled)")
    a.add_argument("--tau", type=int, default=1)
    a.add_argument("--quote", default=None, help="currency the raw prices are quoted in, if not a column")
    a.add_argument("--workers", type=int, default=1)

    s = sub.add_parser("synth", help="write a synthetic panel CSV to stdout")
    s.add_argument("--model", choices=("walk", "hier", "factor"), default="walk")
    s.add_argument("--n", type=int, default=None, help="number of currencies (hier: keep first n leaves)")
    s.add_argument("--t", type=int, default=1658, help="number of dates")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--m", type=int, default=3, help="hier: replication factor")
    s.add_argument("--levels", type=int, default=3, help="hier: depth")
    s.add_argument("--corr", type=float, default=0.6, help="hier: sibling correlation")
    s.add_argument("--noise", type=float, default=1.0, help="hier: idiosyncratic noise scale")
    s.add_argument("--loading-ratio", type=float, default=0.5)
    s.add_argument("--strength", type=float, default=1.0, help="factor: factor strength")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(message)s")
    try:
        if args.command == "synth":
            return cmd_synth(args)
        cfg = RunConfig(
            input=args.input,
            out=args.out,
            base=args.base,
            despike_sigma=args.despike_sigma,
            fit_mode=args.fit_mode,
            groups=args.groups,
            tau=args.tau,
            quote=args.quote,
            workers=args.workers,
        )
        return cmd_analyze(cfg)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
