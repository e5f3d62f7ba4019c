"""Command-line entry point: ``sctransport <subcommand> [--config F] [--out D] [--workers N] [--set k=v ...]``."""

from __future__ import annotations

import argparse
import sys

from .harness import KINDS, ConfigError, ExperimentConfig, ExperimentError, run, validate

SUBCOMMANDS = {
    "simulate": "trajectory",
    "escape": "escape-scan",
    "horn": "horn",
    "circles": "circles",
    "spo": "spo-branch",
    "nform": "normal-form",
}


def _overrides(pairs: list[str]) -> dict[str, str]:
    out = {}
    for s in pairs:
        if "=" not in s:
            raise ConfigError(f"--set expects key=value, got {s!r}")
        k, v = s.split("=", 1)
        out[k.strip().replace("-", "_")] = v
    return out


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI file with one section per experiment kind")
    p.add_argument("--out", help="output directory (overrides [run] out)")
    p.add_argument("--workers", type=int, help="worker processes for independent cells")
    p.add_argument("--set", dest="sets", action="append", default=[], metavar="KEY=VALUE", help="override one parameter; repeatable")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sctransport", description=__doc__)
    sub = ap.add_subparsers(dest="cmd", required=True)
    for name, kind in SUBCOMMANDS.items():
        _common(sub.add_parser(name, help=f"run the {kind} experiment"))
    v = sub.add_parser("validate", help="check a configuration without running it")
    v.add_argument("kind", choices=KINDS)
    _common(v)
    return ap


def _error(kind: str, exc: BaseException) -> None:
    msg = str(exc).replace("\n", " ").replace('"', "'")
    print(f'error kind={kind} type={type(exc).__name__} message="{msg}"', file=sys.stderr)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    kind = args.kind if args.cmd == "validate" else SUBCOMMANDS[args.cmd]
    try:
        cfg = ExperimentConfig.from_sources(kind, args.config, _overrides(args.sets), args.out, args.workers)
        if args.cmd == "validate":
            bad = validate(cfg)
            for b in bad:
                print(f"violation kind={kind}: {b}")
            if bad:
                return 1
            print(f"ok kind={kind}")
            return 0
        man = run(cfg)
    except ExperimentError as exc:
        _error(kind, exc.cause)
        return 2
    except (ConfigError, ValueError, OSError) as exc:
        _error(kind, exc)
        return 2
    print(f"ok kind={kind} out={cfg.out_dir} files={len(man.files)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
