"""Command line front end.

Subcommands: ``run <config>`` executes an experiment config and writes its
outputs, ``validate <config>`` parses and echoes the canonical form,
``list-maps`` prints the builtin map families, ``demo <name>`` materializes
a bundled example config and runs it.  Exit codes: 0 success, 2 config
error, 3 experiment verdict failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from rimlab.config import ConfigError, parse_config, parse_config_file, emit_config
from rimlab.experiments import DEMOS, emit_outputs, run_experiment
from rimlab.maps import BUILTIN_ALIASES, BUILTIN_FAMILIES

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VERDICT = 3


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="rimlab",
        description="random interval map laboratory: orbits, transfer operators, "
                    "return-time statistics and bound checks")
    ap.add_argument("--out-dir", default="out", help="output directory (default: ./out)")
    ap.add_argument("--threads", type=int, default=1, help="worker threads for sampling")
    ap.add_argument("--seed-override", type=int, default=None,
                    help="replace the config seed")
    ap.add_argument("--formats", default="csv,json,svg",
                    help="comma list from csv,json,svg")
    sub = ap.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment config")
    run_p.add_argument("config", type=Path)

    val_p = sub.add_parser("validate", help="parse a config and echo its canonical form")
    val_p.add_argument("config", type=Path)

    sub.add_parser("list-maps", help="list builtin map families and aliases")

    demo_p = sub.add_parser("demo", help="write and run a bundled demo config")
    demo_p.add_argument("name", choices=sorted(DEMOS))
    return ap


def _with_seed(cfg, seed):
    if seed is None:
        return cfg
    system = dataclasses.replace(cfg.system, seed=seed)
    return dataclasses.replace(cfg, system=system)


def _run(cfg, args) -> int:
    cfg = _with_seed(cfg, args.seed_override)
    formats = tuple(f.strip() for f in args.formats.split(",") if f.strip())
    unknown = set(formats) - {"csv", "json", "svg"}
    if unknown:
        print(f"error: unknown formats {sorted(unknown)}", file=sys.stderr)
        return EXIT_CONFIG
    bundle = run_experiment(cfg, threads=max(1, args.threads))
    written = emit_outputs(bundle, args.out_dir, formats)
    for path in written:
        print(path)
    for name, ok in sorted(bundle.verdicts.items()):
        print(f"verdict {name}: {'pass' if ok else 'FAIL'}")
    for name, err in sorted(bundle.errors.items()):
        print(f"error in {name}: {err}", file=sys.stderr)
    return EXIT_OK if bundle.ok else EXIT_VERDICT


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _run(parse_config_file(args.config), args)
        if args.command == "validate":
            cfg = parse_config_file(args.config)
            sys.stdout.write(emit_config(cfg))
            print("config ok")
            return EXIT_OK
        if args.command == "list-maps":
            print(f"{'family':<14} {'parameters':<12} description")
            for name, (_, params, desc) in sorted(BUILTIN_FAMILIES.items()):
                print(f"{name:<14} {', '.join(params) or '-':<12} {desc}")
            print("\naliases:")
            for alias, (family, defaults) in sorted(BUILTIN_ALIASES.items()):
                args_s = ", ".join(f"{k}={v:g}" for k, v in defaults.items())
                print(f"  {alias:<10} -> {family}({args_s})")
            return EXIT_OK
        if args.command == "demo":
            out_dir = Path(args.out_dir)
            out_dir.mkdir(parents=True, exist_ok=True)
            cfg_path = out_dir / f"demo-{args.name}.config"
            cfg_path.write_text(DEMOS[args.name], encoding="utf-8")
            print(cfg_path)
            return _run(parse_config(DEMOS[args.name]), args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
