"""Command-line entry point: one subcommand per quantity, plus ``run`` and ``list-fixtures``."""

from __future__ import annotations

import argparse
import json
import os
import sys

from .estimates import fmt
from .experiments import OUT_ENV, TASKS, ConfigError, load_config, run, validate_config
from .fixtures import list_fixtures


def _ladder(text: str, cast):
    try:
        return [cast(eval_fraction(t)) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad ladder {text!r}") from None


def eval_fraction(t: str) -> float:
    """``"2^-5"``, ``"1/32"`` or a plain number."""
    t = t.strip()
    if "^" in t:
        b, e = t.split("^")
        return float(b) ** float(e)
    if "/" in t:
        a, b = t.split("/")
        return float(a) / float(b)
    return float(t)


def _common(p: argparse.ArgumentParser):
    p.add_argument("--fixture", help="catalog name (see list-fixtures)")
    p.add_argument("--config", help="JSON experiment config; command-line flags override its fields")
    p.add_argument("--nmax", type=int, dest="n_max")
    p.add_argument("--eps-ladder", type=lambda s: _ladder(s, float), dest="eps_ladder",
                   help="comma list, e.g. 2^-4,2^-5,2^-6")
    p.add_argument("--n-ladder", type=lambda s: _ladder(s, int), dest="n_ladder")
    p.add_argument("--resolution", type=eval_fraction)
    p.add_argument("--depth", type=int)
    p.add_argument("--psi", type=int, dest="psi_index", help="index into the fixture's potentials")
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./reports)")
    p.add_argument("--strict", action="store_true", default=None, help="exit 1 when any row FAILs")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="thermoform", description="thermodynamic-formalism estimators")
    sub = ap.add_subparsers(dest="command", required=True)
    for t in TASKS:
        _common(sub.add_parser(t, help=f"run the {t} task"))
    r = sub.add_parser("run", help="run a task named by --task")
    _common(r)
    r.add_argument("--task", choices=TASKS)
    lf = sub.add_parser("list-fixtures", help="print the fixture catalog as JSON")
    lf.add_argument("filter", nargs="?", default="")
    return ap


_OVERRIDES = ("fixture", "n_max", "eps_ladder", "n_ladder", "resolution", "depth", "psi_index", "out",
              "strict", "seed", "workers")


def config_from_args(args) -> "ExperimentConfig":  # noqa: F821
    raw = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as e:
                raise ConfigError(f"config: invalid JSON ({e})") from None
    task = args.command if args.command != "run" else (args.task or raw.get("task"))
    raw["task"] = task
    for k in _OVERRIDES:
        v = getattr(args, k, None)
        if v is not None:
            raw[k] = v
    if "fixture" in raw and "system" in raw and args.fixture:
        raw.pop("system")
    return validate_config(raw)


def _headline(rep) -> list[str]:
    lines = [f"fixture={rep.fixture} task={rep.task} fingerprint={rep.fingerprint[:16]}"]
    for k, v in rep.results.items():
        if k == "fixture":
            continue
        if isinstance(v, dict) and "headline" in v:
            acc = v.get("accelerated")
            extra = "" if acc is None else f" accelerated={fmt(acc) if not isinstance(acc, str) else acc}"
            lines.append(f"{k}: headline={v['headline']} ({v.get('headline_bound', '')}){extra}")
        elif isinstance(v, dict) and "status" in v:
            lines.append(f"{k}: {v['status']}")
    for name, (cols, rows) in rep.tables.items():
        if "status" in cols:
            for r in rows:
                lines.append("  " + "  ".join(_short(r.get(c)) for c in cols if c not in ("note",)))
    return lines


def _short(v) -> str:
    if isinstance(v, float):
        return fmt(v)
    return str(v)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list-fixtures":
        print(json.dumps(list_fixtures(args.filter), indent=2))
        return 0
    try:
        cfg = config_from_args(args)
        rep = run(cfg)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    out = cfg.out or os.environ.get(OUT_ENV) or "reports"
    paths = rep.write(out)
    for line in _headline(rep):
        print(line)
    for p in paths:
        print(f"wrote {p}")
    return 1 if (cfg.strict and rep.failed) else 0


if __name__ == "__main__":
    sys.exit(main())
