"""Write convergence tables (entropy, lambda, pressure, omega, gamma) for a set of fixtures.

    python3 scripts/convergence_tables.py --out reports/convergence full2 golden doubling
"""

import argparse

from thermoform.experiments import run, validate_config
from thermoform.fixtures import CATALOG

TASKS = ("entropy", "lambda", "pressure", "omega", "gamma")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("fixtures", nargs="*", default=["full2", "golden", "doubling", "tripling", "rotation"])
    ap.add_argument("--out", default="reports/convergence")
    ap.add_argument("--tasks", default=",".join(TASKS))
    args = ap.parse_args()
    for name in args.fixtures:
        if name not in CATALOG:
            raise SystemExit(f"unknown fixture {name!r}; choose from {', '.join(CATALOG)}")
        for task in args.tasks.split(","):
            rep = run(validate_config({"task": task, "fixture": name}))
            paths = rep.write(args.out)
            head = rep.results.get(task if task != "entropy" else "h", {})
            value = head.get("headline") if isinstance(head, dict) else None
            print(f"{name:12s} {task:9s} headline={value!s:24s} -> {paths[0].name}")


if __name__ == "__main__":
    main()
