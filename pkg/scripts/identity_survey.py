"""Cross-check the growth-rate identities and inequalities on every catalog fixture."""

import argparse
import time

from thermoform.experiments import identity_bundle, inequality_rows, validate_config
from thermoform.fixtures import CATALOG, get_fixture
from thermoform.tentropy import cross_check_identities


def _print(rows):
    for r in rows:
        print(f"  {r.status:15s} {r.identity:32s} lhs={r.lhs:+.4f} rhs={r.rhs:+.4f}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("fixtures", nargs="*", default=list(CATALOG))
    ap.add_argument("--skip-identities", action="store_true")
    args = ap.parse_args()
    for name in args.fixtures:
        fx = get_fixture(name)
        t = time.time()
        print(f"{name}: {fx.summary}")
        rows, _ = inequality_rows(fx, validate_config({"task": "inequalities", "fixture": name}))
        _print(rows)
        if not args.skip_identities:
            _print(cross_check_identities(identity_bundle(fx, validate_config({"task": "identities", "fixture": name}))))
        print(f"  ({time.time() - t:.1f}s)")


if __name__ == "__main__":
    main()
