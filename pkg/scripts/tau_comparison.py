"""Compare the three t-entropy estimators on random Markov measures of the full 2-shift."""

import argparse
import math

import numpy as np

from thermoform.fixtures import get_fixture
from thermoform.measures import ks_entropy, markov_measure
from thermoform.observables import cylinder_function
from thermoform.tentropy import t_entropy_closed_form, t_entropy_partition, t_entropy_radon
from thermoform.transfer import perron_frobenius


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--samples", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    S = get_fixture("full2").system()
    print(f"{'p':>6} {'q':>6} {'w0':>7} {'w1':>7} {'h_KS':>8} {'closed':>9} {'radon':>9} {'partition':>9}")
    for _ in range(args.samples):
        p, q = rng.uniform(0.05, 0.95, 2)
        w = np.exp(rng.uniform(-1.5, 1.5, 2))
        mu = markov_measure(S, [[1 - p, p], [q, 1 - q]])
        T = perron_frobenius(S, cylinder_function(w))
        closed = t_entropy_closed_form(T, mu)
        radon = t_entropy_radon(T, mu).headline
        part = t_entropy_partition(T, mu).headline
        print(f"{p:6.3f} {q:6.3f} {w[0]:7.3f} {w[1]:7.3f} {ks_entropy(mu):8.4f} "
              f"{closed:9.5f} {radon:9.5f} {part:9.5f}")
    print(f"(reference: ln 2 = {math.log(2):.5f})")


if __name__ == "__main__":
    main()
