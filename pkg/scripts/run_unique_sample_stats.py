"""Unique-sample statistics (min/mean/max distinct elements) per scheme.

Runs the four studied (n, b, m) configurations at 10^4 Monte-Carlo trials
each, for all five schemes, and prints one CSV. The last row family
(n=60000) takes a few seconds per scheme.
"""

import argparse
import sys

from subamp.sampling import mc_stats
from subamp.schemes import MUSTow, MUSTww, Poisson, WOR, WR

CONFIGS = [
    (300, 50, 30),
    (1000, 200, 100),
    (30969, 500, 300),
    (60000, 3000, 2000),
]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--trials", type=int, default=10_000)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--output", default=None)
    args = parser.parse_args(argv)

    out = open(args.output, "w") if args.output else sys.stdout
    out.write("# schema=1\n")
    out.write("n,b,m,scheme,trials,unique_min,unique_mean,unique_max,eta_hat\n")
    for n, b, m in CONFIGS:
        for tag, scheme in (
            ("wor", WOR(n, m)),
            ("poisson", Poisson(m / n, n=n)),
            ("wr", WR(n, m)),
            ("mustow", MUSTow(n, b, m)),
            ("mustww", MUSTww(n, b, m)),
        ):
            s = mc_stats(scheme, args.trials, args.seed)
            out.write(
                f"{n},{b},{m},{tag},{s.trials},{s.unique_min},"
                f"{s.unique_mean:.12g},{s.unique_max},{s.eta_hat:.12g}\n"
            )
    if args.output:
        out.close()
    return 0


if __name__ == "__main__":
    sys.exit(main())
