"""Aligned-profile curves (eps'/eps vs delta'-delta) for plotting.

Writes one CSV per (family, scheme) into --output-dir; with the defaults
that is 8 files covering WOR/WR/MUSTow/MUSTww under both mechanisms at
theta in {0.25, 1} over eps in (0, 6].
"""

import sys

from subamp.cli import main as cli_main


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    defaults = [
        "aligned",
        "--schemes", "wor,wr,mustow,mustww",
        "--families", "laplace,gaussian",
        "--thetas", "0.25,1",
        "--n", "1000", "--m", "400", "--b", "500",
        "--eps-grid", "0.05:6:120",
    ]
    if not any(a.startswith("--output-dir") for a in argv):
        argv += ["--output-dir", "aligned_curves"]
    return cli_main(defaults + argv)


if __name__ == "__main__":
    sys.exit(main())
