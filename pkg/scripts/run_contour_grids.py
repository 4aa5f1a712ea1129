"""Contour grids of eta and delta'-delta over (b, m) for the 2-stage schemes.

Defaults: n=1000, b in [150, 200], m in [100, 150] (51x51 per scheme),
base eps = 1 with both mechanisms at theta = 1.
"""

import sys

from subamp.cli import main as cli_main


def main(argv=None) -> int:
    parser_args = list(sys.argv[1:] if argv is None else argv)
    base_dir = "contours"
    passthrough = []
    it = iter(parser_args)
    for arg in it:
        if arg == "--output-dir":
            base_dir = next(it, base_dir)
        elif arg.startswith("--output-dir="):
            base_dir = arg.split("=", 1)[1]
        else:
            passthrough.append(arg)

    code = 0
    for family in ("laplace", "gaussian"):
        run = [
            "contour",
            "--schemes", "mustow,mustww",
            "--n", "1000",
            "--b-range", "150:200",
            "--m-range", "100:150",
            "--family", family,
            "--theta", "1",
            "--eps", "1",
            "--output-dir", f"{base_dir}/{family}",
        ] + passthrough
        code = max(code, cli_main(run))
    return code


if __name__ == "__main__":
    sys.exit(main())
