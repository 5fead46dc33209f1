#!/usr/bin/env python3
"""Write the imaginary parts of the first COUNT nontrivial zeta zeros.

Usage: gen_zeros.py COUNT OUT_PATH
Requires mpmath. Output format: one decimal per line, '#' comments allowed.
"""
import sys
from concurrent.futures import ProcessPoolExecutor

import mpmath


def zero(n):
    mpmath.mp.dps = 25
    return mpmath.nstr(mpmath.zetazero(n).imag, 18, strip_zeros=False)


def main():
    count = int(sys.argv[1])
    out = sys.argv[2]
    with ProcessPoolExecutor() as pool:
        values = list(pool.map(zero, range(1, count + 1), chunksize=32))
    with open(out, "w") as fh:
        fh.write(f"# imaginary parts of the first {count} nontrivial zeros of zeta\n")
        fh.write("# computed with mpmath.zetazero at 25 significant digits\n")
        for v in values:
            fh.write(v + "\n")


if __name__ == "__main__":
    main()
