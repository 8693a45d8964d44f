"""Operation counts and wall time of the moment tables versus dimension.

With distinct coordinate polynomials the tree has n leaves and n - 1
merges; with identical ones the cache collapses each level to one table.
"""

import argparse
import time
from fractions import Fraction

from clipvol.moments import MomentFamily, MomentStats, block_moments
from clipvol.polynomial import UnivariatePolynomial


def family(n, distinct):
    polys = []
    for q in range(n):
        shift = Fraction(q + 1, n + 1) if distinct else Fraction(1, 2)
        polys.append(UnivariatePolynomial((shift * shift, -2 * shift, 1)))
    return MomentFamily.plain(polys)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dims", default="1,2,4,8,16,32")
    ap.add_argument("--max-power", type=int, default=200)
    args = ap.parse_args()

    print("n,distinct,leaves,merges,cache_hits,multiplications,seconds")
    for n in (int(v) for v in args.dims.split(",")):
        for distinct in (False, True):
            stats = MomentStats()
            start = time.perf_counter()
            block_moments(family(n, distinct), args.max_power, stats=stats)
            secs = time.perf_counter() - start
            print(f"{n},{int(distinct)},{stats.leaves},{stats.merges},{stats.cache_hits},"
                  f"{stats.multiplications},{secs:.3f}", flush=True)


if __name__ == "__main__":
    main()
