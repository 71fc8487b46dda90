"""Compare fitted tails of deterministic hierarchies with ln M / ln(M-1).

Prints the full-distribution fit next to a fit restricted to hub degrees,
the only nodes whose counts follow the geometric law exactly.
"""

import argparse
import math

import numpy as np

from fxmst.msttree import distribution_from_degrees
from fxmst.scaling import fit_power
from fxmst.synth import deterministic_hierarchy_degrees


def hub_slope(degrees: list[int], m: int) -> float:
    """Log-log slope of F(K) over the degrees of the level hubs."""
    dist = distribution_from_degrees(degrees)
    hubs = sorted({d for d in degrees if d >= 2 * (m - 1)})
    k = np.array(hubs, dtype=float)
    f = np.array([dist.cumulative[h] for h in hubs])
    if len(k) < 2:
        return math.nan
    return -float(np.polyfit(np.log(k), np.log(f), 1)[0])


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--m", type=int, nargs="+", default=[3, 4, 5, 6])
    p.add_argument("--levels", type=int, default=4)
    args = p.parse_args()

    print(f"{'M':>3s} {'nodes':>6s} {'target':>7s} {'fit':>7s} {'rel':>7s} {'hubs':>7s}")
    for m in args.m:
        degrees = deterministic_hierarchy_degrees(m, args.levels)
        target = math.log(m) / math.log(m - 1)
        fit = fit_power(distribution_from_degrees(degrees)).alpha
        print(
            f"{m:3d} {len(degrees):6d} {target:7.4f} {fit:7.4f} "
            f"{(fit - target) / target:+7.1%} {hub_slope(degrees, m):7.4f}"
        )


if __name__ == "__main__":
    main()
