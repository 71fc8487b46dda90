"""Rank correlation between lambda_max and alpha as factor strength grows.

Each seed gives one ladder of one-factor panels; the script reports the
Spearman coefficient per ladder and how many are negative.
"""

import argparse
from dataclasses import dataclass

import numpy as np
from scipy.stats import spearmanr

from fxmst.returns import log_returns
from fxmst.scaling import analyze_base
from fxmst.synth import one_factor_panel


@dataclass
class TrendConfig:
    seeds: int = 30
    n: int = 60
    t: int = 1658
    s_min: float = 0.25
    s_max: float = 3.0
    steps: int = 8


def ladder(cfg: TrendConfig, seed: int) -> list[tuple[float, float, float]]:
    rows = []
    for s in np.linspace(cfg.s_min, cfg.s_max, cfg.steps):
        report = analyze_base(log_returns(one_factor_panel(cfg.n, cfg.t, float(s), seed)), None)
        rows.append((float(s), report.lambda_max, report.fit.alpha))
    return rows


def main():
    p = argparse.ArgumentParser(description="lambda_max vs alpha on one-factor panels")
    p.add_argument("--seeds", type=int, default=30)
    p.add_argument("--n", type=int, default=60)
    p.add_argument("--t", type=int, default=1658)
    p.add_argument("--steps", type=int, default=8)
    p.add_argument("--verbose", action="store_true", help="print every panel")
    args = p.parse_args()
    cfg = TrendConfig(seeds=args.seeds, n=args.n, t=args.t, steps=args.steps)

    negative = 0
    for seed in range(cfg.seeds):
        rows = ladder(cfg, seed)
        rho = spearmanr([r[1] for r in rows], [r[2] for r in rows]).statistic
        negative += rho < 0
        print(f"seed {seed:3d} spearman {rho:+.3f}")
        if args.verbose:
            for s, lam, alpha in rows:
                print(f"    strength {s:5.2f} lambda_max {lam:7.3f} alpha {alpha:6.3f}")
    print(f"negative in {negative}/{cfg.seeds} ladders")


if __name__ == "__main__":
    main()
