"""Monte Carlo tail ratios against their closed forms for scalar laws."""
import argparse
from dataclasses import dataclass, field

import numpy as np

from scaledscenario import distributions as dists
from scaledscenario.validate import exact_tail_ratio, tail_ratio


@dataclass
class TailCheck:
    thresholds: list[float] = field(default_factory=lambda: [1, 2, 3, 4, 5, 6, 8])
    samples: int = 10**7
    seed: int = 0
    workers: int = 1


LAWS = {
    "normal": dists.MultivariateNormal([0.0], [[1.0]]),
    "exponential": dists.WeibullIndependent(1.0, [1.0]),
    "weibull-1.5": dists.WeibullIndependent(1.5, [1.0]),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--samples", type=int, default=10**7)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    cfg = TailCheck(samples=args.samples, workers=args.workers)
    print("law,u,mc_ratio,exact_ratio,hits,reliable")
    for name, law in LAWS.items():
        rows = tail_ratio([1.0], [np.array([[1.0]])], law, cfg.thresholds,
                                 cfg.samples, cfg.seed, workers=cfg.workers)
        for r in rows:
            print(f"{name},{r.u:g},{r.ratio:.5f},{exact_tail_ratio(law, r.u):.5f},{r.hits},{int(r.reliable)}")


if __name__ == "__main__":
    main()
