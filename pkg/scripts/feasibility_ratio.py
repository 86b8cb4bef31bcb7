"""log V(x_eps) / log eps for scaled-program solutions over seeded runs."""
import argparse
import math
from dataclasses import dataclass, field

from scaledscenario.problem import pole_assignment
from scaledscenario.validate import feasibility_ratio


@dataclass
class RatioRun:
    scale: float = 1.2
    epsilons: list[float] = field(default_factory=lambda: [1e-2, 1e-3])
    runs: int = 20
    beta: float = 0.05


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scale", type=float, default=1.2)
    ap.add_argument("--runs", type=int, default=20)
    args = ap.parse_args()
    cfg = RatioRun(scale=args.scale, runs=args.runs)
    p = pole_assignment()
    mc = [int(round(1e4 / e)) for e in cfg.epsilons]
    print("seed,epsilon,N,status,hits,ratio")
    for seed in range(cfg.runs):
        for r in feasibility_ratio(p, cfg.scale, cfg.beta, cfg.epsilons, mc, seed):
            ratio = "" if math.isnan(r.ratio) else f"{r.ratio:.4f}"
            print(f"{seed},{r.epsilon:g},{r.N},{r.status},{r.hits},{ratio}")


if __name__ == "__main__":
    main()
