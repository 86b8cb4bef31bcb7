"""Table of classical and scaled scenario counts over a grid of epsilons."""
import argparse
from dataclasses import dataclass, field

from scaledscenario.samplesize import classical_size, reduction_exponent, scaled_size


@dataclass
class SizeTable:
    epsilons: list[float] = field(default_factory=lambda: [1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-8])
    scales: list[float] = field(default_factory=lambda: [1.1, 1.2, 1.5])
    beta: float = 0.05
    n_dims: int = 2
    alpha: float = 2.0


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-dims", type=int, default=2)
    ap.add_argument("--alpha", type=float, default=2.0)
    args = ap.parse_args()
    cfg = SizeTable(n_dims=args.n_dims, alpha=args.alpha)
    head = ["epsilon", "classical"] + [f"s={s:g}" for s in cfg.scales] + [f"logratio s={s:g}" for s in cfg.scales]
    print(",".join(head))
    for eps in cfg.epsilons:
        row = [f"{eps:g}", str(classical_size(eps, cfg.beta, cfg.n_dims))]
        row += [str(scaled_size(eps, cfg.beta, cfg.n_dims, s, cfg.alpha)) for s in cfg.scales]
        row += [f"{reduction_exponent(eps, cfg.beta, s, cfg.alpha, cfg.n_dims):.4f}" for s in cfg.scales]
        print(",".join(row))


if __name__ == "__main__":
    main()
