"""Rectangle learning experiment: failure rate of the tightest-fit learner
against the sample bound, for a range of sample sizes."""

import argparse

from classicml.pac import BoundQuery, RectangleInstance, rectangle_experiment, sample_bound


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--eps", type=float, default=0.1)
    ap.add_argument("--delta", type=float, default=0.1)
    ap.add_argument("--trials", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    bound = sample_bound(BoundQuery(args.eps, args.delta), "rectangle")
    inst = RectangleInstance()
    print("m,failure_rate,mean_error,strip_hit_rate")
    for m in sorted({5, 10, 20, 40, 80, bound, 2 * bound}):
        rep = rectangle_experiment(inst, args.eps, args.delta, m, args.trials, args.seed)
        print(f"{m},{rep.failure_rate:.4f},{rep.errors.mean():.5f},{rep.net_rate:.4f}")
    print(f"# bound m={bound}, delta={args.delta}")


if __name__ == "__main__":
    main()
