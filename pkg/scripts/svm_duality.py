"""Train soft-margin SVMs on seeded separable data and print primal, dual and
the duality gap for each kernel."""

import argparse
import warnings

import numpy as np

from classicml.svm import KernelSpec, duality_report, train


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--m", type=int, default=30)
    ap.add_argument("--nu", type=float, default=5.0)
    args = ap.parse_args()

    kernels = {"linear": KernelSpec.linear(), "rbf": KernelSpec.rbf(1.0), "poly2": KernelSpec.poly(2, 1.0)}
    print("kernel,seed,support_vectors,primal,dual,gap")
    for seed in range(args.seeds):
        rng = np.random.default_rng(seed)
        w = rng.normal(size=2)
        x = rng.normal(size=(3 * args.m, 2))
        f = x @ w
        keep = np.abs(f) > 0.3 * np.linalg.norm(w)
        x, y = x[keep][: args.m], np.where(f[keep][: args.m] > 0, 1.0, -1.0)
        for name, spec in kernels.items():
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                model = train(x, y, spec, nu=args.nu)
            rep = duality_report(model, x, y)
            print(f"{name},{seed},{model.support_index.size},{rep.primal:.8g},{rep.dual:.8g},{rep.gap:.3g}")


if __name__ == "__main__":
    main()
