"""Batch command-line interface.

Exit codes: 0 success, 2 usage or input error, 3 numeric failure
(non-convergence, singular matrices, zero-mass conditioning). Stochastic
commands take ``--seed``; the default is 0 unless ``CLASSICML_SEED`` is set.
"""

from __future__ import annotations

import argparse
import os
import sys
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import clustering, infotheory, io, mixtures, pac, probability, spectral, svm
from .errors import ClassicMLError, NumericError

SEED_ENV = "CLASSICML_SEED"


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw == "":
        return 0
    try:
        return int(raw)
    except ValueError:
        raise ClassicMLError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _kv(key: str, value) -> None:
    if isinstance(value, (list, tuple, np.ndarray)):
        value = ",".join(io.fmt(v) for v in np.asarray(value).ravel())
    elif not isinstance(value, str):
        value = io.fmt(value)
    print(f"{key}={value}")


def _frac(v) -> str:
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}" if v.denominator != 1 else str(v.numerator)
    return io.fmt(v)


# -- command handlers -------------------------------------------------------


def cmd_bayes(args) -> int:
    t = io.read_joint_table(args.table)
    exact = t.is_integer and not args.float
    if args.action == "marginals":
        prior, evidence = probability.marginals(t, exact=exact)
        for h, p in zip(t.h_values, prior):
            print(f"P({h})={_frac(p)}")
        for x, p in zip(t.x_values, evidence):
            print(f"P({x})={_frac(p)}")
        return 0
    if args.x is None:
        raise ClassicMLError("bayes posterior needs --x")
    i = t.x_index(args.x)
    post = probability.conditional(t, "x", exact=exact)[:, i]
    for h, p in zip(t.h_values, post):
        print(f"P({h}|{args.x})={_frac(p)}")
    d = probability.decide([float(p) for p in post])
    print(f"decision={t.h_values[d.choice]}")
    return 0


def _parse_vector(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",")], dtype=float)
    except ValueError:
        raise ClassicMLError(f"not a comma-separated list of numbers: {text!r}") from None


def cmd_maxent(args) -> int:
    rows = io.read_matrix(args.constraints)
    if rows.ndim != 2 or rows.shape[1] < 2:
        raise ClassicMLError("constraint rows need feature values followed by a target")
    feats, targets = rows[:, :-1], rows[:, -1]
    n = feats.shape[1]
    prior = _parse_vector(args.prior) if args.prior else np.ones(n)
    model = infotheory.maxent_fit(prior, feats, targets, tol=args.tol)
    io.write_csv(sys.stdout, ["state", "p"], [(i, p) for i, p in enumerate(model.probabilities())])
    _kv("weights", model.weights)
    _kv("log_normalizer", model.log_normalizer)
    _kv("iterations", model.iterations)
    return 0


def _trace_lines(trace: mixtures.EmTrace) -> None:
    _kv("iterations", trace.iterations)
    _kv("converged", trace.converged)
    _kv("loglik", trace.loglik[-1])


def cmd_em(args) -> int:
    seed = args.seed
    if args.model == "coins":
        x, _, _ = io.read_dataset(args.data, label_column=None)
        theta, mu, trace = mixtures.em_coins(x.astype(int), tol=args.tol, max_iter=args.max_iter, seed=seed)
        _kv("lambda", theta.lam)
        _kv("p", theta.p)
        _kv("q", theta.q)
        _trace_lines(trace)
        payload = {"lam": theta.lam, "p": theta.p, "q": theta.q, "responsibilities": mu, "loglik": trace.loglik}
    elif args.model == "gmm":
        x, _, _ = io.read_dataset(args.data, label_column=None)
        theta, resp, trace = mixtures.em_gmm(x, args.k, tol=args.tol, max_iter=args.max_iter, seed=seed)
        _kv("weights", theta.weights)
        for j in range(theta.k):
            _kv(f"center[{j}]", theta.centers[j])
        _kv("variances", theta.variances)
        _trace_lines(trace)
        payload = {
            "weights": theta.weights,
            "centers": theta.centers,
            "variances": theta.variances,
            "responsibilities": resp,
            "loglik": trace.loglik,
        }
    else:
        g = io.read_triples(args.triples)
        theta, trace = mixtures.em_plsa(g, args.k, tol=args.tol, max_iter=args.max_iter, seed=seed, rule=args.rule)
        _kv("weights", theta.weights)
        for j in range(theta.weights.size):
            _kv(f"words[{j}]", theta.words[j])
            _kv(f"docs[{j}]", theta.docs[j])
        _trace_lines(trace)
        payload = {"weights": theta.weights, "words": theta.words, "docs": theta.docs, "loglik": trace.loglik}
    if args.out:
        io.save_model(args.out, f"em-{args.model}", payload, seed=seed, flags=_flags(args))
    return 0


def _kernel(args) -> svm.KernelSpec:
    if args.kernel == "linear":
        return svm.KernelSpec.linear()
    if args.kernel == "poly":
        if args.theta > 0:
            return svm.KernelSpec("poly_inhomogeneous", degree=args.degree, theta=args.theta)
        return svm.KernelSpec("poly_homogeneous", degree=args.degree)
    return svm.KernelSpec.rbf(args.sigma)


def _flags(args) -> dict:
    skip = {"func", "out"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip and not callable(v)}


def cmd_svm(args) -> int:
    if args.action == "train":
        x, y, _ = io.read_dataset(args.data)
        if y is None:
            raise ClassicMLError(f"{args.data}: missing label column 'y'")
        spec = _kernel(args)
        model = svm.train(x, y, spec, nu=args.nu, tol=args.tol)
        rep = svm.duality_report(model, x, y)
        _kv("support_vectors", int(model.support_index.size))
        _kv("b", model.b)
        _kv("dual", rep.dual)
        _kv("primal", rep.primal)
        _kv("gap", rep.gap)
        _kv("converged", model.converged)
        if args.out:
            io.save_model(args.out, "svm", io.svm_payload(model), seed=args.seed, flags=_flags(args))
        return 0
    doc = io.load_model(args.model, "svm")
    model = io.svm_from_payload(doc["payload"])
    x, _, _ = io.read_dataset(args.data)
    raw = svm.decision_values(model, x)
    labels = np.where(raw >= 0, 1, -1)
    io.write_csv(sys.stdout, ["index", "label", "value"], [(i, int(l), v) for i, (l, v) in enumerate(zip(labels, raw))])
    return 0


def _write_coords(coords: np.ndarray, prefix: str) -> None:
    coords = np.atleast_2d(coords)
    header = ["index"] + [f"{prefix}{j + 1}" for j in range(coords.shape[1])]
    io.write_csv(sys.stdout, header, [[i, *row] for i, row in enumerate(coords)])


def cmd_pca(args) -> int:
    x, _, _ = io.read_dataset(args.data, label_column=None)
    basis = spectral.pca_smallsample(x, args.q) if args.small_sample else spectral.pca(x, args.q)
    if args.out:
        io.save_model(args.out, "pca", io.basis_payload(basis), flags=_flags(args))
    _write_coords(basis.project(x), "pc")
    return 0


def cmd_kpca(args) -> int:
    x, _, _ = io.read_dataset(args.data, label_column=None)
    model = spectral.kpca(x, _kernel(args), args.q)
    _write_coords(np.atleast_2d(model.project(x)).reshape(x.shape[0], -1), "kpc")
    return 0


def cmd_lda(args) -> int:
    x, y, _ = io.read_dataset(args.data)
    if y is None:
        raise ClassicMLError(f"{args.data}: missing label column 'y'")
    classes = list(dict.fromkeys(y.tolist()))
    groups = [x[y == c] for c in classes]
    if len(groups) == 2:
        model = spectral.lda2(*groups)
        _kv("classes", classes)
        _kv("direction", model.direction)
        _kv("offset", model.offset)
        _kv("ridge", model.ridge)
        return 0
    axes = spectral.lda_general(groups, args.q or len(groups) - 1)
    _kv("classes", classes)
    for j in range(axes.axes.shape[1]):
        _kv(f"axis[{j}]", axes.axes[:, j])
    _kv("values", axes.values)
    return 0


def cmd_cca(args) -> int:
    a, _, _ = io.read_dataset(args.inputs, label_column=None)
    b, _, _ = io.read_dataset(args.outputs, label_column=None)
    model = spectral.cca(a, b, args.q)
    _kv("cosines", model.cosines)
    if args.out:
        io.save_model(
            args.out,
            "cca",
            {"input_axes": model.input_axes, "output_axes": model.output_axes, "cosines": model.cosines},
            flags=_flags(args),
        )
    _write_coords(a @ model.input_axes, "g")
    return 0


def _graph(args) -> clustering.AffinityGraph:
    if args.affinity:
        return clustering.AffinityGraph(io.read_matrix(args.affinity))
    if not args.data:
        raise ClassicMLError("need --data (with --sigma) or --affinity")
    x, _, _ = io.read_dataset(args.data, label_column=None)
    return clustering.affinity_rbf(x, args.sigma)


def cmd_cluster(args) -> int:
    if args.method == "kmeans":
        x, _, _ = io.read_dataset(args.data, label_column=None)
        res = clustering.kmeans(x, args.k, seed=args.seed, n_init=args.n_init)
        labels = res.labels
        _kv("objective", res.objective[-1])
    elif args.method == "ncut":
        g = _graph(args)
        res = clustering.normalized_cut(g, args.k, seed=args.seed, row_normalize=args.row_normalize)
        labels = res.labels
        if args.k == 2:
            _kv("ncut", clustering.ncut_value(g, labels))
    elif args.method == "rcut":
        g = _graph(args)
        labels = clustering.ratio_cut(g).labels
        _kv("cut", clustering.cut_value(g, labels))
    else:
        g = _graph(args)
        res = clustering.mincut_brute(g)
        labels = res.labels
        _kv("cut", res.cut)
    io.write_csv(sys.stdout, ["index", "label"], [(i, int(l)) for i, l in enumerate(labels)])
    return 0


def cmd_pac(args) -> int:
    if args.action == "bounds":
        q = pac.BoundQuery(
            eps=args.eps,
            delta=args.delta,
            class_size=args.size,
            vc_dim=args.vc_dim,
            radius=args.radius,
            margin=args.margin,
            dim=args.dim,
            c0=args.c0,
        )
        print(pac.sample_bound(q, args.kind))
        return 0
    if args.action == "rectangle":
        inst = pac.RectangleInstance(*args.target) if args.target else pac.RectangleInstance()
        m = args.m if args.m is not None else pac.sample_bound(pac.BoundQuery(args.eps, args.delta), "rectangle")
        rep = pac.rectangle_experiment(inst, args.eps, args.delta, m, args.trials, args.seed)
        _kv("m", m)
        _kv("trials", rep.trials)
        _kv("failure_rate", rep.failure_rate)
        _kv("mean_error", float(rep.errors.mean()))
        _kv("max_error", float(rep.errors.max()))
        _kv("contained", rep.contained)
        _kv("strip_hit_rate", rep.net_rate)
        return 0
    if args.action == "growth":
        cls = pac.CLASSES[args.cls]()
        pts = _parse_points(args.points, args.cls)
        print(pac.growth_count(cls, pts))
        return 0
    if args.action == "vcdim":
        cls = pac.CLASSES[args.cls]()
        universe = {
            "intervals": list(np.arange(10.0)),
            "rectangles": pac.cross_and_grid(),
            "halfplanes": pac.triangle_and_interior(),
        }[args.cls]
        res = pac.vcdim_bruteforce(cls, universe, args.d_max)
        _kv("vcdim", res.dimension)
        print("witness=" + ";".join(_point_str(p) for p in res.witness))
        return 0
    rep = pac.hoeffding_check(args.p, args.m, args.trials, args.eps, args.seed)
    _kv("rate", rep.rate)
    _kv("bound", rep.bound)
    _kv("std_error", rep.std_error)
    _kv("within_bound", rep.ok)
    return 0


def _point_str(p) -> str:
    if isinstance(p, (list, tuple)):
        return ",".join(io.fmt(v) for v in p)
    return io.fmt(p)


def _parse_points(text: str, cls: str):
    try:
        if cls == "intervals":
            return [float(v) for v in text.split(",")]
        return [tuple(float(v) for v in item.split(",")) for item in text.split(";")]
    except ValueError:
        raise ClassicMLError(f"cannot parse points {text!r}") from None


# -- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="classicml", description="Classical machine learning toolkit.")
    sub = p.add_subparsers(dest="command", required=True)
    seed = default_seed()

    def add_seed(sp):
        sp.add_argument("--seed", type=int, default=seed, help=f"random seed (default from ${SEED_ENV} or 0)")

    def add_kernel(sp):
        sp.add_argument("--kernel", choices=["linear", "poly", "rbf"], default="linear")
        sp.add_argument("--degree", type=int, default=2)
        sp.add_argument("--theta", type=float, default=0.0, help="poly offset; > 0 gives the inhomogeneous kernel")
        sp.add_argument("--sigma", type=float, default=1.0)

    b = sub.add_parser("bayes", help="joint-table inference")
    b.add_argument("action", choices=["posterior", "marginals"])
    b.add_argument("--table", required=True)
    b.add_argument("--x")
    b.add_argument("--float", action="store_true", help="floating output even for count tables")
    b.set_defaults(func=cmd_bayes)

    m = sub.add_parser("maxent", help="minimum relative entropy fit")
    m.add_argument("--constraints", required=True, help="CSV rows: feature values then target")
    m.add_argument("--prior", help="comma-separated prior weights (default uniform)")
    m.add_argument("--tol", type=float, default=1e-10)
    m.set_defaults(func=cmd_maxent)

    e = sub.add_parser("em", help="expectation-maximisation fits")
    esub = e.add_subparsers(dest="model", required=True)
    for name in ("coins", "gmm", "plsa"):
        sp = esub.add_parser(name)
        if name == "plsa":
            sp.add_argument("--triples", required=True, help="CSV with word_id,doc_id,count")
            sp.add_argument("--rule", choices=["weighted", "as_printed"], default="weighted")
        else:
            sp.add_argument("--data", required=True)
        if name != "coins":
            sp.add_argument("--k", type=int, required=True)
        sp.add_argument("--tol", type=float, default=1e-8)
        sp.add_argument("--max-iter", type=int, default=500)
        sp.add_argument("--out")
        add_seed(sp)
        sp.set_defaults(func=cmd_em)

    s = sub.add_parser("svm", help="soft-margin kernel SVM")
    ssub = s.add_subparsers(dest="action", required=True)
    st = ssub.add_parser("train")
    st.add_argument("--data", required=True)
    add_kernel(st)
    st.add_argument("--nu", type=float, default=1.0)
    st.add_argument("--tol", type=float, default=1e-6)
    st.add_argument("--out")
    add_seed(st)
    st.set_defaults(func=cmd_svm)
    sprd = ssub.add_parser("predict")
    sprd.add_argument("--model", required=True)
    sprd.add_argument("--data", required=True)
    sprd.set_defaults(func=cmd_svm)

    pc = sub.add_parser("pca", help="principal components")
    pc.add_argument("--data", required=True)
    pc.add_argument("--q", type=int, required=True)
    pc.add_argument("--small-sample", action="store_true", help="use the A^T A route")
    pc.add_argument("--out")
    pc.set_defaults(func=cmd_pca)

    kp = sub.add_parser("kpca", help="kernel PCA (uncentered)")
    kp.add_argument("--data", required=True)
    kp.add_argument("--q", type=int, required=True)
    add_kernel(kp)
    kp.set_defaults(func=cmd_kpca)

    ld = sub.add_parser("lda", help="Fisher discriminant")
    ld.add_argument("--data", required=True)
    ld.add_argument("--q", type=int)
    ld.set_defaults(func=cmd_lda)

    cc = sub.add_parser("cca", help="canonical correlation via principal angles")
    cc.add_argument("--inputs", required=True)
    cc.add_argument("--outputs", required=True)
    cc.add_argument("--q", type=int)
    cc.add_argument("--out")
    cc.set_defaults(func=cmd_cca)

    cl = sub.add_parser("cluster", help="k-means and graph cuts")
    clsub = cl.add_subparsers(dest="method", required=True)
    for name in ("kmeans", "ncut", "rcut", "mincut"):
        sp = clsub.add_parser(name)
        sp.add_argument("--data")
        if name != "kmeans":
            sp.add_argument("--affinity", help="CSV affinity matrix (header row required)")
            sp.add_argument("--sigma", type=float, default=1.0)
        if name in ("kmeans", "ncut"):
            sp.add_argument("--k", type=int, default=2)
            add_seed(sp)
        if name == "kmeans":
            sp.add_argument("--n-init", type=int, default=1)
        if name == "ncut":
            sp.add_argument("--row-normalize", action="store_true")
        sp.set_defaults(func=cmd_cluster)

    pa = sub.add_parser("pac", help="PAC / VC laboratory")
    psub = pa.add_subparsers(dest="action", required=True)
    pb = psub.add_parser("bounds")
    pb.add_argument("--kind", choices=pac.BOUND_KINDS, required=True)
    pb.add_argument("--eps", type=float)
    pb.add_argument("--delta", type=float)
    pb.add_argument("--size", type=int, help="|C| for finite classes")
    pb.add_argument("--vc-dim", type=int)
    pb.add_argument("--radius", type=float)
    pb.add_argument("--margin", type=float)
    pb.add_argument("--dim", type=int)
    pb.add_argument("--c0", type=float, default=8.0)
    pb.set_defaults(func=cmd_pac)
    pr = psub.add_parser("rectangle")
    pr.add_argument("--eps", type=float, default=0.1)
    pr.add_argument("--delta", type=float, default=0.1)
    pr.add_argument("--m", type=int, help="sample size (default: the rectangle bound)")
    pr.add_argument("--trials", type=int, default=2000)
    pr.add_argument("--target", type=float, nargs=4, metavar=("X_LO", "X_HI", "Y_LO", "Y_HI"))
    add_seed(pr)
    pr.set_defaults(func=cmd_pac)
    pg = psub.add_parser("growth")
    pg.add_argument("--class", dest="cls", choices=sorted(pac.CLASSES), required=True)
    pg.add_argument("--points", required=True, help="intervals: '0,1,2'; planar: '0,0;1,0;0,1'")
    pg.set_defaults(func=cmd_pac)
    pv = psub.add_parser("vcdim")
    pv.add_argument("--class", dest="cls", choices=sorted(pac.CLASSES), required=True)
    pv.add_argument("--d-max", type=int, default=6)
    pv.set_defaults(func=cmd_pac)
    ph = psub.add_parser("hoeffding")
    ph.add_argument("--p", type=float, default=0.5)
    ph.add_argument("--m", type=int, default=100)
    ph.add_argument("--trials", type=int, default=10000)
    ph.add_argument("--eps", type=float, default=0.2)
    add_seed(ph)
    ph.set_defaults(func=cmd_pac)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    try:
        parser = build_parser()
        args = parser.parse_args(argv)
    except ClassicMLError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else 2
    try:
        return args.func(args)
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3
    except (ClassicMLError, ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
