"""Time every available path of the hot kernels on survey-sized inputs.

    python benchmarks/bench_kernels.py [--rows 4365] [--repeat 3]

The compiled path is warmed up once before timing so JIT cost is excluded.
With NONRESP_NO_NUMBA set, a kernel runs its numpy twin when it has one and
its loop source under the interpreter otherwise, so the loop is always timed
for twin-less kernels. --with-loop times it for the others as well.
"""
import argparse
import time

import numpy as np

from nonresp import _accel
from nonresp.classify import _knn_positive_counts
from nonresp.linear_margin import _smo, kernel_matrix
from nonresp.optim import LOSS_LOGISTIC, _saga_linear_epoch
from nonresp.trees import _split_scores


def cases(rows, gen):
    X = gen.integers(0, 6, size=(rows, 50)).astype(np.float64)
    y = (gen.uniform(size=rows) < 0.08).astype(np.int64)
    yf = y.astype(np.float64)
    w = np.ones(rows)
    queries = X[: max(1, rows // 4)]
    feats = np.arange(50)

    def saga_args():
        table = yf * 0 + 0.5 - yf
        return (X, yf, LOSS_LOGISTIC, np.zeros(50), 0.0, table, X.T @ table / rows, float(table.mean()),
                gen.integers(0, rows, rows), 1e-3, 1.0 / rows, True)

    n_svc = min(rows, 1500)
    K = kernel_matrix("rbf", 0.1, X[:n_svc], X[:n_svc])
    ys = np.where(y[:n_svc] == 1, 1.0, -1.0)

    def smo_args():
        return (K, ys, 1.0, 1e-3, 200 * n_svc, np.zeros(n_svc), -np.ones(n_svc))

    return {
        "knn counts": (_knn_positive_counts, lambda: (X, y, queries, 10)),
        "split scores": (_split_scores, lambda: (X, yf, w, feats, 1, float(rows), float(yf.sum()))),
        "saga epoch": (_saga_linear_epoch, saga_args),
        "smo solve": (_smo, smo_args),
    }


def best_time(func, make_args, repeat):
    times = []
    for _ in range(repeat):
        args = make_args()
        start = time.perf_counter()
        func(*args)
        times.append(time.perf_counter() - start)
    return min(times)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--rows", type=int, default=4365)
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--with-loop", action="store_true", help="also time the interpreted loop source")
    args = parser.parse_args(argv)
    gen = np.random.default_rng(args.seed)
    print(f"rows={args.rows} numba available={_accel.HAVE_NUMBA} active={_accel.USE_NUMBA}")
    print(f"{'kernel':<14}{'path':<8}{'seconds':>10}")
    for name, (kernel, make_args) in cases(args.rows, gen).items():
        paths = _accel.all_paths(kernel)
        if not args.with_loop and "numpy" in paths:
            paths.pop("loop")
        for label, func in paths.items():
            if label == "numba":
                func(*make_args())  # compile outside the timed region
            print(f"{name:<14}{label:<8}{best_time(func, make_args, args.repeat):>10.4f}")


if __name__ == "__main__":
    main()
