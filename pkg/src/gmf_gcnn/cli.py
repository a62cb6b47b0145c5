"""``gmf-gcnn`` command line.

Exit codes: 0 success, 1 input error, 2 tolerance failure in trace mode.
"""

from __future__ import annotations

import argparse
import re
import sys
from pathlib import Path

import numpy as np

from .errors import GmfError
from .experiments import (
    ExperimentConfig,
    appendix_a_pooling,
    run_appendixB_trace,
    run_example1,
    run_example3_test,
    run_example3_train,
    trace_network,
)
from .coarsening import CoarseningResult, IndicatorMatrix, composed_indicator, multilevel_from_signal
from .graph_core import OperatorKind, as_kind, delta, shift_operator
from .io import read_graph, read_signal, write_csv
from .matched_filter import DiffusionFeature, matched_response, normalized_weight_to_laplacian, synthesize_feature
from .rng import Xoshiro256
from .spectral import compare_filtering, eigendecompose, named_gain
from . import worked_example as wx

_TERM = re.compile(r"^([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)?\s*\*?\s*(wn|ln)?(\d*)$")


def parse_feature(text: str) -> DiffusionFeature:
    """``n0=3;a=1,+3wn`` style feature specs.

    Terms may carry a ``wn``/``ln`` suffix with an optional power (``-2wn2``);
    a suffix-free term is the constant term. If no term has a suffix the list
    is read as positional normalized-Laplacian coefficients (``a=4,-3``).
    """
    parts = dict(p.split("=", 1) for p in text.replace(" ", "").split(";") if p)
    if "n0" not in parts or "a" not in parts:
        raise ValueError("feature needs n0=<vertex>;a=<terms>")
    n0 = int(parts["n0"])
    terms = [t for t in parts["a"].split(",") if t]
    parsed = []
    for t in terms:
        m = _TERM.match(t.lower())
        if not m or (m.group(1) is None and m.group(2) is None):
            raise ValueError(f"bad feature term {t!r}")
        coef = float(m.group(1)) if m.group(1) not in (None, "+", "-") else 1.0
        basis = m.group(2)
        power = int(m.group(3)) if m.group(3) else (1 if basis else 0)
        parsed.append((coef, basis, power))
    if all(b is None for _, b, _ in parsed):
        return DiffusionFeature(n0, [c for c, _, _ in parsed])
    top = max(p for _, _, p in parsed)
    a, b = np.zeros(top + 1), np.zeros(top + 1)
    for coef, basis, power in parsed:
        if basis == "ln":
            a[power] += coef
        else:
            b[power] += coef  # constant terms are identical in both bases
    return DiffusionFeature(n0, a + normalized_weight_to_laplacian(b))


def _signal(spec: str, n: int, seed: int) -> np.ndarray:
    if spec == "random":
        return Xoshiro256(seed).normals(n)
    if spec.startswith("delta:"):
        return delta(n, int(spec[6:]))
    x = read_signal(spec)
    if x.size != n:
        raise ValueError(f"signal has {x.size} values, graph has {n} vertices")
    return x


def _out(args) -> Path:
    p = Path(args.out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def cmd_train(args) -> int:
    cfg = ExperimentConfig("example3-train", args.seed, args.noise, args.epochs, args.realizations,
                           output_dir=str(_out(args)), fixed_epoch_set=args.fixed_epoch_set, init=args.init,
                           activation=args.activation)
    res = run_example3_train(cfg, read_graph(args.graph))
    print(f"trained {len(res.log)} iterations; final loss {res.log.losses()[-1]:.6g}")
    print(f"checkpoint: {res.checkpoint_path}\nlog: {res.log_path}")
    return 0


def cmd_test(args) -> int:
    cfg = ExperimentConfig("example3-test", args.seed, args.noise, test_trials=args.trials, output_dir=str(_out(args)))
    res = run_example3_test(args.checkpoint, cfg, read_graph(args.graph))
    print(f"accuracy {res.accuracy:.4f} over {len(res.rows)} trials\ntrials: {res.csv_path}")
    return 0


def cmd_trace(args) -> int:
    tol = {}
    if args.tolerance is not None:
        tol = {"print": args.tolerance, "erratum": args.tolerance}
    if args.print_tol is not None:
        tol["print"] = args.print_tol
    if args.erratum_tol is not None:
        tol["erratum"] = args.erratum_tol
    net = trace_network(args.alpha, args.beta, args.gamma, args.update_order)
    rep = run_appendixB_trace(not args.random, args.seed, tol, net)
    path = write_csv(_out(args) / "trace_appendix_b.csv", rep.columns, rep.csv_rows())
    for r in rep.rows:
        if r.printed is None:
            print(f"{r.name:>10}[{r.index}] {r.computed:+.5f}")
        else:
            flag = "ok" if r.ok else "FAIL"
            print(f"{r.name:>10}[{r.index}] {r.computed:+.5f} printed {r.printed:+.5f} diff {r.diff:.2e} {flag} {r.note}")
    print(f"report: {path}")
    if not rep.passed:
        print(f"{len(rep.failures())} values outside tolerance", file=sys.stderr)
        return 2
    return 0


def cmd_matched(args) -> int:
    g = read_graph(args.graph)
    f = parse_feature(args.feature)
    op = shift_operator(g, as_kind(f.operator_kind))
    x = synthesize_feature(f, op) if args.input == "synthesize" else _signal(args.input, g.n_vertices, args.seed)
    y = matched_response(x, f, op, eigendecompose(op) if op.symmetric else None)
    rows = [[n + 1, y[n], int(n + 1 == f.origin)] for n in range(g.n_vertices)]
    path = write_csv(_out(args) / "matched_response.csv", ["vertex", "response", "is_matched_origin"], rows)
    print(f"response at origin {f.origin}: {y[f.origin - 1]:.12g}; energy {float(x @ x):.12g}\nresponse: {path}")
    return 0


def cmd_filter_compare(args) -> int:
    g = read_graph(args.graph)
    op = shift_operator(g, as_kind(args.operator))
    basis = eigendecompose(op)
    x = _signal(args.input, g.n_vertices, args.seed)
    cmp = compare_filtering(x, named_gain(args.gain), args.order, op, basis)
    out = _out(args)
    write_csv(out / "filter_compare_summary.csv", *_split(list(cmp.csv_rows())))
    rows = [[n + 1, x[n], cmp.outputs["a"][n], cmp.outputs["b"][n], cmp.outputs["c"][n]] for n in range(g.n_vertices)]
    path = write_csv(out / "filter_compare.csv", ["vertex", "x", "spectral", "least_squares", "chebyshev"], rows)
    for p, q in (("a", "b"), ("a", "c"), ("b", "c")):
        print(f"max |{p}-{q}| = {cmp.max_abs_diff[(p, q)]:.3e}")
    print(f"outputs: {path}")
    return 0


def _split(rows):
    return rows[0], rows[1:]


def cmd_coarsen(args) -> int:
    g = read_graph(args.graph)
    if args.signal == "appendix-a":
        results, mask = appendix_a_pooling(g)
        signal = wx.RELU_Y1
        print("survivor mask (channels x vertices):")
        print(mask.matrix.astype(int))
    else:
        # pooling acts on post-activation values, so random draws are rectified
        signal = _signal(args.signal, g.n_vertices, args.seed)
        if args.signal == "random":
            signal = np.abs(signal)
    if args.levels < 1:
        raise ValueError("--levels must be >= 1")
    out = _out(args)
    levels = multilevel_from_signal(g, signal, args.levels)
    p = composed_indicator(levels, g.n_vertices)
    groups = [tuple(int(v) for v in np.flatnonzero(row)) for row in p]
    res = CoarseningResult(IndicatorMatrix(p, groups), levels[-1].weights, levels[-1].pooled_values,
                           np.zeros(len(groups), dtype=int)).canonical()
    write_csv(out / "indicator.csv", [f"v{n + 1}" for n in range(g.n_vertices)], res.indicator.matrix.astype(int).tolist())
    write_csv(out / "coarse_weights.csv", [f"g{i + 1}" for i in range(res.indicator.n_groups)], res.coarse_weights.tolist())
    lines = [f"group {i + 1}: {{{' '.join(map(str, grp))}}} pooled {res.pooled_values[i]:g}"
             for i, grp in enumerate(res.indicator.groups_1based())]
    (out / "groups.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    print("W_c =\n", res.coarse_weights)
    print(f"outputs: {out}/indicator.csv, coarse_weights.csv, groups.txt")
    return 0


def cmd_example1(args) -> int:
    res = run_example1(ExperimentConfig("example1", args.seed, output_dir=str(_out(args))), read_graph(args.graph))
    for k in ("x1", "x2"):
        print(f"{k}: energy {res.energies[k]:.12g}, matched peak {res.peaks[k]:.12g}, bank winner {res.winners[k]}")
    print(f"signals: {res.csv_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gmf-gcnn", description="Graph matched filters and a two-layer GCNN.")
    p.add_argument("--graph", default="paper8", help="paper8, ring:N, weights .csv or edge-list file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="out", help="output directory")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train on random feature1/feature2 samples")
    t.add_argument("--epochs", type=int, default=10)
    t.add_argument("--realizations", type=int, default=200)
    t.add_argument("--noise", type=float, default=0.05)
    t.add_argument("--init", choices=("gaussian", "he"), default="gaussian")
    t.add_argument("--activation", choices=("relu", "leaky-relu"), default="relu")
    t.add_argument("--fixed-epoch-set", action=argparse.BooleanOptionalAction, default=True)
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("test", help="evaluate a checkpoint on fresh samples")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--trials", type=int, default=100)
    e.add_argument("--noise", type=float, default=0.05)
    e.set_defaults(func=cmd_test)

    r = sub.add_parser("trace-appendix-b", help="first training iteration against the printed values")
    r.add_argument("--random", action="store_true", help="seeded weights and input, no comparison")
    r.add_argument("--tolerance", type=float, help="override both tolerance classes")
    r.add_argument("--print-tol", type=float)
    r.add_argument("--erratum-tol", type=float)
    r.add_argument("--alpha", type=float, default=wx.STEP_W)
    r.add_argument("--beta", type=float, default=wx.STEP_B)
    r.add_argument("--gamma", type=float, default=wx.STEP_V)
    r.add_argument("--update-order", choices=("fc-first", "simultaneous"), default=wx.UPDATE_ORDER)
    r.set_defaults(func=cmd_trace)

    m = sub.add_parser("matched-filter", help="per-vertex matched response")
    m.add_argument("--feature", default="n0=3;a=1,+3wn")
    m.add_argument("--input", default="synthesize", help="synthesize, random, delta:n or a signal file")
    m.set_defaults(func=cmd_matched)

    f = sub.add_parser("filter-compare", help="spectral vs least-squares vs Chebyshev filtering")
    f.add_argument("--gain", default="heat:1", help="identity, heat:t or lowpass:c")
    f.add_argument("--order", type=int, default=8)
    f.add_argument("--op", "--operator", dest="operator", default="ln", help="ln, l, wn, rw or a full kind name")
    f.add_argument("--input", default="random", help="random, delta:n or a signal file")
    f.set_defaults(func=cmd_filter_compare)

    c = sub.add_parser("coarsen", help="max-pool coarsening of a signal")
    c.add_argument("--signal", default="appendix-a", help="appendix-a, random, delta:n or a signal file")
    c.add_argument("--levels", type=int, default=1)
    c.set_defaults(func=cmd_coarsen)

    x = sub.add_parser("example1", help="matched filtering of two diffusion features")
    x.set_defaults(func=cmd_example1)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (GmfError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
