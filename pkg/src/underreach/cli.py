"""Command line front end.

Exit codes: 0 success, 2 invalid configuration or arguments, 3 time step
outside the invertibility domain, 4 Taylor-order search failure, 5 I/O
failure.
"""
import argparse
import csv
import io
import json
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from underreach.config import load_config
from underreach.engine import (
    EngineConfig,
    SystemSpec,
    backward_reach_under,
    reach_under,
)
from underreach.errors import (
    ConfigError,
    IndexOutOfRange,
    NotInInvertibilityDomain,
    SearchCapExceeded,
)
from underreach.formats import (
    atomic_write_text,
    load_sets,
    metrics_csv,
    metrics_rows,
    sets_json,
)
from underreach.linalg import inf_norm, integral_invertible
from underreach.oracle import DirectionSample, reach_support_profile
from underreach.svg import emit_svg
from underreach.zonotope import Zonotope, contains_point, support

logger = logging.getLogger("underreach")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DOMAIN = 3
EXIT_SEARCH = 4
EXIT_IO = 5


def _threads():
    raw = os.environ.get("REACH_UNDER_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            logger.warning("ignoring invalid REACH_UNDER_THREADS=%r", raw)
    return os.cpu_count() or 1


def _int_list(text):
    try:
        vals = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}")
    if not vals or min(vals) < 1:
        raise argparse.ArgumentTypeError("values must be positive integers")
    return vals


def _dims(text):
    vals = _int_list(text)
    if len(vals) != 2:
        raise argparse.ArgumentTypeError("--dims needs two indices")
    return (vals[0] - 1, vals[1] - 1)


def cmd_reach(args):
    cfg = load_config(args.config)
    result = reach_under(cfg.system, cfg.engine)
    out = args.out or cfg.outputs.dir
    N = cfg.engine.N
    sets = list(result.Lambda_seq)
    files = {}
    if "json" in cfg.outputs.formats:
        files["lambda_sets.json"] = sets_json(
            sets, [i * result.tau for i in range(N + 1)],
            meta={"kind": "lambda_sets", "N": N, "tau": result.tau, "T": cfg.system.T})
    if "csv" in cfg.outputs.formats:
        files["metrics.csv"] = metrics_csv(metrics_rows(result))
    for name, text in files.items():
        atomic_write_text(os.path.join(out, name), text)
    if "svg" in cfg.outputs.formats:
        for dims in cfg.outputs.projections:
            emit_svg(sets, dims, os.path.join(out, f"lambda_x{dims[0] + 1}_x{dims[1] + 1}.svg"),
                     overlay=cfg.outputs.overlay)
    last = result.diagnostics[-1]
    print(f"reach: N={N} tau={result.tau:.6g} sets={len(sets)} "
          f"gen_count(Lambda_N)={result.gen_count(N)} wall={result.wall_s * 1e3:.2f} ms "
          f"lambda_min(last)={last.lambda_min}")
    return EXIT_OK


def cmd_backward(args):
    cfg = load_config(args.config)
    if cfg.X_target is None:
        raise ConfigError("backward needs system.X_target")
    sysd = cfg.system
    Z = backward_reach_under(sysd.A, cfg.X_target, sysd.U, sysd.T, cfg.engine)
    out = args.out or cfg.outputs.dir
    verdicts = [(q, contains_point(Z, q)) for q in cfg.query]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"x{k + 1}" for k in range(sysd.n)] + ["inside"])
    for q, inside in verdicts:
        w.writerow([format(float(v), ".17g") for v in q] + [int(inside)])
    if "json" in cfg.outputs.formats:
        atomic_write_text(os.path.join(out, "backward_set.json"),
                          sets_json([Z], [0.0], meta={"kind": "backward", "T": sysd.T}))
    atomic_write_text(os.path.join(out, "membership.csv"), buf.getvalue())
    if "svg" in cfg.outputs.formats:
        for dims in cfg.outputs.projections:
            emit_svg([Z], dims, os.path.join(out, f"backward_x{dims[0] + 1}_x{dims[1] + 1}.svg"))
    for q, inside in verdicts:
        print(f"{np.array2string(q, separator=', ')}: {'inside' if inside else 'outside'}")
    print(f"backward: gen_count={Z.gen_count}")
    return EXIT_OK


def convergence_order(Ns, gaps):
    """Least-squares slope of log(gap) against log(T/N); None for a single N."""
    if len(Ns) < 2:
        return None
    return float(np.polyfit(np.log(1.0 / np.asarray(Ns, float)), np.log(gaps), 1)[0])


def run_convergence(system, Ns, n_dirs=200, seed=0, m=2048, per_step=True):
    """Gap at the final time for each N, plus per-step metrics rows."""
    dirs = DirectionSample.generate(system.n, n_dirs, seed).directions

    def one(N):
        res = reach_under(system, EngineConfig.schedule(N))
        times = [i * res.tau for i in range(N + 1)]
        idx = list(range(N + 1)) if per_step else [N]
        exact = reach_support_profile(system, [times[i] for i in idx], dirs, m)
        gaps = {i: max(0.0, float(np.max(exact[k] - support(res.Lambda_seq[i], dirs))))
                for k, i in enumerate(idx)}
        rows = metrics_rows(res)
        for row in rows:
            row["gap"] = gaps.get(row["i"])
        return res, gaps[N], rows

    with ThreadPoolExecutor(max_workers=min(_threads(), len(Ns))) as pool:
        return list(pool.map(one, Ns))


def cmd_converge(args):
    cfg = load_config(args.config)
    Ns = args.N
    runs = run_convergence(cfg.system, Ns, seed=cfg.seed or 0)
    gaps = [g for _, g, _ in runs]
    order = convergence_order(Ns, gaps)
    out = args.out or cfg.outputs.dir
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["N", "tau", "gap", "ratio"])
    for k, N in enumerate(Ns):
        ratio = gaps[k] / gaps[k - 1] if k and gaps[k - 1] > 0 else None
        w.writerow([N, cfg.system.T / N, format(gaps[k], ".17g"),
                    "" if ratio is None else format(ratio, ".6g")])
    files = {"convergence.csv": buf.getvalue(),
             "convergence.json": json.dumps({"N": Ns, "gap": gaps, "order": order}, indent=2) + "\n"}
    for N, (_, _, rows) in zip(Ns, runs):
        files[f"metrics_N{N}.csv"] = metrics_csv(rows, with_gap=True)
    for name, text in files.items():
        atomic_write_text(os.path.join(out, name), text)
    print(buf.getvalue(), end="")
    print("order: " + ("n/a (single N)" if order is None else f"{order:.4f}"))
    return EXIT_OK


def random_system(n, N, seed, T=1.0, max_draws=100):
    """Uniform(0,1) matrix scaled to unit inf-norm, redrawn until T/N is admissible."""
    rng = np.random.default_rng([seed, n])
    for rejected in range(max_draws):
        A = rng.uniform(0.0, 1.0, size=(n, n))
        A /= inf_norm(A)
        if integral_invertible(A, T / N):
            box = Zonotope.unit_box(n)
            return SystemSpec(A, box, box, T), rejected
    raise NotInInvertibilityDomain(f"no admissible draw for n={n} after {max_draws} tries")


def cmd_random_bench(args):
    rows, status = [], EXIT_OK
    cfg = EngineConfig(N=args.N, eps_h=args.eps, eps_u=args.eps)
    for n in args.n:
        system, rejected = random_system(n, args.N, args.seed)
        try:
            walls, res = [], None
            for _ in range(args.runs):
                t0 = time.perf_counter()
                res = reach_under(system, cfg)
                walls.append(time.perf_counter() - t0)
        except SearchCapExceeded as exc:
            print(f"n={n}: {exc}", file=sys.stderr)
            rows.append([n, args.N, "", "", "", rejected, "search_failed"])
            status = EXIT_SEARCH
            continue
        kmax = max(d.kappa for d in res.diagnostics if d.kappa is not None) if args.N else ""
        rows.append([n, args.N, format(float(np.mean(walls)), ".6g"), res.gen_count(args.N),
                     kmax, rejected, "ok"])
        print(f"n={n}: mean wall {np.mean(walls):.4f} s over {args.runs} runs, "
              f"gen_count(Lambda_N)={res.gen_count(args.N)}")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "N", "wall_s", "gen_count", "kappa_max", "rejected_draws", "status"])
    w.writerows(rows)
    atomic_write_text(os.path.join(args.out, "bench.csv"), buf.getvalue())
    return status


def cmd_plot(args):
    sets, _ = load_sets(args.sets)
    emit_svg(sets, args.dims, args.out, overlay=args.overlay)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="underreach",
                                description="Inner approximations of LTI reachable sets.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("reach", help="forward inner approximations Lambda_0..Lambda_N")
    r.add_argument("config")
    r.add_argument("--out", help="output directory (overrides outputs.dir)")
    r.set_defaults(func=cmd_reach)

    b = sub.add_parser("backward", help="inner approximation of the backward reachable set")
    b.add_argument("config")
    b.add_argument("--out")
    b.set_defaults(func=cmd_backward)

    c = sub.add_parser("converge", help="gap against the exact set for several N")
    c.add_argument("config")
    c.add_argument("--N", type=_int_list, default=[10, 20, 40, 80])
    c.add_argument("--out")
    c.set_defaults(func=cmd_converge)

    rb = sub.add_parser("random-bench", help="timings on random normalised systems")
    rb.add_argument("--n", type=_int_list, default=[10, 50, 100])
    rb.add_argument("--N", type=int, default=100)
    rb.add_argument("--seed", type=int, default=7)
    rb.add_argument("--runs", type=int, default=5)
    rb.add_argument("--eps", type=float, default=0.8)
    rb.add_argument("--out", default="bench")
    rb.set_defaults(func=cmd_random_bench)

    pl = sub.add_parser("plot", help="SVG of a set file")
    pl.add_argument("sets")
    pl.add_argument("--dims", type=_dims, default=(0, 1))
    pl.add_argument("--out", required=True)
    pl.add_argument("--overlay", action="store_true",
                    help="draw the double-integrator closed-form boundary")
    pl.set_defaults(func=cmd_plot)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except NotInInvertibilityDomain as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except SearchCapExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SEARCH
    except (ConfigError, ValueError, IndexOutOfRange) as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
