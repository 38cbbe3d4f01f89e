"""Command-line entry points.

Exit codes: 0 success, 2 usage or input error, 3 model error, 4 numerical
failure.  Values are resolved as command-line flag > ``--config`` file >
built-in default, and the resolved settings are echoed as ``# key = value``
comment lines at the top of every output file.
"""

from __future__ import annotations

import argparse
import logging
import re
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import SingularSystem, idw_predict, ok_predict
from .core import Hyperparams, InvalidParameter, MPRSError, ModelParams, PointSet
from .engine import predict
from .fields import FactorizationFailure, WmParams, sample_gaussian_field, sample_lognormal_field, scatter_sites
from .io import InputError, read_config, read_points, write_csv_rows, write_points, write_predictions
from .validation import METHODS, METRICS_HEADER, InvalidSplit, MethodConfig, crossval, make_splits

log = logging.getLogger("mprs")

EXIT_OK, EXIT_USAGE, EXIT_MODEL, EXIT_NUMERIC = 0, 2, 3, 4

_INIT = {"random": "random_uniform", "nn": "nearest_neighbor"}


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("true", "1", "yes", "on"):
        return True
    if v in ("false", "0", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected true or false, got {s!r}")


def _add_mprs_options(p):
    g = p.add_argument_group("MPRS model")
    g.add_argument("--nb", type=int, default=8, help="sample neighbours per prediction point")
    g.add_argument("--temp", type=float, default=1e-3, help="simulation temperature k_B T / J0")
    g.add_argument("--M", type=int, default=100, help="equilibrium realizations")
    g.add_argument("--imax", type=int, default=500, help="cap on relaxation sweeps")
    g.add_argument("--init", choices=sorted(_INIT), default="random", help="initial state")
    g.add_argument("--respect-samples", type=_bool, default=True, metavar="{true,false}",
                   help="copy sample values at coincident query sites")
    g.add_argument("--equilibrium-a", choices=["literal_one", "carry_adapted"], default="literal_one",
                   help="perturbation factor used while collecting equilibrium states")
    g.add_argument("--threads", type=int, default=1, help="worker threads (results do not depend on it)")


def _add_cov_options(p, required=False):
    g = p.add_argument_group("Whittle-Matern covariance")
    g.add_argument("--kappa", type=float, default=None if required else 0.2)
    g.add_argument("--nu", type=float, default=None if required else 0.5)
    g.add_argument("--sigma", type=float, default=None if required else 1.0)
    g.add_argument("--mean", type=float, default=0.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mprs", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("predict", help="MPRS interpolation at query sites")
    p.add_argument("--config")
    p.add_argument("--train", help="CSV c1..cd,value")
    p.add_argument("--query", help="CSV c1..cd[,value]")
    p.add_argument("--out", help="predictions CSV")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trace", help="write per-sweep energy trace CSV here")
    _add_mprs_options(p)

    for name, text in (("idw", "inverse distance weighting"), ("ok", "ordinary kriging")):
        p = sub.add_parser(name, help=text)
        p.add_argument("--config")
        p.add_argument("--train")
        p.add_argument("--query")
        p.add_argument("--out")
        if name == "idw":
            p.add_argument("--power", type=float, default=2.0)
        else:
            _add_cov_options(p, required=True)

    p = sub.add_parser("crossval", help="random-split cross-validation")
    p.add_argument("--config")
    p.add_argument("--data", help="CSV c1..cd,value")
    p.add_argument("--method", help="|".join(METHODS))
    p.add_argument("--tr", type=float, default=0.33)
    p.add_argument("--splits", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="metrics CSV")
    p.add_argument("--power", type=float, default=2.0)
    _add_mprs_options(p)
    _add_cov_options(p)

    p = sub.add_parser("synth", help="Whittle-Matern random field on scattered sites")
    p.add_argument("--config")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--L", type=float, default=50.0)
    p.add_argument("--dim", type=int, default=2)
    _add_cov_options(p)
    p.add_argument("--lognormal", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")

    p = sub.add_parser("bench", help="MPRS CPU time versus data size on surrogate data")
    p.add_argument("--config")
    p.add_argument("--sizes", default="2^10..2^20", help="'2^a..2^b' or a comma list")
    p.add_argument("--tr", type=float, default=0.33)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--repeats", type=int, default=1, help="datasets per size; the mean time is reported")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    _add_mprs_options(p)
    return parser


# options that must be present after merging flags and config
_REQUIRED = {
    "predict": ("train", "query", "out"),
    "idw": ("train", "query", "out"),
    "ok": ("train", "query", "out", "kappa", "nu", "sigma"),
    "crossval": ("data", "method", "out"),
    "synth": ("out",),
    "bench": ("out",),
}
# output destinations and the worker count do not change results, so they are
# left out of the echo; otherwise identical runs would differ in their headers
_NOT_ECHOED = {"config", "verbose", "command", "out", "trace", "threads"}


def _config_argv(subparser, cfg: dict):
    """Turn config-file entries into flags placed before the real ones."""
    actions = {a.dest: a for a in subparser._actions}
    argv = []
    for key, value in cfg.items():
        if key == "command":
            continue
        dest = key.replace("-", "_")
        act = actions.get(dest)
        if act is None or not act.option_strings:
            raise InputError(f"unknown config key {key!r}")
        flag = act.option_strings[-1]
        if isinstance(act, argparse._StoreTrueAction):
            if _bool(value):
                argv.append(flag)
        else:
            argv += [flag, value]
    return argv


def parse_args(argv):
    parser = build_parser()
    ns = parser.parse_args(argv)
    if ns.command is None:
        parser.print_usage(sys.stderr)
        raise SystemExit(EXIT_USAGE)
    sub = parser._subparsers._group_actions[0].choices[ns.command]
    if getattr(ns, "config", None):
        extra = _config_argv(sub, read_config(ns.config))
        i = argv.index(ns.command)
        ns = parser.parse_args(argv[:i + 1] + extra + argv[i + 1:])
    missing = [k for k in _REQUIRED[ns.command] if getattr(ns, k, None) is None]
    if missing:
        sub.error("missing required option(s): " + ", ".join("--" + m.replace("_", "-") for m in missing))
    return ns, sub


def echo(ns) -> list:
    """Resolved settings as config-file lines (comment-prefixed by the writers)."""
    lines = [f"command = {ns.command}"]
    for k, v in sorted(vars(ns).items()):
        if k in _NOT_ECHOED or v is None:
            continue
        if isinstance(v, bool):
            v = "true" if v else "false"
        elif isinstance(v, float):
            v = repr(v)
        lines.append(f"{k.replace('_', '-')} = {v}")
    return lines


def _model(ns, seed=None):
    params = ModelParams(n_b=ns.nb, temperature=ns.temp)
    hyper = Hyperparams(M=ns.M, i_max=ns.imax, init_mode=_INIT[ns.init],
                        respect_samples=ns.respect_samples, equilibrium_a=ns.equilibrium_a,
                        seed=ns.seed if seed is None else seed)
    return params, hyper


def _wm(ns) -> WmParams:
    return WmParams(sigma=ns.sigma, nu=ns.nu, kappa=ns.kappa, mean=ns.mean)


def cmd_predict(ns):
    train = read_points(ns.train, require_values=True)
    query = read_points(ns.query)
    if 1 <= train.n < max(ns.nb, 4):
        log.warning("only %d training samples: using them all as neighbours", train.n)
        ns.nb = min(ns.nb, train.n)
    params, hyper = _model(ns)
    if train.n >= 1:
        params = replace(params, bandwidth_k=min(params.bandwidth_k, train.n))
    res = predict(train, query.without_values(), params, hyper, threads=ns.threads)
    write_predictions(ns.out, query.coords, res.mean, res.std, echo(ns))
    if ns.trace:
        Path(ns.trace).write_text(res.trace.to_csv())
    return EXIT_OK


def cmd_idw(ns):
    train = read_points(ns.train, require_values=True)
    query = read_points(ns.query)
    mean = idw_predict(train, query.without_values(), ns.power)
    write_predictions(ns.out, query.coords, mean, None, echo(ns))
    return EXIT_OK


def cmd_ok(ns):
    train = read_points(ns.train, require_values=True)
    query = read_points(ns.query)
    mean, var = ok_predict(train, query.without_values(), _wm(ns))
    write_predictions(ns.out, query.coords, mean, np.sqrt(var), echo(ns))
    return EXIT_OK


def cmd_crossval(ns):
    if ns.method not in METHODS:
        raise InvalidParameter(f"unknown method {ns.method!r}; expected one of {', '.join(METHODS)}")
    data = read_points(ns.data, require_values=True)
    plan = make_splits(data.n, ns.tr, ns.splits, ns.seed)
    params, hyper = _model(ns)
    cov = _wm(ns) if ns.method == "ok" else None
    cfg = MethodConfig(params=params, hyper=hyper, cov=cov, power=ns.power, threads=ns.threads)
    report = crossval(ns.method, data, plan, cfg)
    comments = echo(ns) + [f"t_cpu_std = {report.t_std!r}"]
    write_csv_rows(ns.out, METRICS_HEADER, report.to_rows(), comments)
    return EXIT_OK


def cmd_synth(ns):
    wm = _wm(ns)
    g = np.random.default_rng(ns.seed)
    sites = scatter_sites(ns.n, ns.L, ns.dim, g)
    draw = sample_lognormal_field if ns.lognormal else sample_gaussian_field
    z = draw(sites, wm, g)
    write_points(ns.out, sites.with_values(z), echo(ns))
    return EXIT_OK


_POW_RANGE = re.compile(r"^\s*2\^(\d+)\s*\.\.\s*2\^(\d+)\s*$")


def parse_sizes(text: str) -> list:
    """``'2^10..2^14'`` -> powers of two; otherwise a comma list (``2^k`` allowed)."""
    m = _POW_RANGE.match(text)
    if m:
        lo, hi = int(m.group(1)), int(m.group(2))
        sizes = [2 ** k for k in range(lo, hi + 1)]
    else:
        sizes = []
        for item in text.split(","):
            item = item.strip()
            if not item:
                continue
            base, _, exp = item.partition("^")
            try:
                sizes.append(int(base) ** int(exp) if exp else int(base))
            except ValueError:
                raise InvalidParameter(f"bad size {item!r}") from None
    if not sizes or any(s < 2 for s in sizes):
        raise InvalidParameter(f"no usable sizes in {text!r}")
    return sizes


def bench_surrogate(n: int, tr: float, dim: int, seed: int):
    """Uniform sites at unit density with i.i.d. standard normal values."""
    g = np.random.default_rng(np.random.SeedSequence([seed, n]))
    x = g.uniform(0.0, n ** (1.0 / dim), size=(n, dim))
    z = g.standard_normal(n)
    k = int(np.floor(tr * n + 1e-9))
    return PointSet(x[:k], z[:k]), PointSet(x[k:])


def run_bench(sizes, tr, params, hyper, dim=2, repeats=1, seed=0, threads=1):
    """Yield ``(N, P, mean seconds)`` for every size."""
    # compile and load the kernels outside the timed region
    s, q = bench_surrogate(64, 0.5, dim, seed)
    predict(s, q, params, Hyperparams(M=1, i_max=1))
    for n in sizes:
        times = []
        for r in range(repeats):
            s, q = bench_surrogate(n, tr, dim, seed + r)
            t0 = time.perf_counter()
            predict(s, q, params, hyper, threads=threads)
            times.append(time.perf_counter() - t0)
        log.info("N=%d P=%d t=%.4fs", n, q.n, float(np.mean(times)))
        yield n, q.n, float(np.mean(times))


def cmd_bench(ns):
    if not 0 < ns.tr < 1:
        raise InvalidParameter("--tr must lie in (0, 1)")
    if ns.repeats < 1:
        raise InvalidParameter("--repeats must be >= 1")
    sizes = parse_sizes(ns.sizes)
    params, hyper = _model(ns)
    rows = [[str(n), str(p), t] for n, p, t in
            run_bench(sizes, ns.tr, params, hyper, ns.dim, ns.repeats, ns.seed, ns.threads)]
    write_csv_rows(ns.out, ["N", "P", "t_cpu_s"], rows, echo(ns))
    return EXIT_OK


COMMANDS = {
    "predict": cmd_predict,
    "idw": cmd_idw,
    "ok": cmd_ok,
    "crossval": cmd_crossval,
    "synth": cmd_synth,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        ns, sub = parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except InputError as exc:
        print(f"mprs: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        return COMMANDS[ns.command](ns)
    except (InputError, InvalidParameter, InvalidSplit) as exc:
        print(f"mprs {ns.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FactorizationFailure, SingularSystem) as exc:
        print(f"mprs {ns.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except MPRSError as exc:
        print(f"mprs {ns.command}: model error: {exc}", file=sys.stderr)
        return EXIT_MODEL


if __name__ == "__main__":
    sys.exit(main())
