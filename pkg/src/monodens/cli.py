"""Command-line interface: ``monodens <command> [options]``.

Every command accepts ``--config FILE`` with a JSON object whose keys are the
long option names (dashes or underscores); explicit flags win over the file.
The default seed comes from ``MONODENS_SEED`` (else 0).  Outputs carry a
``schema`` field and contain no timestamps, so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from typing import Sequence

import numpy as np

from . import __version__
from .credible import ci_pointwise
from .grid import count_bins, make_grid, read_points_csv
from .harness import (SimConfig, coverage_markdown, global_markdown, rows_to_csv, run_coverage_table,
                      run_global_table)
from .immersion import MAP_KINDS, project_and_normalize
from .isotonic import is_monotone, isotonize_l1, isotonize_l2, l1_distance_to_cone
from .limit_process import LimitParams, ZbTable, summarize, zb_distribution
from .mono_test import test_adaptive, test_fixed_J
from .posterior import posterior_over_J, posterior_params, sample_theta, uniform_prior

SEED_ENV = "MONODENS_SEED"


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw == "":
        return 0
    try:
        return int(raw)
    except ValueError:
        raise SystemExit(f"{SEED_ENV}={raw!r} is not an integer")


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in str(text).split(",") if v.strip())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in str(text).split(",") if v.strip())


def _bins(text):
    if text is None:
        return None
    vals = _ints(text)
    return vals[0] if len(vals) == 1 else vals


def _clean(obj):
    """JSON-friendly copy with numpy scalars and arrays unwrapped."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _emit(payload: dict, out: str | None) -> None:
    text = json.dumps(_clean(payload), indent=2, sort_keys=True) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _write_text(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ------------------------------------------------------------------ commands


def cmd_fit(a) -> None:
    data = read_points_csv(a.input)
    n, d = data.shape
    J = _bins(a.J) or math.ceil(2 * n ** (1.0 / (2 + d)))
    grid = make_grid(J, d)
    rng = np.random.default_rng(a.seed)
    post = posterior_params(uniform_prior(grid, a.alpha), count_bins(data, grid))
    theta = sample_theta(post, rng, a.draws)
    star = np.stack([project_and_normalize(t) for t in theta])
    dist = np.array([l1_distance_to_cone(t) for t in theta])
    scale = grid.size
    payload = {
        "schema": "monodens.fit/1",
        "n": n, "d": d, "J": list(grid.bins), "draws": a.draws, "seed": a.seed, "alpha": a.alpha,
        "posterior_mean_density": (post.mean * scale).tolist(),
        "immersion_mean_density": (star.mean(axis=0) * scale).tolist(),
        "immersion_sd_density": (star.std(axis=0) * scale).tolist(),
        "distance_to_cone": {"mean": float(dist.mean()), "sd": float(dist.std()),
                             "quantiles": dict(zip(["0.05", "0.5", "0.95"],
                                                   np.quantile(dist, [0.05, 0.5, 0.95]).tolist()))},
    }
    if a.J_posterior:
        jp = posterior_over_J(data, alpha=a.alpha)
        payload["J_posterior"] = {str(k): v for k, v in jp.as_dict().items()}
    _emit(payload, a.out)


def _read_theta(path: str, shape) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = [[float(c) for c in r if c.strip()] for r in csv.reader(fh) if any(c.strip() for c in r)]
    arr = np.asarray(rows, dtype=float)
    if shape is not None:
        arr = arr.reshape(shape)
    elif arr.shape[0] == 1 or arr.shape[1] == 1:
        arr = arr.ravel()
    return arr


def cmd_project(a) -> None:
    theta = _read_theta(a.input, _ints(a.shape) if a.shape else None)
    if a.loss == "l1":
        fit = project_and_normalize(theta) if a.normalize else isotonize_l1(theta)
    else:
        fit = isotonize_l2(theta)
        if a.normalize:
            fit = fit / fit.sum()
    payload = {
        "schema": "monodens.project/1", "loss": a.loss, "normalized": bool(a.normalize),
        "shape": list(theta.shape), "input_monotone": is_monotone(theta),
        "l1_cost": float(np.abs(fit - theta).sum()),
        "l2_cost": float(((fit - theta) ** 2).sum()),
        "projection": fit.tolist(),
    }
    _emit(payload, a.out)


def cmd_test(a) -> None:
    data = read_points_csv(a.input)
    if a.mode == "fixed":
        res = test_fixed_J(data, J=_bins(a.J), gamma=a.gamma, S=a.draws, seed=a.seed,
                           mn_const=a.mn_const, J_const=a.J_const, alpha=a.alpha)
    else:
        res = test_adaptive(data, M_0=a.m0, gamma=a.gamma, S=a.draws, seed=a.seed, alpha=a.alpha)
    payload = {"schema": "monodens.test/1", "seed": a.seed, "n": len(data), **res.as_dict()}
    _emit(payload, a.out)


def cmd_ci(a) -> None:
    data = read_points_csv(a.input)
    table = ZbTable.from_csv(a.zb_table) if a.zb_table else None
    eta = _ints(a.eta) if a.eta else None
    ci = ci_pointwise(data, _floats(a.x0), J=_bins(a.J), gamma=a.gamma, map_kind=a.map, S=a.draws,
                      seed=a.seed, recalibrate=a.recalibrate, eta=eta, zb_table=table, alpha=a.alpha)
    payload = {"schema": "monodens.ci/1", "seed": a.seed, "n": len(data), **ci.as_dict()}
    _emit(payload, a.out)


def _sim_config(a, **extra) -> SimConfig:
    return SimConfig(density=a.density, ns=_ints(a.ns), replicates=a.replicates, draws=a.draws,
                     seed=a.seed, alpha=a.alpha, **extra)


def _progress(enabled: bool):
    if not enabled:
        return None

    def report(n, r, total):
        sys.stderr.write(f"\rn={n} replicate {r}/{total}")
        if r == total:
            sys.stderr.write("\n")
        sys.stderr.flush()
    return report


def cmd_simulate_global(a) -> None:
    rule = "explicit" if a.J else "global"
    cfg = _sim_config(a, J_rule=rule, J=int(a.J) if a.J else None, quad_nodes=a.quad_nodes)
    rows = run_global_table(cfg, progress=_progress(a.progress))
    _write_text(rows_to_csv(rows), a.out)
    if a.markdown:
        _write_text(global_markdown(rows), a.markdown)


def cmd_simulate_coverage(a) -> None:
    rule = "explicit" if a.J else "pointwise"
    table = ZbTable.from_csv(a.zb_table) if a.zb_table else None
    cfg = _sim_config(a, J_rule=rule, J=int(a.J) if a.J else None, x0=_floats(a.x0),
                      credibilities=_floats(a.credibilities), maps=tuple(a.maps.split(",")),
                      recalibrate=not a.no_recalibrate)
    rows = run_coverage_table(cfg, zb_table=table, progress=_progress(a.progress))
    _write_text(rows_to_csv(rows), a.out)
    if a.markdown:
        _write_text(coverage_markdown(rows), a.markdown)


def cmd_zb(a) -> None:
    eta = _ints(a.eta)
    params = LimitParams(eta=eta, lattice_c=a.lattice_c, lattice_res=a.lattice_res,
                         outer_draws=a.outer, inner_draws=a.inner)
    def progress(i, total):
        if i % 50 == 0 or i == total:
            sys.stderr.write(f"\router draw {i}/{total}")
            sys.stderr.flush()
    table = zb_distribution(params, seed=a.seed, progress=progress if a.progress else None)
    if a.progress:
        sys.stderr.write("\n")
    if a.out:
        table.to_csv(a.out)
    summary = {"schema": "monodens.zb-summary/1", "eta": list(eta), "outer": a.outer, "inner": a.inner,
               "lattice_c": a.lattice_c, "lattice_res": a.lattice_res, "seed": a.seed,
               "maps": summarize(table, eta)}
    _emit(summary, a.summary)


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="monodens", description="Bayesian inference for multivariate monotone densities.")
    p.add_argument("--version", action="version", version=f"monodens {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=True):
        sp.add_argument("--config", help="JSON file of option values")
        sp.add_argument("--out", help="output path (default: stdout)")
        if seed:
            sp.add_argument("--seed", type=int, default=None, help=f"random seed (default ${SEED_ENV} or 0)")

    sp = sub.add_parser("fit", help="posterior and immersion summaries for a dataset")
    common(sp)
    sp.add_argument("--input", required=True)
    sp.add_argument("--J", help="bins per axis, one value or a comma list")
    sp.add_argument("--draws", type=int, default=500)
    sp.add_argument("--alpha", type=float, default=1.0)
    sp.add_argument("--J-posterior", action="store_true", help="also report the posterior over J")
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("project", help="isotonize a step-height array read from CSV")
    common(sp, seed=False)
    sp.add_argument("--input", required=True)
    sp.add_argument("--shape", help="reshape the values to this comma-separated shape")
    sp.add_argument("--loss", choices=("l1", "l2"), default="l1")
    sp.add_argument("--normalize", action="store_true")
    sp.set_defaults(func=cmd_project)

    sp = sub.add_parser("test", help="posterior test of monotonicity")
    common(sp)
    sp.add_argument("--input", required=True)
    sp.add_argument("--mode", choices=("fixed", "adaptive"), default="fixed")
    sp.add_argument("--gamma", type=float, default=0.5)
    sp.add_argument("--mn-const", type=float, default=1.0, help="M_n = const * sqrt(log n)")
    sp.add_argument("--J-const", type=float, default=2.0, help="J = ceil(const * n^(1/(2+d)))")
    sp.add_argument("--J", help="explicit bins per axis (fixed mode)")
    sp.add_argument("--m0", type=float, default=1.0, help="M_0 of the adaptive radius")
    sp.add_argument("--draws", type=int, default=500)
    sp.add_argument("--alpha", type=float, default=1.0)
    sp.set_defaults(func=cmd_test)

    sp = sub.add_parser("ci", help="pointwise credible interval")
    common(sp)
    sp.add_argument("--input", required=True)
    sp.add_argument("--x0", required=True, help="comma-separated interior point")
    sp.add_argument("--gamma", type=float, default=0.05)
    sp.add_argument("--map", choices=MAP_KINDS, default="average")
    sp.add_argument("--recalibrate", action="store_true")
    sp.add_argument("--zb-table", help="Z_B table CSV from `monodens zb` (else built-in levels)")
    sp.add_argument("--eta", help="local smoothness vector (default all ones)")
    sp.add_argument("--J", help="bins per axis (default ceil(n^(1/(2+d)) sqrt(log n)))")
    sp.add_argument("--draws", type=int, default=1000)
    sp.add_argument("--alpha", type=float, default=1.0)
    sp.set_defaults(func=cmd_ci)

    for name, func, doc in (("simulate-global", cmd_simulate_global, "L1 table of unrestricted vs immersion draws"),
                            ("simulate-coverage", cmd_simulate_coverage, "coverage table of credible intervals")):
        sp = sub.add_parser(name, help=doc)
        common(sp)
        sp.add_argument("--density", default="g1" if name == "simulate-global" else "g4")
        sp.add_argument("--ns", default="500,1000,2000")
        sp.add_argument("--replicates", type=int, default=50 if name == "simulate-global" else 500)
        sp.add_argument("--draws", type=int, default=500 if name == "simulate-global" else 1000)
        sp.add_argument("--J", help="fixed bins per axis instead of the n-dependent rule")
        sp.add_argument("--alpha", type=float, default=1.0)
        sp.add_argument("--markdown", help="also write a markdown table here")
        sp.add_argument("--progress", action="store_true")
        if name == "simulate-global":
            sp.add_argument("--quad-nodes", type=int, default=16)
        else:
            sp.add_argument("--x0", default="0.5,0.5")
            sp.add_argument("--credibilities", default="0.99,0.95,0.90")
            sp.add_argument("--maps", default=",".join(MAP_KINDS))
            sp.add_argument("--no-recalibrate", action="store_true")
            sp.add_argument("--zb-table")
        sp.set_defaults(func=func)

    sp = sub.add_parser("zb", help="simulate the limiting Z_B laws")
    common(sp)
    sp.add_argument("--eta", default="1,1")
    sp.add_argument("--outer", type=int, default=2000)
    sp.add_argument("--inner", type=int, default=500)
    sp.add_argument("--lattice-c", type=float, default=4.0)
    sp.add_argument("--lattice-res", type=int, default=4)
    sp.add_argument("--summary", help="write the JSON summary here (default: stdout)")
    sp.add_argument("--progress", action="store_true")
    sp.set_defaults(func=cmd_zb)
    return p


def _apply_config(parser: argparse.ArgumentParser, argv: Sequence[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        with open(args.config) as fh:
            conf = json.load(fh)
        if not isinstance(conf, dict):
            raise SystemExit(f"{args.config}: expected a JSON object")
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        defaults = {}
        for k, v in conf.items():
            dest = k.replace("-", "_")
            if dest not in known:
                raise SystemExit(f"{args.config}: unknown option {k!r} for {args.command}")
            defaults[dest] = ",".join(map(str, v)) if isinstance(v, list) else v
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
    if hasattr(args, "seed") and args.seed is None:
        args.seed = _default_seed()
    return args


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = _apply_config(parser, sys.argv[1:] if argv is None else list(argv))
    try:
        args.func(args)
    except (ValueError, KeyError, OSError) as exc:
        sys.stderr.write(f"monodens {args.command}: {exc}\n")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
