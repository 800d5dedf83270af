"""Command-line entry point: ``dmpavoid <command> [options]``.

Exit codes: 0 success, 1 usage or configuration error, 2 I/O or file
format error, 3 assertion failure (collision under ``--assert-safe`` or an
infeasible route).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .config import Config, ConfigError, load_config

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_ASSERT = 0, 1, 2, 3

log = logging.getLogger("dmpavoid")


class UsageError(Exception):
    pass


class DataError(Exception):
    """Unreadable or malformed input file."""


class AssertionFailure(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _versions() -> str:
    from .learning import chain, dataset
    from .sim import suites
    return (f"dmpavoid {__version__}\n"
            f"dataset csv format_version {dataset.FORMAT_VERSION}\n"
            f"model json format_version {chain.FORMAT_VERSION}\n"
            f"suite aggregate format_version {suites.FORMAT_VERSION}")


def _extents(text: str) -> np.ndarray:
    try:
        h = np.array([float(t) for t in text.split(",")])
    except ValueError:
        raise argparse.ArgumentTypeError("expected hx,hy,hz") from None
    if h.shape != (3,) or np.any(h < 0) or not np.all(np.isfinite(h)):
        raise argparse.ArgumentTypeError("expected three non-negative half-lengths hx,hy,hz")
    return h


def _hidden(text: str) -> tuple:
    try:
        return tuple(int(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma-separated layer widths") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dmpavoid", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="store_true", help="print format versions and exit")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp, jobs=True):
        sp.add_argument("--config", help="key = value configuration file")
        sp.add_argument("--seed", type=int, help="root seed")
        if jobs:
            sp.add_argument("--jobs", type=int, help="worker processes")

    g = sub.add_parser("gen-dataset", help="explore the coupling parameter grid")
    common(g)
    g.add_argument("--scenarios", type=int)
    g.add_argument("--grid", type=int, help="points per parameter axis")
    g.add_argument("--out", help="output CSV (default: config 'dataset')")

    t = sub.add_parser("train", help="train a regressor chain on a dataset")
    common(t, jobs=False)
    t.add_argument("dataset")
    t.add_argument("--variant", choices=("rc", "rc-delta"), default="rc-delta")
    t.add_argument("--hidden", type=_hidden)
    t.add_argument("--max-epochs", type=int)
    t.add_argument("--out", help="model JSON (default: <model_dir>/<variant>.json)")

    e = sub.add_parser("eval", help="run the familiar or novel suite")
    common(e)
    e.add_argument("--model", action="append", required=True,
                   help="trained chain; repeat to pass both variants")
    e.add_argument("--suite", choices=("familiar", "novel"), required=True)
    e.add_argument("--n", type=int, help="ellipses (familiar) or scenarios per baseline (novel)")
    e.add_argument("--out-dir")
    e.add_argument("--no-scale-tau", action="store_true", help="novel suite without tau scaling")
    e.add_argument("--assert-safe", action="store_true", help="exit 3 on any collision")
    e.add_argument("--no-plot", action="store_true")

    f = sub.add_parser("fit", help="fit a superquadric to a point cloud")
    f.add_argument("cloud", help="ASCII .ply or whitespace .xyz file")
    f.add_argument("--dilate", type=_extents, help="system half-extents hx,hy,hz")
    f.add_argument("--ellipsoid", action="store_true", help="fix both shape exponents to 1")
    f.add_argument("--out", help="output JSON (default: stdout)")

    s = sub.add_parser("simulate", help="run one scenario")
    common(s, jobs=False)
    s.add_argument("scenario")
    s.add_argument("--model", action="append", required=True)
    s.add_argument("--guided", action="store_true")
    tau = s.add_mutually_exclusive_group()
    tau.add_argument("--scale-tau", dest="scale_tau", action="store_true", default=True)
    tau.add_argument("--no-scale-tau", dest="scale_tau", action="store_false")
    s.add_argument("--dump-traj", help="write time x y z rows")
    s.add_argument("--plot", help="write a figure of the rollout")
    s.add_argument("--assert-safe", action="store_true", help="exit 3 on collision")

    d = sub.add_parser("dead-zone", help="head-on point obstacle, original vs proposed term")
    d.add_argument("--offset", type=float, default=0.0, help="lateral obstacle offset [m]")
    d.add_argument("--out-dir", default="results")
    return p


# -- helpers ----------------------------------------------------------------

def _config(args, **extra) -> Config:
    over = {"seed": getattr(args, "seed", None), "jobs": getattr(args, "jobs", None), **extra}
    try:
        return load_config(getattr(args, "config", None), over)
    except FileNotFoundError as exc:
        raise OSError(f"config file not found: {exc.filename}") from None


def _load_models(paths) -> dict:
    from .learning.chain import RegressorChain
    out = {}
    for p in paths:
        try:
            rc = RegressorChain.load(p)
        except FileNotFoundError:
            raise OSError(f"model file not found: {p}") from None
        except (ValueError, KeyError, TypeError, json.JSONDecodeError) as exc:
            raise DataError(f"{p}: not a valid model file ({exc})") from None
        if rc.variant in out:
            raise UsageError(f"two models of variant {rc.variant!r} given")
        out[rc.variant] = rc
    return out


def _print_table(header, rows, out=None):
    out = out or sys.stdout
    out.write(" | ".join(header) + "\n")
    for r in rows:
        out.write(" | ".join(r) + "\n")


# -- commands ---------------------------------------------------------------

def cmd_gen_dataset(args) -> int:
    from .learning.dataset import gen_dataset, write_csv
    cfg = _config(args, scenarios=args.scenarios, grid=args.grid)
    out = Path(args.out or cfg.dataset)
    if out.parent and not out.parent.exists():
        raise OSError(f"output directory does not exist: {out.parent}")
    data = gen_dataset(cfg.scenarios, cfg.param_grid(), cfg.baseline,
                       (cfg.semi_axis_min, cfg.semi_axis_max), cfg.stream("dataset"), cfg.jobs,
                       cfg.dt, cfg.max_convergence, cfg.gains)
    write_csv(data, out)
    print(f"wrote {len(data)} rows from {cfg.scenarios} scenarios to {out}")
    return EXIT_OK


def cmd_train(args) -> int:
    from .learning.chain import chain_nmse, train_chain
    from .learning.dataset import read_csv, split_dataset
    cfg = _config(args, hidden=args.hidden, max_epochs=args.max_epochs)
    try:
        data = read_csv(args.dataset)
    except FileNotFoundError:
        raise OSError(f"dataset not found: {args.dataset}") from None
    except ValueError as exc:
        raise DataError(str(exc)) from None
    if len(data) < 10:
        raise DataError(f"{args.dataset}: too few rows to train ({len(data)})")
    train, test = split_dataset(data, cfg.train_fraction, cfg.stream("split"))
    rc = train_chain(train, args.variant, cfg.stream("init"), cfg.hidden, cfg.max_epochs)
    tr, te = chain_nmse(rc, train), chain_nmse(rc, test)
    rc.meta.update({"train_nmse": tr, "test_nmse": te, "dataset": str(args.dataset)})
    out = Path(args.out or Path(cfg.model_dir) / f"{args.variant}.json")
    out.parent.mkdir(parents=True, exist_ok=True)
    rc.save(out)
    print(f"model {args.variant} ({len(train)} train / {len(test)} test rows) -> {out}")
    _print_table(["split", "Y1 (kappa)", "Y2 (psi)", "Y3 (alpha)"],
                 [[name] + [f"{d[k]:.4g}" for k in ("Y1", "Y2", "Y3")]
                  for name, d in (("train", tr), ("test", te))])
    return EXIT_OK


def cmd_eval(args) -> int:
    from .sim.episode import EpisodeOptions
    from .sim.suites import evaluate_suite, gen_familiar_suite, gen_novel_suite
    cfg = _config(args)
    models = _load_models(args.model)
    if args.suite == "familiar":
        missing = {"rc", "rc-delta"} - set(models)
        if missing:
            raise UsageError(f"familiar suite needs both variants; missing {sorted(missing)}")
        scenarios = gen_familiar_suite(args.n or cfg.familiar_n, cfg.stream("suite"),
                                       (cfg.semi_axis_min, cfg.semi_axis_max))
    else:
        if "rc-delta" not in models:
            raise UsageError("novel suite needs an rc-delta model")
        scenarios = gen_novel_suite(args.n or cfg.novel_n, cfg.stream("suite"),
                                    clearance=cfg.novel_clearance)
    opts = EpisodeOptions(scale_tau=not args.no_scale_tau, dt=cfg.dt, alpha_x=cfg.alpha_x,
                          beta_x=cfg.beta_x, alpha_k=cfg.alpha_k)
    res = evaluate_suite(scenarios, models, opts, cfg.jobs)
    out = Path(args.out_dir or cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    res.write(out / f"{args.suite}_episodes.csv", out / f"{args.suite}_aggregate.json")
    agg = res.aggregate()
    _print_table(["setting", "n", "collisions", "clearance mean", "clearance min",
                  "convergence mean", "convergence max"],
                 [[r["setting"], str(r["n"]), str(r["collisions"]),
                   *(_fmt(r[k]) for k in ("clearance_mean", "clearance_min",
                                          "convergence_mean", "convergence_max"))]
                  for r in agg["settings"]])
    print(f"success rate {agg['success_rate']:.4f} over {agg['n']} episodes")
    if not args.no_plot:
        from .sim.report import plot_suite
        fig = plot_suite(res, out / f"{args.suite}.png", f"{args.suite} suite")
        print(f"figure {fig}")
    if args.assert_safe and agg["collisions"]:
        raise AssertionFailure(f"{agg['collisions']} collision(s) in the {args.suite} suite")
    return EXIT_OK


def _fmt(v) -> str:
    return "-" if v is None else f"{v:.4f}"


def cmd_fit(args) -> int:
    from .geometry.cloud import dilate_cloud, outer_points, read_cloud
    from .geometry.superquadric import DegenerateCloudError, fit_superquadric
    try:
        cloud = read_cloud(args.cloud)
    except FileNotFoundError:
        raise OSError(f"cloud file not found: {args.cloud}") from None
    except (ValueError, IndexError) as exc:
        raise DataError(f"{args.cloud}: {exc}") from None
    dilated = args.dilate is not None and bool(np.any(args.dilate > 0))
    if dilated:
        cloud = outer_points(dilate_cloud(cloud, args.dilate))
    try:
        sq = fit_superquadric(cloud, fix_ellipsoid=args.ellipsoid)
    except DegenerateCloudError as exc:
        raise DataError(f"{args.cloud}: {exc}") from None
    doc = {"center": sq.center.tolist(), "semi_axes": sq.semi_axes.tolist(),
           "exponents": sq.exponents.tolist(), "orientation": sq.orientation.tolist(),
           "residual": sq.residual, "converged": sq.converged, "dilated": dilated}
    text = json.dumps(doc, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_simulate(args) -> int:
    from .dmp import save_trajectory
    from .route_select import InfeasibleRouteError
    from .scenario import load_scenario
    from .sim.episode import EpisodeError, EpisodeOptions, run_episode
    cfg = _config(args)
    try:
        sc = load_scenario(args.scenario)
    except FileNotFoundError:
        raise OSError(f"scenario file not found: {args.scenario}") from None
    except (ValueError, KeyError, TypeError, json.JSONDecodeError) as exc:
        raise DataError(f"{args.scenario}: invalid scenario ({exc})") from None
    models = _load_models(args.model)
    opts = EpisodeOptions(scale_tau=args.scale_tau, guided=args.guided, dt=cfg.dt,
                          alpha_x=cfg.alpha_x, beta_x=cfg.beta_x, alpha_k=cfg.alpha_k)
    try:
        traj, m = run_episode(sc, models if len(models) > 1 else next(iter(models.values())), opts)
    except InfeasibleRouteError as exc:
        raise AssertionFailure(f"infeasible route: {exc}") from None
    except (EpisodeError, KeyError) as exc:
        raise UsageError(f"model does not fit the scenario: {exc}") from None
    print(f"collided {int(m.collided)}")
    print(f"clearance {m.clearance!r}")
    print(f"convergence {m.convergence!r}")
    print(f"tau {m.tau!r}")
    if traj.omega_d is not None:
        print(f"omega_d {traj.omega_d!r}")
    if sc.workspace is not None and sc.workspace.table_height is not None:
        below = bool(np.any(sc.workspace.below_table(traj.x)))
        print(f"below_table {int(below)}")
    if m.aborted:
        print(f"aborted {m.message}")
    if args.dump_traj:
        save_trajectory(args.dump_traj, traj.t, traj.x)
    if args.plot:
        from .sim.report import plot_trajectories
        plot_trajectories({"guided" if args.guided else "reactive": traj}, sc, args.plot)
    if args.assert_safe and m.collided:
        raise AssertionFailure("trajectory collides")
    return EXIT_OK


def cmd_dead_zone(args) -> int:
    from .sim.report import plot_dead_zone, plot_steering
    from .sim.suites import compare_dead_zone, steering_profile
    res = compare_dead_zone(obstacle=(0.5, 0.0, args.offset))
    out = Path(args.out_dir)
    _print_table(["term", "min distance", "collides"],
                 [["original", f"{res.min_distance_original:.5f}", str(int(res.original_collides))],
                  ["proposed", f"{res.min_distance_proposed:.5f}", str(int(res.proposed_collides))]])
    theta = np.linspace(1e-6, np.pi, 500)
    o, p = steering_profile(theta)
    print(f"figure {plot_dead_zone(res, out / 'dead_zone.png')}")
    print(f"figure {plot_steering(theta, o, p, out / 'steering.png')}")
    return EXIT_OK


COMMANDS = {"gen-dataset": cmd_gen_dataset, "train": cmd_train, "eval": cmd_eval,
            "fit": cmd_fit, "simulate": cmd_simulate, "dead-zone": cmd_dead_zone}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.version:
        print(_versions())
        return EXIT_OK
    if not args.command:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        with warnings.catch_warnings():
            if not args.verbose:
                warnings.simplefilter("ignore", RuntimeWarning)
            return COMMANDS[args.command](args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, DataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except AssertionFailure as exc:
        print(f"assertion failed: {exc}", file=sys.stderr)
        return EXIT_ASSERT


if __name__ == "__main__":
    sys.exit(main())
