"""Command-line entry point: ``wwtp-marl <command> [subcommand] [options]``."""
from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .config import ConfigError, RunConfig, load_config
from .impacts import INDICATORS, assess
from .influent import CSV_HEADER, influent_series
from .marl.train import load_agents, save_agents
from .plant import FLUX_FIELDS, Action, StepFluxes, simulate

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


def _num(v) -> str:
    """Round-trip text for a number; numpy scalars are written as plain floats."""
    return repr(float(v))


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _common(p: argparse.ArgumentParser, out_required: bool = True) -> None:
    p.add_argument("--config", metavar="TOML", help="configuration file merged over the defaults")
    p.add_argument("--out", metavar="DIR", required=out_required,
                   help="output directory (created if missing); nothing is written elsewhere")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="wwtp-marl", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    inf = sub.add_parser("influent", help="influent series").add_subparsers(
        dest="action", required=True, parser_class=_Parser)
    p = inf.add_parser("export", help="write the influent series as CSV")
    _common(p)
    p.add_argument("--days", type=float, default=10.0, help="horizon in days (default 10)")
    p.add_argument("--dt-hours", type=float, default=None,
                   help="sampling interval in hours (default: control interval)")

    pl = sub.add_parser("plant", help="plant simulation").add_subparsers(
        dest="action", required=True, parser_class=_Parser)
    p = pl.add_parser("simulate", help="constant-action run writing per-interval fluxes")
    _common(p)
    p.add_argument("--days", type=float, default=10.0, help="logged horizon in days (default 10)")
    p.add_argument("--do", type=float, default=1.5, help="DO set-point in g O2/m3 (default 1.5)")
    p.add_argument("--dose", type=float, default=0.125,
                   help="PAC dose in kg 25%% solution per m3 (default 0.125)")
    p.add_argument("--warmup-days", type=float, default=None,
                   help="warm-up at the same action in days (default: config value)")

    im = sub.add_parser("impacts", help="impact assessment").add_subparsers(
        dest="action", required=True, parser_class=_Parser)
    p = im.add_parser("assess", help="assess a fluxes CSV written by 'plant simulate'")
    _common(p)
    p.add_argument("fluxes", metavar="FLUXES_CSV", help="per-interval fluxes CSV")

    bd = sub.add_parser("bounds", help="normalization bounds").add_subparsers(
        dest="action", required=True, parser_class=_Parser)
    p = bd.add_parser("sample", help="min/max of each indicator under random actions")
    _common(p)
    p.add_argument("--samples", type=int, default=None, help="number of intervals (default 10000)")
    p.add_argument("--seed", type=int, default=None, help="random-action seed (default 0)")

    p = sub.add_parser("train", help="train both agents for one scenario")
    _common(p)
    p.add_argument("--scenario", required=True, help="lca-ia, lca-ib, lca-sw or cost")
    p.add_argument("--seed", type=int, default=0, help="training seed (default 0)")
    p.add_argument("--steps", type=int, default=None, help="environment interactions (default 5000)")
    p.add_argument("--violation-penalty", type=float, default=None,
                   help="reward penalty per violating interval, dimensionless (default 1)")
    p.add_argument("--bounds", metavar="JSON", help="reuse bounds from 'bounds sample'")

    p = sub.add_parser("evaluate", help="noise-free evaluation of trained agents")
    _common(p)
    p.add_argument("--agents", metavar="JSON", required=True, help="agents file written by 'train'")
    p.add_argument("--scenario", default=None, help="scenario whose standard is scored "
                                                    "(default: the one stored with the agents)")

    sc = sub.add_parser("scenarios", help="scenario batch").add_subparsers(
        dest="action", required=True, parser_class=_Parser)
    p = sc.add_parser("run", help="baseline plus trained scenarios over the seed set")
    _common(p)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--all", action="store_true", help="run all five scenarios")
    g.add_argument("--scenario", action="append", help="scenario name (repeatable)")
    p.add_argument("--seeds", type=int, nargs="+", default=None, help="seed list (default 0 1 2 3 4)")
    p.add_argument("--steps", type=int, default=None, help="environment interactions per training run")
    p.add_argument("--workers", type=int, default=None,
                   help="parallel jobs, capped by WWTP_MARL_THREADS (default 1)")

    p = sub.add_parser("report", help="figures (PNG) and tables (CSV) from a scenarios run")
    _common(p)
    p.add_argument("--in", dest="input", metavar="DIR", required=True,
                   help="directory written by 'scenarios run'")
    return ap


# --------------------------------------------------------------------------
# commands

def _out(args) -> Path:
    d = Path(args.out)
    d.mkdir(parents=True, exist_ok=True)
    return d


def cmd_influent_export(args, cfg: RunConfig) -> None:
    dt = (args.dt_hours / 24.0) if args.dt_hours else cfg.experiment.dt
    recs = influent_series(cfg.influent, args.days, dt)
    with open(_out(args) / "influent.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in recs:
            w.writerow([_num(v) for v in (r.t, r.Q, r.COD, r.TN, r.NH3N, r.TP)])


def cmd_plant_simulate(args, cfg: RunConfig) -> None:
    from .plant import warmup
    a = Action(args.do, args.dose)
    if a.clipped() != a:
        raise UsageError(f"action ({args.do}, {args.dose}) outside the action box")
    ex = cfg.experiment
    days = ex.warmup_days if args.warmup_days is None else args.warmup_days
    state = warmup(cfg.plant, cfg.influent, a, days=days, dt_control=ex.dt)
    n = int(round(args.days / ex.dt))
    _, fluxes = simulate(state, cfg.influent, [a] * n, ex.dt, cfg.plant)
    with open(_out(args) / "fluxes.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FLUX_FIELDS)
        for fl in fluxes:
            w.writerow([_num(v) for v in fl.as_dict().values()])


def read_fluxes(path) -> list[StepFluxes]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(FLUX_FIELDS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing columns {', '.join(sorted(missing))}")
        out = []
        for row in reader:
            kw = {k: float(row[k]) for k in FLUX_FIELDS}
            kw["clamped"] = int(kw["clamped"])
            out.append(StepFluxes(**kw))
    if not out:
        raise ValueError(f"{path}: no rows")
    return out


def cmd_impacts_assess(args, cfg: RunConfig) -> None:
    fluxes = read_fluxes(args.fluxes)
    ivs = [assess(fl, cfg.emission, cfg.costs) for fl in fluxes]
    vols = [fl.treated_volume for fl in fluxes]
    d = _out(args)
    cols = list(ivs[0].flat())
    with open(d / "impacts.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["interval"] + cols)
        for i, iv in enumerate(ivs):
            flat = iv.flat()
            w.writerow([i] + [_num(flat[c]) for c in cols])
    total_v = sum(vols)
    summary = {"intervals": len(ivs), "treated_volume_m3": total_v,
               "per_m3": {k: sum(getattr(iv, k) * v for iv, v in zip(ivs, vols)) / total_v
                          for k in INDICATORS},
               "total": {k: sum(getattr(iv, k) * v for iv, v in zip(ivs, vols)) for k in INDICATORS}}
    (d / "impacts.json").write_text(json.dumps(summary, indent=2))


def cmd_bounds_sample(args, cfg: RunConfig) -> None:
    from .scenarios import normalization_bounds
    ex = cfg.experiment
    cfg = replace(cfg, experiment=replace(
        ex, bounds_samples=args.samples or ex.bounds_samples,
        bounds_seed=ex.bounds_seed if args.seed is None else args.seed))
    b = normalization_bounds(cfg)
    (_out(args) / "bounds.json").write_text(json.dumps(b.to_dict(), indent=2))


def _trained_spec(name: str):
    from .scenarios import get_scenario
    try:
        spec = get_scenario(name)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from exc
    if not spec.trained:
        raise UsageError(f"{spec.name} uses a fixed action and is not trained")
    return spec


def cmd_train(args, cfg: RunConfig) -> None:
    from .impacts import NormalizationBounds
    from .scenarios import normalization_bounds, train_scenario, warm_state
    spec = _trained_spec(args.scenario)
    if args.steps is not None:
        cfg = replace(cfg, train=replace(cfg.train, total_steps=args.steps))
    d = _out(args)
    start = warm_state(cfg)
    if args.bounds:
        bounds = NormalizationBounds.from_dict(json.loads(Path(args.bounds).read_text()))
    else:
        bounds = normalization_bounds(cfg, start)
    overrides = {} if args.violation_penalty is None else {"violation_penalty": args.violation_penalty}
    res = train_scenario(spec, cfg, bounds, start, args.seed, **overrides)
    res.log.write_csv(d / "train_log.csv")
    save_agents(d / "agents.json", res.agents, replace(cfg.train, seed=args.seed),
                {"scenario": spec.name, "start_index": res.start_index,
                 "violation_penalty": cfg.reward.violation_penalty if args.violation_penalty is None
                 else args.violation_penalty})
    (d / "bounds.json").write_text(json.dumps(bounds.to_dict(), indent=2))


def cmd_evaluate(args, cfg: RunConfig) -> None:
    from .scenarios import run_trained
    agents, meta = load_agents(args.agents)
    name = args.scenario or meta.get("scenario")
    if not name:
        raise UsageError("--scenario is required: the agents file names none")
    spec = _trained_spec(name)
    log = run_trained(spec, agents, cfg)
    d = _out(args)
    log.write_csv(d / f"episode_{spec.slug}.csv")
    do, dose = log.mean_action()
    (d / "evaluation.json").write_text(json.dumps(
        {"scenario": spec.name, "intervals": len(log), "do_mean": do, "dose_mean": dose,
         "per_m3": log.per_m3(), "violation_rate": log.violation_rate()}, indent=2))


def cmd_scenarios_run(args, cfg: RunConfig) -> None:
    from .scenarios import SCENARIOS, get_scenario, run_scenarios
    if args.steps is not None:
        cfg = replace(cfg, train=replace(cfg.train, total_steps=args.steps))
    names = list(SCENARIOS) if args.all else args.scenario
    try:
        names = [get_scenario(n).name for n in names]
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from exc
    run_scenarios(cfg, names, args.seeds, _out(args), args.workers)


def cmd_report(args, cfg: RunConfig) -> None:
    from .reporting import build_report
    src = Path(args.input)
    if not (src / "summary.json").is_file():
        raise UsageError(f"{src} holds no summary.json; run 'scenarios run' first")
    build_report(src, _out(args))


COMMANDS = {
    ("influent", "export"): cmd_influent_export,
    ("plant", "simulate"): cmd_plant_simulate,
    ("impacts", "assess"): cmd_impacts_assess,
    ("bounds", "sample"): cmd_bounds_sample,
    ("train", None): cmd_train,
    ("evaluate", None): cmd_evaluate,
    ("scenarios", "run"): cmd_scenarios_run,
    ("report", None): cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = load_config(args.config)
        COMMANDS[(args.command, getattr(args, "action", None))](args, cfg)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:          # --help / --version
        return EXIT_OK if not exc.code else EXIT_USAGE
    except ConfigError as exc:
        print(f"wwtp-marl: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:           # runtime failures surface as exit code 2
        print(f"wwtp-marl: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
