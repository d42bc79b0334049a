"""``polyqd`` command line.

Exit codes: 0 success, 1 usage error, 2 runtime failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import geometry as geo
from .config import ConfigError, dump_config, load_config, parse_seeds
from .experiments import (PRESETS, STUDIES, ExperimentConfig, default_threads, pareto_distance,
                          pareto_ground_truth, read_results, read_solutions, run_study,
                          with_overrides)

EXIT_OK, EXIT_USAGE, EXIT_FAILURE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _case(text):
    text = text.upper()
    if text not in geo.neutrality_cases():
        raise argparse.ArgumentTypeError(f"unknown case {text!r} (expected A-E)")
    return text


def _seeds(text):
    try:
        return parse_seeds(text)
    except (ConfigError, ValueError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="polyqd", description="Diversity studies on the polygon domain.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser, metavar="COMMAND")
    sub.required = True

    run = sub.add_parser("run", help="run a study and append to the results store")
    run.add_argument("--config", type=Path, help="INI study config")
    run.add_argument("--study", help="study name (alias 'neutrality' for neutrality_sweep)")
    run.add_argument("--preset", choices=tuple(PRESETS), help="budget preset")
    run.add_argument("--seeds", type=_seeds, help="e.g. 1..5 or 0,2,4")
    run.add_argument("--case", type=_case, help="bounds case for bin sweep / AutoVE")
    run.add_argument("--out", type=Path, default=Path("results"), help="output directory")
    run.add_argument("--threads", type=int, help="worker processes (default $POLYQD_THREADS or 1)")
    run.add_argument("--no-timing", action="store_true", help="write wall_ms as 0")

    met = sub.add_parser("metrics", help="diversity of a stored solution set")
    met.add_argument("solutions", type=Path, help="cell artifact or archive CSV")
    met.add_argument("--case", type=_case, required=True)

    par = sub.add_parser("pareto", help="pixel error of each solution to the Pareto ground truth")
    par.add_argument("solutions", type=Path)
    par.add_argument("--case", type=_case, required=True)
    par.add_argument("--out", type=Path, help="CSV destination (default stdout)")

    gal = sub.add_parser("gallery", help="SVG grid of shapes shaded by Pareto proximity")
    gal.add_argument("solutions", type=Path)
    gal.add_argument("--case", type=_case, required=True)
    gal.add_argument("--out", type=Path, required=True)
    gal.add_argument("--columns", type=int)

    plot = sub.add_parser("plot", help="SVG charts from a results CSV")
    plot.add_argument("results", type=Path)
    plot.add_argument("--out", type=Path, required=True, help="directory for the charts")

    ae = sub.add_parser("train-ae", help="train the shape autoencoder on a Sobol corpus")
    ae.add_argument("--case", type=_case, default="C")
    ae.add_argument("--samples", type=int, default=400)
    ae.add_argument("--latent-dim", type=int, default=2)
    ae.add_argument("--epochs", type=int, default=350)
    ae.add_argument("--seed", type=int, default=0)
    ae.add_argument("--out", type=Path, required=True, help="weights file")
    p.subcommands = sub.choices
    return p


def _study_name(name):
    aliases = {"neutrality": "neutrality_sweep", "bins": "bin_sweep", "pareto": "pareto_distance",
               "autove": "autove_compare"}
    name = aliases.get(name, name)
    if name not in STUDIES:
        raise UsageError(f"unknown study {name!r}; expected one of {', '.join(STUDIES)}")
    return name


def _resolve_config(args) -> ExperimentConfig:
    if args.config is None and args.study is None:
        raise UsageError("run needs --config or --study")
    if args.config is not None:
        try:
            cfg = load_config(args.config)
        except FileNotFoundError as exc:
            raise UsageError(str(exc)) from None
        if args.preset:
            cfg = with_overrides(cfg, **PRESETS[args.preset])
        if args.study:
            cfg = with_overrides(cfg, study=_study_name(args.study))
    else:
        cfg = ExperimentConfig.preset(args.preset or "desk", _study_name(args.study))
    return with_overrides(cfg, seeds=args.seeds, bounds_case=args.case,
                          record_timing=False if args.no_timing else None)


def cmd_run(args) -> int:
    try:
        cfg = _resolve_config(args)
        threads = args.threads if args.threads is not None else default_threads()
    except (ConfigError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    if threads < 1:
        raise UsageError("--threads must be >= 1")
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "config.ini").write_text(dump_config(cfg))

    def progress(cell, outcome):
        status = "FAILED " + outcome if isinstance(outcome, str) else "ok"
        print(f"{cell.key}: {status}", file=sys.stderr)

    report = run_study(cfg, args.out, threads=threads, progress=progress)
    print(f"{len(report.results)} cells run, {len(report.skipped)} skipped, "
          f"{len(report.failures)} failed -> {args.out}")
    return EXIT_OK if report.ok else EXIT_FAILURE


def _load_set(path, case):
    genomes, fitness = read_solutions(path)
    ev = geo.evaluate(genomes, geo.get_bounds(case))
    return ev


def cmd_metrics(args) -> int:
    from .metrics import diversity_report

    ev = _load_set(args.solutions, args.case)
    report = diversity_report(ev.genomes, ev.bitmaps)
    report["fitness_median"] = float(np.median(ev.fitness))
    report["n"] = len(ev)
    print(json.dumps(report, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_pareto(args) -> int:
    ev = _load_set(args.solutions, args.case)
    errors = pareto_distance(ev.bitmaps, pareto_ground_truth(args.case).bitmaps)
    text = "index,pareto_px\n" + "".join(f"{i},{int(e)}\n" for i, e in enumerate(errors))
    if args.out:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_gallery(args) -> int:
    from .svg import gallery_svg

    ev = _load_set(args.solutions, args.case)
    errors = pareto_distance(ev.bitmaps, pareto_ground_truth(args.case).bitmaps)
    args.out.write_text(gallery_svg(ev.bitmaps, errors, columns=args.columns,
                                    title=f"{args.solutions.name} (case {args.case})"))
    return EXIT_OK


def cmd_plot(args) -> int:
    from .svg import study_charts

    rows = read_results(args.results)
    charts = study_charts(rows)
    args.out.mkdir(parents=True, exist_ok=True)
    for name, svg in charts.items():
        (args.out / name).write_text(svg)
    print(f"{len(charts)} charts -> {args.out}")
    return EXIT_OK


def cmd_train_ae(args) -> int:
    from .autoencoder import ConvAutoencoder
    from .sampling import scale_to_bounds, sobol_points

    if args.samples < 1 or args.latent_dim < 1 or args.epochs < 1:
        raise UsageError("--samples, --latent-dim and --epochs must be positive")
    bounds = geo.get_bounds(args.case)
    ev = geo.evaluate(scale_to_bounds(sobol_points(args.samples, geo.N_GENES), bounds), bounds)
    model = ConvAutoencoder(latent_dim=args.latent_dim, epochs=args.epochs,
                            batch_size=min(32, args.samples), random_state=args.seed)
    model.fit(ev.bitmaps)
    model.save(args.out)
    h = model.loss_history_
    print(f"loss {h[0]:.6f} -> {h[-1]:.6f} over {len(h)} epochs; weights -> {args.out}")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "metrics": cmd_metrics, "pareto": cmd_pareto,
            "gallery": cmd_gallery, "plot": cmd_plot, "train-ae": cmd_train_ae}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        usage = parser.subcommands[args.command].format_usage()
        print(f"{usage}polyqd {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"polyqd: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"polyqd: error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


def entry_point():
    sys.exit(main())


if __name__ == "__main__":
    entry_point()
