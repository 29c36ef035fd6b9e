"""Command-line entry point: ``planchette <command> [options]``.

Exit codes: 0 on success, 1 for configuration problems, 2 for runtime
failures.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import oracle as orc
from .board import Grid
from .corpus import load_vocabulary, train_weighted
from .dynamics import energy_context, fused_temperature, trajectory_csv
from .harness import (
    ConfigError,
    Experiment,
    ExperimentConfig,
    ablation_csv,
    ablation_sweep,
    build_agent_corpora,
    export_weight_density,
    load_config,
    perplexity_csv,
    perplexity_matrix,
)
from .render import render_svg

log = logging.getLogger("planchette")


def _write(out: Path, name: str, text: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(text, encoding="utf-8")
    log.info("wrote %s", path)
    return path


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.out is not None:
        updates["out"] = args.out
    if getattr(args, "trials", None) is not None:
        updates["trials"] = args.trials
    if getattr(args, "workers", None) is not None:
        updates["workers"] = args.workers
    if updates:
        cfg = ExperimentConfig.from_dict({**cfg.to_dict(), **updates})
    return cfg


def cmd_train(args, cfg):
    exp_vocab = load_vocabulary(args.vocab) if args.vocab else Experiment(cfg).vocab
    corpus = build_agent_corpora(exp_vocab, args.scheme)
    model = train_weighted(corpus, cfg.order, cfg.alpha, cfg.corpus_mode, cfg.corpus_samples, cfg.seed)
    _write(Path(cfg.out), f"model_{args.scheme}.json", model.to_json())


def _run_condition(exp, name, agents, out, trajectories=False):
    summary, records = exp.run(agents)
    _write(out, f"frequencies_{name}.csv", summary.table_csv())
    _write(out, f"summary_{name}.json", summary.to_json())
    _write(out, f"generations_{name}.jsonl", "".join(r.to_json() + "\n" for r in records))
    if trajectories and records[0].per_char:
        for k, traj in enumerate(records[0].per_char):
            _write(out, f"trajectory_{name}_{k}.csv", trajectory_csv(traj))
            _write(out, f"trajectory_{name}_{k}.svg", render_svg(exp.board, trajectory=traj.positions))
    return summary, records


def cmd_generate(args, cfg):
    exp = Experiment(cfg)
    out = Path(cfg.out)
    conds = exp.conditions()
    names = list(conds) if args.condition == "all" else [args.condition]
    records = {}
    for name in names:
        if name not in conds:
            raise ConfigError(f"unknown condition {name!r}")
        _, records[name] = _run_condition(exp, name, conds[name], out, args.trajectories)
    weights, hist = export_weight_density(records, exp.vocab)
    _write(out, "weights.csv", weights)
    _write(out, "weight_histogram.csv", hist)


def cmd_perplexity(args, cfg):
    exp = Experiment(cfg)
    out = Path(cfg.out)
    generated = {}
    for name, agents in exp.conditions().items():
        summary, _ = _run_condition(exp, name, agents, out)
        generated[name] = summary.valid_words()
    _write(out, "perplexity.csv", perplexity_csv(perplexity_matrix(generated, exp.evaluators, exp.vocab)))


def cmd_ablate(args, cfg):
    temps = [float(t) for t in args.temperatures.split(",")]
    points = ablation_sweep(cfg, temps, args.scale)
    _write(Path(cfg.out), "ablation.csv", ablation_csv(points))


def _context_setup(args, cfg):
    exp = Experiment(cfg)
    ctx = energy_context(exp.agents, list(args.context), exp.board, exp.dyn.params)
    noise = [a.noise_d for a in exp.agents]
    temperature = args.temperature if args.temperature is not None else fused_temperature(noise, cfg.eta)
    if temperature <= 0:
        raise ConfigError("oracle temperature must be positive; give --temperature when agents are noiseless")
    return exp, ctx, noise, temperature


def cmd_oracle(args, cfg):
    exp, ctx, _, temperature = _context_setup(args, cfg)
    out = Path(cfg.out)
    field = orc.gibbs_oracle(ctx, temperature, args.grid_step)
    _write(out, "oracle_field.csv", orc.field_csv(field, ctx))
    mass = orc.char_mass_oracle(ctx, temperature, args.grid_step)
    rows = ["symbol,mass"] + [f"{s},{m!r}" for s, m in mass.as_dict().items()]
    _write(out, "char_mass.csv", "\n".join(rows) + "\n")
    _write(out, "oracle_field.svg", render_svg(exp.board, field.cell_probs, field.grid))


def cmd_compare(args, cfg):
    exp, ctx, noise, temperature = _context_setup(args, cfg)
    out = Path(cfg.out)
    counts = orc.empirical_histogram(ctx, noise, exp.dyn, args.steps, args.burn_in, args.grid_step, seed=cfg.seed)
    grid = Grid(exp.board.bounds, args.grid_step)
    oracle = orc.gibbs_oracle(ctx, temperature, args.oracle_step)
    target = orc.coarsen(oracle, grid)
    tv = orc.total_variation(counts / counts.sum(), target)
    _write(out, "empirical_histogram.csv", orc.histogram_csv(counts, grid, ctx))
    report = {
        "context": args.context, "temperature": temperature, "steps": args.steps, "burn_in": args.burn_in,
        "grid_step": args.grid_step, "oracle_step": args.oracle_step, "seed": cfg.seed, "tv": tv,
    }
    _write(out, "comparison.json", json.dumps(report, indent=1, sort_keys=True) + "\n")
    print(f"TV = {tv:.4f}")


def _read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def cmd_render(args, cfg):
    exp_board = Experiment(cfg).board
    rows = _read_csv(args.input)
    if not rows:
        svg = render_svg(exp_board)
    elif "t" in rows[0]:
        pts = np.array([[float(r["x"]), float(r["y"])] for r in rows])
        svg = render_svg(exp_board, trajectory=pts)
    else:
        key = "prob" if "prob" in rows[0] else "E_fused"
        xs = sorted({float(r["x"]) for r in rows})
        ys = sorted({float(r["y"]) for r in rows})
        step = xs[1] - xs[0] if len(xs) > 1 else ys[1] - ys[0]
        grid = Grid(exp_board.bounds, step)
        if grid.shape != (len(xs), len(ys)):
            raise ConfigError("field CSV does not match the board bounds")
        ix = {x: i for i, x in enumerate(xs)}
        iy = {y: j for j, y in enumerate(ys)}
        values = np.zeros(grid.shape)
        for r in rows:
            values[ix[float(r["x"])], iy[float(r["y"])]] = float(r[key])
        svg = render_svg(exp_board, values, grid)
    target = Path(args.output) if args.output else Path(cfg.out) / (Path(args.input).stem + ".svg")
    _write(target.parent, target.name, svg)


def _global_flags(default) -> argparse.ArgumentParser:
    # subcommands repeat the flags with SUPPRESS so they don't reset values given earlier
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=default, help="base random seed")
    common.add_argument("--config", default=default, help="JSON experiment config")
    common.add_argument("--out", default=default, help="output directory")
    common.add_argument("-v", "--verbose", action="store_true", default=False if default is None else default)
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="planchette", description="Collective Langevin letter-board sampler.",
                                     parents=[_global_flags(None)])
    common = _global_flags(argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", parents=[common], help="train one agent's n-gram model")
    p.add_argument("--scheme", default="colorful", choices=["colorful", "reverse", "uniform"])
    p.add_argument("--vocab", default=None, help="vocabulary file (word<TAB>weight)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("generate", parents=[common], help="run generation trials")
    p.add_argument("--condition", default="collective", help="agent1, agent2, ..., collective or all")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--trajectories", action="store_true", help="export the first trial's trajectories")
    p.set_defaults(func=cmd_generate)

    for name, func, help_ in (("oracle", cmd_oracle, "Gibbs field and character masses for a context"),
                              ("compare", cmd_compare, "empirical histogram vs Gibbs field")):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.add_argument("--context", default="", help="letters typed so far")
        p.add_argument("--temperature", type=float, default=None)
        p.set_defaults(func=func)
        if name == "oracle":
            p.add_argument("--grid-step", type=float, default=0.02)
        else:
            p.add_argument("--grid-step", type=float, default=0.1)
            p.add_argument("--oracle-step", type=float, default=0.02)
            p.add_argument("--steps", type=int, default=200_000)
            p.add_argument("--burn-in", type=int, default=10_000)

    p = sub.add_parser("perplexity", parents=[common], help="perplexity matrix over conditions")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_perplexity)

    p = sub.add_parser("ablate", parents=[common], help="noise-temperature sweep")
    p.add_argument("--temperatures", default="0,0.2,0.5,1.0")
    p.add_argument("--scale", default="fused", choices=["fused", "agent"])
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("render", parents=[common], help="SVG from a field or trajectory CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_render)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = _config(args)
        args.func(args, cfg)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
