"""Command line interface.

Subcommands: ``solve``, ``uncertain``, ``estimate``, ``dist``, ``experiment``
and ``replay``. Exit codes: 0 success, 2 input error, 3 capacity error,
4 numeric failure.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .errors import (
    CapacityError,
    DomainError,
    MalformedGameError,
    SamplerError,
    SingularFitError,
    UnsupportedAnalyticsError,
)
from .estimator import ENUMERATION, PERMUTATIONS, EstimatorConfig, estimate_all
from .game import NoNoise, UncertainGame
from .mlvf import fit_linear_regression, generate_regression, reference_noise, r2_score, zero_imputed_vf
from .serialize import (
    distributions_to_csv,
    estimate_records,
    game_from_dict,
    load_json,
    noise_from_dict,
    records_to_csv,
    shapley_records,
    uncertain_records,
)
from .shapley_exact import marginal_distribution, shapley_all
from .shapley_uncertain import default_grid, mixture_density, uncertain_shapley

SEED_ENV = "USHAP_SEED"

EXIT_INPUT = 2
EXIT_CAPACITY = 3
EXIT_NUMERIC = 4


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise DomainError(f"{SEED_ENV}={raw!r} is not an integer") from None


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    when = (
        _dt.datetime.fromtimestamp(int(epoch), _dt.timezone.utc)
        if epoch
        else _dt.datetime.now(_dt.timezone.utc)
    )
    return when.isoformat(timespec="seconds")


def manifest(args: argparse.Namespace, argv: Sequence[str]) -> dict:
    params = {k: v for k, v in vars(args).items() if k != "func"}
    return {
        "command": args.command,
        "parameters": params,
        "seed": params.get("seed"),
        "version": __version__,
        "timestamp": _timestamp(),
        "argv": list(argv),
    }


def _emit(args, argv, records: list[dict]) -> None:
    meta = manifest(args, argv)
    if args.format == "json":
        text = json.dumps({"manifest": meta, "results": records}, indent=2) + "\n"
    else:
        text = records_to_csv(records)
    _write(args.output, text, meta)


def _write(output: Optional[str], text: str, meta: Optional[dict] = None) -> None:
    if output in (None, "-"):
        sys.stdout.write(text)
        return
    Path(output).write_text(text)
    if meta is not None and not output.endswith(".json"):
        Path(output + ".manifest.json").write_text(json.dumps(meta, indent=2) + "\n")


def _load_game(path: str):
    return game_from_dict(load_json(path))


def _load_ugame(game_path: str, noise_path: Optional[str]) -> UncertainGame:
    game = _load_game(game_path)
    noise = NoNoise() if noise_path is None else noise_from_dict(load_json(noise_path), game.n)
    return UncertainGame(game, noise)


# ---------------------------------------------------------------------------
# Commands


def cmd_solve(args, argv) -> int:
    result = shapley_all(_load_game(args.game))
    _emit(args, argv, shapley_records(result))
    return 0


def cmd_uncertain(args, argv) -> int:
    result = uncertain_shapley(_load_ugame(args.game, args.noise))
    _emit(args, argv, uncertain_records(result))
    return 0


def _estimator_config(args) -> EstimatorConfig:
    return EstimatorConfig(
        repeats=args.repeats,
        seed=args.seed,
        mode=args.mode,
        permutations=args.permutations,
        confidence_level=args.confidence,
        workers=args.threads,
    )


def cmd_estimate(args, argv) -> int:
    ugame = _load_ugame(args.game, args.noise)
    estimates = estimate_all(ugame, _estimator_config(args))
    _emit(args, argv, estimate_records(estimates))
    return 0


def _grid(args) -> Optional[np.ndarray]:
    if args.grid_min is None and args.grid_max is None:
        return None
    if args.grid_min is None or args.grid_max is None or args.grid_max <= args.grid_min:
        raise DomainError("give both --grid-min and --grid-max with min < max")
    return np.linspace(args.grid_min, args.grid_max, args.grid_points)


def _distributions(ugame: UncertainGame, players, grid, grid_points: int):
    out = []
    for i in players:
        if isinstance(ugame.noise, NoNoise):
            out.append(marginal_distribution(ugame.base, i))
        elif grid is None and ugame.noise.kind == "gaussian":
            out.append(mixture_density(ugame, i, default_grid(ugame, i, grid_points)))
        else:
            out.append(mixture_density(ugame, i, grid))
    return out


def cmd_dist(args, argv) -> int:
    ugame = _load_ugame(args.game, args.noise)
    players = [args.player] if args.player else range(1, ugame.n + 1)
    text = distributions_to_csv(_distributions(ugame, players, _grid(args), args.grid_points))
    _write(args.output, text, manifest(args, argv))
    return 0


def cmd_experiment(args, argv) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    data = generate_regression(args.samples, args.features, args.noise_level, args.seed)
    model = fit_linear_regression(data)
    game = zero_imputed_vf(model, data)
    noise = NoNoise() if args.vf_noise == "none" else reference_noise(args.vf_noise)
    ugame = UncertainGame(game, noise)
    result = uncertain_shapley(ugame)

    rows = [
        {"feature": r["player"], **{k: v for k, v in r.items() if k != "player"}}
        for r in uncertain_records(result)
    ]
    if args.repeats:
        config = EstimatorConfig(
            repeats=args.repeats, seed=args.seed, confidence_level=args.confidence, workers=args.threads
        )
        for row, est in zip(rows, estimate_all(ugame, config)):
            row.update(
                est_mean=est.mean,
                est_std_error=est.std_error,
                est_ci_low=est.ci_low,
                est_ci_high=est.ci_high,
            )
    (out / "table.csv").write_text(records_to_csv(rows))

    players = range(1, game.n + 1)
    noiseless = UncertainGame(game)
    (out / "dist_noiseless.csv").write_text(
        distributions_to_csv(_distributions(noiseless, players, None, args.grid_points))
    )
    if args.vf_noise != "none":
        (out / f"dist_{args.vf_noise}.csv").write_text(
            distributions_to_csv(_distributions(ugame, players, None, args.grid_points))
        )

    table = game.table()
    summary = {
        "r2_full": r2_score(model, data),
        "v_full": float(table[-1]),
        "v_empty": float(table[0]),
        "sum_phi": float(np.sum(result.phi)),
        "efficiency_residual": float(np.sum(result.phi) - (table[-1] - table[0])),
        "true_coef": data.coef.tolist(),
        "fitted_coef": model.weights.tolist(),
        "intercept": model.intercept,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    (out / "manifest.json").write_text(json.dumps(manifest(args, argv), indent=2) + "\n")
    sys.stdout.write(records_to_csv(rows))
    return 0


def cmd_replay(args, argv) -> int:
    doc = load_json(args.manifest)
    recorded = doc.get("argv")
    if not isinstance(recorded, list) or not recorded or recorded[0] == "replay":
        raise MalformedGameError("manifest has no replayable argv")
    return main(recorded)


# ---------------------------------------------------------------------------
# Parser


def _add_output(p: argparse.ArgumentParser, formats: bool = True) -> None:
    if formats:
        p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("-o", "--output", help="output file (default: stdout)")


def _add_threads(p: argparse.ArgumentParser) -> None:
    p.add_argument("--threads", type=int, default=None, help="worker threads (default: all cores)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ushap", description="Exact and uncertain Shapley values.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="exact Shapley values and intrinsic variances")
    p.add_argument("game")
    _add_output(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("uncertain", help="uncertain Shapley values and variance decomposition")
    p.add_argument("game")
    p.add_argument("noise")
    _add_output(p)
    p.set_defaults(func=cmd_uncertain)

    p = sub.add_parser("estimate", help="sample-mean estimates with confidence intervals")
    p.add_argument("game")
    p.add_argument("noise")
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--confidence", type=float, default=0.95)
    p.add_argument("--mode", choices=[ENUMERATION, PERMUTATIONS], default=ENUMERATION)
    p.add_argument("--permutations", type=int, default=1000)
    _add_threads(p)
    _add_output(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("dist", help="marginal contribution distributions as CSV")
    p.add_argument("game")
    p.add_argument("noise", nargs="?")
    p.add_argument("--player", type=int, default=None)
    p.add_argument("--grid-min", type=float, default=None)
    p.add_argument("--grid-max", type=float, default=None)
    p.add_argument("--grid-points", type=int, default=1024)
    _add_output(p, formats=False)
    p.set_defaults(func=cmd_dist)

    p = sub.add_parser("experiment", help="synthetic regression feature attribution experiment")
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--features", type=int, default=12)
    p.add_argument("--noise-level", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--vf-noise", choices=["none", "bernoulli", "gaussian"], default="none")
    p.add_argument("--repeats", type=int, default=None)
    p.add_argument("--confidence", type=float, default=0.95)
    p.add_argument("--grid-points", type=int, default=1024)
    p.add_argument("--out-dir", default="experiment_out")
    _add_threads(p)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("replay", help="rerun the command recorded in a manifest")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "seed", 0) is None:
            args.seed = _default_seed()
        return args.func(args, argv)
    except CapacityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (MalformedGameError, DomainError, UnsupportedAnalyticsError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SingularFitError, SamplerError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
