"""JSON and CSV formats for games, noise models and results.

Game JSON::

    {"n": 2, "values": {"0": 0, "1": 1, "2": 2, "3": 4}}

Keys are decimal bitmasks or player lists such as ``"[1,2]"``. Noise JSON is
one of ``{"type": "none"}``, ``{"type": "gaussian", "sigma": s}``,
``{"type": "bernoulli", "p": p, "c": c}`` or
``{"type": "table", "means": {...}, "second_moments": {...}}``.

Floats in CSV are written with 17 significant digits so they round-trip.
"""

from __future__ import annotations

import csv
import io
import json
import math
from typing import Iterable, Sequence

import numpy as np

from .coalition import MAX_EXACT_PLAYERS, check_exact, parse_coalition
from .errors import DomainError, MalformedGameError
from .estimator import Estimate
from .game import BernoulliOffsetNoise, DeterministicGame, GaussianNoise, NoiseModel, NoNoise, TableNoise
from .shapley_exact import MarginalDistribution, ShapleyResult
from .shapley_uncertain import MixtureDensity, UncertainShapleyResult


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def _coalition_table(raw: dict, n: int, what: str) -> np.ndarray:
    if not isinstance(raw, dict):
        raise MalformedGameError(f"{what} must be an object keyed by coalition")
    out = np.full(1 << n, np.nan)
    for key, value in raw.items():
        try:
            S = parse_coalition(key, n)
        except DomainError as exc:
            raise MalformedGameError(f"bad coalition key {key!r} in {what}: {exc}") from exc
        if not np.isnan(out[S.bits]):
            raise MalformedGameError(f"duplicate entry for coalition {S} in {what}")
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            raise MalformedGameError(f"{what}[{key!r}] is not a finite number")
        out[S.bits] = float(value)
    missing = np.flatnonzero(np.isnan(out))
    if len(missing):
        raise MalformedGameError(f"{what} is missing {len(missing)} coalitions, e.g. bitmask {missing[0]}")
    return out


def _player_count(doc: dict) -> int:
    n = doc.get("n")
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise MalformedGameError(f"'n' must be a positive integer, got {n!r}")
    if n > MAX_EXACT_PLAYERS:
        check_exact(n)
    return n


def game_from_dict(doc: dict) -> DeterministicGame:
    if not isinstance(doc, dict) or "values" not in doc:
        raise MalformedGameError("game JSON needs 'n' and 'values'")
    n = _player_count(doc)
    return DeterministicGame(n, _coalition_table(doc["values"], n, "values"))


def game_to_dict(game: DeterministicGame) -> dict:
    table = game.table()
    return {"n": game.n, "values": {str(b): float(v) for b, v in enumerate(table)}}


def noise_from_dict(doc: dict, n: int) -> NoiseModel:
    if not isinstance(doc, dict) or "type" not in doc:
        raise MalformedGameError("noise JSON needs a 'type'")
    kind = doc["type"]
    try:
        if kind == "none":
            return NoNoise()
        if kind == "gaussian":
            return GaussianNoise(float(doc["sigma"]))
        if kind == "bernoulli":
            return BernoulliOffsetNoise(float(doc["p"]), float(doc["c"]))
        if kind == "table":
            means = _coalition_table(doc["means"], n, "means")
            second = _coalition_table(doc["second_moments"], n, "second_moments")
            return TableNoise(means, second)
    except KeyError as exc:
        raise MalformedGameError(f"{kind} noise is missing field {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise MalformedGameError(f"invalid {kind} noise: {exc}") from exc
    raise MalformedGameError(f"unknown noise type {kind!r}")


def noise_to_dict(noise: NoiseModel) -> dict:
    if isinstance(noise, NoNoise):
        return {"type": "none"}
    if isinstance(noise, GaussianNoise):
        return {"type": "gaussian", "sigma": noise.sigma}
    if isinstance(noise, BernoulliOffsetNoise):
        return {"type": "bernoulli", "p": noise.p, "c": noise.c}
    if isinstance(noise, TableNoise) and noise.sampler is None:
        return {
            "type": "table",
            "means": {str(b): float(v) for b, v in enumerate(noise.means)},
            "second_moments": {str(b): float(v) for b, v in enumerate(noise.second_moments)},
        }
    raise DomainError(f"{noise.kind} noise cannot be serialized")


def load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise MalformedGameError(f"{path}: invalid JSON ({exc})") from exc


# ---------------------------------------------------------------------------
# Result tables


def _csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(x) if isinstance(x, (float, np.floating)) else x for x in row])
    return buf.getvalue()


def shapley_records(result: ShapleyResult) -> list[dict]:
    return [
        {"player": k + 1, "phi": float(result.phi[k]), "sigma2": float(result.sigma2[k])}
        for k in range(result.n)
    ]


def uncertain_records(result: UncertainShapleyResult) -> list[dict]:
    return [{"player": k + 1, **result.row(k + 1)} for k in range(result.n)]


def estimate_records(estimates: Sequence[Estimate]) -> list[dict]:
    return [
        {
            "player": e.player,
            "mean": e.mean,
            "std_error": e.std_error,
            "ci_low": e.ci_low,
            "ci_high": e.ci_high,
            "evaluations": e.evaluations_used,
        }
        for e in estimates
    ]


def records_to_csv(records: Sequence[dict]) -> str:
    if not records:
        return ""
    header = list(records[0])
    return _csv(header, ([r[h] for h in header] for r in records))


def distribution_rows(dist: MarginalDistribution | MixtureDensity) -> tuple[list[str], list[list]]:
    """CSV header and rows: ``player,value,mass`` for atoms, ``player,value,density`` on a grid."""
    if isinstance(dist, MixtureDensity) and dist.kind == "continuous":
        return ["player", "value", "density"], [
            [dist.player, float(u), float(p)] for u, p in zip(dist.values, dist.density)
        ]
    return ["player", "value", "mass"], [
        [dist.player, float(u), float(m)] for u, m in zip(dist.values, dist.masses)
    ]


def distributions_to_csv(dists: Sequence[MarginalDistribution | MixtureDensity]) -> str:
    header: list[str] = []
    rows: list[list] = []
    for d in dists:
        header, part = distribution_rows(d)
        rows.extend(part)
    return _csv(header, rows)


def read_distribution_csv(text: str) -> dict[int, tuple[np.ndarray, np.ndarray]]:
    """Parse a distribution CSV back into ``{player: (values, weights)}``."""
    reader = csv.reader(io.StringIO(text))
    next(reader)
    grouped: dict[int, list[tuple[float, float]]] = {}
    for player, value, weight in reader:
        grouped.setdefault(int(player), []).append((float(value), float(weight)))
    return {p: (np.array([r[0] for r in rs]), np.array([r[1] for r in rs])) for p, rs in grouped.items()}
