"""JSON input formats (schema version 1) for games, judgments and auction specs."""

from __future__ import annotations

import hashlib
import json
from dataclasses import replace
from pathlib import Path
from typing import Any

import numpy as np

from .auction import AuctionSpec
from .core_model.distributions import Distribution, from_dict
from .core_model.games import (
    Agent,
    DefendAttackDefendGame,
    DiscreteGame,
    PrivateInfoGame,
    Structure,
    TypeSpace,
)
from .errors import ValidationError
from .judgments import JudgmentModel, RandomBeliefSpec, RandomProbabilitySpec, RandomUtilitySpec

SCHEMA_VERSION = 1


def read_json(path: str | Path) -> tuple[Any, str]:
    """Parsed document and the SHA-256 of its bytes."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ValidationError(f"{path}: cannot read input ({exc.strerror})") from None
    try:
        obj = json.loads(raw.decode("utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    except UnicodeDecodeError:
        raise ValidationError(f"{path}: input is not UTF-8 text") from None
    if not isinstance(obj, dict):
        raise ValidationError(f"{path}: top level must be a JSON object")
    version = obj.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ValidationError(f"{path}: unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")
    return obj, hashlib.sha256(raw).hexdigest()


def _require(obj: dict, key: str, where: str):
    if key not in obj:
        raise ValidationError(f"{where}: missing field '{key}'")
    return obj[key]


def _labels(obj: dict, key: str, where: str) -> tuple[str, ...]:
    val = _require(obj, key, where)
    if not isinstance(val, list) or not val:
        raise ValidationError(f"{where}.{key}: expected a non-empty list of labels")
    return tuple(str(x) for x in val)


def _nested(value, axes: list[tuple[str, ...]], where: str):
    """Walk a nested label-keyed mapping (or list) along ``axes``; the leaf is returned as is."""
    if not axes:
        return value
    labels = axes[0]
    if isinstance(value, dict):
        out = []
        for lab in labels:
            if lab not in value:
                raise ValidationError(f"{where}: missing entry '{lab}'")
            out.append(_nested(value[lab], axes[1:], f"{where}.{lab}"))
        extra = set(value) - set(labels)
        if extra:
            raise ValidationError(f"{where}: unknown entries {sorted(extra)}")
        return out
    if isinstance(value, list):
        if len(value) != len(labels):
            raise ValidationError(f"{where}: expected {len(labels)} entries, got {len(value)}")
        return [_nested(v, axes[1:], f"{where}[{i}]") for i, v in enumerate(value)]
    raise ValidationError(f"{where}: expected an object or a list")


def _table(value, axes, where: str, tail: tuple[int, ...]) -> np.ndarray:
    nested = _nested(value, axes, where)
    try:
        arr = np.array(nested, dtype=float)
    except (TypeError, ValueError):
        raise ValidationError(f"{where}: entries must be numbers") from None
    want = tuple(len(a) for a in axes) + tail
    if arr.shape != want:
        raise ValidationError(f"{where}: shape {arr.shape}, expected {want}")
    return arr


def _distribution(obj, where: str) -> Distribution:
    try:
        return from_dict(obj)
    except ValidationError as exc:
        raise ValidationError(f"{where}: {exc}") from None
    except (TypeError, KeyError, ValueError) as exc:
        raise ValidationError(f"{where}: invalid distribution ({exc})") from None


def parse_game(obj: dict):
    """Build a :class:`DiscreteGame`, :class:`PrivateInfoGame` or :class:`DefendAttackDefendGame`.

    Also returns the attacker :class:`TypeSpace` when a ``types`` block is present.
    """
    where = "game"
    try:
        structure = Structure(obj.get("structure", "simultaneous"))
    except ValueError:
        raise ValidationError(f"{where}.structure: unknown structure {obj.get('structure')!r}") from None
    ad = _labels(obj, "actions_d", where)
    aa = _labels(obj, "actions_a", where)
    outs = _labels(obj, "outcomes", where)
    ns = len(outs)
    if structure is Structure.DEFEND_ATTACK_DEFEND:
        d2 = _labels(obj, "actions_d2", where)
        prob_d = _table(_require(obj, "prob_d", where), [ad, aa], f"{where}.prob_d", (ns,))
        util_d = _table(_require(obj, "util_d", where), [ad, aa, outs], f"{where}.util_d", (len(d2),))
        prob_a = util_a = None
        if "util_a" in obj or "prob_a" in obj:
            prob_a = _table(_require(obj, "prob_a", where), [ad, aa], f"{where}.prob_a", (ns,))
            util_a = _table(_require(obj, "util_a", where), [ad, aa, outs], f"{where}.util_a", (len(d2),))
        return DefendAttackDefendGame(ad, aa, outs, d2, prob_d, util_d, prob_a, util_a), None

    if structure is Structure.SEQUENTIAL_DA_PRIVATE_INFO:
        pi = _require(obj, "private_info", where)
        w = f"{where}.private_info"
        signals = _labels(pi, "signals", w)
        prior = np.array(_require(pi, "prior", w), dtype=float)
        prob = _table(_require(pi, "prob_d", w), [signals, ad, aa], f"{w}.prob_d", (ns,))
        util = _table(_require(pi, "util_d", w), [signals, ad, aa], f"{w}.util_d", (ns,))
        prob_a = util_a = None
        if "util_a" in obj or "prob_a" in obj:
            prob_a = _table(_require(obj, "prob_a", where), [ad, aa], f"{where}.prob_a", (ns,))
            util_a = _table(_require(obj, "util_a", where), [ad, aa], f"{where}.util_a", (ns,))
        return PrivateInfoGame.from_tables(ad, aa, outs, signals, prior, np.moveaxis(prob, 0, -1),
                                           np.moveaxis(util, 0, -1), prob_a, util_a), None

    prob_d = _table(_require(obj, "prob_d", where), [ad, aa], f"{where}.prob_d", (ns,))
    util_d = _table(_require(obj, "util_d", where), [ad, aa], f"{where}.util_d", (ns,))
    prob_a = util_a = None
    if "util_a" in obj or "prob_a" in obj:
        prob_a = _table(_require(obj, "prob_a", where), [ad, aa], f"{where}.prob_a", (ns,))
        util_a = _table(_require(obj, "util_a", where), [ad, aa], f"{where}.util_a", (ns,))
    game = DiscreteGame(ad, aa, outs, prob_d, util_d, prob_a, util_a, structure)
    types = parse_types(obj["types"], game) if "types" in obj else None
    return game, types


def parse_types(obj: dict, game: DiscreteGame) -> TypeSpace:
    """Attacker (or defender, with ``agent: "D"``) types with per-type tables."""
    where = "game.types"
    labels = _labels(obj, "labels", where)
    agent = Agent(obj.get("agent", "A"))
    ad, aa = game.defender_actions, game.attacker_actions
    ns = len(game.outcomes)
    suffix = "a" if agent is Agent.A else "d"
    util = _table(_require(obj, f"util_{suffix}", where), [labels, ad, aa], f"{where}.util_{suffix}", (ns,))
    prob = _table(_require(obj, f"prob_{suffix}", where), [labels, ad, aa], f"{where}.prob_{suffix}", (ns,))
    prior = np.array(_require(obj, "prior", where), dtype=float)
    return TypeSpace(labels, prior, util, prob, agent)


def _cell_table(value, axes, where: str, tail_len: int) -> np.ndarray:
    nested = _nested(value, axes, where)
    flat_where = where

    def walk(node, depth, path):
        if depth == len(axes):
            if not isinstance(node, list) or len(node) != tail_len:
                raise ValidationError(f"{flat_where}{path}: expected {tail_len} distributions")
            return [_distribution(x, f"{flat_where}{path}[{k}]") for k, x in enumerate(node)]
        return [walk(x, depth + 1, f"{path}[{i}]") for i, x in enumerate(node)]

    cells = walk(nested, 0, "")
    arr = np.empty(tuple(len(a) for a in axes) + (tail_len,), dtype=object)
    for idx in np.ndindex(arr.shape):
        node = cells
        for i in idx:
            node = node[i]
        arr[idx] = node
    return arr


def _util_spec(obj: dict, axes, tail_len: int, where: str) -> RandomUtilitySpec:
    form = obj.get("form", "cells")
    if form == "cells":
        return RandomUtilitySpec.cellwise(_cell_table(_require(obj, "cells", where), axes, f"{where}.cells", tail_len))
    if form in ("affine", "fixed"):
        base = _table(_require(obj, "base" if form == "affine" else "table", where), axes, f"{where}.base",
                      (tail_len,))
        if form == "fixed":
            return RandomUtilitySpec.fixed(base)
        scale = _distribution(obj.get("scale", 1.0), f"{where}.scale")
        shift = _distribution(obj.get("shift", 0.0), f"{where}.shift")
        return RandomUtilitySpec.affine(base, scale, shift)
    raise ValidationError(f"{where}.form: expected 'cells', 'affine' or 'fixed', got {form!r}")


def _prob_spec(obj: dict, axes, tail_len: int, where: str) -> RandomProbabilitySpec:
    form = obj.get("form", "dirichlet")
    if form == "dirichlet":
        return RandomProbabilitySpec.dirichlet(
            _table(_require(obj, "alphas", where), axes, f"{where}.alphas", (tail_len,)))
    if form == "fixed":
        return RandomProbabilitySpec.fixed(_table(_require(obj, "table", where), axes, f"{where}.table", (tail_len,)))
    raise ValidationError(f"{where}.form: expected 'dirichlet' or 'fixed', got {form!r}")


def _belief_spec(obj: dict, where: str) -> RandomBeliefSpec:
    form = obj.get("form", "uniform")
    if form == "uniform":
        return RandomBeliefSpec.uniform()
    if form == "dirichlet":
        return RandomBeliefSpec.dirichlet(_require(obj, "alphas", where))
    if form == "fixed":
        return RandomBeliefSpec.fixed(_require(obj, "probs", where))
    if form == "recursive":
        return RandomBeliefSpec.recursive()
    raise ValidationError(f"{where}.form: expected uniform|dirichlet|fixed|recursive, got {form!r}")


def _game_axes(game):
    if isinstance(game, DefendAttackDefendGame):
        return [game.d1_actions, game.attacker_actions], game.outcomes, game.d2_actions
    base = game.base if isinstance(game, PrivateInfoGame) else game
    return [base.defender_actions, base.attacker_actions], base.outcomes, None


def _row(obj: dict, game, where: str, types: TypeSpace | None) -> JudgmentModel:
    axes, outs, d2 = _game_axes(game)
    ns = len(outs)
    kw: dict[str, Any] = {}
    util_axes, util_tail = (axes + [outs], len(d2)) if d2 is not None else (axes, ns)
    if "random_util" in obj:
        kw["random_util"] = _util_spec(obj["random_util"], util_axes, util_tail, f"{where}.random_util")
    if "random_prob" in obj:
        kw["random_prob"] = _prob_spec(obj["random_prob"], axes, ns, f"{where}.random_prob")
    if "random_belief" in obj:
        kw["random_belief"] = _belief_spec(obj["random_belief"], f"{where}.random_belief")
    if "mirror_util" in obj:
        kw["mirror_util"] = _util_spec(obj["mirror_util"], util_axes, util_tail, f"{where}.mirror_util")
    if "mirror_prob" in obj:
        kw["mirror_prob"] = _prob_spec(obj["mirror_prob"], axes, ns, f"{where}.mirror_prob")
    if "mirror_belief" in obj:
        kw["mirror_belief"] = _belief_spec(obj["mirror_belief"], f"{where}.mirror_belief")
    ts = obj.get("type_space")
    if ts is True or ts == "game":
        if types is None:
            raise ValidationError(f"{where}.type_space: the game file declares no types")
        kw["type_space"] = types
    elif isinstance(ts, dict):
        kw["type_space"] = parse_types(ts, game)
    return JudgmentModel(**kw)


def parse_judgments(obj: dict, game, types: TypeSpace | None = None) -> JudgmentModel:
    """Judgment rows: the top-level object is row 1, ``levels`` lists rows 2, 3, ..."""
    first = _row(obj, game, "judgments", types)
    deeper = tuple(_row(r, game, f"judgments.levels[{i}]", types) for i, r in enumerate(obj.get("levels", [])))
    return replace(first, deeper=deeper)


def parse_auction(obj: dict) -> tuple[AuctionSpec, dict]:
    """Auction spec plus the optional directly supplied belief about my bid.

    ``opponent_belief`` is ``{"distribution": ..., "scale": s}``: he thinks
    my bid is ``s`` times a draw from the distribution.
    """
    where = "auction"
    grid = obj.get("grid", [0.0, 200.0, 2001])
    if not isinstance(grid, list) or len(grid) != 3:
        raise ValidationError(f"{where}.grid: expected [lo, hi, n_points]")
    dist = lambda key: _distribution(obj[key], f"{where}.{key}") if key in obj else None  # noqa: E731
    spec = AuctionSpec(
        my_value=float(_require(obj, "my_value", where)),
        opponent_value=_distribution(_require(obj, "opponent_value", where), f"{where}.opponent_value"),
        fraction=dist("fraction"),
        grid=(float(grid[0]), float(grid[1]), int(grid[2])),
        mirror_value=dist("mirror_value"),
        mirror_fraction=dist("mirror_fraction"),
        value_points=int(obj.get("value_points", 2001)),
        unit=str(obj.get("unit", "currency")),
    )
    extra = {}
    if "opponent_belief" in obj:
        ob = obj["opponent_belief"]
        extra["opponent_belief"] = (
            _distribution(_require(ob, "distribution", f"{where}.opponent_belief"), f"{where}.opponent_belief"),
            float(ob.get("scale", 1.0)),
        )
    if "mirror" in obj:
        m = obj["mirror"]
        extra["mirror"] = {
            "my_value": _distribution(_require(m, "my_value", f"{where}.mirror"), f"{where}.mirror.my_value"),
            "opponent_value": _distribution(_require(m, "opponent_value", f"{where}.mirror"),
                                            f"{where}.mirror.opponent_value"),
            "grid": tuple(m.get("grid", [0.0, 1.0, 1001])),
            "value_points": int(m.get("value_points", 1001)),
            "max_iter": int(m.get("max_iter", 100)),
        }
    return spec, extra


__all__ = ["SCHEMA_VERSION", "read_json", "parse_game", "parse_types", "parse_judgments", "parse_auction"]
