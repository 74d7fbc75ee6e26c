"""Command-line front end: validate a threat model, simulate attacks, pick defenses, analyse auctions."""

from __future__ import annotations

import argparse
import csv
import io as _io
import json
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .ara_solvers import (
    ActionDistribution,
    ConditionalActionDistribution,
    DecisionReport,
    FictitiousPlay,
    LevelK,
    LevelKConfig,
    Mixture,
    NashSeeking,
    NonStrategic,
    ara_attack_defend,
    ara_defend_attack_defend,
    ara_private_info,
    ara_sequential,
    ara_simultaneous,
    concept_distribution,
    estimate_attack_distribution,
    estimate_response_distribution,
    solve_concept,
)
from .auction import (
    BID_TOL,
    MIRROR_TOL,
    BidCdf,
    level2_analysis,
    mirror_equilibrium,
    nonstrategic_bid_cdf,
    optimal_bid,
)
from .core_model.games import DefendAttackDefendGame, DiscreteGame, PrivateInfoGame, Structure
from .dominance import iterative_eliminate
from .errors import AraError, PreconditionError, SolverError, ValidationError
from .gt_solvers import bne_sequential, bne_simultaneous, pure_nash, stackelberg_solve
from .io import SCHEMA_VERSION, parse_auction, parse_game, parse_judgments, read_json
from .rng import check_seed

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_SOLVER = 3

BASELINES = ("ne", "stackelberg", "bne")
ARA_CONCEPTS = ("ara", "level-k", "nash-seeking", "fictitious-play", "non-strategic", "mixture")
CONCEPTS = BASELINES + ARA_CONCEPTS
ANALYSES = ("nonstrategic", "level1", "level2", "mirror")


class StageError(Exception):
    """Failure inside a pipeline stage; keeps the original error for the exit code."""

    def __init__(self, stage: str, error: AraError):
        super().__init__(f"pipeline stage '{stage}' failed: {error}")
        self.stage = stage
        self.error = error


# ---------------------------------------------------------------- loading


class Inputs:
    """Parsed game and judgments plus the content hashes of their files."""

    def __init__(self, game_path: str, judgments_path: str | None):
        obj, self.game_hash = read_json(game_path)
        self.game, self.types = parse_game(obj)
        self.judgments_obj: dict = {}
        self.judgments = None
        self.judgments_hash = None
        if judgments_path:
            jobj, self.judgments_hash = read_json(judgments_path)
            self.judgments_obj = jobj
            self.judgments = parse_judgments(jobj, self.game, self.types)

    @property
    def structure(self) -> Structure:
        if isinstance(self.game, DefendAttackDefendGame):
            return Structure.DEFEND_ATTACK_DEFEND
        if isinstance(self.game, PrivateInfoGame):
            return Structure.SEQUENTIAL_DA_PRIVATE_INFO
        return self.game.structure

    def hashes(self) -> dict:
        out = {"game": self.game_hash}
        if self.judgments_hash is not None:
            out["judgments"] = self.judgments_hash
        return out

    def need_judgments(self, what: str):
        if self.judgments is None:
            raise ValidationError(f"{what} needs --judgments")
        return self.judgments


# ---------------------------------------------------------------- concepts


def _discrete(inputs: Inputs, concept: str) -> DiscreteGame:
    if not isinstance(inputs.game, DiscreteGame):
        raise ValidationError(f"concept '{concept}' needs a simultaneous or sequential game, "
                              f"not {inputs.structure.value}")
    return inputs.game


def build_concept(name: str, inputs: Inputs, k: int | None, K: int, where: str = "--concept"):
    """Concept object for an attacker model; data comes from the judgments file."""
    block = inputs.judgments_obj
    if name == "level-k":
        if k is None:
            raise ValidationError(f"{where}: level-k needs a depth (--k)")
        j = inputs.need_judgments("level-k")
        return LevelK(LevelKConfig.from_judgments(j, int(k), K_per_level=K))
    if name == "nash-seeking":
        return NashSeeking(inputs.need_judgments("nash-seeking"), K)
    if name == "non-strategic":
        data = block.get("non_strategic")
        if not isinstance(data, dict) or "prior" not in data:
            raise ValidationError("judgments.non_strategic.prior is required for the non-strategic concept")
        return NonStrategic(np.asarray(data["prior"], dtype=float))
    if name == "fictitious-play":
        data = block.get("fictitious_play")
        if not isinstance(data, dict) or "counts" not in data or "alphas" not in data:
            raise ValidationError("judgments.fictitious_play needs 'counts' and 'alphas'")
        return FictitiousPlay(np.asarray(data["counts"], dtype=float), np.asarray(data["alphas"], dtype=float))
    if name == "mixture":
        comps = block.get("mixture")
        if not isinstance(comps, list) or not comps:
            raise ValidationError("judgments.mixture must be a non-empty list of {weight, concept}")
        out = []
        for i, c in enumerate(comps):
            w = f"judgments.mixture[{i}]"
            if not isinstance(c, dict) or "weight" not in c or "concept" not in c:
                raise ValidationError(f"{w}: expected an object with 'weight' and 'concept'")
            sub = c["concept"]
            if sub in ("mixture", "ara") or sub not in ARA_CONCEPTS:
                raise ValidationError(f"{w}.concept: {sub!r} cannot be a mixture component")
            out.append((float(c["weight"]), build_concept(sub, inputs, c.get("k", k), K, w)))
        return Mixture(tuple(out))
    raise ValidationError(f"{where}: unknown concept {name!r}")


def run_ara(inputs: Inputs, K: int, seed: int, threads, tie_break: str) -> DecisionReport:
    """ARA decision for whatever structure the game declares."""
    j = inputs.need_judgments("ara")
    game = inputs.game
    structure = inputs.structure
    if structure is Structure.SIMULTANEOUS:
        return ara_simultaneous(game, j, K, seed, threads, tie_break)
    if structure is Structure.SEQUENTIAL_DA:
        return ara_sequential(game, j, K, seed, threads, tie_break)
    if structure is Structure.SEQUENTIAL_AD:
        return ara_attack_defend(game, j, K, seed, threads, tie_break)
    if structure is Structure.SEQUENTIAL_DA_PRIVATE_INFO:
        observes = bool(inputs.judgments_obj.get("attacker_observes_defense", False))
        return ara_private_info(game, j, K, seed, threads, tie_break, observes)
    return ara_defend_attack_defend(game, j, K, seed, threads, tie_break)


def run_baseline(inputs: Inputs, concept: str) -> dict:
    game = _discrete(inputs, concept)
    if concept == "ne":
        out = pure_nash(game).to_dict()
        out["concept"] = "ne"
        return out
    if concept == "stackelberg":
        return stackelberg_solve(game).to_dict()
    if game.structure is Structure.SEQUENTIAL_DA:
        if inputs.types is None:
            raise ValidationError("bne for a sequential game needs a 'types' block in the game file")
        return bne_sequential(game, inputs.types).to_dict()
    profiles = bne_simultaneous(game, inputs.types)
    return {"concept": "bne", "equilibria": [p.to_dict() for p in profiles], "empty": not profiles}


def run_solve(inputs: Inputs, concept: str, k, K: int, seed: int, threads, tie_break: str):
    """Report object (DecisionReport) or plain dict for the baselines."""
    if concept in BASELINES:
        return run_baseline(inputs, concept)
    if concept == "ara":
        return run_ara(inputs, K, seed, threads, tie_break)
    game = _discrete(inputs, concept)
    return solve_concept(game, build_concept(concept, inputs, k, K), seed, threads, tie_break)


def run_simulate(inputs: Inputs, concept: str, k, K: int, seed: int, threads, tie_break: str):
    """Attack distribution (conditional on the defense for sequential games)."""
    if concept in BASELINES:
        raise ValidationError(f"simulate-attacks does not apply to the '{concept}' baseline")
    structure = inputs.structure
    if concept == "ara":
        j = inputs.need_judgments("simulate-attacks")
        if structure is Structure.SIMULTANEOUS:
            return estimate_attack_distribution(inputs.game, j, K, seed, threads, tie_break)
        if structure is Structure.SEQUENTIAL_DA:
            return estimate_response_distribution(inputs.game, j, K, seed, threads, tie_break)
        return run_ara(inputs, K, seed, threads, tie_break).distribution
    game = _discrete(inputs, concept)
    pi, _ = concept_distribution(game, build_concept(concept, inputs, k, K), seed, threads, tie_break)
    return pi


# ---------------------------------------------------------------- output


def _envelope(command: str, inputs_hash: dict, seed, K, body: dict) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "tool_version": __version__,
        "command": command,
        "inputs": inputs_hash,
        "seed": seed,
        "K": K,
        **body,
    }


def dumps(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _as_dict(obj) -> dict:
    return obj if isinstance(obj, dict) else obj.to_dict()


def distribution_csv(dist) -> str:
    """``action,prob,std_err`` rows, or ``defense,action,prob,std_err`` for p(a | d)."""
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if isinstance(dist, ConditionalActionDistribution):
        w.writerow(["defense", "action", "prob", "std_err"])
        for d, row in dist.rows.items():
            for a, p, s in zip(row.labels, row.probs, row.std_err):
                w.writerow([d, a, repr(float(p)), repr(float(s))])
    elif isinstance(dist, ActionDistribution):
        w.writerow(["action", "prob", "std_err"])
        for a, p, s in zip(dist.labels, dist.probs, dist.std_err):
            w.writerow([a, repr(float(p)), repr(float(s))])
    else:
        raise ValidationError("CSV output needs an attack distribution; use --format json for this result")
    return buf.getvalue()


def bid_csv(F: BidCdf, my_value: float) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["bid", "cdf", "expected_profit"])
    for x, p in zip(F.grid, F.probs):
        w.writerow([repr(float(x)), repr(float(p)), repr(float((my_value - x) * p))])
    return buf.getvalue()


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- commands


def cmd_validate(args) -> int:
    inputs = Inputs(args.game, args.judgments)
    j = inputs.judgments
    if j is not None and j.has_attacker and isinstance(inputs.game, DiscreteGame):
        j.check_attacker(inputs.game.shape, inputs.game.shape)
    body = {"valid": True, "structure": inputs.structure.value}
    _emit(dumps(_envelope("validate", inputs.hashes(), None, None, body)), args.out)
    return EXIT_OK


def cmd_solve(args) -> int:
    seed = check_seed(args.seed)
    inputs = Inputs(args.game, args.judgments)
    report = run_solve(inputs, args.concept, args.k, args.K, seed, args.threads, args.tie_break)
    if args.format == "csv":
        if not isinstance(report, DecisionReport):
            raise ValidationError(f"'{args.concept}' has no attack distribution; use --format json")
        _emit(distribution_csv(report.distribution), args.out)
        return EXIT_OK
    K = report.K if isinstance(report, DecisionReport) else None
    _emit(dumps(_envelope("solve", inputs.hashes(), seed, K, {"report": _as_dict(report)})), args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    seed = check_seed(args.seed)
    inputs = Inputs(args.game, args.judgments)
    dist = run_simulate(inputs, args.concept, args.k, args.K, seed, args.threads, args.tie_break)
    if args.format == "csv":
        _emit(distribution_csv(dist), args.out)
        return EXIT_OK
    body = {"concept": args.concept, "distribution": dist.to_dict()}
    _emit(dumps(_envelope("simulate-attacks", inputs.hashes(), seed, args.K, body)), args.out)
    return EXIT_OK


def cmd_eliminate(args) -> int:
    seed = check_seed(args.seed)
    inputs = Inputs(args.game, args.judgments)
    game = _discrete(inputs, "eliminate")
    res = iterative_eliminate(game, inputs.need_judgments("eliminate"), args.K, seed, args.order,
                              threads=args.threads)
    body = {
        "order": args.order,
        "log": res.log.to_list(),
        "kept_defenses": list(res.game.defender_actions),
        "kept_attacks": list(res.game.attacker_actions),
    }
    _emit(dumps(_envelope("eliminate", inputs.hashes(), seed, args.K, body)), args.out)
    return EXIT_OK


def _auction_run(spec, extra, analysis: str, tol: float | None):
    """(report dict, CDF for the CSV, value the CSV profit column refers to)."""
    bid_tol = BID_TOL if tol is None else tol
    if analysis in ("nonstrategic", "level1"):
        if spec.fraction is None:
            raise ValidationError("auction.fraction is required for the nonstrategic and level1 analyses")
        F = nonstrategic_bid_cdf(spec.opponent_value, spec.fraction, spec.bids)
        body: dict[str, Any] = {"analysis": analysis, "unit": spec.unit, "my_value": spec.my_value}
        if analysis == "level1":
            res = optimal_bid(spec.my_value, F, spec.bids, bid_tol)
            body.update({"chosen": res.bid, "expected_profit": res.profit, "profitable": res.profitable,
                         "message": res.message})
        return body, F, spec.my_value
    if analysis == "level2":
        belief = None
        if "opponent_belief" in extra:
            dist, scale = extra["opponent_belief"]
            belief = (lambda d, s: (lambda x: d.cdf(np.asarray(x) / s)))(dist, scale)
        rep = level2_analysis(spec, belief, bid_tol)
        return rep.to_dict(), rep.opponent_bids, spec.my_value
    m = extra.get("mirror")
    if m is None:
        raise ValidationError("auction.mirror block is required for the mirror analysis")
    res = mirror_equilibrium(m["my_value"], m["opponent_value"], m["grid"], m["value_points"],
                             MIRROR_TOL if tol is None else tol, m["max_iter"])
    if not res.converged:
        raise SolverError(f"mirror equilibrium did not converge in {res.iterations} iterations "
                          f"(last residuals {res.residuals[-2:]})")
    # the mirror game lives on its own value scale, so profits refer to my mean value there
    return res.to_dict(), res.F_A, float(m["my_value"].mean())


def cmd_auction(args) -> int:
    obj, digest = read_json(args.spec)
    spec, extra = parse_auction(obj)
    body, F, value = _auction_run(spec, extra, args.analysis, args.tol)
    table = bid_csv(F, value)
    if args.format == "csv":
        _emit(table, args.out)
    else:
        _emit(dumps(_envelope("auction", {"spec": digest}, None, None, {"report": body})), args.out)
    if args.csv:
        Path(args.csv).write_text(table, encoding="utf-8")
    return EXIT_OK


def _stage(name: str, fn):
    try:
        return fn()
    except AraError as exc:
        raise StageError(name, exc) from exc


def cmd_pipeline(args) -> int:
    seed = check_seed(args.seed)
    inputs = _stage("validate", lambda: Inputs(args.game, args.judgments))
    _stage("validate", lambda: inputs.need_judgments("pipeline"))
    stages: dict[str, Any] = {"validate": {"structure": inputs.structure.value, "valid": True}}

    eliminable = inputs.structure is Structure.SIMULTANEOUS and args.concept not in BASELINES
    if args.skip_eliminate or not eliminable:
        reason = "skipped by request" if args.skip_eliminate else "only simultaneous games are reduced"
        stages["eliminate"] = {"skipped": True, "reason": reason, "log": []}
    else:
        res = _stage("eliminate", lambda: iterative_eliminate(inputs.game, inputs.judgments, args.K, seed,
                                                              args.order, threads=args.threads))
        inputs.game, inputs.judgments = res.game, res.judgments
        stages["eliminate"] = {
            "skipped": False,
            "order": args.order,
            "log": res.log.to_list(),
            "kept_defenses": list(res.game.defender_actions),
            "kept_attacks": list(res.game.attacker_actions),
        }

    if args.concept not in BASELINES:
        dist = _stage("simulate", lambda: run_simulate(inputs, args.concept, args.k, args.K, seed,
                                                       args.threads, args.tie_break))
        stages["simulate"] = dist.to_dict()
    report = _stage("solve", lambda: run_solve(inputs, args.concept, args.k, args.K, seed, args.threads,
                                               args.tie_break))
    stages["solve"] = _as_dict(report)
    body = {"concept": args.concept, "stages": stages}
    if args.format == "csv":
        if "simulate" not in stages:
            raise ValidationError(f"'{args.concept}' has no attack distribution; use --format json")
        _emit(distribution_csv(dist), args.out)
        return EXIT_OK
    _emit(dumps(_envelope("pipeline", inputs.hashes(), seed, args.K, body)), args.out)
    return EXIT_OK


# ---------------------------------------------------------------- parser


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _seed(text: str) -> int:
    try:
        return check_seed(int(text))
    except (ValueError, ValidationError):
        raise argparse.ArgumentTypeError("seed must be an integer in [0, 2**64 - 1]") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ara-engine", description="Adversarial risk analysis solvers.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, judgments_required=False):
        sp.add_argument("--game", "--input", dest="game", required=True, help="game JSON file")
        sp.add_argument("--judgments", required=judgments_required, help="judgments JSON file")
        sp.add_argument("--K", type=_positive_int, default=10_000, help="Monte Carlo sample size")
        sp.add_argument("--seed", type=_seed, default=0)
        sp.add_argument("--threads", type=_positive_int, default=None,
                        help="worker threads (default: ARA_ENGINE_THREADS or all cores)")
        sp.add_argument("--out", help="output file (default: stdout)")
        sp.add_argument("--format", choices=("json", "csv"), default="json")
        sp.add_argument("--tie-break", choices=("lowest", "random"), default="lowest")

    def concept(sp, default):
        sp.add_argument("--concept", choices=CONCEPTS, default=default)
        sp.add_argument("--k", type=int, default=None, help="level-k depth")

    sp = sub.add_parser("validate", help="parse and check input files")
    sp.add_argument("--game", "--input", dest="game", required=True)
    sp.add_argument("--judgments")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("solve", help="defender decision under a solution concept or baseline")
    common(sp)
    concept(sp, "ara")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("simulate-attacks", help="Monte Carlo attack distribution")
    common(sp, judgments_required=True)
    concept(sp, "ara")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("eliminate", help="iterated removal of dominated and separated actions")
    common(sp, judgments_required=True)
    sp.add_argument("--order", choices=("defender-first", "attacker-first"), default="defender-first")
    sp.set_defaults(func=cmd_eliminate)

    sp = sub.add_parser("pipeline", help="validate, eliminate, simulate and solve in one report")
    common(sp, judgments_required=True)
    concept(sp, "ara")
    sp.add_argument("--order", choices=("defender-first", "attacker-first"), default="defender-first")
    sp.add_argument("--skip-eliminate", action="store_true")
    sp.set_defaults(func=cmd_pipeline)

    sp = sub.add_parser("auction", help="first-price sealed-bid auction analyses")
    sp.add_argument("--spec", required=True, help="auction JSON file")
    sp.add_argument("--analysis", choices=ANALYSES, required=True)
    sp.add_argument("--tol", type=float, default=None, help="bid (or mirror convergence) tolerance")
    sp.add_argument("--out")
    sp.add_argument("--format", choices=("json", "csv"), default="json")
    sp.add_argument("--csv", help="also write the bid,cdf,expected_profit table here")
    sp.set_defaults(func=cmd_auction)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER if isinstance(exc.error, SolverError) else EXIT_INPUT
    except (ValidationError, PreconditionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SolverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
