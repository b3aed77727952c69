"""Command-line interface.

Subcommands: analyze, monitor, simulate, calibrate, simon. Configurations are
JSON documents validated against the schemas in :mod:`localmem.schemas`;
results are written as JSON reports and plot-ready CSV tables. Every output
embeds the seed, simulation count, a content hash of the configuration and
the package version, so a table can always be traced back to its inputs.

Exit codes: 0 success, 1 infeasible calibration, 2 input error, 3 internal
numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from pathlib import Path

import jsonschema

from . import __version__, schemas
from .calibration import (
    DEFAULT_GAMMA_GRID,
    DEFAULT_LAMBDA_GRID,
    CalibrationProblem,
    calibrate,
    calibrate_fixed,
    calibrated_spec,
)
from .design import (
    STAGE_FINAL,
    STAGE_INTERIM,
    Decision,
    DesignSpec,
    TrialState,
    final_step,
    interim_step,
)
from .errors import (
    ConfigError,
    InfeasibleCalibrationError,
    LocalMemError,
)
from .posterior import BasketData, BetaParams, analyze
from .simon import DEFAULT_N_MAX, simon_oc, simon_search
from .simulation import Scenario, scenario_suite, simulate

EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_INPUT = 2
EXIT_NUMERIC = 3


def _fmt(value) -> str:
    """CSV cell: 6 significant digits, '-' for absent values."""
    if value is None:
        return "-"
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, float):
        return format(value, ".6g")
    return str(value)


def _load_config(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _validate(config: dict, schema: dict) -> None:
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(config), key=lambda e: list(e.absolute_path))
    if errors:
        parts = []
        for err in errors[:5]:
            loc = "/".join(str(p) for p in err.absolute_path) or "<root>"
            parts.append(f"field '{loc}': {err.message}")
        raise ConfigError("; ".join(parts))


def _config_hash(config: dict) -> str:
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


def _meta(command: str, config: dict, seed=None, n_sims=None) -> dict:
    return {
        "command": command,
        "version": __version__,
        "config_hash": _config_hash(config),
        "seed": seed,
        "n_sims": n_sims,
    }


def _build_spec(doc: dict, lam_default: float | None = None) -> DesignSpec:
    lam = doc.get("lambda", lam_default)
    if lam is None:
        raise ConfigError("spec needs a 'lambda' value")
    prior = doc.get("prior")
    return DesignSpec.create(
        num_baskets=doc["baskets"],
        max_sizes=doc["max_sizes"],
        theta0=doc["theta0"],
        theta1=doc["theta1"],
        lam=lam,
        gamma=doc.get("gamma", 0.0),
        delta=doc["delta"],
        prior=BetaParams(prior["alpha"], prior["beta"]) if prior else BetaParams(1.0, 1.0),
        stages=doc["stages"],
        interim_fraction=doc.get("interim_fraction"),
        interim_sizes=doc.get("interim_sizes"),
    )


def _write_json(out_dir: Path, name: str, payload: dict) -> Path:
    path = out_dir / name
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _write_csv(out_dir: Path, name: str, meta: dict, header: list[str], rows: list[list]) -> Path:
    path = out_dir / name
    with open(path, "w", encoding="utf-8", newline="") as fh:
        meta_line = " ".join(f"{k}={v}" for k, v in meta.items())
        fh.write(f"# {meta_line}\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def _emit(args, json_name, payload, tables) -> None:
    """tables: list of (csv_name, header, rows)."""
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if args.format in ("json", "both"):
        written.append(_write_json(out_dir, json_name, payload))
    if args.format in ("csv", "both"):
        for name, header, rows in tables:
            written.append(_write_csv(out_dir, name, payload["meta"], header, rows))
    for path in written:
        print(f"wrote {path}")


def _scalar_or_vector(value, length: int) -> list[float]:
    if isinstance(value, (int, float)):
        return [float(value)] * length
    return [float(v) for v in value]


# ---------------------------------------------------------------- analyze --


def cmd_analyze(args) -> int:
    config = _load_config(args.config)
    _validate(config, schemas.ANALYZE_CONFIG)
    data = BasketData.create(config["x"], config["n"], config.get("basket_ids"))
    prior_doc = config.get("prior")
    prior = BetaParams(prior_doc["alpha"], prior_doc["beta"]) if prior_doc else BetaParams(1.0, 1.0)
    theta0 = _scalar_or_vector(config["theta0"], data.num_baskets)
    result = analyze(data, delta=config["delta"], prior=prior, theta0=theta0)

    pp = result.partition_posterior
    payload = {
        "meta": _meta("analyze", config),
        "baskets": [
            {
                "id": data.basket_ids[b],
                "x": data.x[b],
                "n": data.n[b],
                "alpha": result.posteriors[b].alpha,
                "beta": result.posteriors[b].beta,
                "mean": result.posteriors[b].mean,
                "ess": result.ess[b],
                "prob_exceeds": result.prob_exceeds[b],
            }
            for b in range(data.num_baskets)
        ],
        "partitions": [
            {
                "membership": part.membership_string(),
                "num_blocks": part.num_blocks,
                "prior": float(result.pset.prior[j]),
                "weight": float(pp.weights[j]),
            }
            for j, part in enumerate(result.pset.partitions)
        ],
        "similarity": [[float(v) for v in row] for row in result.similarity.psi],
        "top_partition": {
            "membership": result.top_partition.membership_string(),
            "weight": pp.top_prob,
        },
    }
    basket_rows = [
        [r["id"], r["x"], r["n"], r["alpha"], r["beta"], r["mean"], r["ess"], r["prob_exceeds"]]
        for r in payload["baskets"]
    ]
    partition_rows = [
        [r["membership"], r["num_blocks"], r["prior"], r["weight"]] for r in payload["partitions"]
    ]
    _emit(
        args,
        "analysis.json",
        payload,
        [
            (
                "analysis_baskets.csv",
                ["id", "x", "n", "alpha", "beta", "mean", "ess", "prob_exceeds"],
                basket_rows,
            ),
            (
                "analysis_partitions.csv",
                ["membership", "num_blocks", "prior", "weight"],
                partition_rows,
            ),
        ],
    )
    return EXIT_OK


# ---------------------------------------------------------------- monitor --


def cmd_monitor(args) -> int:
    config = _load_config(args.config)
    _validate(config, schemas.MONITOR_CONFIG)
    spec = _build_spec(config["spec"])
    if spec.stages != 2:
        raise ConfigError("monitor requires a two-stage design spec")
    stage = config["stage"]
    x = [int(v) for v in config["x"]]
    n = [int(v) for v in config["n"]]
    if len(x) != spec.num_baskets or len(n) != spec.num_baskets:
        raise ConfigError(
            f"x and n must have {spec.num_baskets} entries, got {len(x)} and {len(n)}"
        )
    active = config.get("active", [True] * spec.num_baskets)
    if len(active) != spec.num_baskets:
        raise ConfigError(f"active must have {spec.num_baskets} entries")
    boundary = spec.boundary()

    if stage == STAGE_INTERIM:
        if not all(active):
            raise ConfigError("all baskets are active at the interim analysis")
        if tuple(n) != spec.stage1_sizes():
            raise ConfigError(
                f"interim sample sizes {n} do not match the design plan {list(spec.stage1_sizes())}"
            )
        state = interim_step(TrialState.at_interim(x, spec), spec)
        analyzed = list(range(spec.num_baskets))
        data = state.data
        decisions = [
            Decision.CONTINUE if d is Decision.PENDING else d for d in state.decisions
        ]
        applied = "q1"
    else:
        analyzed = [b for b in range(spec.num_baskets) if active[b]]
        if not analyzed:
            raise ConfigError("stage 2 needs at least one active basket")
        for b in analyzed:
            if n[b] != spec.max_sizes[b]:
                raise ConfigError(
                    f"basket {b} is listed as active at stage 2 but has n={n[b]}, "
                    f"expected the maximum size {spec.max_sizes[b]}; a stopped basket "
                    "cannot re-enter the active set"
                )
        data = BasketData.create([x[b] for b in analyzed], [n[b] for b in analyzed])
        decisions = [Decision.FUTILITY_STOPPED] * spec.num_baskets
        applied = "q2"

    result = analyze(
        data,
        delta=spec.delta,
        prior=spec.prior,
        theta0=[spec.theta0[b] for b in analyzed],
    )
    if stage == STAGE_FINAL:
        for i, b in enumerate(analyzed):
            decisions[b] = (
                Decision.EFFICACIOUS
                if result.prob_exceeds[i] > boundary.q2
                else Decision.NOT_PROMISING
            )

    ids = [chr(ord("A") + b) if b < 26 else f"B{b + 1}" for b in range(spec.num_baskets)]
    baskets = []
    for b in range(spec.num_baskets):
        entry = {"id": ids[b], "x": x[b], "n": n[b], "decision": decisions[b].value}
        if b in analyzed:
            i = analyzed.index(b)
            entry["prob_exceeds"] = result.prob_exceeds[i]
            entry["ess"] = result.ess[i]
        baskets.append(entry)
    payload = {
        "meta": _meta("monitor", config),
        "stage": stage,
        "boundary": {"q1": boundary.q1, "q2": boundary.q2, "applied": applied},
        "top_partition": {
            "membership": result.top_partition.membership_string(),
            "weight": result.partition_posterior.top_prob,
            "basket_ids": [ids[b] for b in analyzed],
        },
        "baskets": baskets,
    }
    rows = [
        [e["id"], e["x"], e["n"], e.get("prob_exceeds"), e.get("ess"), e["decision"]]
        for e in baskets
    ]
    _emit(
        args,
        "monitor.json",
        payload,
        [("monitor.csv", ["id", "x", "n", "prob_exceeds", "ess", "decision"], rows)],
    )
    return EXIT_OK


# --------------------------------------------------------------- simulate --


def _oc_row(label, rates, oc) -> dict:
    return {
        "label": label,
        "true_rates": [float(r) for r in rates],
        "reject_rate": [float(r) for r in oc.per_basket_reject_rate],
        "fwer": oc.fwer,
        "trialwise_power": oc.trialwise_power,
        "expected_n": [float(v) for v in oc.expected_n],
    }


def _oc_tables(basket_ids, scenario_rows):
    header = (
        ["label"]
        + [f"reject_{i}" for i in basket_ids]
        + ["fwer", "trialwise_power"]
        + [f"en_{i}" for i in basket_ids]
    )
    rows = [
        [r["label"], *r["reject_rate"], r["fwer"], r["trialwise_power"], *r["expected_n"]]
        for r in scenario_rows
    ]
    return header, rows


def cmd_simulate(args) -> int:
    config = _load_config(args.config)
    _validate(config, schemas.SIMULATE_CONFIG)
    spec = _build_spec(config["spec"])
    seed = args.seed if args.seed is not None else config["seed"]
    n_sims = config.get("n_sims", 5000)
    scenarios_doc = config.get("scenarios", "suite")
    if scenarios_doc == "suite":
        scenarios = scenario_suite(spec)
    else:
        scenarios = [
            Scenario.from_rates(spec, doc["true_rates"], doc["label"]) for doc in scenarios_doc
        ]
    rows = []
    for scenario in scenarios:
        oc = simulate(spec, scenario, n_sims=n_sims, seed=seed, workers=args.workers)
        rows.append(_oc_row(scenario.label, scenario.true_rates, oc))
    ids = [chr(ord("A") + b) if b < 26 else f"B{b + 1}" for b in range(spec.num_baskets)]
    payload = {
        "meta": _meta("simulate", config, seed=seed, n_sims=n_sims),
        "basket_ids": ids,
        "scenarios": rows,
    }
    header, csv_rows = _oc_tables(ids, rows)
    _emit(args, "simulation.json", payload, [("simulation.csv", header, csv_rows)])
    return EXIT_OK


# --------------------------------------------------------------- calibrate --


def cmd_calibrate(args) -> int:
    config = _load_config(args.config)
    _validate(config, schemas.CALIBRATE_CONFIG)
    spec = _build_spec(config["spec"], lam_default=0.5)
    seed = args.seed if args.seed is not None else config["seed"]
    n_sims = config.get("n_sims", 5000)
    problem = CalibrationProblem(
        spec_template=spec,
        fwer_target=config.get("fwer_target", 0.10),
        lambda_grid=tuple(config.get("lambda_grid", DEFAULT_LAMBDA_GRID)),
        gamma_grid=tuple(config.get("gamma_grid", DEFAULT_GAMMA_GRID)),
        n_sims=n_sims,
        seed=seed,
    )
    result = (calibrate_fixed if spec.stages == 1 else calibrate)(problem, workers=args.workers)
    chosen = calibrated_spec(problem, result)

    # Guard against threshold overfitting: re-estimate the constrained and
    # maximized quantities on an independent stream.
    eval_seed = seed + 1
    oc_null = simulate(chosen, problem.null_scenario(), n_sims=n_sims, seed=eval_seed, workers=args.workers)
    oc_alt = simulate(
        chosen, problem.alternative_scenario(), n_sims=n_sims, seed=eval_seed, workers=args.workers
    )
    boundary = chosen.boundary()
    payload = {
        "meta": _meta("calibrate", config, seed=seed, n_sims=n_sims),
        "lambda": result.lam,
        "gamma": result.gamma,
        "boundary": {"q1": boundary.q1, "q2": boundary.q2},
        "achieved_fwer": result.achieved_fwer,
        "achieved_power": result.achieved_power,
        "evaluation": {
            "seed": eval_seed,
            "fwer": oc_null.fwer,
            "trialwise_power": oc_alt.trialwise_power,
        },
    }
    frontier_rows = [[p.lam, p.gamma, p.fwer, p.power] for p in result.frontier]
    _emit(
        args,
        "calibration.json",
        payload,
        [("calibration_frontier.csv", ["lambda", "gamma", "fwer", "power"], frontier_rows)],
    )
    return EXIT_OK


# ------------------------------------------------------------------ simon --


def cmd_simon(args) -> int:
    flags = {
        "p0": args.p0,
        "p1": args.p1,
        "alpha": args.alpha,
        "beta": args.beta,
        "nmax": args.nmax,
        "baskets": args.baskets,
    }
    result = simon_search(args.p0, args.p1, args.alpha, args.beta, n_max=args.nmax)
    design = result.minimax

    num_baskets = args.baskets
    spec = DesignSpec.create(
        num_baskets,
        design.n,
        args.p0,
        args.p1,
        lam=0.5,
        stages=2,
        interim_sizes=design.n1,
    )
    rows = []
    for scenario in scenario_suite(spec):
        oc = simon_oc(design, scenario, num_baskets)
        rows.append(_oc_row(scenario.label, scenario.true_rates, oc))

    def design_doc(d):
        return {
            "r1": d.r1,
            "n1": d.n1,
            "r": d.r,
            "n": d.n,
            "alpha": d.alpha_actual,
            "power": d.power_actual,
            "en_null": d.en_null,
            "pet_null": d.pet_null,
        }

    ids = [chr(ord("A") + b) for b in range(num_baskets)]
    payload = {
        "meta": _meta("simon", flags),
        "minimax": design_doc(result.minimax),
        "optimal": design_doc(result.optimal),
        "scenarios": rows,
    }
    header, csv_rows = _oc_tables(ids, rows)
    _emit(args, "simon.json", payload, [("simon.csv", header, csv_rows)])
    print(
        f"minimax: r1={design.r1} n1={design.n1} r={design.r} n={design.n} "
        f"alpha={design.alpha_actual:.4f} power={design.power_actual:.4f} en0={design.en_null:.2f}"
    )
    return EXIT_OK


# ------------------------------------------------------------------- main --


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="localmem",
        description="Basket-trial design with partition-based local information borrowing",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=".", help="output directory (default: current)")
    common.add_argument(
        "--format", choices=("json", "csv", "both"), default="both", help="output formats"
    )
    common.add_argument("--seed", type=int, default=None, help="override the config seed")
    common.add_argument(
        "--workers", type=int, default=1, help="parallel workers; never changes results"
    )

    for name, fn, needs_config in (
        ("analyze", cmd_analyze, True),
        ("monitor", cmd_monitor, True),
        ("simulate", cmd_simulate, True),
        ("calibrate", cmd_calibrate, True),
    ):
        sp = sub.add_parser(name, parents=[common])
        sp.add_argument("--config", required=needs_config, help="JSON configuration file")
        sp.set_defaults(func=fn)

    sp = sub.add_parser("simon", parents=[common])
    sp.add_argument("--p0", type=float, required=True, help="null response rate")
    sp.add_argument("--p1", type=float, required=True, help="target response rate")
    sp.add_argument("--alpha", type=float, required=True, help="per-basket type I error")
    sp.add_argument("--beta", type=float, required=True, help="per-basket type II error")
    sp.add_argument("--nmax", type=int, default=DEFAULT_N_MAX, help="largest total size searched")
    sp.add_argument("--baskets", type=int, default=4, help="basket count for the exact OC table")
    sp.set_defaults(func=cmd_simon)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except json.JSONDecodeError as err:
        print(f"input error: invalid JSON at line {err.lineno}, column {err.colno}: {err.msg}", file=sys.stderr)
        return EXIT_INPUT
    except InfeasibleCalibrationError as err:
        print(f"infeasible: {err} (min achieved FWER {err.min_achieved_fwer:.4f})", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ConfigError, LocalMemError, ValueError, KeyError, OSError) as err:
        print(f"input error: {err}", file=sys.stderr)
        return EXIT_INPUT
    except (ArithmeticError, FloatingPointError) as err:
        print(f"numeric failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
