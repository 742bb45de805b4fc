"""Command-line experiment harness.

Commands: ``qgen``, ``qeval``, ``uniqueness``, ``design`` (subcommands
``error`` | ``frame-potential`` | ``arc-stats``) and ``games``
(``unknownness`` | ``forge`` | ``noise-check``).  Every experiment command
emits a CSV (for plotting) and a JSON report (config echo, per-trial
records, summary, toolkit version, wall-clock duration).  Re-running any
command with the same config and seed reproduces the CSV byte for byte;
only the JSON duration field varies.

Exit codes: 0 success, 2 usage error, 3 parse/format error, 4 dimension or
size-guard error, 5 invariant/assertion failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time

import numpy as np

from . import __version__
from .circuits import compile_descriptor, deserialize, qeval, qgen, serialize
from .design import (
    Ensemble,
    arc_statistics,
    design_error,
    frame_potential,
    haar_ensemble,
    haar_moment_operator,
    moment_operator,
)
from .errors import DimensionError, FormatError, QpufError, ValidationError
from .qmath import DensityMatrix, PureState, fidelity
from .security import (
    ExactCloneForger,
    HelstromDistinguisher,
    IdentityForger,
    RandomGuessDistinguisher,
    RandomUnitaryForger,
    crp_record,
    forgery_game,
    haar_jitter_pair,
    noise_theorem_check,
    qgen_ensemble,
    qgen_jitter_pair,
    unknownness_game,
    uniqueness_experiment,
    write_crp_records,
    UnitaryNoiseModel,
)

USAGE_ERROR, FORMAT_ERROR, DIMENSION_ERROR, INVARIANT_ERROR = 2, 3, 4, 5


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def _write_csv(path: str, header, rows) -> None:
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_report(path: str, command: str, config: dict, results, started: float) -> None:
    doc = {
        "command": command,
        "config": config,
        "results": results,
        "toolkit_version": __version__,
        "duration_seconds": round(time.time() - started, 3),
    }
    with open(path, "w", encoding="ascii") as fh:
        json.dump(doc, fh, indent=2, sort_keys=False)
        fh.write("\n")


def _load_config_defaults(args: argparse.Namespace) -> None:
    """Fill absent flags from the --config JSON file; explicit flags win."""
    if getattr(args, "config", None) is None:
        return
    try:
        with open(args.config, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"bad config file: {exc}") from exc
    if not isinstance(doc, dict):
        raise FormatError("config file must hold a JSON object")
    for key, value in doc.items():
        attr = key.replace("-", "_")
        if hasattr(args, attr) and getattr(args, attr) is None:
            setattr(args, attr, value)


def _require(args, *names) -> None:
    for name in names:
        if getattr(args, name) is None:
            raise ValueError(f"missing required parameter --{name.replace('_', '-')}")


def _parse_arc(text: str) -> float:
    if isinstance(text, (int, float)):
        return float(text)
    cleaned = text.strip().lower()
    if cleaned == "pi":
        return float(np.pi)
    if cleaned.endswith("pi"):
        return float(cleaned[:-2]) * np.pi
    return float(cleaned)


# ---------------------------------------------------------------------------
# commands


def cmd_qgen(args) -> int:
    _require(args, "n", "k", "out")
    seed = args.seed or 0
    desc = qgen(int(args.n), int(args.k), int(seed))
    payload = serialize(desc)
    with open(args.out, "wb") as fh:
        fh.write(payload)
    digest = hashlib.sha256(payload).hexdigest()
    print(f"sha256:{digest}")
    return 0


def _load_challenge(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"bad challenge file: {exc}") from exc
    if isinstance(doc, list):
        doc = {"amplitudes": doc}
    if not isinstance(doc, dict) or "amplitudes" not in doc:
        raise FormatError("challenge file needs an 'amplitudes' field")
    try:
        amps = np.array([complex(re, im) for re, im in doc["amplitudes"]])
        challenge = PureState(amps)
        expected = None
        if "expected_response" in doc:
            expected = PureState(
                np.array([complex(re, im) for re, im in doc["expected_response"]])
            )
    except (TypeError, ValueError, ValidationError) as exc:
        raise FormatError(f"bad challenge payload: {exc}") from exc
    return challenge, expected


def cmd_qeval(args) -> int:
    _require(args, "descriptor", "challenge", "out")
    try:
        with open(args.descriptor, "rb") as fh:
            desc = deserialize(fh.read())
    except OSError:
        raise
    challenge, expected = _load_challenge(args.challenge)
    u = compile_descriptor(desc)
    if u.dim != challenge.dim:
        raise DimensionError(
            f"descriptor acts on dim {u.dim}, challenge has dim {challenge.dim}"
        )
    response = PureState(u.entries @ challenge.amplitudes)
    write_crp_records(args.out, [crp_record(challenge, response, desc.n_qubits)], append=True)
    if expected is not None:
        fid = fidelity(response.density(), expected.density())
        print(f"response_fidelity={fid:.12f}")
    print(f"appended 1 record to {args.out}")
    return 0


def _parse_k_list(value) -> list:
    if isinstance(value, int):
        return [value]
    if isinstance(value, list):
        return [int(v) for v in value]
    return [int(tok) for tok in str(value).split(",") if tok.strip()]


def cmd_uniqueness(args) -> int:
    started = time.time()
    _require(args, "n", "k", "runs", "out")
    n = int(args.n)
    ks = _parse_k_list(args.k)
    runs = int(args.runs)
    seed = int(args.seed or 0)
    threads = int(args.threads or 1)
    rows, cells = [], []
    for k in ks:
        cell_seed = seed + 10 * n + k
        report = uniqueness_experiment(n, k, runs, cell_seed, threads=threads)
        for i, dist in enumerate(report.distances):
            rows.append((i, n, k, dist))
        cells.append(
            {
                "n": n,
                "k": k,
                "runs": runs,
                "seed": cell_seed,
                "min": report.min,
                "mean": report.mean,
                "stddev": report.stddev,
                "distances": list(report.distances),
            }
        )
    _write_csv(args.out + ".csv", ("run_index", "n_qubits", "n_blocks", "diamond_distance"), rows)
    config = {"n": n, "k": ks, "runs": runs, "seed": seed, "threads": threads}
    _write_report(args.out + ".json", "uniqueness", config, {"cells": cells}, started)
    print(f"wrote {args.out}.csv and {args.out}.json")
    return 0


def _build_ensemble(kind: str, args, budget: int, seed: int) -> Ensemble:
    if kind == "haar":
        if args.d is not None:
            return haar_ensemble(int(args.d), budget, seed)
        _require(args, "n")
        return haar_ensemble(2 ** int(args.n), budget, seed)
    if kind == "qgen":
        _require(args, "n", "k")
        return qgen_ensemble(int(args.n), int(args.k), budget, seed)
    if kind == "singleton":
        _require(args, "n", "k")
        desc = qgen(int(args.n), int(args.k), seed)
        return Ensemble.explicit([(1.0, compile_descriptor(desc))])
    raise ValueError(f"unknown ensemble kind {kind!r}")


def cmd_design(args) -> int:
    started = time.time()
    seed = int(args.seed or 0)
    sub = args.subcommand
    _require(args, "out")
    if sub == "error":
        _require(args, "t")
        budget = int(args.budget or 256)
        ks = _parse_k_list(args.k) if args.ensemble == "qgen" and args.k is not None else [None]
        rows, results = [], []
        for k in ks:
            if k is not None:
                args.k = k
            ens = _build_ensemble(args.ensemble or "qgen", args, budget, seed)
            rep = design_error(ens, int(args.t))
            rows.append(
                (args.ensemble or "qgen", ens.dim, "" if k is None else k, rep.t, budget,
                 rep.frobenius, rep.probe_trace)
            )
            results.append(
                {
                    "ensemble": args.ensemble or "qgen",
                    "d": ens.dim,
                    "k": k,
                    "t": rep.t,
                    "budget": budget,
                    "proxies": {
                        "frobenius_moment_distance": rep.frobenius,
                        "entangled_probe_trace_distance": rep.probe_trace,
                    },
                    "note": "proxies bound/approximate the diamond-norm design error; "
                    "they are not the diamond norm itself",
                }
            )
        _write_csv(
            args.out + ".csv",
            ("ensemble", "d", "k", "t", "budget", "frobenius", "probe_trace"),
            rows,
        )
        config = {"ensemble": args.ensemble, "n": args.n, "k": ks, "t": int(args.t),
                  "budget": budget, "seed": seed}
        _write_report(args.out + ".json", "design error", config, results, started)
    elif sub == "frame-potential":
        _require(args, "t", "pairs")
        budget = int(args.budget or 256)
        ens = _build_ensemble(args.ensemble or "haar", args, budget, seed)
        est = frame_potential(ens, int(args.t), int(args.pairs), seed=seed)
        _write_csv(
            args.out + ".csv",
            ("ensemble", "d", "t", "pairs", "estimate", "std_error"),
            [(args.ensemble or "haar", ens.dim, int(args.t), est.pairs, est.value, est.std_error)],
        )
        config = {"ensemble": args.ensemble, "d": ens.dim, "t": int(args.t),
                  "pairs": int(args.pairs), "seed": seed}
        _write_report(
            args.out + ".json", "design frame-potential", config,
            {"estimate": est.value, "std_error": est.std_error}, started,
        )
    elif sub == "arc-stats":
        _require(args, "d", "arc", "samples")
        arc = _parse_arc(args.arc)
        ens = haar_ensemble(int(args.d), int(args.samples), seed)
        rep = arc_statistics(ens, arc, int(args.samples))
        _write_csv(
            args.out + ".csv",
            ("d", "arc_length", "samples", "mean_count", "var_count", "predicted_mean", "predicted_var"),
            [(rep.d, rep.arc_length, rep.sample_count, rep.mean_count, rep.var_count,
              rep.predicted_mean, rep.predicted_var)],
        )
        config = {"d": int(args.d), "arc": arc, "samples": int(args.samples), "seed": seed}
        _write_report(
            args.out + ".json", "design arc-stats", config,
            {
                "mean_count": rep.mean_count,
                "var_count": rep.var_count,
                "predicted_mean": rep.predicted_mean,
                "predicted_var": rep.predicted_var,
            },
            started,
        )
    else:
        raise ValueError(f"unknown design subcommand {sub!r}")
    print(f"wrote {args.out}.csv and {args.out}.json")
    return 0


def _build_distinguisher(name: str, sampler: Ensemble, m: int, seed: int):
    if name == "random-guess":
        return RandomGuessDistinguisher()
    if name == "helstrom":
        model_e = moment_operator(sampler, m)
        if m <= 2:
            model_h = haar_moment_operator(sampler.dim, m)
        else:
            model_h = haar_moment_operator(
                sampler.dim, m, mode="monte-carlo", budget=sampler.budget or 1024, seed=seed + 1
            )
        return HelstromDistinguisher(model_e, model_h)
    raise ValueError(f"unknown adversary {name!r}")


def cmd_games(args) -> int:
    started = time.time()
    seed = int(args.seed or 0)
    sub = args.subcommand
    _require(args, "out")
    if sub == "unknownness":
        _require(args, "m", "trials")
        budget = int(args.budget or 512)
        sampler = _build_ensemble(args.sampler or "haar", args, budget, seed + 1000)
        adversary = _build_distinguisher(args.adversary or "helstrom", sampler, int(args.m), seed)
        res = unknownness_game(sampler, int(args.m), int(args.trials), adversary, seed)
        rows = [(args.sampler or "haar", adversary.name, res.trials, res.successes,
                 res.success_rate, res.bound)]
        _write_csv(
            args.out + ".csv",
            ("sampler", "adversary", "trials", "successes", "success_rate", "helstrom_bound"),
            rows,
        )
        config = {"sampler": args.sampler, "m": int(args.m), "trials": int(args.trials),
                  "adversary": adversary.name, "budget": budget, "seed": seed}
        _write_report(
            args.out + ".json", "games unknownness", config,
            {"success_rate": res.success_rate, "helstrom_bound": res.bound,
             "design_ceiling_epsilon": 4.0 * (res.bound - 0.5)},
            started,
        )
    elif sub == "forge":
        _require(args, "n", "k", "trials")
        num_crps = int(args.crps or 0)
        desc = qgen(int(args.n), int(args.k), seed)
        name = args.adversary or "identity"
        if name == "identity":
            adversary = IdentityForger()
        elif name == "random-unitary":
            adversary = RandomUnitaryForger()
        elif name == "exact-clone":
            adversary = ExactCloneForger(desc)
        else:
            raise ValueError(f"unknown adversary {name!r}")
        res = forgery_game(desc, num_crps, int(args.trials), adversary, seed)
        _write_csv(
            args.out + ".csv",
            ("adversary", "trials", "num_crps", "mean_squared_fidelity",
             "fidelity_std_error", "success_rate", "success_threshold"),
            [(adversary.name, res.trials, num_crps, res.mean_squared_fidelity,
              res.fidelity_std_error, res.success_rate, res.success_threshold)],
        )
        config = {"n": int(args.n), "k": int(args.k), "crps": num_crps,
                  "trials": int(args.trials), "adversary": adversary.name, "seed": seed}
        _write_report(
            args.out + ".json", "games forge", config,
            {"mean_squared_fidelity": res.mean_squared_fidelity,
             "success_rate": res.success_rate}, started,
        )
    elif sub == "noise-check":
        _require(args, "t", "sigma")
        budget = int(args.budget or 128)
        model = UnitaryNoiseModel(sigma=float(args.sigma))
        kind = args.ensemble or "qgen"
        if kind == "qgen":
            _require(args, "n", "k")
            pair = qgen_jitter_pair(int(args.n), int(args.k), model, budget, seed)
        elif kind == "haar":
            _require(args, "n")
            pair = haar_jitter_pair(int(args.n), model, budget, seed)
        else:
            raise ValueError(f"noise-check supports qgen or haar ensembles, got {kind!r}")
        rep = noise_theorem_check(pair, int(args.t))
        _write_csv(
            args.out + ".csv",
            ("ensemble", "sigma", "t", "budget", "epsilon", "epsilon_t", "epsilon_prime",
             "holds", "meaningful"),
            [(kind, model.sigma, rep.t, budget, rep.epsilon, rep.epsilon_t,
              rep.epsilon_prime, rep.holds, rep.meaningful)],
        )
        config = {"ensemble": kind, "sigma": model.sigma, "t": int(args.t),
                  "budget": budget, "seed": seed, "n": args.n, "k": args.k}
        _write_report(
            args.out + ".json", "games noise-check", config,
            {"epsilon": rep.epsilon, "epsilon_t": rep.epsilon_t,
             "epsilon_prime": rep.epsilon_prime, "holds": rep.holds,
             "meaningful": rep.meaningful}, started,
        )
        if not rep.holds:
            raise ValidationError(
                f"noise bound violated: eps'={rep.epsilon_prime} > "
                f"eps+eps_t+tol={rep.epsilon + rep.epsilon_t + rep.tolerance}"
            )
    else:
        raise ValueError(f"unknown games subcommand {sub!r}")
    print(f"wrote {args.out}.csv and {args.out}.json")
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None, help="master seed (uint64)")
    p.add_argument("--out", type=str, default=None, help="output path or prefix")
    p.add_argument("--config", type=str, default=None, help="JSON config file; flags win")
    p.add_argument("--threads", type=int, default=None, help="worker threads for trials")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qpufsim",
        description="Simulation and cryptanalysis toolkit for t-design-based quantum PUFs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("qgen", help="generate a QPUF descriptor file")
    p.add_argument("--n", type=int, default=None, help="qubit count (>= 2)")
    p.add_argument("--k", type=int, default=None, help="layer count (>= 0)")
    _add_common(p)

    p = sub.add_parser("qeval", help="evaluate a descriptor on a challenge state")
    p.add_argument("--descriptor", type=str, default=None, help="descriptor JSON file")
    p.add_argument("--challenge", type=str, default=None, help="challenge JSON file")
    _add_common(p)

    p = sub.add_parser("uniqueness", help="diamond distances between generated QPUF pairs")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--k", type=str, default=None, help="layer count or comma list, e.g. 1,2,3,4")
    p.add_argument("--runs", type=int, default=None)
    _add_common(p)

    p = sub.add_parser("design", help="design-quality diagnostics")
    p.add_argument("subcommand", choices=["error", "frame-potential", "arc-stats"])
    p.add_argument("--ensemble", choices=["qgen", "haar"], default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--k", type=str, default=None)
    p.add_argument("--d", type=int, default=None, help="dimension (haar/arc-stats)")
    p.add_argument("--t", type=int, default=None)
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--pairs", type=int, default=None)
    p.add_argument("--arc", type=str, default=None, help="arc length in radians ('pi' allowed)")
    p.add_argument("--samples", type=int, default=None)
    _add_common(p)

    p = sub.add_parser("games", help="security games and noise checks")
    p.add_argument("subcommand", choices=["unknownness", "forge", "noise-check"])
    p.add_argument("--sampler", choices=["haar", "qgen", "singleton"], default=None)
    p.add_argument("--ensemble", choices=["qgen", "haar"], default=None)
    p.add_argument("--adversary", type=str, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--k", type=str, default=None)
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--m", type=int, default=None, help="copies handed per trial")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--crps", type=int, default=None)
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--t", type=int, default=None)
    p.add_argument("--budget", type=int, default=None)
    _add_common(p)
    return parser


_HANDLERS = {
    "qgen": cmd_qgen,
    "qeval": cmd_qeval,
    "uniqueness": cmd_uniqueness,
    "design": cmd_design,
    "games": cmd_games,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _load_config_defaults(args)
        return _HANDLERS[args.command](args)
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return FORMAT_ERROR
    except DimensionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DIMENSION_ERROR
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INVARIANT_ERROR
    except QpufError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INVARIANT_ERROR
    except (ValueError, TypeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
