"""Command-line entry point.

Subcommands: ``compute``, ``axioms``, ``shuffle-study``, ``layer-report``,
``diversity``, ``make-suites``, ``gen-trace``. Every run writes a
``run.json`` into the output directory echoing the fully-resolved
configuration, defaults included, so no hyperparameter stays invisible.
Identical command lines (including seed) produce byte-identical JSON/CSV
outputs. Errors go to stderr as JSON objects; the exit code is 0 only
when the command succeeded.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__, axioms, experiments, toynet
from .criteria import make_criterion, registered_names
from .errors import ProfileError
from .trace import SuiteView, profile_training, trace_load, trace_save

_DEFAULTS = {
    "threshold": 0.75,  # nc
    "kmnc_k": 100,
    "tknc_k": 1,
    "batch_size": 1,  # nlc-inc
    "bins": 100,
    "runs": 20,
    "trials": 100,
    "chain_len": 3,
    "permutations": 20,
    "duplicates": 50,
    "base_count": 100,
    "noise_low": -0.1,
    "noise_high": 0.1,
}


def _fail(kind: str, message: str, code: int = 1, **extra) -> int:
    payload = {"error": kind, "message": message, **extra}
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)
    return code


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_run_config(out: Path, command: str, args: argparse.Namespace, skip=()) -> None:
    resolved = {
        key: value
        for key, value in sorted(vars(args).items())
        if key not in ("func", "config", *skip)
    }
    _write_json(out / "run.json", {"command": command, "version": __version__, **resolved})


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _build_criterion(args, trace):
    name = args.criterion
    options = {}
    if name == "nc":
        options["threshold"] = args.threshold
    elif name == "kmnc":
        options["k"] = args.kmnc_k
    elif name == "tknc":
        options["k"] = args.tknc_k
    elif name == "nlc-inc":
        options["batch_size"] = args.batch_size
        if getattr(args, "warm_start_trace", None):
            options["warm_start"] = trace_load(args.warm_start_trace)
    if name in ("kmnc", "nbc", "snac"):
        if getattr(args, "profile_trace", None):
            options["profile"] = profile_training(trace_load(args.profile_trace))
        else:
            # self-profile fallback; boundary criteria read 0 on their own range
            options["profile"] = profile_training(trace)
    return make_criterion(name, **options)


def _result_payload(criterion, result) -> dict:
    payload = {
        "criterion": criterion.name,
        "value": result.value,
        "per_layer": result.per_layer,
        "descriptor": asdict(criterion.descriptor),
    }
    if result.accepted_inputs is not None:
        payload["accepted_inputs"] = result.accepted_inputs
    if result.committed_values is not None:
        payload["committed_values"] = list(result.committed_values)
    if result.degenerate_layers:
        payload["degenerate_layers"] = list(result.degenerate_layers)
    return payload


# ---------------------------------------------------------------------------
# subcommands


def cmd_compute(args) -> int:
    trace = trace_load(args.trace)
    criterion = _build_criterion(args, trace)
    result = criterion.evaluate(trace, trace.full_view())
    out = _out_dir(args)
    formats = args.format.split(",")
    if "json" in formats:
        _write_json(out / "result.json", _result_payload(criterion, result))
    if "csv" in formats:
        with open(out / "per_layer.csv", "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(["layer", "value"])
            for name, value in result.per_layer.items():
                writer.writerow([name, value])
    _write_run_config(out, "compute", args)
    print(f"{criterion.name} = {result.value}")
    return 0


def cmd_axioms(args) -> int:
    trace = trace_load(args.trace)
    criterion = _build_criterion(args, trace)
    out = _out_dir(args)
    if args.replay:
        witness = json.loads(Path(args.replay).read_text(encoding="utf-8"))
        reproduced = axioms.replay_witness(criterion, trace, witness)
        _write_json(out / "replay.json", {"criterion": criterion.name, "reproduced": reproduced})
        _write_run_config(out, "axioms", args)
        print(f"witness reproduced: {reproduced}")
        return 0 if reproduced else 1
    report = axioms.run_axiom_checks(
        criterion,
        trace,
        monotone_trials=args.trials,
        chain_len=args.chain_len,
        permutation_trials=args.permutations,
        duplicate_trials=args.duplicates,
        seed=args.seed,
    )
    _write_json(out / "axioms.json", json.loads(report.to_json()))
    if report.witness is not None:
        _write_json(out / "witness.json", report.witness)
    _write_run_config(out, "axioms", args)
    print(
        f"{criterion.name}: {report.monotone_violations}/{report.monotone_trials} "
        f"monotonicity violations, max permutation delta {report.max_permutation_delta}"
    )
    return 0


def cmd_shuffle_study(args) -> int:
    trace = trace_load(args.trace)
    criterion = _build_criterion(args, trace)
    control, shuffled = axioms.shuffle_study(criterion, trace, runs=args.runs, seed=args.seed)
    out = _out_dir(args)
    formats = args.format.split(",")
    if "json" in formats:
        _write_json(
            out / "stability.json",
            {
                "criterion": criterion.name,
                "control": asdict(control),
                "shuffled": asdict(shuffled),
            },
        )
    if "csv" in formats:
        axioms.write_stability_csv(
            out / "stability.csv", axioms.stability_rows(criterion.name, control, shuffled)
        )
    _write_run_config(out, "shuffle-study", args)
    print(
        f"{criterion.name}: control std {control.std}, shuffled std {shuffled.std}, "
        f"max % drop {shuffled.max_pct_drop:.2f}"
    )
    return 0


def cmd_layer_report(args) -> int:
    trace = trace_load(args.trace)
    criterion = _build_criterion(args, trace)
    report = experiments.layer_report(trace, trace.full_view(), criterion)
    out = _out_dir(args)
    formats = args.format.split(",")
    if "csv" in formats:
        experiments.layer_report_csv(report, out / "layer_report.csv")
    if "svg" in formats:
        experiments.layer_report_svg(report, out / "layer_report.svg")
    if "json" in formats:
        payload = asdict(report)
        _write_json(out / "layer_report.json", payload)
    _write_run_config(out, "layer-report", args)
    top = max(zip(report.shares_pct, report.layers)) if report.layers else (0.0, "-")
    print(f"{criterion.name}: dominant layer {top[1]} at {top[0]:.2f}%")
    return 0


def cmd_diversity(args) -> int:
    trace = trace_load(args.trace)
    full = trace.full_view()
    if trace.num_inputs < 2:
        return _fail("EmptyTrace", "diversity study needs at least 2 traced inputs")
    spectra = experiments.per_input_spectra(trace, full, layer=args.layer, bins=args.bins)
    full_spectrum = experiments.mean_spectrum(spectra)
    k = min(args.kmeans_k, trace.num_inputs)
    picks = experiments.centroid_select(spectra, k, seed=args.seed)

    labels, _, _ = experiments.kmeans(
        np.stack([s.mass for s in spectra]), k, seed=args.seed
    )
    counts = np.bincount(labels, minlength=k)
    largest = int(counts.argmax())
    cluster_members = [int(i) for i in np.flatnonzero(labels == largest)]
    rng = np.random.default_rng(args.seed)
    random_picks = [int(i) for i in rng.choice(trace.num_inputs, size=len(picks), replace=False)]

    def js_to_full(indices) -> float:
        member = experiments.mean_spectrum([spectra[i] for i in indices])
        return experiments.js_divergence(member, full_spectrum)

    suites = {
        "centroid_picks": js_to_full(picks),
        "single_cluster": js_to_full(cluster_members),
        "random_subset": js_to_full(random_picks),
    }
    simplified = experiments.simplified_cluster_diversity(
        np.stack([s.mass for s in spectra]),
        k_max=min(args.cluster_k_max, trace.num_inputs - 1),
        seed=args.seed,
    )
    pick_coverage = len({int(simplified.labels[i]) for i in picks}) / simplified.chosen_k

    out = _out_dir(args)
    formats = args.format.split(",")
    if "json" in formats:
        _write_json(
            out / "diversity.json",
            {
                "layer": args.layer or "penultimate",
                "bins": args.bins,
                "kmeans_k": k,
                "js_to_full": suites,
                "centroid_picks": picks,
                "simplified_clustering": {
                    "label": simplified.label,
                    "chosen_k": simplified.chosen_k,
                    "silhouette": simplified.silhouette,
                    "centroid_pick_cluster_coverage": pick_coverage,
                },
            },
        )
    if "csv" in formats:
        with open(out / "diversity.csv", "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(["suite", "js_to_full"])
            for name, value in suites.items():
                writer.writerow([name, value])
    _write_run_config(out, "diversity", args)
    print(
        "JS to full suite: "
        + ", ".join(f"{name}={value:.3e}" for name, value in suites.items())
    )
    return 0


def cmd_make_suites(args) -> int:
    if args.dataset_config:
        config = json.loads(Path(args.dataset_config).read_text(encoding="utf-8"))
        spec = toynet.dataset_from_config(config)
    else:
        spec = toynet.DatasetSpec(
            num_inputs=args.n,
            dim=args.dim,
            low=args.low,
            high=args.high,
            generator=args.generator,
            seed=args.seed,
        )
    dataset = toynet.make_dataset(spec)
    x1, x10 = experiments.make_noise_suites(
        dataset,
        base_count=args.base_count,
        noise_low=args.noise_low,
        noise_high=args.noise_high,
        seed=args.seed,
    )
    out = _out_dir(args)
    for name, suite in (("suite_x1", x1), ("suite_x10", x10)):
        with open(out / f"{name}.csv", "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            for row in suite.inputs:
                writer.writerow([repr(float(v)) for v in row])
    _write_run_config(out, "make-suites", args)
    print(f"wrote {x1.num_inputs} x1 inputs and {x10.num_inputs} x10 inputs")
    return 0


def cmd_gen_trace(args) -> int:
    config = json.loads(Path(args.config_file).read_text(encoding="utf-8"))
    net = toynet.net_from_config(config["net"])
    dataset_spec = toynet.dataset_from_config(config["dataset"])
    if args.inputs_csv:
        inputs = np.loadtxt(args.inputs_csv, delimiter=",", ndmin=2)
        dataset = toynet.SyntheticDataset(
            inputs=inputs, low=dataset_spec.low, high=dataset_spec.high
        )
    else:
        dataset = toynet.make_dataset(dataset_spec)
    layer_filter = args.layers.split(",") if args.layers else None
    trace = toynet.forward_trace(net, dataset, layer_filter=layer_filter)
    out = _out_dir(args)
    trace_save(trace, out / "trace")
    _write_run_config(out, "gen-trace", args)
    print(f"wrote trace with {trace.num_inputs} inputs, layers {list(trace.layer_names)}")
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_common(parser, trace_required=True):
    if trace_required:
        parser.add_argument("--trace", required=True, help="trace directory")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--format", default="json,csv", help="comma list of json,csv,svg")
    parser.add_argument("--config", help="JSON file whose keys override flags")


def _add_criterion_flags(parser):
    parser.add_argument("--criterion", required=True, help="registered criterion name")
    parser.add_argument("--threshold", type=float, default=_DEFAULTS["threshold"])
    parser.add_argument("--kmnc-k", type=int, default=_DEFAULTS["kmnc_k"])
    parser.add_argument("--tknc-k", type=int, default=_DEFAULTS["tknc_k"])
    parser.add_argument("--batch-size", type=int, default=_DEFAULTS["batch_size"])
    parser.add_argument("--profile-trace", help="reference trace for kmnc/nbc/snac ranges")
    parser.add_argument("--warm-start-trace", help="seed nlc-inc statistics from this trace")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nncov", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compute", help="evaluate one criterion on a trace")
    _add_common(p)
    _add_criterion_flags(p)
    p.set_defaults(func=cmd_compute)

    p = sub.add_parser("axioms", help="probe a criterion for coverage axioms")
    _add_common(p)
    _add_criterion_flags(p)
    p.add_argument("--trials", type=int, default=_DEFAULTS["trials"])
    p.add_argument("--chain-len", type=int, default=_DEFAULTS["chain_len"])
    p.add_argument("--permutations", type=int, default=_DEFAULTS["permutations"])
    p.add_argument("--duplicates", type=int, default=_DEFAULTS["duplicates"])
    p.add_argument("--replay", help="witness JSON to replay instead of running checks")
    p.set_defaults(func=cmd_axioms)

    p = sub.add_parser("shuffle-study", help="repeated shuffled-evaluation instability study")
    _add_common(p)
    _add_criterion_flags(p)
    p.add_argument("--runs", type=int, default=_DEFAULTS["runs"])
    p.set_defaults(func=cmd_shuffle_study)

    p = sub.add_parser("layer-report", help="per-layer contribution shares")
    _add_common(p)
    _add_criterion_flags(p)
    p.set_defaults(func=cmd_layer_report)

    p = sub.add_parser("diversity", help="spectrum-based suite diversity study")
    _add_common(p)
    p.add_argument("--layer", help="layer name (default: penultimate)")
    p.add_argument("--bins", type=int, default=_DEFAULTS["bins"])
    p.add_argument("--kmeans-k", type=int, default=100)
    p.add_argument("--cluster-k-max", type=int, default=60)
    p.set_defaults(func=cmd_diversity)

    p = sub.add_parser("make-suites", help="build noise-perturbed x1/x10 suites")
    _add_common(p, trace_required=False)
    p.add_argument("--dataset-config", help="JSON dataset spec")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--dim", type=int, default=8)
    p.add_argument("--low", type=float, default=-1.0)
    p.add_argument("--high", type=float, default=1.0)
    p.add_argument("--generator", default="uniform")
    p.add_argument("--base-count", type=int, default=_DEFAULTS["base_count"])
    p.add_argument("--noise-low", type=float, default=_DEFAULTS["noise_low"])
    p.add_argument("--noise-high", type=float, default=_DEFAULTS["noise_high"])
    p.set_defaults(func=cmd_make_suites)

    p = sub.add_parser("gen-trace", help="run a toy net over synthetic inputs")
    _add_common(p, trace_required=False)
    p.add_argument("--config-file", required=True, help="JSON with net and dataset sections")
    p.add_argument("--inputs-csv", help="forward these inputs instead of generating")
    p.add_argument("--layers", help="comma list of layer names to record")
    p.set_defaults(func=cmd_gen_trace)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        overrides = json.loads(Path(args.config).read_text(encoding="utf-8"))
        for key, value in overrides.items():
            setattr(args, key.replace("-", "_"), value)
    try:
        return args.func(args)
    except KeyError as exc:
        if "unknown criterion" in str(exc):
            return _fail(
                "UnknownCriterion",
                str(exc).strip("'\""),
                code=2,
                registered=registered_names(),
            )
        return _fail("KeyError", str(exc))
    except (ValueError, ProfileError, OSError) as exc:
        return _fail(type(exc).__name__, str(exc))


if __name__ == "__main__":
    sys.exit(main())
