"""Metamorphic axiom checks and the shuffle-instability protocol.

Empirically probes any registered criterion for the two properties a
coverage measure is expected to have: monotonicity (adding tests never
lowers the value) and order independence (permuting a suite never changes
the value). Chains use multiset inclusion built by concatenation, since
test suites may contain duplicates and covariance statistics see
multiplicities. The shuffle study repeats an evaluation over fresh
shuffles of the full suite and summarises the spread (Std, SEM, relative
SEM, Max % Drop), next to an unshuffled control that must sit at zero
spread.

Everything is deterministic given (seed, trace, parameters), and every
recorded violation witness replays to a violation on its own.
"""

from __future__ import annotations

import csv
import json
import math
import os
import statistics
from dataclasses import asdict, dataclass

import numpy as np

from .criteria import Criterion
from .trace import ActivationTrace, SuiteView, concat

__all__ = [
    "AxiomReport",
    "StabilityReport",
    "check_duplicates",
    "check_monotonicity",
    "check_order_independence",
    "replay_witness",
    "run_axiom_checks",
    "shuffle_study",
    "stability_rows",
    "write_stability_csv",
]

# Separates float noise from genuine decreases: absolute on bounded
# criteria, relative on unbounded ones.
_ABS_TOL = 1e-12
_REL_TOL = 1e-9


def _tolerance(criterion: Criterion, reference: float) -> float:
    if criterion.descriptor.bounded:
        return _ABS_TOL
    return _REL_TOL * abs(reference)


@dataclass(frozen=True)
class AxiomReport:
    criterion: str
    monotone_trials: int = 0
    monotone_violations: int = 0
    witness: dict | None = None  # first offending chain step, replayable
    permutation_trials: int = 0
    max_permutation_delta: float = 0.0
    duplicate_trials: int = 0
    duplicate_violations: int = 0

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


@dataclass(frozen=True)
class StabilityReport:
    runs: int
    values: tuple[float, ...]
    mean: float
    std: float  # population std over runs
    sem: float  # std / sqrt(runs)
    relative_sem: float  # sem / mean
    max_pct_drop: float  # (max - min) / max * 100
    degenerate: bool = False  # non-positive max or mean: ratios carry no signal

    @staticmethod
    def from_values(values) -> "StabilityReport":
        values = tuple(float(v) for v in values)
        runs = len(values)
        # statistics.pvariance works in exact rationals, so a constant run
        # reports exactly 0.0 (numpy's mean-based std leaves ~1e-16 residue)
        mean = statistics.fmean(values)
        std = math.sqrt(statistics.pvariance(values))
        sem = std / math.sqrt(runs)
        degenerate = False
        if mean != 0.0:
            relative_sem = sem / mean
        else:
            relative_sem = 0.0
            degenerate = True
        vmax, vmin = max(values), min(values)
        if vmax > 0.0 and vmin >= 0.0:
            max_pct_drop = (vmax - vmin) / vmax * 100.0
        else:
            max_pct_drop = 0.0
            degenerate = True
        return StabilityReport(
            runs=runs,
            values=values,
            mean=mean,
            std=std,
            sem=sem,
            relative_sem=relative_sem,
            max_pct_drop=max_pct_drop,
            degenerate=degenerate,
        )


@dataclass
class _MonotonicityPart:
    trials: int = 0
    violations: int = 0
    witness: dict | None = None


def _random_multiset(rng: np.random.Generator, n: int, size: int) -> SuiteView:
    return SuiteView(rng.integers(0, n, size=size, dtype=np.int64))


def check_monotonicity(
    criterion: Criterion,
    trace: ActivationTrace,
    trials: int,
    chain_len: int = 3,
    seed: int = 0,
) -> _MonotonicityPart:
    """Count value decreases along random ascending suite chains.

    Builds ``trials`` chains V_1 subset V_2 subset ... (multiset inclusion
    via concatenation of extra random rows) and counts every adjacent pair
    with f(V_i) > f(V_{i+1}) + tolerance. The first offending pair is
    recorded as a replayable witness.
    """
    if trace.num_inputs < 1:
        raise ValueError("monotonicity checks need a nonempty trace")
    if chain_len < 2:
        raise ValueError(f"chain_len must be >= 2, got {chain_len}")
    rng = np.random.default_rng(seed)
    n = trace.num_inputs
    part = _MonotonicityPart(trials=trials)
    for _ in range(trials):
        view = _random_multiset(rng, n, int(rng.integers(1, n + 1)))
        previous = criterion.evaluate(trace, view).value
        for _ in range(chain_len - 1):
            extra = _random_multiset(rng, n, int(rng.integers(1, max(2, n // 4))))
            bigger = concat(view, extra)
            value = criterion.evaluate(trace, bigger).value
            if previous > value + _tolerance(criterion, previous):
                part.violations += 1
                if part.witness is None:
                    part.witness = {
                        "criterion": criterion.name,
                        "view_small": view.indices.tolist(),
                        "view_large": bigger.indices.tolist(),
                        "value_small": previous,
                        "value_large": value,
                    }
            view, previous = bigger, value
    return part


def replay_witness(criterion: Criterion, trace: ActivationTrace, witness: dict) -> bool:
    """Re-evaluate a recorded witness chain; True iff it still violates."""
    small = SuiteView(np.array(witness["view_small"], dtype=np.int64))
    large = SuiteView(np.array(witness["view_large"], dtype=np.int64))
    value_small = criterion.evaluate(trace, small).value
    value_large = criterion.evaluate(trace, large).value
    return value_small > value_large + _tolerance(criterion, value_small)


@dataclass
class _PermutationPart:
    trials: int = 0
    max_delta: float = 0.0


def check_order_independence(
    criterion: Criterion, trace: ActivationTrace, trials: int, seed: int = 0
) -> _PermutationPart:
    """Evaluate the full suite under random permutations; track the value spread.

    The unpermuted order is always included, so the reported delta is the
    max-minus-min over trials+1 evaluations.
    """
    if trace.num_inputs < 1:
        raise ValueError("order-independence checks need a nonempty trace")
    rng = np.random.default_rng(seed)
    full = trace.full_view()
    values = [criterion.evaluate(trace, full).value]
    for _ in range(trials):
        permuted = full.shuffle(int(rng.integers(0, 2**63 - 1)))
        values.append(criterion.evaluate(trace, permuted).value)
    return _PermutationPart(trials=trials, max_delta=float(max(values) - min(values)))


@dataclass
class _DuplicatePart:
    trials: int = 0
    violations: int = 0


def check_duplicates(
    criterion: Criterion, trace: ActivationTrace, trials: int, seed: int = 0
) -> _DuplicatePart:
    """Check that re-appending rows already in a suite leaves the value alone."""
    rng = np.random.default_rng(seed)
    n = trace.num_inputs
    part = _DuplicatePart(trials=trials)
    for _ in range(trials):
        view = _random_multiset(rng, n, int(rng.integers(1, n + 1)))
        dup_count = int(rng.integers(1, len(view) + 1))
        picks = rng.integers(0, len(view), size=dup_count)
        doubled = concat(view, SuiteView(view.indices[picks]))
        base = criterion.evaluate(trace, view).value
        value = criterion.evaluate(trace, doubled).value
        if abs(value - base) > _tolerance(criterion, base):
            part.violations += 1
    return part


def run_axiom_checks(
    criterion: Criterion,
    trace: ActivationTrace,
    *,
    monotone_trials: int = 100,
    chain_len: int = 3,
    permutation_trials: int = 20,
    duplicate_trials: int = 50,
    seed: int = 0,
) -> AxiomReport:
    """Run all three axiom checks and assemble one report."""
    mono = check_monotonicity(criterion, trace, monotone_trials, chain_len, seed=seed)
    perm = check_order_independence(criterion, trace, permutation_trials, seed=seed + 1)
    dup = check_duplicates(criterion, trace, duplicate_trials, seed=seed + 2)
    return AxiomReport(
        criterion=criterion.name,
        monotone_trials=mono.trials,
        monotone_violations=mono.violations,
        witness=mono.witness,
        permutation_trials=perm.trials,
        max_permutation_delta=perm.max_delta,
        duplicate_trials=dup.trials,
        duplicate_violations=dup.violations,
    )


def shuffle_study(
    criterion: Criterion, trace: ActivationTrace, runs: int = 20, seed: int = 0
) -> tuple[StabilityReport, StabilityReport]:
    """Repeated-evaluation instability protocol.

    Returns ``(control, shuffled)``: the control evaluates the unshuffled
    full suite ``runs`` times (expected spread: zero), the study arm uses
    ``runs`` fresh shuffles of the same suite.
    """
    if runs < 2:
        raise ValueError(f"runs must be >= 2, got {runs}")
    full = trace.full_view()
    control_values = [criterion.evaluate(trace, full).value for _ in range(runs)]
    rng = np.random.default_rng(seed)
    shuffled_values = []
    for _ in range(runs):
        shuffled = full.shuffle(int(rng.integers(0, 2**63 - 1)))
        shuffled_values.append(criterion.evaluate(trace, shuffled).value)
    return (
        StabilityReport.from_values(control_values),
        StabilityReport.from_values(shuffled_values),
    )


def stability_rows(
    criterion_name: str, control: StabilityReport, shuffled: StabilityReport
) -> list[dict]:
    """Two table rows (control first) in the instability-table layout."""
    rows = []
    for shuffled_flag, report in (("no", control), ("yes", shuffled)):
        rows.append(
            {
                "criterion": criterion_name,
                "shuffled": shuffled_flag,
                "std": report.std,
                "sem": report.sem,
                "relative_sem": report.relative_sem,
                "max_pct_drop": report.max_pct_drop,
            }
        )
    return rows


def write_stability_csv(path: str | os.PathLike, rows: list[dict]) -> None:
    fields = ["criterion", "shuffled", "std", "sem", "relative_sem", "max_pct_drop"]
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=fields)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row[k] for k in fields})
