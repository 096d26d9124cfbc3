"""Criterion plugin contract and registry.

A criterion is an object with a `descriptor` and an
``evaluate(trace, view) -> CriterionResult`` method; instances are
constructed with their hyperparameters already bound, so evaluation is a
pure function of ``(trace, view)`` and arbitrarily many evaluations may
run in parallel over a shared trace. Criteria register a factory by name
for the CLI and the axiom harness.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..trace import ActivationTrace, SuiteView

__all__ = [
    "Criterion",
    "CriterionDescriptor",
    "CriterionResult",
    "make_criterion",
    "register",
    "registered_names",
]


@dataclass(frozen=True)
class CriterionDescriptor:
    """Static metadata about a criterion."""

    name: str
    bounded: bool  # values lie in [0, 1] and can be read as a fraction
    monotone_by_design: bool
    requires_profile: bool
    hyperparameters: dict = field(default_factory=dict)


@dataclass(frozen=True)
class CriterionResult:
    value: float
    per_layer: dict[str, float]
    accepted_inputs: int | None = None  # incremental mode only
    committed_values: tuple[float, ...] | None = None  # incremental mode only
    degenerate_layers: tuple[str, ...] = ()


class Criterion:
    """Base class; subclasses set `descriptor` and implement `evaluate`."""

    descriptor: CriterionDescriptor

    def evaluate(self, trace: ActivationTrace, view: SuiteView) -> CriterionResult:
        raise NotImplementedError

    @property
    def name(self) -> str:
        return self.descriptor.name


_REGISTRY: dict[str, type] = {}


def register(name: str, factory: type) -> None:
    _REGISTRY[name] = factory


def registered_names() -> list[str]:
    return sorted(_REGISTRY)


def make_criterion(name: str, **options) -> Criterion:
    """Instantiate a registered criterion with the given hyperparameters."""
    try:
        factory = _REGISTRY[name]
    except KeyError:
        known = ", ".join(registered_names())
        raise KeyError(f"unknown criterion {name!r}; registered: {known}") from None
    return factory(**options)
