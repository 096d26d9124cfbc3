"""Coverage criteria behind one plugin registry.

``make_criterion(name, **options)`` builds a ready-to-evaluate instance;
``registered_names()`` lists what the CLI and harness accept. Profile-based
criteria (kmnc, nbc, snac) take a ``profile=`` option.
"""

from .base import (
    Criterion,
    CriterionDescriptor,
    CriterionResult,
    make_criterion,
    register,
    registered_names,
)
from .covariance import CovSummary, NLCBatch, NLCIncremental, layer_covariance
from .discrete import KMNC, NBC, NC, SNAC, TKNC

register("nlc", NLCBatch)
register("nlc-inc", NLCIncremental)
register("detcov", lambda **kw: CovSummary("detcov", **kw))
register("tracecov", lambda **kw: CovSummary("tracecov", **kw))
register("speccov", lambda **kw: CovSummary("speccov", **kw))
register("nc", NC)
register("kmnc", KMNC)
register("nbc", NBC)
register("snac", SNAC)
register("tknc", TKNC)

__all__ = [
    "Criterion",
    "CriterionDescriptor",
    "CriterionResult",
    "CovSummary",
    "KMNC",
    "NBC",
    "NC",
    "NLCBatch",
    "NLCIncremental",
    "SNAC",
    "TKNC",
    "layer_covariance",
    "make_criterion",
    "register",
    "registered_names",
]
