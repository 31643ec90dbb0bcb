"""Certifying satisfiability solver for a logic of knowing-how.

Decides satisfiability by flattening to leaf normal form and driving a
propositional oracle, emits explicit transition-system certificates for SAT
verdicts, and verifies them with an exact model checker.
"""

from __future__ import annotations

from .certificate import Certificate, build_model, verify_certificate
from .formula import Formula, ParseError, desugar, modal_depth, parse, render
from .khsat import Result, Verdict, decide
from .normalform import FlattenResult, flatten
from .semantics import Lts, eval_formula, load_model, make_lts

__all__ = [
    "Certificate",
    "FlattenResult",
    "Formula",
    "Lts",
    "ParseError",
    "Result",
    "Verdict",
    "build_model",
    "decide",
    "desugar",
    "eval_formula",
    "flatten",
    "load_model",
    "make_lts",
    "modal_depth",
    "parse",
    "render",
    "verify_certificate",
]
