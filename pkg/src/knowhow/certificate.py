"""Explicit model certificates for SAT verdicts.

A certificate is a concrete labelled transition system built from a
compatible guess: its states are exactly the context-satisfying valuations
over the pair's atoms, and each surviving positive conjunct contributes one
action whose relation is the full product of its precondition states and its
postcondition states.  Conjuncts whose postcondition is forced false in
context (the context indices) or whose precondition never holds get no
action — their statements are witnessed by no plan needing them, or
vacuously by the empty plan.

Verification is exact: the original formula is evaluated on the certificate
model and must hold somewhere.
"""

from __future__ import annotations

from dataclasses import dataclass

from .formula import Formula, atoms_of
from .propsat import SatOracle, enumerate_models, eval_prop
from .semantics import Lts, dump_model, eval_formula, make_lts


class CapacityError(Exception):
    """Raised when a certificate would need more atoms than the cap allows."""


@dataclass(frozen=True)
class Certificate:
    model: Lts
    witness_state: str | None
    active_actions: tuple[str, ...]

    def dump(self) -> str:
        extra: dict[str, object] = {"active_actions": list(self.active_actions)}
        if self.witness_state is not None:
            extra["witness_state"] = self.witness_state
        return dump_model(self.model, extra=extra)


def build_model(
    p,
    q,
    ctx,
    *,
    witness_pre: Formula | None = None,
    max_atoms: int = 12,
    oracle: SatOracle | None = None,
) -> Certificate:
    """Build the explicit model for a positive/negative pair and its context.

    ``witness_pre`` designates the propositional condition whose satisfying
    state (lowest-numbered) is recorded as the certificate's witness state.
    States enumerate every context-satisfying valuation over the atoms
    mentioned by the pair, so the state count is exponential in the atom
    count; ``max_atoms`` caps it.
    """
    atoms: set[str] = set()
    for pre, post in p.conjuncts:
        atoms |= atoms_of(pre) | atoms_of(post)
    for pre, post in q.conjuncts:
        atoms |= atoms_of(pre) | atoms_of(post)
    if witness_pre is not None:
        atoms |= atoms_of(witness_pre)
    ordered_atoms = sorted(atoms)
    if len(ordered_atoms) > max_atoms:
        raise CapacityError(
            f"certificate needs {len(ordered_atoms)} atoms; cap is {max_atoms}"
        )

    enumerate = oracle.enumerate_models if oracle is not None else enumerate_models
    valuations = enumerate(ctx.psi, ordered_atoms, 2 ** len(ordered_atoms))
    state_ids = [f"s{i}" for i in range(len(valuations))]
    props = {
        sid: [a for a in ordered_atoms if valuation[a]]
        for sid, valuation in zip(state_ids, valuations)
    }

    inert = set(ctx.indices) | {
        k
        for k in range(1, p.n + 1)
        if k not in ctx.indices
        and not any(eval_prop(p.pre(k), v) for v in valuations)
    }
    rel: dict[str, list[tuple[str, str]]] = {}
    active: list[str] = []
    for k in range(1, p.n + 1):
        if k in inert:
            continue
        pre_states = [
            sid for sid, v in zip(state_ids, valuations) if eval_prop(p.pre(k), v)
        ]
        post_states = [
            sid for sid, v in zip(state_ids, valuations) if eval_prop(p.post(k), v)
        ]
        name = f"a{k}"
        rel[name] = [(s, t) for s in pre_states for t in post_states]
        active.append(name)

    model = make_lts(state_ids, props, rel)
    witness_state: str | None = None
    if witness_pre is not None:
        for sid, valuation in zip(state_ids, valuations):
            if eval_prop(witness_pre, valuation):
                witness_state = sid
                break
    return Certificate(model, witness_state, tuple(active))


def verify_certificate(certificate: Certificate, original: Formula) -> bool:
    """Exact check: the original formula holds at some certificate state."""
    return eval_formula(certificate.model, original) != 0
