"""Tests for the leaf-normal-form decision procedure."""

from __future__ import annotations

import random

import pytest

from knowhow.certificate import verify_certificate
from knowhow.formula import And, Atom, Bottom, Kh, Not, Top, parse, render
from knowhow.khsat import (
    Closure,
    GuessPartition,
    NegativeSpec,
    PositiveSpec,
    Result,
    compatible,
    composition_closure,
    decide,
    global_indices,
    oracle_call_count,
    per_guess_call_bound,
    sat_negative,
    sat_positive,
)
from knowhow.propsat import SatOracle, is_sat
from knowhow.semantics import eval_formula, make_lts
from tests.test_propsat import truth_table_sat

P, Q, R, T, S = Atom("p"), Atom("q"), Atom("r"), Atom("t"), Atom("s")


def pos(*pairs) -> PositiveSpec:
    return PositiveSpec(tuple((parse(a), parse(b)) for a, b in pairs))


def neg(*pairs) -> NegativeSpec:
    return NegativeSpec(tuple((parse(a), parse(b)) for a, b in pairs))


# ---------------------------------------------------------------------------
# Context fixpoint


def test_global_indices_forced_pair():
    ctx = global_indices(PositiveSpec(((P, Bottom()), (Q, P))))
    assert sorted(ctx.indices) == [1, 2]
    assert ctx.members == (Not(P), Not(Q))
    assert render(ctx.psi) == "~p & ~q"


def test_global_indices_nothing_forced():
    ctx = global_indices(pos(("p", "q")))
    assert ctx.indices == frozenset()
    assert ctx.members == ()
    assert ctx.psi == Top()


def test_global_indices_single_bottom():
    ctx = global_indices(PositiveSpec(((P, Bottom()),)))
    assert sorted(ctx.indices) == [1]


def test_global_indices_fixpoint_characterization():
    """k is in I exactly when its postcondition is unsatisfiable under the
    final context — an independent restatement of the sweep's fixpoint."""
    rng = random.Random(11)
    shapes = ["p", "q", "~p", "p & q", "p | q", "~q", "false", "p -> q"]
    for _ in range(150):
        n = rng.randint(0, 4)
        p = pos(*((rng.choice(shapes), rng.choice(shapes)) for _ in range(n)))
        ctx = global_indices(p)
        members = list(ctx.members)
        for k in range(1, n + 1):
            in_i = k in ctx.indices
            assert truth_table_sat(members + [p.post(k)]) == (not in_i)


def test_sat_positive_examples():
    assert sat_positive(PositiveSpec(((P, Bottom()), (Q, P)))) is True
    assert sat_positive(PositiveSpec(((P, Bottom()), (Not(P), Bottom())))) is False
    assert sat_positive(PositiveSpec(())) is True


def test_sat_positive_witness_respects_context():
    ctx = global_indices(PositiveSpec(((P, Bottom()), (Q, P))))
    sat, witness = is_sat(list(ctx.members))
    assert sat and witness == {"p": False, "q": False}


def test_sat_negative_examples():
    assert sat_negative(neg(("p", "q"))) is True
    assert sat_negative(neg(("p", "p | q"))) is False
    assert sat_negative(neg(("p", "q"), ("r", "r"))) is False


# ---------------------------------------------------------------------------
# Composition closure


def test_closure_three_conjunct_golden():
    p = pos(("p", "p & q"), ("q", "r"), ("r | s", "t"))
    c = composition_closure(p, Top())
    assert c.pairs == frozenset({(1, 1), (1, 2), (1, 3), (2, 2), (2, 3), (3, 3)})


def test_closure_single_conjunct_reflexive_only():
    assert composition_closure(pos(("p", "q")), Top()).pairs == frozenset({(1, 1)})


def test_closure_chain_edge():
    c = composition_closure(pos(("p", "q"), ("q", "r")), Top())
    assert c.pairs == frozenset({(1, 1), (2, 2), (1, 2)})


def _closure_by_reachability(p: PositiveSpec, psi) -> set[tuple[int, int]]:
    """Independent closure: truth-table edges plus breadth-first reachability."""
    n = p.n
    edge = {
        (x, y): not truth_table_sat([psi, p.post(x), Not(p.pre(y))])
        for x in range(1, n + 1)
        for y in range(1, n + 1)
    }
    pairs = set()
    for start in range(1, n + 1):
        seen = {start}
        queue = [start]
        while queue:
            x = queue.pop()
            for y in range(1, n + 1):
                if edge[(x, y)] and y not in seen:
                    seen.add(y)
                    queue.append(y)
        pairs.update((start, y) for y in seen)
    return pairs


def test_closure_laws_on_random_specs():
    rng = random.Random(23)
    shapes = ["p", "q", "~p", "p & q", "p | q", "q -> p", "~q"]
    for _ in range(120):
        n = rng.randint(1, 4)
        p = pos(*((rng.choice(shapes), rng.choice(shapes)) for _ in range(n)))
        psi = parse(rng.choice(["true", "~p", "~q"]))
        c = composition_closure(p, psi)
        for x in range(1, n + 1):
            assert (x, x) in c
        assert c.pairs == frozenset(_closure_by_reachability(p, psi))


# ---------------------------------------------------------------------------
# Compatibility


def test_compatible_two_positive_conjuncts():
    p = pos(("p & q", "r & t"), ("p", "r"))
    q = neg(("k1 & k2", "false"))
    assert compatible(p, q) is True


def test_compatible_blocks_direct_contradiction():
    assert compatible(pos(("p", "q")), neg(("p", "q"))) is False


def test_compatible_single_positive_against_two_denials():
    """The stated expectation for this pair is incompatibility, but the pair
    is satisfiable (see the explicit model below), so a sound check must
    accept it.  The middle acceptance-gate assertion tracks the discrepancy."""
    p = pos(("p & q", "r & t"))
    q = neg(("p", "r"), ("k1 & ~k2", "false"))
    assert compatible(p, q) is True


def test_incompatibility_claim_refuted_by_explicit_model():
    """Concrete three-state model satisfying Kh(p&q, r&t), ~Kh(p, r), and
    ~Kh(k1 & ~k2, false) all at once."""
    m = make_lts(
        ["s1", "s2", "s3"],
        {"s1": ["p", "k1"], "s2": ["p", "q", "k1"], "s3": ["r", "t", "k1"]},
        {"a": [("s2", "s3")]},
    )
    whole = parse("Kh(p & q, r & t) & ~Kh(p, r) & ~Kh(k1 & ~k2, false)")
    assert eval_formula(m, whole) == m.all_states


def test_compatible_requires_satisfiable_context():
    p = pos(("p", "false"), ("~p", "false"))
    assert compatible(p, neg(("q", "false"))) is False


def test_compatible_empty_positive_reduces_to_denial_checks():
    assert compatible(PositiveSpec(()), neg(("p", "q"))) is True
    assert compatible(PositiveSpec(()), neg(("p", "p"))) is False


def test_specs_reject_modal_operands():
    with pytest.raises(ValueError):
        PositiveSpec(((Kh(P, Q), Q),))
    with pytest.raises(ValueError):
        NegativeSpec(((P, Kh(P, Q)),))


def test_partition_rejects_overlap():
    with pytest.raises(ValueError):
        GuessPartition((1,), (1, 2), {"_k1": True, "_k2": False})


# ---------------------------------------------------------------------------
# decide


def test_decide_disjunction_of_modalities():
    f = parse("Kh(p & q, r & t) | Kh(p, r)")
    v = decide(f)
    assert v.result is Result.SAT
    assert v.partition.k_assignment == {"_k1": True, "_k2": True}
    assert v.guesses_tried == 1
    assert v.certificate is not None
    assert verify_certificate(v.certificate, f)
    assert v.certificate.witness_state is not None


def test_decide_reflexive_modality():
    assert decide(parse("Kh(p, p)")).result is Result.SAT


def test_decide_conflicting_quantifiers():
    assert decide(parse("A p & E ~p")).result is Result.UNSAT


def test_decide_propositional_contradiction_skips_guessing():
    v = decide(parse("p & ~p"))
    assert v.result is Result.UNSAT
    assert v.guesses_tried == 0


def test_decide_propositional_formula():
    v = decide(parse("p | q"), trace=True)
    assert v.result is Result.SAT
    assert v.partition == GuessPartition((), (), {})
    assert verify_certificate(v.certificate, parse("p | q"))
    assert oracle_call_count(v) == 0
    assert v.enumeration_calls >= 1


def test_decide_is_deterministic():
    f = parse("Kh(p, q) | ~Kh(q, r & p)")
    a, b = decide(f), decide(f)
    assert a.result == b.result
    assert a.partition == b.partition
    assert a.certificate.dump() == b.certificate.dump()


def test_decide_gates_unverifiable_guess():
    """First guess builds a model that fails verification, so the procedure
    moves on and succeeds with the next one."""
    f = parse("A ~x <-> x")
    v = decide(f, trace=True)
    assert v.result is Result.SAT
    assert [r.certificate_verified for r in v.trace] == [False, True]
    assert v.partition.k_assignment == {"_k1": False}
    assert verify_certificate(v.certificate, f)


def test_decide_guess_order_true_first():
    f = parse("Kh(p, q) | Kh(q, r)")
    v = decide(f, trace=True)
    assert v.trace[0].k_assignment == {"_k1": True, "_k2": True}


def test_decide_augmented_mode_agrees_on_examples():
    for text in ["Kh(p & q, r & t) | Kh(p, r)", "Kh(p, p)", "A p & E ~p", "p & ~p"]:
        f = parse(text)
        assert decide(f).result == decide(f, mode="augmented").result


def test_decide_augmented_pins_definition_atoms():
    f = parse("Kh(p & q, r & t) | Kh(p, r)")
    v = decide(f, mode="augmented")
    assert v.result is Result.SAT
    model = v.certificate.model
    assert model.val.get("_k1", 0) == model.all_states
    assert model.val.get("_k2", 0) == model.all_states
    assert verify_certificate(v.certificate, f)


def test_decide_rejects_unknown_mode():
    with pytest.raises(ValueError):
        decide(parse("p"), mode="fancy")


def test_oracle_call_count_requires_trace():
    v = decide(parse("Kh(p, q)"))
    with pytest.raises(ValueError):
        oracle_call_count(v)


def test_per_guess_calls_match_hand_count_for_single_leaf():
    # One positive leaf, one denial (the existential conjunct):
    # 2 sweep calls, context check, one denial check, one realizability
    # check, one closure edge, one fired-trigger probe = 7.
    v = decide(parse("Kh(p, q)"), trace=True)
    assert v.result is Result.SAT
    assert oracle_call_count(v) == 7


def test_per_guess_calls_within_documented_bound():
    rng = random.Random(77)
    from knowhow.oracle import random_formula

    for seed in range(120):
        f = random_formula(2, 3, ("p", "q"), seed)
        v = decide(f, trace=True)
        for record in v.trace or ():
            bound = per_guess_call_bound(record.n, record.m)
            assert record.oracle_calls <= bound
            assert bound <= 3 * (record.n + record.m + 1) * (record.n + 1) ** 2


def test_decide_shares_oracle_and_counts_calls():
    oracle = SatOracle()
    decide(parse("Kh(p, q) | Kh(q, r)"), oracle=oracle)
    assert oracle.calls > 0


def test_decide_agrees_with_bounded_search_smoke():
    from knowhow.oracle import SearchBounds, bounded_sat_search, random_formula

    bounds = SearchBounds(random_trials=40)
    for seed in range(80):
        f = random_formula(2, 2, ("p", "q"), seed)
        v = decide(f)
        if bounded_sat_search(f, bounds) is not None:
            assert v.result is Result.SAT, render(f)
        if v.result is Result.SAT:
            assert verify_certificate(v.certificate, f), render(f)


def test_nested_definitions_rescued_by_atom_pinning_certificate():
    # The inner operator is valid, so after substitution the outer
    # precondition denotes all ~p states; the plain pair's product action
    # only covers _k1 & ~p states, so its certificate fails verification.
    # Rebuilding from the atom-pinning pair forces _k1 true everywhere and
    # the certificate then satisfies the original formula.
    f = parse("Kh(~(Kh(p, p) -> p), q)")
    v = decide(f, trace=True)
    assert v.result is Result.SAT
    assert v.guesses_tried == 1
    record = v.trace[0]
    assert record.compatible
    assert record.certificate_verified
    assert record.rescued
    assert verify_certificate(v.certificate, f)
    assert v.certificate.model.val["_k1"] == (1 << len(v.certificate.model.states)) - 1
