"""Tests for the bounded model search and the seeded generators."""

from __future__ import annotations

import itertools

from knowhow.formula import atoms_of, desugar, kh_occurrences, modal_depth, parse
from knowhow.oracle import (
    SearchBounds,
    _witness_table,
    bounded_sat_search,
    random_formula,
    random_lts,
)
from knowhow.semantics import dump_model, eval_formula, has_witness_plan, make_lts


def test_search_finds_model_for_simple_modality():
    model = bounded_sat_search(parse("Kh(p, q)"))
    assert model is not None
    assert eval_formula(model, parse("Kh(p, q)")) != 0


def test_search_rejects_propositional_contradiction():
    assert bounded_sat_search(parse("p & ~p")) is None


def test_search_rejects_denied_reflexive_modality():
    # The empty plan witnesses Kh(p, p) in every model.
    assert bounded_sat_search(parse("~Kh(p, p)")) is None


def test_search_rejects_conflicting_quantifiers():
    assert bounded_sat_search(parse("A p & E ~p")) is None


def test_search_needs_two_states_when_forced():
    model = bounded_sat_search(parse("p & E ~p"))
    assert model is not None
    assert len(model.states) == 2
    assert eval_formula(model, parse("p & E ~p")) != 0


def test_search_is_deterministic():
    first = bounded_sat_search(parse("Kh(p, q) & ~Kh(q, p)"))
    second = bounded_sat_search(parse("Kh(p, q) & ~Kh(q, p)"))
    assert first is not None
    assert dump_model(first) == dump_model(second)


def test_search_random_tier_handles_wide_vocabulary():
    # Three atoms exceed the exhaustive box, so only random trials run.
    model = bounded_sat_search(parse("p & q & r"), SearchBounds(random_trials=50))
    assert model is not None
    assert eval_formula(model, parse("p & q & r")) != 0


def _box_models(atoms: list[str], max_states: int, max_actions: int):
    """Every model with up to the given shape, in a plain nested loop."""
    for n in range(1, max_states + 1):
        states = [f"s{i}" for i in range(n)]
        for k in range(0, max_actions + 1):
            actions = ["a", "b"][:k]
            pairs = [(s, t) for s in states for t in states]
            for valuation in itertools.product([False, True], repeat=len(atoms) * n):
                props = {
                    s: [
                        atom
                        for idx, atom in enumerate(atoms)
                        if valuation[idx * n + i]
                    ]
                    for i, s in enumerate(states)
                }
                for edges in itertools.product(
                    [False, True], repeat=len(actions) * len(pairs)
                ):
                    rel = {
                        action: [
                            pair
                            for j, pair in enumerate(pairs)
                            if edges[a_idx * len(pairs) + j]
                        ]
                        for a_idx, action in enumerate(actions)
                    }
                    yield make_lts(states, props, rel)


def test_exhaustive_tier_agrees_with_plain_enumeration():
    """Cross-check the vectorized tier against a naive model sweep."""
    bounds = SearchBounds(max_states=2, max_actions=1, atom_budget=1, random_trials=0)
    for seed in range(60):
        f = random_formula(2, 2, ("p",), seed)
        atoms = sorted(atoms_of(desugar(f)))
        brute = any(eval_formula(m, f) != 0 for m in _box_models(atoms, 2, 1))
        found = bounded_sat_search(f, bounds)
        assert (found is not None) == brute, f"disagreement on seed {seed}"
        if found is not None:
            assert eval_formula(found, f) != 0


def test_witness_table_matches_plan_search():
    n, k = 2, 1
    table = _witness_table(n, k)
    states = ["s0", "s1"]
    for combo in range(1 << (k * n * n)):
        rel = {
            "a": [
                (states[s], states[t])
                for s in range(n)
                for t in range(n)
                if combo >> (s * n + t) & 1
            ]
        }
        model = make_lts(states, {s: [] for s in states}, rel)
        for pre in range(1 << n):
            for post in range(1 << n):
                expected = has_witness_plan(model, pre, post) is not None
                assert bool(table[combo, pre, post]) == expected


def test_random_formula_is_deterministic():
    args = (3, 4, ("p", "q", "r"), 99)
    assert random_formula(*args) == random_formula(*args)


def test_random_formula_respects_bounds():
    for seed in range(200):
        f = random_formula(2, 3, ("p", "q"), seed)
        assert modal_depth(f) <= 2
        assert kh_occurrences(f) <= 3
        assert atoms_of(f) <= {"p", "q"}


def test_random_formula_depth_zero_is_propositional():
    for seed in range(50):
        assert modal_depth(random_formula(0, 0, ("p",), seed)) == 0


def test_random_formula_requires_atoms():
    import pytest

    with pytest.raises(ValueError):
        random_formula(1, 1, (), 0)


def test_random_lts_is_deterministic():
    a = random_lts(4, 2, ("p", "q"), 0.3, 7)
    b = random_lts(4, 2, ("p", "q"), 0.3, 7)
    assert dump_model(a) == dump_model(b)


def test_random_lts_density_zero_has_no_edges():
    m = random_lts(3, 2, ("p",), 0.0, 1)
    assert all(not pairs for pairs in m.rel.values())


def test_random_lts_single_state_no_actions():
    m = random_lts(1, 0, ("p",), 0.0, 5)
    assert m.states == ("s0",)
    assert m.actions == ()
