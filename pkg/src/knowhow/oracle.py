"""Independent brute-force machinery: bounded model search and generators.

``bounded_sat_search`` is a falsifier, not a decision procedure: it
exhaustively enumerates every labelled transition system in a small box
(up to 3 states, 2 actions, 2 atoms), then tries seeded random models.  Any
model it returns is re-checked with the exact evaluator before being handed
back, so a hit is always trustworthy; a miss proves nothing outside the box.

The exhaustive tier is vectorized with numpy: for each (state count, action
count) shape, a formula-independent table of witness-plan existence — indexed
by relation combination, precondition mask, and postcondition mask — is
computed once by a subset-reachability fixpoint and cached.  Evaluating a
formula over all relation combinations of a shape then reduces to bitwise
arithmetic on integer arrays of truth masks.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .formula import (
    And,
    Atom,
    Bottom,
    Exis,
    Formula,
    Implies,
    Iff,
    Kh,
    Not,
    Or,
    Top,
    Univ,
    atoms_of,
    desugar,
    kh_occurrences,
)
from .semantics import Lts, eval_formula, make_lts

_EXHAUSTIVE_MAX_STATES = 3
_EXHAUSTIVE_MAX_ACTIONS = 2
_EXHAUSTIVE_MAX_ATOMS = 2


@dataclass(frozen=True)
class SearchBounds:
    """Knobs for the bounded search.

    The exhaustive tier runs over the fixed box intersected with these
    bounds; the random tier draws ``random_trials`` models within them.
    """

    max_states: int = 3
    max_actions: int = 2
    atom_budget: int = 2
    random_trials: int = 200
    seed: int = 0

    def __post_init__(self) -> None:
        if self.max_states < 1:
            raise ValueError("max_states must be at least 1")


# ---------------------------------------------------------------------------
# Vectorized witness tables
#
# For a shape (n states, k actions) every relation combination is an integer
# r with k * n * n bits: bit (a * n * n + s * n + t) says state s has an
# a-successor t.  The table w[r, pre, post] records whether some plan is
# strongly executable on all of `pre` with image inside `post`.


@lru_cache(maxsize=None)
def _witness_table(n: int, k: int) -> np.ndarray:
    combos = 1 << (k * n * n)
    subsets = 1 << n
    r = np.arange(combos, dtype=np.int64)

    # successor masks per action and source state, shape (combos,)
    succ = np.empty((k, n, combos), dtype=np.int16)
    row_mask = (1 << n) - 1
    for a in range(k):
        for s in range(n):
            succ[a, s] = ((r >> (a * n * n + s * n)) & row_mask).astype(np.int16)

    # image[a][T] and applicability[a][T] for every frontier subset T
    image = np.zeros((k, subsets, combos), dtype=np.int16)
    applicable = np.zeros((k, subsets, combos), dtype=bool)
    for a in range(k):
        for subset in range(subsets):
            img = np.zeros(combos, dtype=np.int16)
            app = np.ones(combos, dtype=bool)
            for s in range(n):
                if subset >> s & 1:
                    img |= succ[a, s]
                    app &= succ[a, s] != 0
            image[a, subset] = img
            applicable[a, subset] = app

    # reach[pre, T] : frontier T is reachable from initial frontier `pre`
    reach = np.zeros((subsets, subsets, combos), dtype=bool)
    for pre in range(subsets):
        reach[pre, pre] = True
    changed = True
    while changed:
        changed = False
        for pre in range(subsets):
            for frontier in range(subsets):
                active = reach[pre, frontier]
                if not active.any():
                    continue
                for a in range(k):
                    step = active & applicable[a, frontier]
                    if not step.any():
                        continue
                    targets = image[a, frontier]
                    for target in np.unique(targets[step]):
                        update = step & (targets == target) & ~reach[pre, target]
                        if update.any():
                            reach[pre, target] |= update
                            changed = True

    # w[r, pre, post] = exists reachable frontier T with T subset of post
    table = np.zeros((combos, subsets, subsets), dtype=bool)
    for post in range(subsets):
        inside = [t for t in range(subsets) if t & ~post == 0]
        table[:, :, post] = reach[:, inside, :].any(axis=1).T
    return table


def _eval_masks(f: Formula, n: int, val_masks: dict[str, int], table: np.ndarray, combos: int):
    """Truth-set masks of a core formula for every relation combination."""
    all_mask = (1 << n) - 1
    if isinstance(f, Atom):
        return np.full(combos, val_masks.get(f.name, 0), dtype=np.int16)
    if isinstance(f, Bottom):
        return np.zeros(combos, dtype=np.int16)
    if isinstance(f, Not):
        return all_mask & ~_eval_masks(f.f, n, val_masks, table, combos)
    if isinstance(f, Or):
        return _eval_masks(f.left, n, val_masks, table, combos) | _eval_masks(
            f.right, n, val_masks, table, combos
        )
    if isinstance(f, Kh):
        pre = _eval_masks(f.pre, n, val_masks, table, combos)
        post = _eval_masks(f.post, n, val_masks, table, combos)
        holds = table[np.arange(combos), pre, post]
        return np.where(holds, all_mask, 0).astype(np.int16)
    raise TypeError(f"not a core formula: {f!r}")


def _decode_model(n: int, k: int, combo: int, atoms: list[str], val_masks: dict[str, int]) -> Lts:
    states = [f"s{i}" for i in range(n)]
    actions = ["a", "b"][:k]
    props = {
        s: [atom for atom in atoms if val_masks.get(atom, 0) >> i & 1]
        for i, s in enumerate(states)
    }
    rel = {}
    for a_idx, action in enumerate(actions):
        pairs = []
        for s in range(n):
            for t in range(n):
                if combo >> (a_idx * n * n + s * n + t) & 1:
                    pairs.append((states[s], states[t]))
        rel[action] = pairs
    return make_lts(states, props, rel)


def _exhaustive_tier(core: Formula, atoms: list[str], bounds: SearchBounds) -> Lts | None:
    max_states = min(_EXHAUSTIVE_MAX_STATES, bounds.max_states)
    max_actions = min(_EXHAUSTIVE_MAX_ACTIONS, bounds.max_actions)
    for n in range(1, max_states + 1):
        for k in range(0, max_actions + 1):
            combos = 1 << (k * n * n)
            table = _witness_table(n, k)
            for val_counter in range(1 << (len(atoms) * n)):
                val_masks = {
                    atom: (val_counter >> (idx * n)) & ((1 << n) - 1)
                    for idx, atom in enumerate(atoms)
                }
                truth = _eval_masks(core, n, val_masks, table, combos)
                hits = np.nonzero(truth)[0]
                if hits.size:
                    model = _decode_model(n, k, int(hits[0]), atoms, val_masks)
                    if eval_formula(model, core) == 0:  # pragma: no cover
                        raise AssertionError("vectorized tier disagrees with exact evaluator")
                    return model
    return None


def bounded_sat_search(f: Formula, bounds: SearchBounds = SearchBounds()) -> Lts | None:
    """First model of ``f`` found in the exhaustive box or by random trials.

    Every returned model has been re-verified by the exact evaluator.  The
    exhaustive tier is skipped when the formula mentions more atoms than the
    box covers (it could not be complete for that vocabulary).
    """
    core = desugar(f)
    atoms = sorted(atoms_of(core))
    if len(atoms) <= min(_EXHAUSTIVE_MAX_ATOMS, bounds.atom_budget):
        model = _exhaustive_tier(core, atoms, bounds)
        if model is not None:
            return model
    rng = random.Random(bounds.seed)
    for _ in range(bounds.random_trials):
        n = rng.randint(1, bounds.max_states)
        k = rng.randint(0, bounds.max_actions)
        density = rng.choice([0.1, 0.2, 0.3, 0.5])
        model = random_lts(n, k, tuple(atoms), density, rng.getrandbits(32))
        if eval_formula(model, core) != 0:
            return model
    return None


# ---------------------------------------------------------------------------
# Seeded generators


def random_formula(
    depth_max: int, leaf_max: int, atoms: tuple[str, ...], seed: int
) -> Formula:
    """Seeded random formula with modal depth at most ``depth_max`` and at
    most ``leaf_max`` modality occurrences (counted after desugaring)."""
    if not atoms:
        raise ValueError("need at least one atom")
    rng = random.Random(seed)
    leaves = [leaf_max]
    nodes = [24]  # connective budget keeping every sample finite and small

    def gen(depth: int, mult: int) -> Formula:
        # ``mult`` tracks how many copies of this subtree survive desugaring
        # (each enclosing <-> duplicates it), so the leaf budget stays exact.
        if nodes[0] <= 0:
            return Atom(rng.choice(atoms))
        choices = ["atom", "atom", "not", "or", "and", "implies"]
        if rng.random() < 0.08:
            choices.append("const")
        if rng.random() < 0.15:
            choices.append("iff")
        if depth > 0 and leaves[0] >= mult:
            choices.extend(["kh", "kh", "univ", "exis"])
        pick = rng.choice(choices)
        if pick == "atom":
            return Atom(rng.choice(atoms))
        if pick == "const":
            return Top() if rng.random() < 0.5 else Bottom()
        nodes[0] -= 1
        if pick == "not":
            return Not(gen(depth, mult))
        if pick == "iff":
            return Iff(gen(depth, 2 * mult), gen(depth, 2 * mult))
        if pick in ("or", "and", "implies"):
            ctor = {"or": Or, "and": And, "implies": Implies}[pick]
            return ctor(gen(depth, mult), gen(depth, mult))
        leaves[0] -= mult
        if pick == "univ":
            return Univ(gen(depth - 1, mult))
        if pick == "exis":
            return Exis(gen(depth - 1, mult))
        return Kh(gen(depth - 1, mult), gen(depth - 1, mult))

    f = gen(depth_max, 1)
    assert kh_occurrences(f) <= leaf_max
    return f


def random_lts(
    states: int, actions: int, atoms: tuple[str, ...], density: float, seed: int
) -> Lts:
    """Seeded random model: each potential edge kept with probability
    ``density``, each atom true at each state with probability one half."""
    if states < 1:
        raise ValueError("need at least one state")
    rng = random.Random(seed)
    names = [f"s{i}" for i in range(states)]
    action_names = [chr(ord("a") + i) for i in range(actions)]
    props = {s: [atom for atom in atoms if rng.random() < 0.5] for s in names}
    rel = {
        action: [(s, t) for s in names for t in names if rng.random() < density]
        for action in action_names
    }
    return make_lts(names, props, rel)
