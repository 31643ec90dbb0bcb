"""The satisfiability decision procedure for leaf-normal-form inputs.

Pipeline (all satisfiability questions are propositional oracle calls):

1. Flatten the input into a skeleton ``phi0`` and definitions
   ``_ki := Kh(pre_i, post_i)``.
2. Enumerate the distinct definition-atom projections of ``phi0``'s models;
   each projection partitions the definitions into asserted (``P+``) and
   denied (``P-``) sets and yields a candidate pair (positive conjunction,
   negative conjunction).
3. Check the pair for compatibility: a context fixpoint forces some asserted
   postconditions to be globally false; a composition closure tracks which
   witness plans chain; every denied conjunct must stay deniable against all
   of that.
4. The first compatible guess (descending lexicographic order, so
   all-true first) whose built certificate verifies against the original
   formula yields SAT; exhausting all guesses yields UNSAT.

``plain`` mode builds the pair exactly as stated above.  ``augmented`` mode
additionally pins every definition atom's value globally (asserted atoms true
everywhere, denied atoms false everywhere) and conjoins the guessed literals
into the existential conjunct — closing a soundness gap that ``plain`` mode
instead handles by certificate gating (see ``decide``).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .formula import (
    And,
    Atom,
    Bottom,
    Formula,
    Not,
    Top,
    modal_depth,
    render,
)
from .normalform import FlattenResult, flatten
from .propsat import SatOracle

# ---------------------------------------------------------------------------
# Domain types


@dataclass(frozen=True)
class PositiveSpec:
    """Ordered conjunction of asserted know-how statements Kh(pre, post)."""

    conjuncts: tuple[tuple[Formula, Formula], ...]

    def __post_init__(self) -> None:
        for pre, post in self.conjuncts:
            if modal_depth(pre) != 0 or modal_depth(post) != 0:
                raise ValueError(
                    f"positive conjunct Kh({render(pre)}, {render(post)}) is not flat"
                )

    @property
    def n(self) -> int:
        return len(self.conjuncts)

    def pre(self, i: int) -> Formula:
        return self.conjuncts[i - 1][0]

    def post(self, i: int) -> Formula:
        return self.conjuncts[i - 1][1]


@dataclass(frozen=True)
class NegativeSpec:
    """Ordered conjunction of denied know-how statements ~Kh(pre, post)."""

    conjuncts: tuple[tuple[Formula, Formula], ...]

    def __post_init__(self) -> None:
        for pre, post in self.conjuncts:
            if modal_depth(pre) != 0 or modal_depth(post) != 0:
                raise ValueError(
                    f"negative conjunct ~Kh({render(pre)}, {render(post)}) is not flat"
                )

    @property
    def m(self) -> int:
        return len(self.conjuncts)


@dataclass(frozen=True)
class GlobalContext:
    """Fixpoint of the context sweep.

    ``indices`` are the positive conjuncts whose postconditions cannot hold
    in context; ``members`` are the negated preconditions accumulated for
    them, in index order; ``psi`` is their conjunction (true when empty).
    """

    indices: frozenset[int]
    members: tuple[Formula, ...]
    psi: Formula


@dataclass(frozen=True)
class Closure:
    """Reflexive-transitive composition closure over positive conjuncts.

    ``pairs`` holds 1-indexed (x, y): chaining witness plans starting from
    conjunct x's precondition can reach conjunct y's postcondition."""

    n: int
    pairs: frozenset[tuple[int, int]]

    def __contains__(self, pair: tuple[int, int]) -> bool:
        return pair in self.pairs


@dataclass(frozen=True)
class GuessPartition:
    """A guessed valuation of the definition atoms."""

    p_plus: tuple[int, ...]
    p_minus: tuple[int, ...]
    k_assignment: dict[str, bool] = field(hash=False)

    def __post_init__(self) -> None:
        overlap = set(self.p_plus) & set(self.p_minus)
        if overlap:
            raise ValueError(f"partition overlap: {sorted(overlap)}")


class Result(enum.Enum):
    SAT = "SAT"
    UNSAT = "UNSAT"


@dataclass(frozen=True)
class GuessRecord:
    """Per-guess trace entry (populated when decide runs with tracing)."""

    k_assignment: dict[str, bool] = field(hash=False)
    n: int
    m: int
    compatible: bool
    certificate_verified: bool | None
    oracle_calls: int
    rescued: bool = False


@dataclass(frozen=True)
class Verdict:
    result: Result
    mode: str
    guesses_tried: int
    partition: "GuessPartition | None" = None
    certificate: "object | None" = None  # certificate.Certificate on SAT
    flattening: FlattenResult | None = None
    enumeration_calls: int = 0
    certificate_calls: int = 0
    trace: tuple[GuessRecord, ...] | None = None


# ---------------------------------------------------------------------------
# Context fixpoint (sweep), positive and negative satisfiability


def global_indices(p: PositiveSpec, oracle: SatOracle | None = None) -> GlobalContext:
    """Indices whose postconditions are unsatisfiable in context.

    Runs n+1 sweeps; each sweep tests every remaining index against the
    context assembled so far, then folds the newly forced ones in.
    """
    oracle = oracle or SatOracle()
    indices: set[int] = set()
    members: list[Formula] = []
    for _ in range(p.n + 1):
        context = list(members)
        newly = [
            k
            for k in range(1, p.n + 1)
            if k not in indices and not oracle.sat(context + [p.post(k)])
        ]
        for k in newly:
            indices.add(k)
            members.append(Not(p.pre(k)))
    ordered = sorted(indices)
    members = [Not(p.pre(k)) for k in ordered]
    psi: Formula = Top()
    if members:
        psi = members[0]
        for member in members[1:]:
            psi = And(psi, member)
    return GlobalContext(frozenset(indices), tuple(members), psi)


def sat_positive(p: PositiveSpec, oracle: SatOracle | None = None) -> bool:
    """Satisfiability of a pure positive conjunction."""
    oracle = oracle or SatOracle()
    ctx = global_indices(p, oracle)
    return oracle.sat(list(ctx.members))


def sat_negative(q: NegativeSpec, oracle: SatOracle | None = None) -> bool:
    """Satisfiability of a pure negative conjunction: every denied statement
    needs a precondition state that escapes the postcondition (else the empty
    plan would witness it)."""
    oracle = oracle or SatOracle()
    return all(oracle.sat([And(pre, Not(post))]) for pre, post in q.conjuncts)


# ---------------------------------------------------------------------------
# Composition closure


def composition_closure(
    p: PositiveSpec, psi: Formula, oracle: SatOracle | None = None
) -> Closure:
    """Reflexive-transitive closure of the plan-chaining edge relation.

    There is an edge x → y when, under the context, every state reached by
    conjunct x's plans satisfies conjunct y's precondition — so y's plan can
    always run after x's."""
    oracle = oracle or SatOracle()
    n = p.n
    edge = [
        [not oracle.sat([psi, p.post(x), Not(p.pre(y))]) for y in range(1, n + 1)]
        for x in range(1, n + 1)
    ]
    closed = [[x == y or edge[x][y] for y in range(n)] for x in range(n)]
    for mid in range(n):
        for x in range(n):
            if closed[x][mid]:
                row_mid = closed[mid]
                row_x = closed[x]
                for y in range(n):
                    if row_mid[y]:
                        row_x[y] = True
    pairs = frozenset(
        (x + 1, y + 1) for x in range(n) for y in range(n) if closed[x][y]
    )
    return Closure(n, pairs)


# ---------------------------------------------------------------------------
# Compatibility


def compatible(
    p: PositiveSpec,
    q: NegativeSpec,
    oracle: SatOracle | None = None,
    ctx: GlobalContext | None = None,
) -> bool:
    """Joint satisfiability of a positive and a negative conjunction.

    Checks, in order: (1) the context itself is satisfiable; (2a) each denied
    conjunct has a precondition state escaping its postcondition, in context;
    (2b) for every denied conjunct j and every closure pair (x, y) where x is
    realizable in context and j's precondition forces x's, some state
    reachable through y's postcondition must still escape j's — otherwise the
    chained plan would witness the denied statement.
    """
    oracle = oracle or SatOracle()
    if ctx is None:
        ctx = global_indices(p, oracle)
    context = list(ctx.members)
    if not oracle.sat(context):
        return False
    for pre_j, post_j in q.conjuncts:
        if not oracle.sat(context + [pre_j, Not(post_j)]):
            return False
    closure = composition_closure(p, ctx.psi, oracle)
    realizable = {
        x: oracle.sat(context + [p.pre(x)]) for x in range(1, p.n + 1)
    }
    for pre_j, post_j in q.conjuncts:
        for x, y in sorted(closure.pairs):
            if not realizable[x]:
                continue
            if oracle.sat(context + [pre_j, Not(p.pre(x))]):
                continue  # j's precondition does not force x's
            if not oracle.sat(context + [p.post(y), Not(post_j)]):
                return False
    return True


def per_guess_call_bound(n: int, m: int) -> int:
    """Documented closed-form ceiling on oracle calls per guess:
    context sweeps + condition (1) + (2a) + realizability + closure edges
    + (2b) triggers and obligations."""
    return n * (n + 1) + 1 + m + n + n * n + 2 * m * n * n


# ---------------------------------------------------------------------------
# Top-level decision procedure


def _guess_order_key(defs: tuple, assignment: dict[str, bool]) -> tuple:
    # Descending lexicographic with _k1 most significant: all-true first.
    return tuple(not assignment[k.name] for k, _ in defs)


def _build_pair(
    result: FlattenResult, assignment: dict[str, bool], mode: str
) -> tuple[PositiveSpec, NegativeSpec, Formula]:
    """The candidate pair for one guess, plus the existential precondition."""
    p_plus = [i for i, (k, _) in enumerate(result.defs, start=1) if assignment[k.name]]
    p_minus = [i for i, (k, _) in enumerate(result.defs, start=1) if not assignment[k.name]]
    positives: list[tuple[Formula, Formula]] = [
        (result.defs[i - 1][1].pre, result.defs[i - 1][1].post) for i in p_plus
    ]
    negatives: list[tuple[Formula, Formula]] = [
        (result.defs[i - 1][1].pre, result.defs[i - 1][1].post) for i in p_minus
    ]
    exis_pre: Formula = result.phi0
    if mode == "augmented":
        for i in p_plus:
            positives.append((Not(Atom(result.defs[i - 1][0].name)), Bottom()))
        for i in p_minus:
            positives.append((Atom(result.defs[i - 1][0].name), Bottom()))
        for k, _ in result.defs:
            literal: Formula = Atom(k.name) if assignment[k.name] else Not(Atom(k.name))
            exis_pre = And(exis_pre, literal)
    negatives.append((exis_pre, Bottom()))
    return PositiveSpec(tuple(positives)), NegativeSpec(tuple(negatives)), exis_pre


def decide(
    f: Formula,
    mode: str = "plain",
    *,
    oracle: SatOracle | None = None,
    trace: bool = False,
    max_certificate_atoms: int = 12,
) -> Verdict:
    """Decide satisfiability; SAT verdicts carry a verified certificate.

    A compatible guess is accepted only if a certificate built for it
    verifies against the original formula.  In ``plain`` mode the candidate
    pair does not pin the definition atoms' global values, so the first
    certificate attempt can fail on alternation-deep inputs; the certificate
    is then rebuilt from the same guess's atom-pinning pair, which forces
    every definition atom to hold its guessed value throughout the model and
    realigns the nested definitions.  A guess whose certificates all fail is
    recorded in the trace and skipped.
    """
    from .certificate import build_model, verify_certificate

    if mode not in ("plain", "augmented"):
        raise ValueError(f"unknown mode {mode!r}")
    oracle = oracle or SatOracle()
    flattening = flatten(f)
    proj = sorted(k.name for k, _ in flattening.defs)

    before = oracle.calls
    assignments = oracle.enumerate_models(
        flattening.phi0, proj, max(1, 2 ** len(proj))
    )
    enumeration_calls = oracle.calls - before

    if not flattening.defs:
        # No definitions: satisfiability is exactly the skeleton's
        # propositional satisfiability, already settled by the enumeration.
        if not assignments:
            return Verdict(
                result=Result.UNSAT,
                mode=mode,
                guesses_tried=0,
                flattening=flattening,
                enumeration_calls=enumeration_calls,
                trace=() if trace else None,
            )
        p, q, exis_pre = _build_pair(flattening, {}, mode)
        ctx = GlobalContext(frozenset(), (), Top())
        before = oracle.calls
        certificate = build_model(
            p,
            q,
            ctx,
            witness_pre=exis_pre,
            max_atoms=max_certificate_atoms,
            oracle=oracle,
        )
        verified = verify_certificate(certificate, f)
        certificate_calls = oracle.calls - before
        record = GuessRecord(
            k_assignment={}, n=0, m=1, compatible=True,
            certificate_verified=verified, oracle_calls=0,
        )
        if verified:
            return Verdict(
                result=Result.SAT,
                mode=mode,
                guesses_tried=1,
                partition=GuessPartition((), (), {}),
                certificate=certificate,
                flattening=flattening,
                enumeration_calls=enumeration_calls,
                certificate_calls=certificate_calls,
                trace=(record,) if trace else None,
            )
        return Verdict(
            result=Result.UNSAT,
            mode=mode,
            guesses_tried=1,
            flattening=flattening,
            enumeration_calls=enumeration_calls,
            certificate_calls=certificate_calls,
            trace=(record,) if trace else None,
        )

    assignments.sort(key=lambda a: _guess_order_key(flattening.defs, a))
    records: list[GuessRecord] = []
    certificate_calls = 0
    tried = 0

    for assignment in assignments:
        tried += 1
        p, q, exis_pre = _build_pair(flattening, assignment, mode)
        before = oracle.calls
        ctx = global_indices(p, oracle)
        ok = compatible(p, q, oracle, ctx)
        guess_calls = oracle.calls - before
        verified: bool | None = None
        rescued = False
        certificate = None
        if ok:
            before = oracle.calls
            certificate = build_model(
                p,
                q,
                ctx,
                witness_pre=exis_pre,
                max_atoms=max_certificate_atoms,
                oracle=oracle,
            )
            verified = verify_certificate(certificate, f)
            if not verified and mode == "plain":
                # Rebuild from the atom-pinning pair: with every definition
                # atom forced to its guessed value globally, each definition's
                # literal reading coincides with its expansion, so a
                # certificate for the enriched pair also satisfies the
                # original formula whenever that pair is itself compatible.
                p2, q2, exis2 = _build_pair(flattening, assignment, "augmented")
                ctx2 = global_indices(p2, oracle)
                if compatible(p2, q2, oracle, ctx2):
                    candidate = build_model(
                        p2,
                        q2,
                        ctx2,
                        witness_pre=exis2,
                        max_atoms=max_certificate_atoms,
                        oracle=oracle,
                    )
                    if verify_certificate(candidate, f):
                        certificate = candidate
                        verified = True
                        rescued = True
            certificate_calls += oracle.calls - before
        if trace:
            records.append(
                GuessRecord(
                    k_assignment=dict(assignment),
                    n=p.n,
                    m=q.m,
                    compatible=ok,
                    certificate_verified=verified,
                    oracle_calls=guess_calls,
                    rescued=rescued,
                )
            )
        if ok and verified:
            partition = GuessPartition(
                p_plus=tuple(
                    i for i, (k, _) in enumerate(flattening.defs, start=1) if assignment[k.name]
                ),
                p_minus=tuple(
                    i
                    for i, (k, _) in enumerate(flattening.defs, start=1)
                    if not assignment[k.name]
                ),
                k_assignment=dict(assignment),
            )
            return Verdict(
                result=Result.SAT,
                mode=mode,
                guesses_tried=tried,
                partition=partition,
                certificate=certificate,
                flattening=flattening,
                enumeration_calls=enumeration_calls,
                certificate_calls=certificate_calls,
                trace=tuple(records) if trace else None,
            )
    return Verdict(
        result=Result.UNSAT,
        mode=mode,
        guesses_tried=len(assignments),
        flattening=flattening,
        enumeration_calls=enumeration_calls,
        certificate_calls=certificate_calls,
        trace=tuple(records) if trace else None,
    )


def oracle_call_count(verdict: Verdict) -> int:
    """Largest per-guess oracle-call count of a traced decide run."""
    if verdict.trace is None:
        raise ValueError("decide ran without tracing; per-guess counts unavailable")
    if not verdict.trace:
        return 0
    return max(record.oracle_calls for record in verdict.trace)
