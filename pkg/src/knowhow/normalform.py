"""Leaf normal form: eliminate nested modalities by naming them.

``flatten`` rewrites a formula into a modality-free skeleton ``phi0`` plus an
ordered list of definitions ``_ki := Kh(pre, post)`` whose sides are
modality-free.  Each pass collects the current innermost modalities
(modal depth exactly 1) left to right, replaces every occurrence of each with
a fresh ``_ki`` atom, and repeats until no modality remains.  The conjunction
of ``phi0`` with the definition biconditionals ``A _ki <-> Kh(pre, post)`` is
satisfiable exactly when the input is.
"""

from __future__ import annotations

from dataclasses import dataclass

from .formula import (
    And,
    Atom,
    Formula,
    Iff,
    Kh,
    Not,
    Or,
    RESERVED_PREFIX,
    Top,
    Univ,
    atoms_of,
    desugar,
    modal_depth,
    render,
)


@dataclass(frozen=True)
class FlattenResult:
    """Modality-free skeleton plus ordered fresh-atom definitions."""

    phi0: Formula
    defs: tuple[tuple[Atom, Kh], ...]

    def definitions(self) -> Formula:
        """The definition conjunct: A _ki <-> leaf_i for every definition."""
        parts = [Iff(Univ(k), leaf) for k, leaf in self.defs]
        if not parts:
            return Top()
        combined = parts[0]
        for part in parts[1:]:
            combined = And(combined, part)
        return combined

    def conjoined(self) -> Formula:
        """phi0 together with the definition conjunct."""
        if not self.defs:
            return self.phi0
        return And(self.phi0, self.definitions())


def _ordered_leaves(f: Formula) -> list[Kh]:
    """Depth-1 modalities in left-to-right first-occurrence order."""
    found: dict[Kh, None] = {}

    def walk(g: Formula) -> None:
        if isinstance(g, Kh):
            if modal_depth(g) == 1:
                found.setdefault(g)
                return
            walk(g.pre)
            walk(g.post)
        elif isinstance(g, Not):
            walk(g.f)
        elif isinstance(g, Or):
            walk(g.left)
            walk(g.right)

    walk(f)
    return list(found)


def _replace(f: Formula, target: Kh, replacement: Atom) -> Formula:
    if f == target:
        return replacement
    if isinstance(f, Not):
        return Not(_replace(f.f, target, replacement))
    if isinstance(f, Or):
        return Or(_replace(f.left, target, replacement), _replace(f.right, target, replacement))
    if isinstance(f, Kh):
        return Kh(_replace(f.pre, target, replacement), _replace(f.post, target, replacement))
    return f


def flatten(f: Formula, *, allow_reserved: bool = False) -> FlattenResult:
    """Flatten to leaf normal form.

    Inputs containing reserved ``_k…`` atoms are rejected unless
    ``allow_reserved`` is set (useful for re-flattening an already flattened
    skeleton, which introduces no fresh atoms and hence cannot collide).
    """
    core = desugar(f)
    if not allow_reserved:
        reserved = sorted(a for a in atoms_of(core) if a.startswith(RESERVED_PREFIX))
        if reserved:
            raise ValueError(
                f"input uses reserved atom(s) {', '.join(reserved)}; "
                f"the {RESERVED_PREFIX!r} prefix is for generated definitions"
            )
    phi0 = core
    defs: list[tuple[Atom, Kh]] = []
    counter = 1
    while True:
        batch = _ordered_leaves(phi0)
        if not batch:
            break
        for leaf in batch:
            fresh = Atom(f"{RESERVED_PREFIX}{counter}")
            counter += 1
            defs.append((fresh, leaf))
            phi0 = _replace(phi0, leaf, fresh)
    if modal_depth(phi0) != 0:  # pragma: no cover - loop invariant
        raise AssertionError(f"flattening left a modality behind: {render(phi0)}")
    return FlattenResult(phi0, tuple(defs))
