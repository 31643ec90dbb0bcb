"""Formula AST, concrete syntax, and structural measures.

The logic extends propositional logic with a binary modality ``Kh(pre, post)``
("the agent knows how to reach ``post`` from ``pre``").  ``A f`` (everywhere)
abbreviates ``Kh(~f, false)`` and ``E f`` (somewhere) abbreviates ``~A ~f``.

Concrete grammar (ASCII, whitespace-insensitive)::

    formula := iff
    iff     := implies ("<->" iff)?          # right-associative
    implies := or ("->" implies)?            # right-associative
    or      := and ("|" and)*                # left-associative
    and     := unary ("&" unary)*            # left-associative
    unary   := ("~" | "A" | "E") unary | primary
    primary := atom | "true" | "false" | "Kh" "(" formula "," formula ")"
             | "(" formula ")"

Atoms match ``[a-z][a-zA-Z0-9_]*``.  Names starting with the reserved prefix
``_k`` are generated by the flattener and rejected in user input.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Union

RESERVED_PREFIX = "_k"


@dataclass(frozen=True)
class Atom:
    name: str


@dataclass(frozen=True)
class Bottom:
    pass


@dataclass(frozen=True)
class Top:
    pass


@dataclass(frozen=True)
class Not:
    f: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Iff:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Kh:
    pre: "Formula"
    post: "Formula"


@dataclass(frozen=True)
class Univ:
    f: "Formula"


@dataclass(frozen=True)
class Exis:
    f: "Formula"


Formula = Union[Atom, Bottom, Top, Not, Or, And, Implies, Iff, Kh, Univ, Exis]

_BINARY = {Or: "|", And: "&", Implies: "->", Iff: "<->"}


class ParseError(ValueError):
    """Syntax error with position and the tokens that would have been legal."""

    def __init__(self, message: str, line: int, column: int, expected: tuple[str, ...] = ()):
        self.line = line
        self.column = column
        self.expected = expected
        detail = f"{message} at line {line}, column {column}"
        if expected:
            detail += " (expected " + ", ".join(expected) + ")"
        super().__init__(detail)


# ---------------------------------------------------------------------------
# Lexer


@dataclass(frozen=True)
class _Token:
    kind: str  # ATOM, IDENT-keywords folded into their own kinds, punctuation
    text: str
    line: int
    column: int


_PUNCT = ["<->", "->", "~", "&", "|", "(", ")", ","]
_KEYWORDS = {"true": "TRUE", "false": "FALSE", "Kh": "KH", "A": "UNIV", "E": "EXIS"}


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, col = 1, 1
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch.isspace():
            col += 1
            i += 1
            continue
        matched = False
        for punct in _PUNCT:
            if text.startswith(punct, i):
                tokens.append(_Token(punct, punct, line, col))
                i += len(punct)
                col += len(punct)
                matched = True
                break
        if matched:
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            kind = _KEYWORDS.get(word)
            if kind is None:
                if not (word[0].islower() or word[0] == "_"):
                    raise ParseError(f"unknown keyword {word!r}", line, col)
                kind = "ATOM"
            tokens.append(_Token(kind, word, line, col))
            col += j - i
            i = j
            continue
        raise ParseError(f"unexpected character {ch!r}", line, col)
    tokens.append(_Token("EOF", "", line, col))
    return tokens


# ---------------------------------------------------------------------------
# Parser

_PRIMARY_EXPECTED = ("an atom", "'true'", "'false'", "'Kh'", "'A'", "'E'", "'~'", "'('")


class _Parser:
    def __init__(self, tokens: list[_Token], allow_reserved: bool):
        self.tokens = tokens
        self.pos = 0
        self.allow_reserved = allow_reserved

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str) -> _Token:
        tok = self.peek()
        if tok.kind != kind:
            raise ParseError(
                f"unexpected {tok.text!r}" if tok.kind != "EOF" else "unexpected end of input",
                tok.line,
                tok.column,
                expected=(f"'{kind}'",),
            )
        return self.advance()

    def parse_formula(self) -> Formula:
        return self.parse_iff()

    def parse_iff(self) -> Formula:
        left = self.parse_implies()
        if self.peek().kind == "<->":
            self.advance()
            return Iff(left, self.parse_iff())
        return left

    def parse_implies(self) -> Formula:
        left = self.parse_or()
        if self.peek().kind == "->":
            self.advance()
            return Implies(left, self.parse_implies())
        return left

    def parse_or(self) -> Formula:
        node = self.parse_and()
        while self.peek().kind == "|":
            self.advance()
            node = Or(node, self.parse_and())
        return node

    def parse_and(self) -> Formula:
        node = self.parse_unary()
        while self.peek().kind == "&":
            self.advance()
            node = And(node, self.parse_unary())
        return node

    def parse_unary(self) -> Formula:
        tok = self.peek()
        if tok.kind == "~":
            self.advance()
            return Not(self.parse_unary())
        if tok.kind == "UNIV":
            self.advance()
            return Univ(self.parse_unary())
        if tok.kind == "EXIS":
            self.advance()
            return Exis(self.parse_unary())
        return self.parse_primary()

    def parse_primary(self) -> Formula:
        tok = self.peek()
        if tok.kind == "ATOM":
            self.advance()
            if tok.text.startswith(RESERVED_PREFIX) and not self.allow_reserved:
                raise ParseError(
                    f"atom {tok.text!r} uses the reserved prefix {RESERVED_PREFIX!r}",
                    tok.line,
                    tok.column,
                )
            if tok.text[0] == "_" and not tok.text.startswith(RESERVED_PREFIX):
                raise ParseError(
                    f"atom {tok.text!r} may not start with '_'", tok.line, tok.column
                )
            return Atom(tok.text)
        if tok.kind == "TRUE":
            self.advance()
            return Top()
        if tok.kind == "FALSE":
            self.advance()
            return Bottom()
        if tok.kind == "KH":
            self.advance()
            self.expect("(")
            pre = self.parse_formula()
            self.expect(",")
            post = self.parse_formula()
            self.expect(")")
            return Kh(pre, post)
        if tok.kind == "(":
            self.advance()
            inner = self.parse_formula()
            self.expect(")")
            return inner
        raise ParseError(
            f"unexpected {tok.text!r}" if tok.kind != "EOF" else "unexpected end of input",
            tok.line,
            tok.column,
            expected=_PRIMARY_EXPECTED,
        )


def parse(text: str, *, allow_reserved: bool = False) -> Formula:
    """Parse concrete syntax into an AST.

    ``allow_reserved`` admits flattener-generated ``_k…`` atoms; user input
    must leave it off so fresh definition atoms can never collide.
    """
    parser = _Parser(_tokenize(text), allow_reserved)
    result = parser.parse_formula()
    tok = parser.peek()
    if tok.kind != "EOF":
        raise ParseError(f"unexpected trailing {tok.text!r}", tok.line, tok.column)
    return result


# ---------------------------------------------------------------------------
# Rendering

_PREC_IFF, _PREC_IMPLIES, _PREC_OR, _PREC_AND, _PREC_UNARY, _PREC_ATOMIC = 1, 2, 3, 4, 5, 6


def _precedence(f: Formula) -> int:
    if isinstance(f, Iff):
        return _PREC_IFF
    if isinstance(f, Implies):
        return _PREC_IMPLIES
    if isinstance(f, Or):
        return _PREC_OR
    if isinstance(f, And):
        return _PREC_AND
    if isinstance(f, (Not, Univ, Exis)):
        return _PREC_UNARY
    return _PREC_ATOMIC


def _render(f: Formula, minimum: int) -> str:
    prec = _precedence(f)
    if isinstance(f, Atom):
        text = f.name
    elif isinstance(f, Top):
        text = "true"
    elif isinstance(f, Bottom):
        text = "false"
    elif isinstance(f, Kh):
        text = f"Kh({_render(f.pre, 0)}, {_render(f.post, 0)})"
    elif isinstance(f, Not):
        text = "~" + _render(f.f, _PREC_UNARY)
    elif isinstance(f, Univ):
        text = "A " + _render(f.f, _PREC_UNARY)
    elif isinstance(f, Exis):
        text = "E " + _render(f.f, _PREC_UNARY)
    elif isinstance(f, Iff):
        text = f"{_render(f.left, _PREC_IMPLIES)} <-> {_render(f.right, _PREC_IFF)}"
    elif isinstance(f, Implies):
        text = f"{_render(f.left, _PREC_OR)} -> {_render(f.right, _PREC_IMPLIES)}"
    elif isinstance(f, Or):
        text = f"{_render(f.left, _PREC_OR)} | {_render(f.right, _PREC_AND)}"
    elif isinstance(f, And):
        text = f"{_render(f.left, _PREC_AND)} & {_render(f.right, _PREC_UNARY)}"
    else:  # pragma: no cover - exhaustive over constructors
        raise TypeError(f"not a formula: {f!r}")
    if prec < minimum:
        return f"({text})"
    return text


def render(f: Formula) -> str:
    """Minimal-parenthesization text; ``parse(render(f)) == f``."""
    return _render(f, 0)


# ---------------------------------------------------------------------------
# Structural operations


def desugar(f: Formula) -> Formula:
    """Reduce to the core constructors Atom, Bottom, Not, Or, Kh."""
    if isinstance(f, (Atom, Bottom)):
        return f
    if isinstance(f, Top):
        return Not(Bottom())
    if isinstance(f, Not):
        return Not(desugar(f.f))
    if isinstance(f, Or):
        return Or(desugar(f.left), desugar(f.right))
    if isinstance(f, And):
        return Not(Or(Not(desugar(f.left)), Not(desugar(f.right))))
    if isinstance(f, Implies):
        return Or(Not(desugar(f.left)), desugar(f.right))
    if isinstance(f, Iff):
        return desugar(And(Implies(f.left, f.right), Implies(f.right, f.left)))
    if isinstance(f, Kh):
        return Kh(desugar(f.pre), desugar(f.post))
    if isinstance(f, Univ):
        return Kh(Not(desugar(f.f)), Bottom())
    if isinstance(f, Exis):
        return Not(Kh(Not(Not(desugar(f.f))), Bottom()))
    raise TypeError(f"not a formula: {f!r}")


def modal_depth(f: Formula) -> int:
    """Maximum nesting of the know-how modality (A/E count as one level)."""
    if isinstance(f, (Atom, Bottom, Top)):
        return 0
    if isinstance(f, Not):
        return modal_depth(f.f)
    if isinstance(f, (Or, And, Implies, Iff)):
        return max(modal_depth(f.left), modal_depth(f.right))
    if isinstance(f, Kh):
        return 1 + max(modal_depth(f.pre), modal_depth(f.post))
    if isinstance(f, (Univ, Exis)):
        return 1 + modal_depth(f.f)
    raise TypeError(f"not a formula: {f!r}")


def _children(f: Formula) -> tuple[Formula, ...]:
    if isinstance(f, (Atom, Bottom, Top)):
        return ()
    if isinstance(f, Not):
        return (f.f,)
    if isinstance(f, (Or, And, Implies, Iff)):
        return (f.left, f.right)
    if isinstance(f, Kh):
        return (f.pre, f.post)
    if isinstance(f, (Univ, Exis)):
        return (f.f,)
    raise TypeError(f"not a formula: {f!r}")


def _walk(f: Formula) -> Iterator[Formula]:
    """Depth-first, left-to-right, node before its children."""
    stack = [f]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(_children(node)))


def subformulas(f: Formula) -> set[Formula]:
    """Reflexive-transitive subterm closure under structural equality."""
    return set(_walk(f))


def leaves(f: Formula) -> set[Formula]:
    """The Kh subformulas with propositional arguments (modal depth 1).

    Expects a desugared formula; on the core fragment every modality is a
    plain ``Kh`` node.
    """
    return {g for g in _walk(f) if isinstance(g, Kh) and modal_depth(g) == 1}


def atoms_of(f: Formula) -> frozenset[str]:
    return frozenset(g.name for g in _walk(f) if isinstance(g, Atom))


def kh_occurrences(f: Formula) -> int:
    """Number of modality occurrences after desugaring (A/E each count one)."""
    return sum(1 for g in _walk(desugar(f)) if isinstance(g, Kh))
