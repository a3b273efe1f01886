"""Propositional feature expressions.

Every annotation in the system -- on schema elements, tuples, set elements,
query nodes -- is a propositional formula over feature names.  This module
owns the formula AST, the concrete syntax (`parse_fexp` / `print_fexp`), the
decision procedures (`sat`, `taut`, `equiv`, `implies`), and a canonicalizing
`simplify` used to keep printed annotations small and stable.

Solving strategy: formulas mentioning at most 16 features are decided by
truth-table enumeration; larger ones go through a Tseitin transform and a
small DPLL solver.  `simplify` computes a minimal disjunctive normal form
(Quine-McCluskey with deterministic tie-breaking) for formulas of at most 12
features, after first discarding variables the formula does not semantically
depend on; beyond that it falls back to structural cleanup plus a
constant-collapse check.  The canonical form is what lets two different
pipelines print byte-identical annotations for equivalent conditions.
"""

from __future__ import annotations

import itertools
import re
from collections import defaultdict
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator

# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------


class FeatExpr:
    """Base class for feature-expression nodes."""

    __slots__ = ()


@dataclass(frozen=True)
class BoolLit(FeatExpr):
    value: bool


@dataclass(frozen=True)
class Feature(FeatExpr):
    name: str


@dataclass(frozen=True)
class Not(FeatExpr):
    operand: FeatExpr


@dataclass(frozen=True)
class And(FeatExpr):
    left: FeatExpr
    right: FeatExpr


@dataclass(frozen=True)
class Or(FeatExpr):
    left: FeatExpr
    right: FeatExpr


TRUE = BoolLit(True)
FALSE = BoolLit(False)

#: A configuration is the set of enabled feature names.
Configuration = frozenset


def and_all(parts: Iterable[FeatExpr]) -> FeatExpr:
    """Left-associated conjunction; empty input gives true."""
    out: FeatExpr | None = None
    for p in parts:
        out = p if out is None else And(out, p)
    return TRUE if out is None else out


def or_all(parts: Iterable[FeatExpr]) -> FeatExpr:
    """Left-associated disjunction; empty input gives false."""
    out: FeatExpr | None = None
    for p in parts:
        out = p if out is None else Or(out, p)
    return FALSE if out is None else out


def conj(p: FeatExpr, q: FeatExpr) -> FeatExpr:
    """Conjunction folding literals and equal operands, rewriting nothing else."""
    if p == TRUE or p == q:
        return q
    if q == TRUE:
        return p
    if p == FALSE or q == FALSE:
        return FALSE
    return And(p, q)


def disj(p: FeatExpr, q: FeatExpr) -> FeatExpr:
    """Disjunction folding literals and equal operands, rewriting nothing else."""
    if p == FALSE or p == q:
        return q
    if q == FALSE:
        return p
    if p == TRUE or q == TRUE:
        return TRUE
    return Or(p, q)


def features_of(e: FeatExpr) -> frozenset[str]:
    """The set of feature names occurring in the formula."""
    names: set[str] = set()
    stack = [e]
    while stack:
        node = stack.pop()
        if isinstance(node, Feature):
            names.add(node.name)
        elif isinstance(node, Not):
            stack.append(node.operand)
        elif isinstance(node, (And, Or)):
            stack.append(node.left)
            stack.append(node.right)
    return frozenset(names)


def eval_fexp(e: FeatExpr, config: Iterable[str]) -> bool:
    """Evaluate under a configuration (the collection of enabled features)."""
    enabled = config if isinstance(config, (set, frozenset)) else frozenset(config)
    return _eval(e, enabled)


def _eval(e: FeatExpr, enabled) -> bool:
    if isinstance(e, BoolLit):
        return e.value
    if isinstance(e, Feature):
        return e.name in enabled
    if isinstance(e, Not):
        return not _eval(e.operand, enabled)
    if isinstance(e, And):
        return _eval(e.left, enabled) and _eval(e.right, enabled)
    if isinstance(e, Or):
        return _eval(e.left, enabled) or _eval(e.right, enabled)
    raise TypeError(f"not a feature expression: {e!r}")


# ---------------------------------------------------------------------------
# Concrete syntax
# ---------------------------------------------------------------------------
#
#   fexp  ::= fexp "|" fexp  |  fexp "&" fexp  |  "!" fexp
#          |  "(" fexp ")"  |  IDENT  |  "true"  |  "false"
#
# with precedence ! > & > | and left associativity.


class ParseError(ValueError):
    """Syntax error with the character offset where it was detected."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_WS = " \t\r\n"


def _skip_ws(text: str, i: int) -> int:
    while i < len(text) and text[i] in _WS:
        i += 1
    return i


def parse_fexp(text: str) -> FeatExpr:
    expr, i = parse_fexp_partial(text, 0)
    i = _skip_ws(text, i)
    if i != len(text):
        raise ParseError("unexpected trailing input", i)
    return expr


def parse_fexp_partial(text: str, start: int = 0) -> tuple[FeatExpr, int]:
    """Parse the longest feature expression starting at `start`.

    Returns the expression and the offset just past it, so the grammar can be
    embedded inside other syntaxes (attribute lists, schema files, queries).
    """
    return _parse_or(text, start)


def _parse_or(text: str, i: int) -> tuple[FeatExpr, int]:
    left, i = _parse_and(text, i)
    while True:
        j = _skip_ws(text, i)
        if j < len(text) and text[j] == "|":
            right, i = _parse_and(text, j + 1)
            left = Or(left, right)
        else:
            return left, i


def _parse_and(text: str, i: int) -> tuple[FeatExpr, int]:
    left, i = _parse_unary(text, i)
    while True:
        j = _skip_ws(text, i)
        if j < len(text) and text[j] == "&":
            right, i = _parse_unary(text, j + 1)
            left = And(left, right)
        else:
            return left, i


def _parse_unary(text: str, i: int) -> tuple[FeatExpr, int]:
    i = _skip_ws(text, i)
    if i >= len(text):
        raise ParseError("expected a feature expression", i)
    ch = text[i]
    if ch == "!":
        operand, i = _parse_unary(text, i + 1)
        return Not(operand), i
    if ch == "(":
        expr, i = _parse_or(text, i + 1)
        i = _skip_ws(text, i)
        if i >= len(text) or text[i] != ")":
            raise ParseError("expected ')'", i)
        return expr, i + 1
    m = _IDENT.match(text, i)
    if m is None:
        raise ParseError(f"unexpected character {ch!r}", i)
    word = m.group()
    if word == "true":
        return TRUE, m.end()
    if word == "false":
        return FALSE, m.end()
    return Feature(word), m.end()


def print_fexp(e: FeatExpr) -> str:
    """Render with the minimal parentheses that re-parse to the same tree."""
    return _render(e, 1)


# Operator precedence levels used by the renderer; atoms bind tightest.
_PREC_OR, _PREC_AND, _PREC_NOT, _PREC_ATOM = 1, 2, 3, 4


def _render(e: FeatExpr, need: int) -> str:
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, Feature):
        return e.name
    if isinstance(e, Not):
        s, prec = "!" + _render(e.operand, _PREC_NOT), _PREC_NOT
    elif isinstance(e, And):
        s = _render(e.left, _PREC_AND) + " & " + _render(e.right, _PREC_AND + 1)
        prec = _PREC_AND
    elif isinstance(e, Or):
        s = _render(e.left, _PREC_OR) + " | " + _render(e.right, _PREC_OR + 1)
        prec = _PREC_OR
    else:
        raise TypeError(f"not a feature expression: {e!r}")
    return "(" + s + ")" if prec < need else s


# ---------------------------------------------------------------------------
# Decision procedures
# ---------------------------------------------------------------------------

_ENUM_LIMIT = 16  # below this, brute force beats the DPLL setup cost


@lru_cache(maxsize=65536)
def sat(e: FeatExpr) -> bool:
    """Is the formula satisfiable by some configuration of its own features?"""
    names = sorted(features_of(e))
    n = len(names)
    if n <= _ENUM_LIMIT:
        for bits in range(1 << n):
            if _eval(e, {names[k] for k in range(n) if bits >> k & 1}):
                return True
        return False
    return _dpll(_tseitin(e))


def taut(e: FeatExpr) -> bool:
    return not sat(Not(e))


def implies(e1: FeatExpr, e2: FeatExpr) -> bool:
    return taut(Or(Not(e1), e2))


def equiv(e1: FeatExpr, e2: FeatExpr) -> bool:
    return taut(Or(And(e1, e2), And(Not(e1), Not(e2))))


def _tseitin(e: FeatExpr) -> list[list[int]]:
    """Equisatisfiable CNF over integer literals (one aux var per gate)."""
    clauses: list[list[int]] = []
    feature_ids: dict[str, int] = {}
    counter = itertools.count(1)

    def fid(name: str) -> int:
        if name not in feature_ids:
            feature_ids[name] = next(counter)
        return feature_ids[name]

    def walk(node: FeatExpr) -> int:
        if isinstance(node, Feature):
            return fid(node.name)
        if isinstance(node, BoolLit):
            v = next(counter)
            clauses.append([v] if node.value else [-v])
            return v
        if isinstance(node, Not):
            return -walk(node.operand)
        a = walk(node.left)
        b = walk(node.right)
        v = next(counter)
        if isinstance(node, And):
            clauses.extend([[-v, a], [-v, b], [v, -a, -b]])
        else:
            clauses.extend([[-v, a, b], [v, -a], [v, -b]])
        return v

    clauses.append([walk(e)])
    return clauses


def _dpll(clauses: list[list[int]]) -> bool:
    # unit propagation
    while True:
        unit = next((c[0] for c in clauses if len(c) == 1), None)
        if unit is None:
            break
        reduced = []
        for c in clauses:
            if unit in c:
                continue
            if -unit in c:
                rest = [x for x in c if x != -unit]
                if not rest:
                    return False
                reduced.append(rest)
            else:
                reduced.append(c)
        clauses = reduced
    if not clauses:
        return True
    v = abs(clauses[0][0])
    return _dpll(clauses + [[v]]) or _dpll(clauses + [[-v]])


# ---------------------------------------------------------------------------
# Canonical simplification
# ---------------------------------------------------------------------------

_QM_LIMIT = 12  # truth-table size cap for the canonical path


def simplify(e: FeatExpr) -> FeatExpr:
    """Canonical minimal disjunctive normal form (small formulas).

    Guarantees: the result is equivalent to the input; a constant formula
    becomes a bare `true`/`false`; composite results contain no boolean
    literals; the result only mentions features the input semantically
    depends on; equivalent inputs yield the identical tree; and the function
    is idempotent.  Formulas over more than 12 features get a cheaper
    structural cleanup that still folds constants and collapses
    unsatisfiable/tautological formulas.
    """
    names = sorted(features_of(e))
    if len(names) > _QM_LIMIT:
        return _simplify_structural(e)
    n = len(names)
    minterms = {
        bits
        for bits in range(1 << n)
        if _eval(e, {names[k] for k in range(n) if bits >> k & 1})
    }
    if not minterms:
        return FALSE
    if len(minterms) == 1 << n:
        return TRUE
    names, minterms = _drop_irrelevant(names, minterms)
    primes = _prime_implicants(minterms)
    chosen = _cover(primes, minterms)
    terms = sorted(_term_key(v, mask, len(names)) for v, mask in chosen)
    return or_all(_term_expr(key, names) for key in terms)


def _drop_irrelevant(names: list[str], minterms: set[int]) -> tuple[list[str], set[int]]:
    """Project away variables whose value never changes membership."""
    for i in range(len(names) - 1, -1, -1):
        bit = 1 << i
        if any(((m in minterms) != ((m ^ bit) in minterms)) for m in range(1 << len(names))):
            continue
        low = (1 << i) - 1
        minterms = {(m & low) | ((m >> (i + 1)) << i) for m in minterms if not m & bit}
        names = names[:i] + names[i + 1 :]
    return names, minterms


def _prime_implicants(minterms: set[int]) -> list[tuple[int, int]]:
    """Quine-McCluskey combining pass.

    Implicants are (values, dontcare_mask) pairs with don't-care bits zeroed
    in `values`; two implicants merge when they share a mask and differ in
    exactly one care bit.
    """
    current = {(m, 0) for m in minterms}
    primes: list[tuple[int, int]] = []
    while current:
        groups: dict[tuple[int, int], list[int]] = defaultdict(list)
        for v, mask in current:
            groups[(mask, v.bit_count())].append(v)
        merged: set[tuple[int, int]] = set()
        nxt: set[tuple[int, int]] = set()
        for (mask, ones), values in groups.items():
            for v1 in values:
                for v2 in groups.get((mask, ones + 1), ()):
                    diff = v1 ^ v2
                    if diff.bit_count() == 1:
                        nxt.add((v1 & ~diff, mask | diff))
                        merged.add((v1, mask))
                        merged.add((v2, mask))
        primes.extend(sorted(t for t in current if t not in merged))
        current = nxt
    return primes


def _covers(prime: tuple[int, int], m: int) -> bool:
    v, mask = prime
    return m & ~mask == v


def _cover(primes: list[tuple[int, int]], minterms: set[int]) -> list[tuple[int, int]]:
    """Essential primes first, then a deterministic greedy set cover."""
    chosen: list[tuple[int, int]] = []
    for m in sorted(minterms):
        covering = [p for p in primes if _covers(p, m)]
        if len(covering) == 1 and covering[0] not in chosen:
            chosen.append(covering[0])
    remaining = {m for m in minterms if not any(_covers(p, m) for p in chosen)}
    while remaining:
        best = min(
            primes,
            key=lambda p: (
                -sum(1 for m in remaining if _covers(p, m)),
                -p[1].bit_count(),
                p,
            ),
        )
        chosen.append(best)
        remaining -= {m for m in remaining if _covers(best, m)}
    return chosen


def _term_key(v: int, mask: int, n: int) -> tuple:
    """Sort key for a product term: fewest literals first, then by literals."""
    lits = tuple((i, (v >> i) & 1 ^ 1) for i in range(n) if not mask >> i & 1)
    return (len(lits), lits)


def _term_expr(key: tuple, names: list[str]) -> FeatExpr:
    _, lits = key
    return and_all(
        Not(Feature(names[i])) if neg else Feature(names[i]) for i, neg in lits
    )


def _simplify_structural(e: FeatExpr) -> FeatExpr:
    e = _clean(e)
    if isinstance(e, BoolLit):
        return e
    if not sat(e):
        return FALSE
    if not sat(Not(e)):
        return TRUE
    return e


def _clean(e: FeatExpr) -> FeatExpr:
    """Bottom-up constant folding, double-negation and duplicate removal."""
    if isinstance(e, Not):
        op = _clean(e.operand)
        if isinstance(op, BoolLit):
            return FALSE if op.value else TRUE
        if isinstance(op, Not):
            return op.operand
        return Not(op)
    if isinstance(e, And):
        l, r = _clean(e.left), _clean(e.right)
        if l == FALSE or r == FALSE:
            return FALSE
        if l == TRUE:
            return r
        if r == TRUE:
            return l
        return l if l == r else And(l, r)
    if isinstance(e, Or):
        l, r = _clean(e.left), _clean(e.right)
        if l == TRUE or r == TRUE:
            return TRUE
        if l == FALSE:
            return r
        if r == FALSE:
            return l
        return l if l == r else Or(l, r)
    return e


# ---------------------------------------------------------------------------
# Configurations
# ---------------------------------------------------------------------------


def minterm(config: Iterable[str], universe: Iterable[str]) -> FeatExpr:
    """The conjunction pinning every feature of `universe` to its state."""
    enabled = frozenset(config)
    return and_all(
        Feature(f) if f in enabled else Not(Feature(f)) for f in sorted(universe)
    )


def all_configs(universe: Iterable[str]) -> Iterator[Configuration]:
    """All configurations over `universe`, in binary counting order."""
    names = sorted(universe)
    for bits in range(1 << len(names)):
        yield frozenset(names[k] for k in range(len(names)) if bits >> k & 1)
