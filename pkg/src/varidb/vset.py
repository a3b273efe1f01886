"""Variational sets.

A variational set annotates each element with a presence condition and may
carry one more annotation on the whole set; configuring it under a feature
selection yields a plain set.  These are the workhorse collections of the
engine: attribute lists in schemas and query types are variational sets of
names, and the algebra below (union, intersection, equivalence, subsumption)
is what the type checker runs on them.

Normalization happens at construction: duplicate values merge their presence
conditions by disjunction, and elements that can never appear together with
the set annotation are dropped.  All values are immutable.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator

from .featexpr import (
    FALSE,
    TRUE,
    And,
    FeatExpr,
    Or,
    ParseError,
    _skip_ws,
    conj,
    disj,
    equiv,
    eval_fexp,
    implies,
    parse_fexp_partial,
    print_fexp,
    sat,
    simplify,
)


@dataclass(frozen=True)
class VElem:
    """One element of a variational set: a value and its presence condition."""

    value: object
    pc: FeatExpr = TRUE

    def __post_init__(self):
        if not sat(self.pc):
            raise ValueError(
                f"unsatisfiable presence condition on element "
                f"{self.value!r}: {print_fexp(self.pc)}"
            )


@dataclass(frozen=True)
class VSet:
    elements: tuple[VElem, ...] = ()
    annotation: FeatExpr = TRUE

    def __post_init__(self):
        merged: dict[object, FeatExpr] = {}
        for el in self.elements:
            if el.value in merged:
                merged[el.value] = Or(merged[el.value], el.pc)
            else:
                merged[el.value] = el.pc
        kept = []
        for value, pc in merged.items():
            if self.annotation != TRUE and not sat(And(pc, self.annotation)):
                continue
            kept.append(VElem(value, pc))
        object.__setattr__(self, "elements", tuple(kept))

    def values(self) -> list:
        return [el.value for el in self.elements]

    def pc_of(self, value) -> FeatExpr | None:
        for el in self.elements:
            if el.value == value:
                return el.pc
        return None

    def __iter__(self) -> Iterator[VElem]:
        return iter(self.elements)

    def __len__(self) -> int:
        return len(self.elements)


def vset(items: Iterable = (), annotation: FeatExpr = TRUE) -> VSet:
    """Convenience builder: items are values, (value, pc) pairs, or VElems."""
    elems = []
    for item in items:
        if isinstance(item, VElem):
            elems.append(item)
        elif isinstance(item, tuple) and len(item) == 2 and isinstance(item[1], FeatExpr):
            elems.append(VElem(item[0], item[1]))
        else:
            elems.append(VElem(item))
    return VSet(tuple(elems), annotation)


def push_annotation(x: VSet) -> VSet:
    """Distribute the set annotation onto every element.

    The result has annotation true and element conditions pc_i ∧ annotation
    (canonically simplified); elements that cannot coexist with the
    annotation disappear.  Pushing a set whose annotation is already true
    returns it unchanged.
    """
    if x.annotation == TRUE:
        return x
    pushed = []
    for el in x.elements:
        pc = simplify(And(el.pc, x.annotation))
        if pc != FALSE:
            pushed.append(VElem(el.value, pc))
    return VSet(tuple(pushed), TRUE)


def vset_union(x1: VSet, x2: VSet) -> VSet:
    """Elementwise union: shared values get the disjunction of their pcs."""
    a, b = push_annotation(x1), push_annotation(x2)
    out: dict[object, FeatExpr] = {el.value: el.pc for el in a.elements}
    for el in b.elements:
        out[el.value] = disj(out[el.value], el.pc) if el.value in out else el.pc
    return VSet(tuple(VElem(v, pc) for v, pc in out.items()))


def vset_intersect(x1: VSet, x2: VSet) -> VSet:
    """Shared values annotated with the conjunction of their pcs."""
    a, b = push_annotation(x1), push_annotation(x2)
    bmap = {el.value: el.pc for el in b.elements}
    kept = []
    for el in a.elements:
        if el.value in bmap and sat(And(el.pc, bmap[el.value])):
            kept.append(VElem(el.value, conj(el.pc, bmap[el.value])))
    return VSet(tuple(kept))


def vset_equiv(x1: VSet, x2: VSet) -> bool:
    """Do the two sets configure identically everywhere?"""
    a, b = push_annotation(x1), push_annotation(x2)
    amap = {el.value: el.pc for el in a.elements}
    bmap = {el.value: el.pc for el in b.elements}
    if amap.keys() != bmap.keys():
        return False
    return all(equiv(amap[v], bmap[v]) for v in amap)


def subsumes(needle: VSet, haystack: VSet) -> bool:
    """Does every element of `needle` also occur in `haystack`, compatibly?

    An element counts as occurring when the haystack holds the same value
    with a presence condition satisfiable together with the needle's — i.e.
    some configuration puts the element in both sets.
    """
    a, b = push_annotation(needle), push_annotation(haystack)
    bmap = {el.value: el.pc for el in b.elements}
    return all(
        el.value in bmap and sat(And(el.pc, bmap[el.value])) for el in a.elements
    )


def relax_implied(x: VSet) -> VSet:
    """Erase element conditions that the set annotation already guarantees."""
    new = tuple(
        VElem(el.value, TRUE) if implies(x.annotation, el.pc) else el
        for el in x.elements
    )
    return VSet(new, x.annotation)


def configure_vset(x: VSet, config: Iterable[str]) -> list:
    """The plain set selected by a configuration (in element order)."""
    enabled = frozenset(config)
    if not eval_fexp(x.annotation, enabled):
        return []
    return [el.value for el in x.elements if eval_fexp(el.pc, enabled)]


# ---------------------------------------------------------------------------
# Textual form:  { v1 # pc1, v2 } # pc     (`# pc` omitted when true)
# ---------------------------------------------------------------------------

_BARE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*(\.[A-Za-z_][A-Za-z0-9_]*)?\Z")
_INT = re.compile(r"-?[0-9]+")
_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*(\.[A-Za-z_][A-Za-z0-9_]*)?")


def print_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, str):
        if _BARE.match(v) and v not in ("true", "false"):
            return v
        return '"' + v.replace('"', '""') + '"'
    raise TypeError(f"cannot print value {v!r}")


def print_vset(x: VSet) -> str:
    if not x.elements:
        body = "{}"
    else:
        parts = []
        for el in x.elements:
            rendered = print_value(el.value)
            if el.pc != TRUE:
                rendered += " # " + print_fexp(el.pc)
            parts.append(rendered)
        body = "{ " + ", ".join(parts) + " }"
    if x.annotation != TRUE:
        body += " # " + print_fexp(x.annotation)
    return body


def parse_vset(text: str) -> VSet:
    x, i = parse_vset_partial(text, 0)
    i = _skip_ws(text, i)
    if i != len(text):
        raise ParseError("unexpected trailing input", i)
    return x


def parse_vset_partial(text: str, start: int) -> tuple[VSet, int]:
    i = _skip_ws(text, start)
    if i >= len(text) or text[i] != "{":
        raise ParseError("expected '{'", i)
    i = _skip_ws(text, i + 1)
    elems: list[VElem] = []
    if i < len(text) and text[i] == "}":
        i += 1
    else:
        while True:
            value, i = parse_value(text, i)
            pc = TRUE
            j = _skip_ws(text, i)
            if j < len(text) and text[j] == "#":
                pc, i = parse_fexp_partial(text, j + 1)
                j = _skip_ws(text, i)
            elems.append(VElem(value, pc))
            if j < len(text) and text[j] == ",":
                i = j + 1
                continue
            if j < len(text) and text[j] == "}":
                i = j + 1
                break
            raise ParseError("expected ',' or '}'", j)
    annotation = TRUE
    j = _skip_ws(text, i)
    if j < len(text) and text[j] == "#":
        annotation, i = parse_fexp_partial(text, j + 1)
    return VSet(tuple(elems), annotation), i


def parse_value(text: str, start: int) -> tuple[object, int]:
    """Parse one plain value: integer, quoted text, boolean, or bare name."""
    i = _skip_ws(text, start)
    if i >= len(text):
        raise ParseError("expected a value", i)
    if text[i] == '"':
        out = []
        j = i + 1
        while True:
            if j >= len(text):
                raise ParseError("unterminated string", i)
            if text[j] == '"':
                if j + 1 < len(text) and text[j + 1] == '"':
                    out.append('"')
                    j += 2
                    continue
                return "".join(out), j + 1
            out.append(text[j])
            j += 1
    m = _INT.match(text, i)
    if m:
        return int(m.group()), m.end()
    m = _NAME.match(text, i)
    if m:
        word = m.group()
        if word == "true":
            return True, m.end()
        if word == "false":
            return False, m.end()
        return word, m.end()
    raise ParseError(f"unexpected character {text[i]!r}", i)
