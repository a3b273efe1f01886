"""Variation minimization: rewriting that shrinks the scope of choices.

The rewrite rules come in two families.  The distributive rules push a
choice of two same-shaped operators down into a single operator over
choices of the operands (a choice of projections becomes one projection
of a choice, and so on for selections, products, joins, and set
operations).  The factoring rules additionally share a conjunct that
both branches of a selection or join condition have in common.  On top
of those, standard choice cleanups remove choices whose dimension is
decided (literally, by idempotent branches, or by the ambient context).

``minimize`` applies the rules innermost-first and left-to-right until
none fires; this terminates because the variation weight (the summed
subtree sizes of all choice nodes) strictly decreases on every
distributive step and the overall term size shrinks on every cleanup.
``lift`` runs the same rules in reverse for one top-down pass, trading
the compact pushed form back for nested choices that read better.
"""

from __future__ import annotations

import dataclasses
from typing import Callable, Iterator, Optional

from .featexpr import (
    FALSE,
    TRUE,
    And,
    BoolLit,
    FeatExpr,
    Feature,
    Not,
    Or,
    conj,
    sat,
    simplify,
)
from .vra import (
    Choice,
    CondAnd,
    CondChoice,
    CondNot,
    CondOr,
    Empty,
    Join,
    Product,
    Project,
    Select,
    SetOp,
    VCondition,
    VQuery,
)
from .vset import VElem, VSet, push_annotation, vset_union


# ---------------------------------------------------------------------------
# measures


def query_nodes(q: VQuery) -> int:
    """Number of query operators in the tree (conditions not counted)."""
    if isinstance(q, (Select, Project)):
        return 1 + query_nodes(q.sub)
    if isinstance(q, (Choice, Join, Product, SetOp)):
        return 1 + query_nodes(q.left) + query_nodes(q.right)
    return 1


def variation_weight(q: VQuery) -> int:
    """Sum, over every choice node, of the size of the subtree it roots.

    This is the termination measure: each distributive rewrite strictly
    shrinks it, because operators move out of the scope of a choice.
    """
    if isinstance(q, Choice):
        return query_nodes(q) + variation_weight(q.left) + variation_weight(q.right)
    if isinstance(q, (Select, Project)):
        return variation_weight(q.sub)
    if isinstance(q, (Join, Product, SetOp)):
        return variation_weight(q.left) + variation_weight(q.right)
    return 0


def _cond_size(cond: VCondition) -> int:
    if isinstance(cond, CondNot):
        return 1 + _cond_size(cond.operand)
    if isinstance(cond, (CondAnd, CondOr, CondChoice)):
        return 1 + _cond_size(cond.left) + _cond_size(cond.right)
    return 1


def _total_size(q: VQuery) -> int:
    """Query plus condition nodes; the tie-breaker for cleanup steps."""
    if isinstance(q, Select):
        return 1 + _cond_size(q.cond) + _total_size(q.sub)
    if isinstance(q, Project):
        return 1 + _total_size(q.sub)
    if isinstance(q, Join):
        return 1 + _cond_size(q.cond) + _total_size(q.left) + _total_size(q.right)
    if isinstance(q, (Choice, Product, SetOp)):
        return 1 + _total_size(q.left) + _total_size(q.right)
    return 1


# ---------------------------------------------------------------------------
# shared helpers


def _collapse(dim: FeatExpr, left, right, ctx: FeatExpr):
    """Pick a branch of a (query or condition) choice when it is decided.

    Returns the surviving branch, or None when the choice must stay.
    """
    if dim == TRUE:
        return left
    if dim == FALSE:
        return right
    if left == right:
        return left
    if not sat(conj(ctx, dim)):
        return right
    if not sat(conj(ctx, Not(dim))):
        return left
    return None


def _make_chc(dim: FeatExpr, left: VCondition, right: VCondition, ctx: FeatExpr) -> VCondition:
    """A condition choice, collapsed on the spot when it is decided."""
    picked = _collapse(dim, left, right, ctx)
    return picked if picked is not None else CondChoice(dim, left, right)


def _clean_cond(cond: VCondition, ctx: FeatExpr) -> VCondition:
    """Collapse decided condition choices anywhere inside a condition."""
    if isinstance(cond, CondNot):
        inner = _clean_cond(cond.operand, ctx)
        return cond if inner == cond.operand else CondNot(inner)
    if isinstance(cond, (CondAnd, CondOr)):
        left = _clean_cond(cond.left, ctx)
        right = _clean_cond(cond.right, ctx)
        if left == cond.left and right == cond.right:
            return cond
        return type(cond)(left, right)
    if isinstance(cond, CondChoice):
        left = _clean_cond(cond.left, conj(ctx, cond.dim))
        right = _clean_cond(cond.right, conj(ctx, Not(cond.dim)))
        picked = _collapse(cond.dim, left, right, ctx)
        if picked is not None:
            return picked
        if left == cond.left and right == cond.right:
            return cond
        return CondChoice(cond.dim, left, right)
    return cond


def _push_attrs(attrs: VSet, extra: FeatExpr) -> VSet:
    """Annotate every member of a projection list with `extra`."""
    return push_annotation(VSet(attrs.elements, conj(attrs.annotation, extra)))


def _as_projection(q: VQuery) -> Optional[tuple[VSet, VQuery]]:
    """View a branch as a projection; the empty query projects nothing."""
    if isinstance(q, Project):
        return q.attrs, q.sub
    if isinstance(q, Empty):
        return VSet(()), q
    return None


# ---------------------------------------------------------------------------
# the rules (minimizing direction); each returns a rewritten query or None


def _rule_cleanup(q: VQuery, ctx: FeatExpr) -> Optional[VQuery]:
    if isinstance(q, Choice):
        picked = _collapse(q.dim, q.left, q.right, ctx)
        if picked is not None:
            return picked
    if isinstance(q, Select):
        cond = _clean_cond(q.cond, ctx)
        if cond != q.cond:
            return Select(cond, q.sub)
    if isinstance(q, Join):
        cond = _clean_cond(q.cond, ctx)
        if cond != q.cond:
            return Join(cond, q.left, q.right)
    return None


def _rule_push_projections(q: VQuery, ctx: FeatExpr) -> Optional[VQuery]:
    if not isinstance(q, Choice):
        return None
    left = _as_projection(q.left)
    right = _as_projection(q.right)
    if left is None or right is None:
        return None
    if isinstance(q.left, Empty) and isinstance(q.right, Empty):
        return None  # nothing to merge; the cleanup owns this shape
    merged = vset_union(_push_attrs(left[0], q.dim), _push_attrs(right[0], Not(q.dim)))
    tidy = VSet(tuple(VElem(el.value, simplify(el.pc)) for el in merged.elements))
    return Project(tidy, Choice(q.dim, left[1], right[1]))


def _rule_push_selections(q: VQuery, ctx: FeatExpr) -> Optional[VQuery]:
    if not (
        isinstance(q, Choice)
        and isinstance(q.left, Select)
        and isinstance(q.right, Select)
    ):
        return None
    cond = _make_chc(q.dim, q.left.cond, q.right.cond, ctx)
    return Select(cond, Choice(q.dim, q.left.sub, q.right.sub))


def _rule_push_products(q: VQuery, ctx: FeatExpr) -> Optional[VQuery]:
    if not (
        isinstance(q, Choice)
        and isinstance(q.left, Product)
        and isinstance(q.right, Product)
    ):
        return None
    return Product(
        Choice(q.dim, q.left.left, q.right.left),
        Choice(q.dim, q.left.right, q.right.right),
    )


def _rule_push_joins(q: VQuery, ctx: FeatExpr) -> Optional[VQuery]:
    if not (
        isinstance(q, Choice)
        and isinstance(q.left, Join)
        and isinstance(q.right, Join)
    ):
        return None
    cond = _make_chc(q.dim, q.left.cond, q.right.cond, ctx)
    return Join(
        cond,
        Choice(q.dim, q.left.left, q.right.left),
        Choice(q.dim, q.left.right, q.right.right),
    )


def _rule_push_setops(q: VQuery, ctx: FeatExpr) -> Optional[VQuery]:
    if not (
        isinstance(q, Choice)
        and isinstance(q.left, SetOp)
        and isinstance(q.right, SetOp)
        and q.left.kind == q.right.kind
    ):
        return None
    return SetOp(
        q.left.kind,
        Choice(q.dim, q.left.left, q.right.left),
        Choice(q.dim, q.left.right, q.right.right),
    )


def _rule_factor_selection(q: VQuery, ctx: FeatExpr) -> Optional[VQuery]:
    if not (
        isinstance(q, Choice)
        and isinstance(q.left, Select)
        and isinstance(q.right, Select)
        and isinstance(q.left.cond, CondAnd)
        and isinstance(q.right.cond, CondAnd)
        and q.left.cond.left == q.right.cond.left
    ):
        return None
    varying = _make_chc(q.dim, q.left.cond.right, q.right.cond.right, ctx)
    return Select(
        CondAnd(q.left.cond.left, varying),
        Choice(q.dim, q.left.sub, q.right.sub),
    )


def _rule_fold_selection_of_choice(q: VQuery, ctx: FeatExpr) -> Optional[VQuery]:
    if not (
        isinstance(q, Select)
        and isinstance(q.sub, Choice)
        and isinstance(q.sub.left, Select)
        and isinstance(q.sub.right, Select)
    ):
        return None
    ch = q.sub
    varying = _make_chc(ch.dim, ch.left.cond, ch.right.cond, ctx)
    return Select(CondAnd(q.cond, varying), Choice(ch.dim, ch.left.sub, ch.right.sub))


def _rule_factor_join(q: VQuery, ctx: FeatExpr) -> Optional[VQuery]:
    if not (
        isinstance(q, Choice)
        and isinstance(q.left, Join)
        and isinstance(q.right, Join)
        and isinstance(q.left.cond, CondAnd)
        and isinstance(q.right.cond, CondAnd)
        and q.left.cond.left == q.right.cond.left
    ):
        return None
    varying = _make_chc(q.dim, q.left.cond.right, q.right.cond.right, ctx)
    joined = Join(
        q.left.cond.left,
        Choice(q.dim, q.left.left, q.right.left),
        Choice(q.dim, q.left.right, q.right.right),
    )
    return Select(varying, joined)


_RULES: dict[str, Callable[[VQuery, FeatExpr], Optional[VQuery]]] = {
    "cleanup": _rule_cleanup,
    "factor-shared-selection": _rule_factor_selection,
    "factor-shared-join": _rule_factor_join,
    "push-projections": _rule_push_projections,
    "push-selections": _rule_push_selections,
    "push-products": _rule_push_products,
    "push-joins": _rule_push_joins,
    "push-setops": _rule_push_setops,
    "fold-selection-of-choice": _rule_fold_selection_of_choice,
}

RULE_NAMES: tuple[str, ...] = tuple(_RULES)


# ---------------------------------------------------------------------------
# traversal drivers


def _children(q: VQuery, ctx: FeatExpr) -> Iterator[tuple[str, VQuery, FeatExpr]]:
    if isinstance(q, (Select, Project)):
        yield "sub", q.sub, ctx
    elif isinstance(q, Choice):
        yield "left", q.left, conj(ctx, q.dim)
        yield "right", q.right, conj(ctx, Not(q.dim))
    elif isinstance(q, (Join, Product, SetOp)):
        yield "left", q.left, ctx
        yield "right", q.right, ctx


def apply_rule(rule: str, q: VQuery, ctx: FeatExpr = TRUE) -> Optional[VQuery]:
    """Apply one rule at the outermost-leftmost position it matches.

    Returns the rewritten query, or None when the rule matches nowhere.
    """
    if rule not in _RULES:
        raise ValueError(f"unknown rule {rule!r}; expected one of {', '.join(_RULES)}")
    return _apply_outermost(_RULES[rule], q, ctx)


def _apply_outermost(fn, q: VQuery, ctx: FeatExpr) -> Optional[VQuery]:
    out = fn(q, ctx)
    if out is not None:
        return out
    for field, child, child_ctx in _children(q, ctx):
        new_child = _apply_outermost(fn, child, child_ctx)
        if new_child is not None:
            return dataclasses.replace(q, **{field: new_child})
    return None


def _rewrite_once(
    q: VQuery, ctx: FeatExpr, path: str = "q"
) -> Optional[tuple[VQuery, str, str]]:
    """One innermost-first, left-to-right rewrite step: (query, rule, path)."""
    for field, child, child_ctx in _children(q, ctx):
        hit = _rewrite_once(child, child_ctx, f"{path}.{field}")
        if hit is not None:
            new_child, rule, where = hit
            return dataclasses.replace(q, **{field: new_child}), rule, where
    for name, fn in _RULES.items():
        out = fn(q, ctx)
        if out is not None:
            return out, name, path
    return None


_DISTRIBUTIVE = frozenset(RULE_NAMES) - {"cleanup"}


def minimize(
    q: VQuery, ctx: FeatExpr = TRUE, trace: Optional[list[str]] = None
) -> VQuery:
    """Push variation inward until no rule fires.

    `ctx` is the ambient feature context (typically the feature model);
    choices decided by it collapse to the live branch.  When `trace` is
    a list, one "rule at position" line is appended per rewrite step.
    """
    measure = (variation_weight(q), _total_size(q))
    while True:
        hit = _rewrite_once(q, ctx)
        if hit is None:
            return q
        q, rule, where = hit
        stepped = (variation_weight(q), _total_size(q))
        assert stepped < measure, f"rewrite {rule} did not shrink the query"
        assert rule not in _DISTRIBUTIVE or stepped[0] < measure[0], (
            f"distributive rewrite {rule} did not reduce variation weight"
        )
        measure = stepped
        if trace is not None:
            trace.append(f"{rule} at {where}")


# ---------------------------------------------------------------------------
# lifting (the reversed, one-pass direction)


def _substitute(p: FeatExpr, name: str, value: bool) -> FeatExpr:
    if isinstance(p, Feature):
        return BoolLit(value) if p.name == name else p
    if isinstance(p, Not):
        return Not(_substitute(p.operand, name, value))
    if isinstance(p, And):
        return And(_substitute(p.left, name, value), _substitute(p.right, name, value))
    if isinstance(p, Or):
        return Or(_substitute(p.left, name, value), _substitute(p.right, name, value))
    return p


def _restrict(pc: FeatExpr, dim: FeatExpr, keep: bool, branch_ctx: FeatExpr) -> FeatExpr:
    """The simplest form of `pc` inside the branch where `dim` is decided."""
    if isinstance(dim, Feature):
        pc = simplify(_substitute(pc, dim.name, keep))
    if pc == TRUE or not sat(conj(branch_ctx, Not(pc))):
        return TRUE
    return simplify(pc)


def _branch_projection(attrs: VSet, dim: FeatExpr, keep: bool, ctx: FeatExpr, sub: VQuery) -> VQuery:
    branch_ctx = conj(ctx, dim if keep else Not(dim))
    kept = []
    for el in attrs.elements:
        if not sat(conj(el.pc, branch_ctx)):
            continue
        kept.append(VElem(el.value, _restrict(el.pc, dim, keep, branch_ctx)))
    if not kept and isinstance(sub, Empty):
        return Empty()
    return Project(VSet(tuple(kept)), sub)


def _lift_projection(q: VQuery, ctx: FeatExpr) -> Optional[VQuery]:
    if not (isinstance(q, Project) and isinstance(q.sub, Choice)):
        return None
    ch = q.sub
    attrs = push_annotation(q.attrs)
    return Choice(
        ch.dim,
        _branch_projection(attrs, ch.dim, True, ctx, ch.left),
        _branch_projection(attrs, ch.dim, False, ctx, ch.right),
    )


def _split_sub(sub: VQuery, dim: FeatExpr) -> Optional[tuple[VQuery, VQuery]]:
    """The two variants of a subquery under a dimension being lifted."""
    if isinstance(sub, Choice) and sub.dim == dim:
        return sub.left, sub.right
    return sub, sub


def _lift_selection(q: VQuery, ctx: FeatExpr) -> Optional[VQuery]:
    if not (isinstance(q, Select) and isinstance(q.cond, CondChoice)):
        return None
    chc = q.cond
    subs = _split_sub(q.sub, chc.dim)
    return Choice(chc.dim, Select(chc.left, subs[0]), Select(chc.right, subs[1]))


def _lift_shared_selection(q: VQuery, ctx: FeatExpr) -> Optional[VQuery]:
    if not (
        isinstance(q, Select)
        and isinstance(q.cond, CondAnd)
        and isinstance(q.cond.right, CondChoice)
    ):
        return None
    shared, chc = q.cond.left, q.cond.right
    subs = _split_sub(q.sub, chc.dim)
    return Choice(
        chc.dim,
        Select(CondAnd(shared, chc.left), subs[0]),
        Select(CondAnd(shared, chc.right), subs[1]),
    )


def _lift_join_selection(q: VQuery, ctx: FeatExpr) -> Optional[VQuery]:
    if not (
        isinstance(q, Select)
        and isinstance(q.cond, CondChoice)
        and isinstance(q.sub, Join)
        and isinstance(q.sub.left, Choice)
        and isinstance(q.sub.right, Choice)
        and q.sub.left.dim == q.cond.dim
        and q.sub.right.dim == q.cond.dim
    ):
        return None
    chc, join = q.cond, q.sub
    return Choice(
        chc.dim,
        Join(CondAnd(join.cond, chc.left), join.left.left, join.right.left),
        Join(CondAnd(join.cond, chc.right), join.left.right, join.right.right),
    )


def _lift_join(q: VQuery, ctx: FeatExpr) -> Optional[VQuery]:
    if not (
        isinstance(q, Join)
        and isinstance(q.left, Choice)
        and isinstance(q.right, Choice)
        and q.left.dim == q.right.dim
    ):
        return None
    dim = q.left.dim
    if isinstance(q.cond, CondChoice) and q.cond.dim == dim:
        conds = (q.cond.left, q.cond.right)
    else:
        conds = (q.cond, q.cond)
    return Choice(
        dim,
        Join(conds[0], q.left.left, q.right.left),
        Join(conds[1], q.left.right, q.right.right),
    )


def _lift_product(q: VQuery, ctx: FeatExpr) -> Optional[VQuery]:
    if not (
        isinstance(q, Product)
        and isinstance(q.left, Choice)
        and isinstance(q.right, Choice)
        and q.left.dim == q.right.dim
    ):
        return None
    return Choice(
        q.left.dim,
        Product(q.left.left, q.right.left),
        Product(q.left.right, q.right.right),
    )


def _lift_setop(q: VQuery, ctx: FeatExpr) -> Optional[VQuery]:
    if not (
        isinstance(q, SetOp)
        and isinstance(q.left, Choice)
        and isinstance(q.right, Choice)
        and q.left.dim == q.right.dim
    ):
        return None
    return Choice(
        q.left.dim,
        SetOp(q.kind, q.left.left, q.right.left),
        SetOp(q.kind, q.left.right, q.right.right),
    )


_LIFT_RULES: tuple[tuple[str, Callable[[VQuery, FeatExpr], Optional[VQuery]]], ...] = (
    ("lift-join-selection", _lift_join_selection),
    ("lift-shared-selection", _lift_shared_selection),
    ("lift-selection", _lift_selection),
    ("lift-projection", _lift_projection),
    ("lift-join", _lift_join),
    ("lift-product", _lift_product),
    ("lift-setop", _lift_setop),
)


def lift(q: VQuery, ctx: FeatExpr = TRUE, trace: Optional[list[str]] = None) -> VQuery:
    """One top-down pass of the rules reversed: variation moves outward."""
    return _lift_walk(q, ctx, trace, "q")


def _lift_walk(q: VQuery, ctx: FeatExpr, trace, path: str) -> VQuery:
    for name, fn in _LIFT_RULES:
        out = fn(q, ctx)
        if out is not None:
            if trace is not None:
                trace.append(f"{name} at {path}")
            q = out
            break
    updates = {}
    for field, child, child_ctx in _children(q, ctx):
        new_child = _lift_walk(child, child_ctx, trace, f"{path}.{field}")
        if new_child != child:
            updates[field] = new_child
    return dataclasses.replace(q, **updates) if updates else q
