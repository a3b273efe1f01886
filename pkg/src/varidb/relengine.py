"""Reference relational evaluator and the two execution strategies.

``eval_plain`` is a classical set-semantics evaluator over plain tables:
selection filters, projection deduplicates, product concatenates
disjointly-named columns, join is product plus filter, and the set
operations require identical column lists.

On top of it sit the two ways of answering a variational query:

* ``run_configure`` enumerates every configuration that satisfies the
  feature model, configures both the query and the database down to
  plain relational form, evaluates, and stamps each result table with
  the configuration's minterm.
* ``run_group`` evaluates each distinct plain query of the group
  translation once, against the database restricted to the group's
  feature expression, tracking per-row presence conditions through the
  operators.

Both feed their annotated parts to the v-table builder, so they produce
the same canonically sorted, canonically simplified v-table.
"""

from __future__ import annotations

import operator
from dataclasses import dataclass

from .catalog import AttrType, VAttr, VRelSchema, VSchema, attr_presence
from .featexpr import (
    FeatExpr,
    Not,
    TRUE,
    all_configs,
    conj,
    disj,
    eval_fexp,
    minterm,
    print_fexp,
    sat,
)
from .storage import PlainTable, VDBInstance, VTable, build_vtable, configure_db
from .translate import configure_query, group_query
from .typecheck import PlainTypeError, type_of
from .vra import (
    AttrRef,
    CompareAttrAttr,
    CompareAttrConst,
    CondAnd,
    CondLit,
    CondNot,
    CondOr,
    Empty,
    Join,
    Product,
    Project,
    Relation,
    Select,
    SetOp,
    VCondition,
    VQuery,
)

_OPS = {
    "=": operator.eq,
    "!=": operator.ne,
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
}


# ---------------------------------------------------------------------------
# plain evaluation
# ---------------------------------------------------------------------------


def _bare(name: str) -> str:
    return name.split(".", 1)[1] if "." in name else name


def _index(columns: tuple[tuple[str, AttrType], ...]) -> dict[str, int]:
    return {name: i for i, (name, _) in enumerate(columns)}


def _cell(row: tuple, idx: dict[str, int], ref: AttrRef):
    """A referenced cell, or None when the column is absent here.

    Comparisons over absent columns evaluate to false, exactly like
    comparisons over Null cells, so configurations that lack an
    attribute can still run queries whose conditions mention it.
    """
    pos = idx.get(ref.name)
    if pos is None:
        return None
    return row[pos]


def _eval_cond(cond: VCondition, row: tuple, idx: dict[str, int]) -> bool:
    """Two-valued condition evaluation; comparisons against Null are false."""
    if isinstance(cond, CondLit):
        return cond.value
    if isinstance(cond, CompareAttrConst):
        v = _cell(row, idx, cond.attr)
        return v is not None and _OPS[cond.op](v, cond.const.value)
    if isinstance(cond, CompareAttrAttr):
        v1 = _cell(row, idx, cond.attr1)
        v2 = _cell(row, idx, cond.attr2)
        return v1 is not None and v2 is not None and _OPS[cond.op](v1, v2)
    if isinstance(cond, CondNot):
        return not _eval_cond(cond.operand, row, idx)
    if isinstance(cond, CondAnd):
        return _eval_cond(cond.left, row, idx) and _eval_cond(cond.right, row, idx)
    if isinstance(cond, CondOr):
        return _eval_cond(cond.left, row, idx) or _eval_cond(cond.right, row, idx)
    raise PlainTypeError("variational condition reached plain evaluation")


def _project_columns(
    attrs, columns: tuple[tuple[str, AttrType], ...]
) -> tuple[list[int], tuple[tuple[str, AttrType], ...]]:
    idx = _index(columns)
    positions, out = [], []
    for el in attrs:
        name = _bare(str(el.value))
        if name not in idx:
            raise PlainTypeError(f"projected attribute {name} is not in the input")
        positions.append(idx[name])
        out.append((name, columns[idx[name]][1]))
    return positions, tuple(out)


def _joined_columns(
    left: tuple[tuple[str, AttrType], ...], right: tuple[tuple[str, AttrType], ...]
) -> tuple[tuple[str, AttrType], ...]:
    shared = {n for n, _ in left} & {n for n, _ in right}
    if shared:
        raise PlainTypeError(
            f"operands share attribute names: {', '.join(sorted(shared))}"
        )
    return left + right


def _same_columns(a, b, what: str) -> None:
    if a != b:
        raise PlainTypeError(f"{what} requires identical columns on both sides")


def eval_plain(q: VQuery, db: dict[str, PlainTable]) -> PlainTable:
    """Evaluate a plain query over a plain database, set semantics."""
    if isinstance(q, Relation):
        table = db.get(q.name)
        if table is None:
            return PlainTable((), frozenset())
        return table
    if isinstance(q, Select):
        t = eval_plain(q.sub, db)
        idx = _index(t.columns)
        return PlainTable(
            t.columns, frozenset(r for r in t.rows if _eval_cond(q.cond, r, idx))
        )
    if isinstance(q, Project):
        t = eval_plain(q.sub, db)
        positions, columns = _project_columns(q.attrs, t.columns)
        return PlainTable(
            columns, frozenset(tuple(r[p] for p in positions) for r in t.rows)
        )
    if isinstance(q, (Product, Join)):
        a = eval_plain(q.left, db)
        b = eval_plain(q.right, db)
        columns = _joined_columns(a.columns, b.columns)
        rows = frozenset(ra + rb for ra in a.rows for rb in b.rows)
        if isinstance(q, Join):
            idx = _index(columns)
            rows = frozenset(r for r in rows if _eval_cond(q.cond, r, idx))
        return PlainTable(columns, rows)
    if isinstance(q, SetOp):
        a = eval_plain(q.left, db)
        b = eval_plain(q.right, db)
        _same_columns(a.columns, b.columns, q.kind)
        rows = a.rows | b.rows if q.kind == "union" else a.rows - b.rows
        return PlainTable(a.columns if a.columns else b.columns, rows)
    if isinstance(q, Empty):
        return PlainTable((), frozenset())
    raise PlainTypeError("variational query reached plain evaluation")


# ---------------------------------------------------------------------------
# tracked evaluation (per-row presence conditions)
# ---------------------------------------------------------------------------


@dataclass
class TrackedTable:
    """A plain-shaped table whose rows carry feature expressions."""

    columns: tuple[tuple[str, AttrType], ...]
    rows: dict[tuple, FeatExpr]


def _restrict_table(table: VTable, schema: VSchema, e: FeatExpr) -> TrackedTable:
    """The slice of a stored v-table visible inside the region `e`.

    Columns survive when their full hierarchical presence condition can
    hold together with `e`.  Rows carry their own condition conjoined
    with the relation's, so a row contributes nothing in regions where
    the whole relation is absent.
    """
    rel = table.schema
    keep, columns = [], []
    for i, a in enumerate(rel.attrs):
        if sat(conj(attr_presence(schema, rel.name, a.name), e)):
            keep.append(i)
            columns.append((a.name, a.atype))
    rows: dict[tuple, FeatExpr] = {}
    for u in table.rows:
        pc = conj(u.pc, rel.pc)
        if not sat(conj(pc, e)):
            continue
        values = tuple(u.values[i] for i in keep)
        rows[values] = disj(rows[values], pc) if values in rows else pc
    return TrackedTable(tuple(columns), rows)


def eval_tracked(q: VQuery, db: dict[str, TrackedTable]) -> TrackedTable:
    """Evaluate a plain query while carrying row conditions along."""
    if isinstance(q, Relation):
        table = db.get(q.name)
        if table is None:
            return TrackedTable((), {})
        return table
    if isinstance(q, Select):
        t = eval_tracked(q.sub, db)
        idx = _index(t.columns)
        return TrackedTable(
            t.columns,
            {r: pc for r, pc in t.rows.items() if _eval_cond(q.cond, r, idx)},
        )
    if isinstance(q, Project):
        t = eval_tracked(q.sub, db)
        positions, columns = _project_columns(q.attrs, t.columns)
        rows: dict[tuple, FeatExpr] = {}
        for r, pc in t.rows.items():
            values = tuple(r[p] for p in positions)
            rows[values] = disj(rows[values], pc) if values in rows else pc
        return TrackedTable(columns, rows)
    if isinstance(q, (Product, Join)):
        a = eval_tracked(q.left, db)
        b = eval_tracked(q.right, db)
        columns = _joined_columns(a.columns, b.columns)
        idx = _index(columns)
        rows = {}
        for ra, pa in a.rows.items():
            for rb, pb in b.rows.items():
                pc = conj(pa, pb)
                if not sat(pc):
                    continue
                values = ra + rb
                if isinstance(q, Join) and not _eval_cond(q.cond, values, idx):
                    continue
                rows[values] = disj(rows[values], pc) if values in rows else pc
        return TrackedTable(columns, rows)
    if isinstance(q, SetOp):
        a = eval_tracked(q.left, db)
        b = eval_tracked(q.right, db)
        _same_columns(a.columns, b.columns, q.kind)
        if q.kind == "union":
            rows = dict(a.rows)
            for r, pc in b.rows.items():
                rows[r] = disj(rows[r], pc) if r in rows else pc
        else:
            rows = {}
            for r, pc in a.rows.items():
                if r in b.rows:
                    pc = conj(pc, Not(b.rows[r]))
                if sat(pc):
                    rows[r] = pc
        return TrackedTable(a.columns if a.columns else b.columns, rows)
    if isinstance(q, Empty):
        return TrackedTable((), {})
    raise PlainTypeError("variational query reached plain evaluation")


# ---------------------------------------------------------------------------
# the two strategies
# ---------------------------------------------------------------------------


def result_schema(q: VQuery, schema: VSchema) -> VRelSchema:
    """The relation schema a query's results are assembled against."""
    t = type_of(q, schema, check_conditions=False)
    attrs = tuple(
        VAttr(str(el.value), t.info[str(el.value)].atype, el.pc) for el in t.attrs
    )
    return VRelSchema("result", attrs, t.annotation)


def model_configs(schema: VSchema) -> list[frozenset[str]]:
    """Every total configuration that satisfies the feature model."""
    return [c for c in all_configs(schema.features) if eval_fexp(schema.model, c)]


def run_configure(q: VQuery, db: VDBInstance, collect: list | None = None) -> VTable:
    """Answer a v-query by evaluating one plain variant per configuration.

    When `collect` is a list, it receives one (label, plain query,
    PlainTable) triple per configuration, in enumeration order.
    """
    schema = result_schema(q, db.schema)
    features = db.schema.features
    parts = []
    for config in all_configs(features):
        if not eval_fexp(db.schema.model, config):
            continue
        plain_query = configure_query(q, config)
        table = eval_plain(plain_query, configure_db(db, config))
        stamp = minterm(config, features)
        parts.append((table, stamp))
        if collect is not None:
            collect.append((print_fexp(stamp), plain_query, table))
    return build_vtable(parts, schema)


def _column_presences(q: VQuery, schema: VSchema) -> tuple[dict[str, FeatExpr], set[FeatExpr]]:
    """Presence conditions a plain query's meaning can depend on.

    Returns the query's visible output columns mapped to their presence
    conditions, plus the presence conditions of every column some
    condition inside the query compares.  Within a region where all of
    these (and the visible ones) are decided, the query touches the
    same columns at every configuration.
    """
    if isinstance(q, Relation):
        rel = schema.relations.get(q.name)
        if rel is None:
            return {}, set()
        visible = {a.name: attr_presence(schema, q.name, a.name) for a in rel.attrs}
        return visible, set()
    if isinstance(q, Select):
        visible, compared = _column_presences(q.sub, schema)
        for name in _condition_names(q.cond):
            if name in visible:
                compared.add(visible[name])
        return visible, compared
    if isinstance(q, Project):
        visible, compared = _column_presences(q.sub, schema)
        projected = {}
        for el in q.attrs:
            name = _bare(str(el.value))
            if name in visible:
                projected[name] = visible[name]
        return projected, compared
    if isinstance(q, (Product, Join)):
        lvis, lcmp = _column_presences(q.left, schema)
        rvis, rcmp = _column_presences(q.right, schema)
        visible = {**lvis, **rvis}
        compared = lcmp | rcmp
        if isinstance(q, Join):
            for name in _condition_names(q.cond):
                if name in visible:
                    compared.add(visible[name])
        return visible, compared
    if isinstance(q, SetOp):
        lvis, lcmp = _column_presences(q.left, schema)
        rvis, rcmp = _column_presences(q.right, schema)
        # The two sides agree on columns up to equivalence; splitting on
        # both spellings is harmless and keeps merging exact.
        return lvis, lcmp | rcmp | set(rvis.values())
    return {}, set()


def _condition_names(cond: VCondition) -> set[str]:
    if isinstance(cond, CompareAttrConst):
        return {cond.attr.name}
    if isinstance(cond, CompareAttrAttr):
        return {cond.attr1.name, cond.attr2.name}
    if isinstance(cond, CondNot):
        return _condition_names(cond.operand)
    if isinstance(cond, (CondAnd, CondOr)):
        return _condition_names(cond.left) | _condition_names(cond.right)
    return set()


def _presence_atoms(q: VQuery, schema: VSchema, region: FeatExpr) -> list[FeatExpr]:
    """Split a region until every relevant column presence is decided.

    A group's feature expression fixes which plain query runs, but not
    which columns the stored tables expose — an attribute can be
    present in one part of the region and absent in another, which
    would corrupt value-based merging.  Each returned sub-region
    decides every presence condition the query can observe.
    """
    if not sat(region):
        return []
    visible, compared = _column_presences(q, schema)
    live = set(visible.values()) | compared
    regions = [region]
    for h in sorted(live, key=print_fexp):
        if h == TRUE:
            continue
        split = []
        for reg in regions:
            inside = conj(reg, h)
            outside = conj(reg, Not(h))
            if sat(inside):
                split.append(inside)
            if sat(outside):
                split.append(outside)
        regions = split
    return regions


def run_group(q: VQuery, db: VDBInstance, collect: list | None = None) -> VTable:
    """Answer a v-query by evaluating each distinct plain query once.

    Each group is evaluated against the database restricted to the
    group's region (refined so column presence is constant throughout);
    row conditions are tracked through the operators and conjoined with
    the region on the way out.  When `collect` is a list, it receives
    one (label, plain query, TrackedTable) triple per evaluation.
    """
    schema = result_schema(q, db.schema)
    model = db.schema.model
    parts = []
    for plain_query, e in group_query(q):
        if not sat(conj(e, model)):
            continue
        for region in _presence_atoms(plain_query, db.schema, conj(e, model)):
            restricted = {
                name: _restrict_table(table, db.schema, region)
                for name, table in db.tables.items()
            }
            out = eval_tracked(plain_query, restricted)
            if collect is not None:
                collect.append((print_fexp(region), plain_query, out))
            for values, tracked in out.rows.items():
                pc = conj(region, tracked)
                if not sat(pc):
                    continue
                parts.append((PlainTable(out.columns, frozenset({values})), pc))
    return build_vtable(parts, schema)
