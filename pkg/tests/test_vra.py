"""Query syntax: parser/printer roundtrips, worked examples, feature scans."""

import random

import pytest

from varidb.featexpr import (
    TRUE,
    And,
    Feature,
    Not,
    Or,
    ParseError,
    print_fexp,
)
from varidb.vra import (
    EMPTY,
    AttrRef,
    Choice,
    CompareAttrAttr,
    CompareAttrConst,
    CondAnd,
    CondChoice,
    CondLit,
    CondNot,
    CondOr,
    Const,
    Empty,
    Join,
    Product,
    Project,
    Relation,
    Select,
    SetOp,
    VCondition,
    VQuery,
    free_features,
    is_plain_query,
    parse_cond,
    parse_query,
    plain_key,
    print_cond,
    print_query,
)
from varidb.vset import VElem, VSet

f1, f2, V3, V4 = Feature("f1"), Feature("f2"), Feature("V3"), Feature("V4")


def proj(items, sub):
    return Project(VSet(tuple(VElem(n, pc) for n, pc in items)), sub)


# ---------------------------------------------------------------------------
# Worked parses
# ---------------------------------------------------------------------------


def test_parse_projection_with_conditional_attribute():
    q = parse_query("proj [empno # !V3, name] empbio")
    assert q == proj([("empno", Not(V3)), ("name", TRUE)], Relation("empbio"))


def test_parse_choice_of_projection_and_empty():
    q = parse_query("choice V4 { proj [empno, name] empbio } { empty }")
    assert q == Choice(
        V4, proj([("empno", TRUE), ("name", TRUE)], Relation("empbio")), EMPTY
    )
    assert q.right is EMPTY


def test_condition_choice_is_not_a_query():
    with pytest.raises(ParseError) as e:
        parse_query("sel (a1 = a2) CHC A (r1) (r2)")
    assert e.value.offset == 14


def test_parse_rel_keyword_and_bare_name_agree():
    assert parse_query("rel empbio") == parse_query("empbio") == Relation("empbio")


def test_keyword_named_relation_needs_rel_prefix():
    q = parse_query("rel union")
    assert q == Relation("union")
    assert print_query(q) == "rel union"
    assert parse_query(print_query(q)) == q


def test_parse_join_product_setops():
    q = parse_query("join (r1.a = r2.a) r1 r2")
    assert q == Join(
        CompareAttrAttr(AttrRef("a", "r1"), "=", AttrRef("a", "r2")),
        Relation("r1"),
        Relation("r2"),
    )
    assert parse_query("prod r1 r2") == Product(Relation("r1"), Relation("r2"))
    assert parse_query("union r1 r2") == SetOp("union", Relation("r1"), Relation("r2"))
    assert parse_query("diff r1 r2") == SetOp(
        "difference", Relation("r1"), Relation("r2")
    )


def test_parse_nested_query():
    text = "sel (salary > 50000) choice f1 { proj [empno, salary # f1] empacct } { empty }"
    q = parse_query(text)
    assert isinstance(q, Select)
    assert q.cond == CompareAttrConst(AttrRef("salary"), ">", Const(50000))
    assert isinstance(q.sub, Choice)
    assert print_query(q) == text


def test_parse_empty_projection_list():
    q = parse_query("proj [] r")
    assert q == Project(VSet(()), Relation("r"))
    assert print_query(q) == "proj [] r"


def test_parse_errors_carry_offsets():
    for text, offset in [
        ("proj [a r", 8),
        ("choice f1 { r }", 15),
        ("sel (a = 1 r", 11),
        ("prod r1", 7),
        ("", 0),
    ]:
        with pytest.raises(ParseError) as e:
            parse_query(text)
        assert e.value.offset == offset, text


def test_trailing_garbage_rejected():
    with pytest.raises(ParseError):
        parse_query("r1 r2")
    with pytest.raises(ParseError):
        parse_cond("a = 1 )")


# ---------------------------------------------------------------------------
# Conditions
# ---------------------------------------------------------------------------


def test_condition_precedence_and_negation():
    c = parse_cond("!a = 1 & b = 2 | c = 3")
    a1 = CompareAttrConst(AttrRef("a"), "=", Const(1))
    b2 = CompareAttrConst(AttrRef("b"), "=", Const(2))
    c3 = CompareAttrConst(AttrRef("c"), "=", Const(3))
    assert c == CondOr(CondAnd(CondNot(a1), b2), c3)


def test_condition_operators_tokenize_longest_first():
    assert parse_cond("a != 1") == CompareAttrConst(AttrRef("a"), "!=", Const(1))
    assert parse_cond("a <= 1") == CompareAttrConst(AttrRef("a"), "<=", Const(1))
    assert parse_cond("a >= b") == CompareAttrAttr(AttrRef("a"), ">=", AttrRef("b"))
    assert parse_cond("a < -4") == CompareAttrConst(AttrRef("a"), "<", Const(-4))


def test_condition_constants():
    assert parse_cond('name = "Alice"') == CompareAttrConst(
        AttrRef("name"), "=", Const("Alice")
    )
    assert parse_cond('name = "say ""hi"""') == CompareAttrConst(
        AttrRef("name"), "=", Const('say "hi"')
    )
    assert parse_cond("std = true") == CompareAttrConst(
        AttrRef("std"), "=", Const(True)
    )
    assert parse_cond("std != false") == CompareAttrConst(
        AttrRef("std"), "!=", Const(False)
    )
    # bare words on the right are attribute references, never strings
    assert parse_cond("name = alice") == CompareAttrAttr(
        AttrRef("name"), "=", AttrRef("alice")
    )


def test_condition_choice_roundtrip():
    text = "CHC edu (std = true) (true)"
    c = parse_cond(text)
    assert c == CondChoice(
        Feature("edu"),
        CompareAttrConst(AttrRef("std"), "=", Const(True)),
        CondLit(True),
    )
    assert print_cond(c) == text


def test_condition_printing_minimal_parens():
    cases = {
        "a = 1 & b = 2 | c = 3": "a = 1 & b = 2 | c = 3",
        "(a = 1 | b = 2) & c = 3": "(a = 1 | b = 2) & c = 3",
        "!(a = 1 & b = 2)": "!(a = 1 & b = 2)",
        "!a = 1": "!a = 1",
        "a = 1 | (b = 2 | c = 3)": "a = 1 | (b = 2 | c = 3)",
    }
    for src, want in cases.items():
        assert print_cond(parse_cond(src)) == want


# ---------------------------------------------------------------------------
# free_features / plainness
# ---------------------------------------------------------------------------


def test_free_features_of_q5():
    q5 = parse_query("proj [a1, a2 # f1 & f2, a3 # f2] r")
    assert free_features(q5) == {"f1", "f2"}


def test_free_features_plain_query_empty():
    q = parse_query("sel (a = 1) proj [a, b] join (x = y) r1 r2")
    assert free_features(q) == frozenset()
    assert is_plain_query(q)


def test_free_features_choice():
    assert free_features(Choice(Feature("A"), Relation("r"), EMPTY)) == {"A"}


def test_free_features_condition_choice():
    q = parse_query("sel (CHC f1 (a = 1) (CHC f2 (a = 2) (a = 3))) r")
    assert free_features(q) == {"f1", "f2"}
    assert not is_plain_query(q)


def test_free_features_accepts_fexp():
    assert free_features(And(f1, Or(f2, V3))) == {"f1", "f2", "V3"}


# ---------------------------------------------------------------------------
# plain_key
# ---------------------------------------------------------------------------


def test_plain_key_ignores_projection_order():
    qa = parse_query("proj [a, b] r")
    qb = parse_query("proj [b, a] r")
    assert plain_key(qa) == plain_key(qb)
    assert plain_key(qa) != plain_key(parse_query("proj [a, c] r"))


def test_plain_key_distinguishes_structures():
    keys = {
        plain_key(parse_query(t))
        for t in [
            "r1",
            "r2",
            "empty",
            "sel (a = 1) r1",
            "sel (a = 2) r1",
            "proj [a] r1",
            "union r1 r2",
            "diff r1 r2",
            "prod r1 r2",
            "join (a = b) r1 r2",
        ]
    }
    assert len(keys) == 10


def test_plain_key_rejects_choices():
    with pytest.raises(ValueError):
        plain_key(Choice(f1, Relation("r"), EMPTY))


# ---------------------------------------------------------------------------
# Random roundtrips
# ---------------------------------------------------------------------------

_FEXPS = [
    TRUE,
    f1,
    f2,
    Not(f1),
    And(f1, f2),
    Or(f1, Not(f2)),
    Or(And(f1, f2), Feature("f3")),
]
_ATTRS = ["a1", "a2", "empno", "name", "r1.a1", "x"]
_RELS = ["r1", "r2", "empbio", "t"]
_CONSTS = [Const(0), Const(-7), Const(42), Const(True), Const(False),
           Const("alice"), Const('qu"ote'), Const("")]


def _random_cond(rng: random.Random, depth: int) -> VCondition:
    if depth <= 0:
        kind = rng.randrange(3)
        if kind == 0:
            return CondLit(rng.random() < 0.5)
        attr = AttrRef(*reversed(rng.choice(_ATTRS).split(".")))
        op = rng.choice(["=", "!=", "<", "<=", ">", ">="])
        if kind == 1:
            return CompareAttrConst(attr, op, rng.choice(_CONSTS))
        return CompareAttrAttr(attr, op, AttrRef(rng.choice(["b1", "b2"])))
    kind = rng.randrange(4)
    if kind == 0:
        return CondNot(_random_cond(rng, depth - 1))
    if kind == 1:
        return CondAnd(_random_cond(rng, depth - 1), _random_cond(rng, depth - 1))
    if kind == 2:
        return CondOr(_random_cond(rng, depth - 1), _random_cond(rng, depth - 1))
    return CondChoice(
        rng.choice(_FEXPS[1:]),
        _random_cond(rng, depth - 1),
        _random_cond(rng, depth - 1),
    )


def _random_query(rng: random.Random, depth: int) -> VQuery:
    if depth <= 0:
        return EMPTY if rng.random() < 0.2 else Relation(rng.choice(_RELS))
    kind = rng.randrange(7)
    if kind == 0:
        return Select(_random_cond(rng, rng.randrange(3)), _random_query(rng, depth - 1))
    if kind == 1:
        names = rng.sample(_ATTRS, rng.randrange(1, 4))
        items = tuple(VElem(n, rng.choice(_FEXPS)) for n in names)
        return Project(VSet(items), _random_query(rng, depth - 1))
    if kind == 2:
        return Choice(
            rng.choice(_FEXPS[1:]),
            _random_query(rng, depth - 1),
            _random_query(rng, depth - 1),
        )
    if kind == 3:
        return Join(
            _random_cond(rng, rng.randrange(2)),
            _random_query(rng, depth - 1),
            _random_query(rng, depth - 1),
        )
    if kind == 4:
        return Product(_random_query(rng, depth - 1), _random_query(rng, depth - 1))
    if kind == 5:
        return SetOp(
            rng.choice(["union", "difference"]),
            _random_query(rng, depth - 1),
            _random_query(rng, depth - 1),
        )
    return _random_query(rng, 0)


def test_random_query_roundtrips():
    rng = random.Random(20260818)
    for _ in range(400):
        q = _random_query(rng, rng.randrange(1, 7))
        text = print_query(q)
        assert parse_query(text) == q, text


def test_random_condition_roundtrips():
    rng = random.Random(7)
    for _ in range(400):
        c = _random_cond(rng, rng.randrange(0, 5))
        text = print_cond(c)
        assert parse_cond(text) == c, text


def test_print_then_parse_handwritten_battery():
    battery = [
        "empty",
        "r",
        "sel (true) r",
        "sel (false) empty",
        "proj [a # f1 | f2 & f3, b] sel (a != 0) r",
        "choice f1 & f2 { r1 } { choice f1 { r2 } { empty } }",
        "join (a = b & c < 5) proj [a, c] r1 r2",
        "diff union r1 r2 prod r1 r2",
        'sel (name = "d""q" | CHC f1 (x > 0) (x <= 0)) r',
    ]
    for text in battery:
        q = parse_query(text)
        assert print_query(q) == text
        assert parse_query(print_query(q)) == q


def test_queries_are_hashable_values():
    a = parse_query("sel (a = 1) proj [x # f1] r")
    b = parse_query("sel (a = 1) proj [x # f1] r")
    assert a == b and hash(a) == hash(b)
    assert len({a, b}) == 1


def test_projection_items_keep_source_order():
    q = parse_query("proj [b, a, c # f1] r")
    assert [el.value for el in q.attrs] == ["b", "a", "c"]
    assert print_fexp(q.attrs.pc_of("c")) == "f1"
