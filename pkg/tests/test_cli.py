"""The command-line surface: pipelines, exit codes, output formats."""

import io
from pathlib import Path

from varidb.cli import main
from varidb.featexpr import parse_fexp
from varidb.vra import parse_query
from sql_grammar import check_sql

_FIXTURES = Path(__file__).resolve().parent / "fixtures"
TOY = str(_FIXTURES / "toy")
EMPLOYEE = str(_FIXTURES / "employee")
EMPBIO = str(_FIXTURES / "empbio")

Q5_TEXT = "proj [a1, a2 # f1 & f2, a3 # f2] r"
Q1HAT_TEXT = (
    "choice V4 { proj [empno, name] empbio } "
    "{ choice V5 { proj [empno, firstname, lastname] empbio } { empty } }"
)


def run_cli(argv, stdin_text, capsys, monkeypatch):
    monkeypatch.setattr("sys.stdin", io.StringIO(stdin_text))
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


# ---------------------------------------------------------------------------
# check
# ---------------------------------------------------------------------------


def test_check_reports_the_type(capsys, monkeypatch):
    code, out, err = run_cli(["check", TOY], Q5_TEXT, capsys, monkeypatch)
    assert code == 0
    assert out == "OK: { a1 # f1, a2 # f1 & f2, a3 # f2 } # f1 | f2\n"
    assert err == ""


def test_check_reports_type_errors(capsys, monkeypatch):
    code, out, err = run_cli(["check", TOY], "proj [zz] r", capsys, monkeypatch)
    assert code == 2
    assert out.startswith("ERROR NotSubsumed at query:")


def test_syntax_errors_exit_3(capsys, monkeypatch):
    code, out, err = run_cli(["check", TOY], "proj [[", capsys, monkeypatch)
    assert code == 3
    assert "syntax error" in err


def test_run_rejects_ill_typed_queries(capsys, monkeypatch):
    code, out, err = run_cli(
        ["run", TOY], "sel (a1 = b1) r", capsys, monkeypatch
    )
    assert code == 2
    assert "type error" in err


def test_missing_vdb_exits_1(capsys, monkeypatch):
    code, out, err = run_cli(["run", "/nonexistent"], "rel r", capsys, monkeypatch)
    assert code == 1
    assert "error" in err


def test_unreadable_query_file_exits_1(capsys, monkeypatch):
    code, out, err = run_cli(
        ["check", TOY, "/nonexistent.vra"], "", capsys, monkeypatch
    )
    assert code == 1
    assert "cannot read query file" in err


# ---------------------------------------------------------------------------
# configure / group
# ---------------------------------------------------------------------------


def test_configure_prints_the_pushed_variant(capsys, monkeypatch):
    code, out, err = run_cli(
        ["configure", TOY, "--config", "f2"], Q5_TEXT, capsys, monkeypatch
    )
    assert code == 0
    assert out == "proj [a3] r\n"


def test_configure_rejects_unknown_features(capsys, monkeypatch):
    code, out, err = run_cli(
        ["configure", TOY, "--config", "zap"], "rel r", capsys, monkeypatch
    )
    assert code == 3


def test_group_lines_reparse(capsys, monkeypatch):
    code, out, err = run_cli(
        ["group", TOY, "--no-minimize"], Q5_TEXT, capsys, monkeypatch
    )
    assert code == 0
    assert out == (
        "proj [] r # !f1 & !f2\n"
        "proj [a1] r # f1 & !f2\n"
        "proj [a3] r # !f1 & f2\n"
        "proj [a1, a2, a3] r # f1 & f2\n"
    )
    for line in out.splitlines():
        member, _, fexp = line.rpartition(" # ")
        parse_query(member)
        parse_fexp(fexp)


def test_query_file_matches_stdin(tmp_path, capsys, monkeypatch):
    path = tmp_path / "q.vra"
    path.write_text(Q5_TEXT)
    code_file, out_file, _ = run_cli(
        ["group", TOY, str(path)], "", capsys, monkeypatch
    )
    code_stdin, out_stdin, _ = run_cli(["group", TOY], Q5_TEXT, capsys, monkeypatch)
    assert code_file == code_stdin == 0
    assert out_file == out_stdin


# ---------------------------------------------------------------------------
# minimize
# ---------------------------------------------------------------------------


def test_minimize_prints_query_and_trace(capsys, monkeypatch):
    code, out, err = run_cli(
        ["minimize", EMPBIO, "--trace"], Q1HAT_TEXT, capsys, monkeypatch
    )
    assert code == 0
    assert out == (
        "proj [empno # V4 | V5, name # V4, firstname # !V4 & V5, "
        "lastname # !V4 & V5] choice V4 { empbio } "
        "{ choice V5 { empbio } { empty } }\n"
        "-- push-projections at q.right\n"
        "-- push-projections at q\n"
    )
    parse_query(out.splitlines()[0])


def test_minimize_lift_output_reparses(capsys, monkeypatch):
    code, out, err = run_cli(
        ["minimize", EMPBIO, "--lift"], Q1HAT_TEXT, capsys, monkeypatch
    )
    assert code == 0
    parse_query(out.strip())


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------


def test_run_strategies_print_identical_tables(capsys, monkeypatch):
    results = {}
    for strategy in ("configure", "group"):
        code, out, err = run_cli(
            ["run", TOY, "--strategy", strategy], Q5_TEXT, capsys, monkeypatch
        )
        assert code == 0
        results[strategy] = out
    assert results["configure"] == results["group"]
    assert results["configure"].startswith("a1,a2,a3,presCond\n")


def test_run_minimized_and_unminimized_agree(capsys, monkeypatch):
    outputs = []
    for extra in ([], ["--no-minimize"]):
        for strategy in ("configure", "group"):
            code, out, err = run_cli(
                ["run", EMPBIO, "--strategy", strategy] + extra,
                Q1HAT_TEXT,
                capsys,
                monkeypatch,
            )
            assert code == 0
            outputs.append(out)
    assert len(set(outputs)) == 1
    assert outputs[0].startswith("empno,name,firstname,lastname,presCond\n")


# ---------------------------------------------------------------------------
# sql
# ---------------------------------------------------------------------------


def _statement_blocks(out):
    blocks = []
    provenances = []
    current = None
    for line in out.splitlines():
        if line.startswith("-- provenance: "):
            provenances.append(line.removeprefix("-- provenance: "))
            current = []
        elif line == ";":
            blocks.append("\n".join(current))
            current = None
        else:
            current.append(line)
    return blocks, provenances


def test_sql_union_mode(capsys, monkeypatch):
    code, out, err = run_cli(["sql", TOY], Q5_TEXT, capsys, monkeypatch)
    assert code == 0
    blocks, provenances = _statement_blocks(out)
    assert len(blocks) == 1
    assert provenances == ["true"]
    assert check_sql(blocks[0]) == [4, 4, 4, 4]


def test_sql_per_group_mode(capsys, monkeypatch):
    code, out, err = run_cli(
        ["sql", TOY, "--mode", "per-group"], Q5_TEXT, capsys, monkeypatch
    )
    assert code == 0
    blocks, provenances = _statement_blocks(out)
    assert provenances == ["!f1 & !f2", "f1 & !f2", "!f1 & f2", "f1 & f2"]
    for block in blocks:
        check_sql(block)


def test_sql_per_variant_files(tmp_path, capsys, monkeypatch):
    out_dir = tmp_path / "sql"
    code, out, err = run_cli(
        ["sql", TOY, "--mode", "per-variant", "--out", str(out_dir)],
        Q5_TEXT,
        capsys,
        monkeypatch,
    )
    assert code == 0
    assert out == ""
    files = sorted(out_dir.glob("*.sql"))
    assert len(files) == 4
    texts = {f.read_text() for f in files}
    assert texts == {
        "SELECT DISTINCT 1 AS dee FROM r\n",
        "SELECT DISTINCT a1 FROM r\n",
        "SELECT DISTINCT a3 FROM r\n",
        "SELECT DISTINCT a1, a2, a3 FROM r\n",
    }
    for f in files:
        check_sql(f.read_text().rstrip("\n"))


def test_sql_union_with_relation_member(capsys, monkeypatch):
    code, out, err = run_cli(["sql", TOY], "rel s", capsys, monkeypatch)
    assert code == 0
    blocks, provenances = _statement_blocks(out)
    assert len(blocks) == 1
    for count in check_sql(blocks[0]):
        assert count == 3  # b1, b2, presCond


# ---------------------------------------------------------------------------
# variants / configure-db
# ---------------------------------------------------------------------------


def test_variants_counts_the_employee_schema(capsys, monkeypatch):
    code, out, err = run_cli(["variants", EMPLOYEE], "", capsys, monkeypatch)
    assert code == 0
    assert out == "21 satisfying configurations, 10 distinct schemas\n"


def test_configure_db_prints_the_plain_variant(capsys, monkeypatch):
    code, out, err = run_cli(
        ["configure-db", TOY, "--config", "f1"], "", capsys, monkeypatch
    )
    assert code == 0
    assert out == (
        "relation r (a1 int, a2 int, a3 int)\n"
        "relation s (b1 int)\n"
        "\n"
        "table r\n"
        "a1,a2,a3\n"
        "1,10,100\n"
        "2,20,200\n"
        "\n"
        "table s\n"
        "b1\n"
        "10\n"
        "30\n"
        "99\n"
    )
