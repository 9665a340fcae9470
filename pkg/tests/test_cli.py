import json

import jsonschema

from conftest import SYSTEMS_DIR
from pastlift.cli import main
from pastlift.report import load_schema

SCHEMA = load_schema()


def path(name: str) -> str:
    return str(SYSTEMS_DIR / f"{name}.ptrs")


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    assert code == 0, err
    doc = json.loads(out)
    jsonschema.validate(doc, SCHEMA)
    return doc


def test_check_text(capsys):
    code, out, _ = run(capsys, "check", path("s1"))
    assert code == 0
    assert "left-linear: yes" in out
    assert "right-linear: no" in out


def test_check_json_schema(capsys):
    doc = run_json(capsys, "check", path("r1"), "--json")
    assert doc["kind"] == "check"
    assert doc["trivial"] is True
    assert doc["properties"]["non_overlapping"] is False
    assert doc["properties"]["wcr"] == "No"


def test_analyze_text_mentions_thm14(capsys):
    code, out, _ = run(capsys, "analyze", path("s2"), "--scope", "all")
    assert code == 0
    assert "Thm 14 Applies" in out
    assert "iAST w.r.t. ∥ ⇒ fAST" in out


def test_analyze_json_schema(capsys):
    doc = run_json(capsys, "analyze", path("s7"), "--scope", "basic", "--json")
    sections = {s["engine"]: s for s in doc["sections"]}
    prob = sections["prob"]
    verdicts = {v["id"]: v for v in prob["verdicts"]}
    assert verdicts["Thm 20"]["applicability"] == "Applies"
    assert prob["spare"] == "Spare"


def test_analyze_trivial_system_gets_both_engines(capsys):
    doc = run_json(capsys, "analyze", path("r_d"), "--json")
    engines = [s["engine"] for s in doc["sections"]]
    assert engines == ["nonprob", "prob"]


def test_analyze_with_assertion(capsys):
    code, out, _ = run(capsys, "analyze", path("srw"), "--assert", "iAST")
    assert code == 0
    assert "asserted iAST yields fAST" in out


def test_simulate_exact_prints_five_eighths(capsys):
    code, out, _ = run(
        capsys,
        "simulate", path("srw"), "--term", "g", "--strategy", "full",
        "--policy", "first", "--depth", "3", "--mode", "exact",
    )
    assert code == 0
    assert "nf_mass 5/8" in out


def test_simulate_exact_json(capsys):
    doc = run_json(
        capsys,
        "simulate", path("srw"), "--term", "g", "--depth", "3", "--json",
    )
    assert doc["lower_bound"] == "5/8"
    assert doc["nf_mass"] == ["0", "1/2", "1/2", "5/8"]
    assert {e["term"] for e in doc["final_state"]} >= {"bot"}


def test_simulate_mc_json(capsys):
    doc = run_json(
        capsys,
        "simulate", path("s7"), "--term", "g", "--strategy", "i",
        "--mode", "mc", "--samples", "50", "--step-cap", "500",
        "--seed", "1", "--json",
    )
    assert doc["kind"] == "simulate-mc"
    assert doc["estimate"] == 1.0


def test_simulate_mc_scripted_policy(tmp_path, capsys):
    script = tmp_path / "loop.script"
    script.write_text("f(a,a) => rule 0 at e\n")
    doc = run_json(
        capsys,
        "simulate", path("s2"), "--term", "f(a,a)", "--strategy", "full",
        "--policy", f"script:{script}", "--mode", "mc",
        "--samples", "20", "--step-cap", "30", "--seed", "2", "--json",
    )
    assert doc["estimate"] == 0.0
    assert doc["censored_fraction"] == 1.0


def test_simulate_rightmost_policy_same_mass(capsys):
    # the random walk is symmetric, so the rightmost policy reaches the same
    # normal-form mass at depth 3 even though the states differ
    doc = run_json(
        capsys,
        "simulate", path("srw"), "--term", "g", "--policy", "rightmost",
        "--depth", "3", "--json",
    )
    assert doc["lower_bound"] == "5/8"
    assert any(e["term"] == "c(g,c(g,g))" for e in doc["final_state"]) or any(
        "c(g," in e["term"] for e in doc["final_state"]
    )


def test_simulate_random_policy_is_seed_deterministic(capsys):
    docs = []
    for _ in range(2):
        docs.append(
            run_json(
                capsys,
                "simulate", path("s4"), "--term", "f(a,b)", "--strategy", "i",
                "--policy", "random:9", "--depth", "8", "--json",
            )
        )
    assert docs[0] == docs[1]


def test_simulate_simultaneous_strategy(capsys):
    doc = run_json(
        capsys,
        "simulate", path("s2"), "--term", "f(a,a)", "--strategy", "ipar",
        "--depth", "6", "--json",
    )
    assert doc["strategy"] == "ipar"
    assert set(doc["nf_mass"]) == {"0"}


def test_adversary_json(capsys):
    doc = run_json(
        capsys,
        "adversary", path("s4"), "--term", "f(a,b)", "--strategy", "i",
        "--depth", "40", "--json",
    )
    assert doc["lower_bound"] == "0"
    doc = run_json(
        capsys,
        "adversary", path("s4"), "--term", "f(a,b)", "--strategy", "li",
        "--depth", "40", "--json",
    )
    assert doc["lower_bound"] == "8191/8192"


def test_spare_json(capsys):
    doc = run_json(capsys, "spare", path("s7"), "--json")
    assert doc["verdict"] == "Spare"
    assert doc["falsifier"] is None
    doc = run_json(capsys, "spare", path("s1"), "--falsify", "--depth", "3", "--json")
    assert doc["verdict"] == "Unknown"
    assert doc["falsifier"]["found"] is True
    assert doc["falsifier"]["counterexample"]["duplicated_variable"] == "x"


def test_transform_writes_union(tmp_path, capsys):
    out_path = tmp_path / "s8gen.ptrs"
    code, _, _ = run(
        capsys, "transform", path("s8"), "--generators", "-o", str(out_path)
    )
    assert code == 0
    from pastlift.fmt import parse

    system = parse(out_path.read_text())
    assert len(system.rules) == 12  # 2 originals + 10 generated


def test_transform_requires_flag(capsys):
    code, _, err = run(capsys, "transform", path("s8"))
    assert code == 1
    assert "generators" in err


def test_exit_code_parse_error(capsys, tmp_path):
    bad = tmp_path / "bad.ptrs"
    bad.write_text("(RULES a -> {1/2: b})")
    code, _, err = run(capsys, "check", str(bad))
    assert code == 2
    assert "sum to 1/2" in err


def test_exit_code_usage(capsys):
    code, _, _ = run(capsys, "simulate", path("srw"), "--term", "g", "--policy", "bogus")
    assert code == 1


def test_exit_code_cap_exceeded(capsys):
    code, _, err = run(
        capsys,
        "simulate", path("srw"), "--term", "g", "--depth", "60",
        "--support-cap", "5",
    )
    assert code == 3
    assert "cap exceeded" in err


def test_exit_code_missing_file(capsys):
    code, _, _ = run(capsys, "check", "no-such-file.ptrs")
    assert code == 1


def test_bad_term_is_a_parse_error(capsys):
    code, _, err = run(capsys, "simulate", path("srw"), "--term", "zap(1)")
    assert code == 2
