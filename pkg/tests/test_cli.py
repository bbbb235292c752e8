import gzip
import io
import json

import pytest

from assocbias import assoc, embedstore, report, testspec
from assocbias.cli import EXIT_ERROR, EXIT_OK, EXIT_SKIPPED, main
from assocbias.core import EncodingLevel

VEC_FILE = """john 1.0 0.1
amy 0.1 1.0
career 0.9 0.2
home 0.2 0.9
good 0.7 0.7
"""

SPEC = {
    "id": "weat6",
    "targ1": {"category": "male names", "examples": ["John"]},
    "targ2": {"category": "female names", "examples": ["Amy"]},
    "attr1": {"category": "career", "examples": ["career"]},
    "attr2": {"category": "family", "examples": ["home"]},
}


def run_cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture()
def workdir(tmp_path, monkeypatch):
    monkeypatch.delenv("ASSOC_BIAS_CI", raising=False)
    monkeypatch.setenv("ASSOC_BIAS_THREADS", "2")
    (tmp_path / "vecs.txt").write_text(VEC_FILE)
    (tmp_path / "spec.json").write_text(json.dumps(SPEC))
    return tmp_path


def test_run_minimal(workdir):
    code, out, err = run_cli(
        "run", "--specs", str(workdir / "spec.json"),
        "--word-vectors", str(workdir / "vecs.txt"), "--format", "csv",
    )
    assert code == EXIT_OK
    lines = out.splitlines()
    assert len(lines) == 2  # header + one row
    assert lines[1].startswith("gender,weat6,cbow,word")


def test_run_skips_unresolvable_level(workdir):
    spec = dict(SPEC, id="sent-weat6", level="cword")
    spec["targ1"] = {"category": "m", "examples": ["This is John."]}
    spec["targ2"] = {"category": "f", "examples": ["This is Amy."]}
    spec["focus"] = {"targ1": [[8, 12]], "targ2": [[8, 11]]}
    path = workdir / "cword.json"
    path.write_text(json.dumps(spec))
    code, out, err = run_cli(
        "run", "--specs", str(path), "--word-vectors", str(workdir / "vecs.txt"),
        "--format", "json",
    )
    assert code == EXIT_SKIPPED
    assert "skipped" in err
    assert json.loads(out)["results"] == []


def test_run_matches_library_bytes(workdir):
    out_path = workdir / "suite.json"
    code, _, _ = run_cli(
        "run", "--specs", str(workdir / "spec.json"),
        "--word-vectors", str(workdir / "vecs.txt"),
        "--format", "json", "--seed", "7", "--out", str(out_path),
    )
    assert code == EXIT_OK

    with open(workdir / "vecs.txt") as fh:
        store = embedstore.load_word_vectors(fh)
    spec = testspec.load_spec((workdir / "spec.json").read_bytes(), spec_id="spec")
    mapping = embedstore.resolve(spec, word_store=store, model_id="cbow")
    result = assoc.run_test(spec, mapping, assoc.PermutationConfig(seed=7), model_id="cbow")
    suite = report.SuiteResult((result,), {"weat6": "gender"})
    assert out_path.read_bytes() == report.render(suite, "json")


def test_run_requires_seed_in_ci_mode(workdir, monkeypatch):
    monkeypatch.setenv("ASSOC_BIAS_CI", "1")
    code, _, err = run_cli(
        "run", "--specs", str(workdir / "spec.json"),
        "--word-vectors", str(workdir / "vecs.txt"),
    )
    assert code == EXIT_ERROR and "--seed" in err
    code, _, _ = run_cli(
        "run", "--specs", str(workdir / "spec.json"),
        "--word-vectors", str(workdir / "vecs.txt"), "--seed", "3",
    )
    assert code == EXIT_OK


def test_run_rerun_identical_artifacts(workdir):
    paths = []
    for name in ("a.json", "b.json"):
        out_path = workdir / name
        run_cli("run", "--specs", str(workdir / "spec.json"),
                "--word-vectors", str(workdir / "vecs.txt"),
                "--format", "json", "--out", str(out_path))
        paths.append(out_path.read_bytes())
    assert paths[0] == paths[1]


def test_run_level_filter_excludes_everything(workdir):
    code, out, err = run_cli(
        "run", "--specs", str(workdir / "spec.json"),
        "--word-vectors", str(workdir / "vecs.txt"),
        "--level", "cword", "--format", "json",
    )
    # a word-level spec cannot run at cword level: nothing to do, nothing skipped
    assert code == EXIT_OK
    assert json.loads(out)["results"] == []


def test_validate_ok_and_errors(workdir):
    good = workdir / "spec.json"
    missing = workdir / "missing_attr.json"
    doc = dict(SPEC)
    del doc["attr1"]
    missing.write_text(json.dumps(doc))
    unbalanced = workdir / "unbalanced.json"
    doc2 = dict(SPEC)
    doc2["targ1"] = {"category": "m", "examples": ["John", "Paul"]}
    unbalanced.write_text(json.dumps(doc2))

    code, out, _ = run_cli("validate", str(good))
    assert code == EXIT_OK and out.startswith("OK")

    code, out, _ = run_cli("validate", str(good), str(missing), str(unbalanced))
    assert code == EXIT_ERROR
    assert "missing_attr.json: missing key 'attr1'" in out
    assert "unbalanced.json" in out and "2" in out and "1" in out

    code, out, _ = run_cli("validate", str(unbalanced), "--balance", "truncate")
    assert code == EXIT_OK


def test_expand_battery(workdir):
    templates = workdir / "templates.json"
    templates.write_text(json.dumps(
        {"slot_kind": "name", "templates": list(testspec.BLEACHED_PERSON_TEMPLATES.templates)}
    ))
    fillers = workdir / "fillers.json"
    fillers.write_text(json.dumps(["Ann", "Ben", "Cam", "Dee"]))
    code, out, _ = run_cli("expand", "--templates", str(templates),
                           "--fillers", str(fillers))
    assert code == EXIT_OK
    fragment = json.loads(out)
    assert len(fragment["examples"]) == 32
    assert len(fragment["focus"]) == 32
    start, end = fragment["focus"][0]
    assert fragment["examples"][0][start:end] == "Ann"


def test_expand_single(workdir):
    (workdir / "t.json").write_text(json.dumps({"templates": ["Hi [X]."]}))
    (workdir / "f.json").write_text(json.dumps(["Jo"]))
    code, out, _ = run_cli("expand", "--templates", str(workdir / "t.json"),
                           "--fillers", str(workdir / "f.json"))
    assert code == EXIT_OK
    assert json.loads(out)["examples"] == ["Hi Jo."]


def test_expand_bad_template(workdir):
    (workdir / "t.json").write_text(json.dumps({"templates": ["no slot."]}))
    (workdir / "f.json").write_text(json.dumps(["Jo"]))
    code, _, err = run_cli("expand", "--templates", str(workdir / "t.json"),
                           "--fillers", str(workdir / "f.json"))
    assert code == EXIT_ERROR
    assert "slot" in err


def test_count_fixture_and_merge(workdir):
    fixture = ["she is a nurse .", "he is a nurse .",
               "they saw the doctor and the nurse ."]
    occ = workdir / "occ.json"
    occ.write_text(json.dumps(
        {"male_stereotyped": ["doctor"], "female_stereotyped": ["nurse"]}
    ))
    c1 = workdir / "c1.txt"
    c1.write_text("\n".join(fixture) + "\n")
    code, out, _ = run_cli("count", str(c1), "--occupations", str(occ),
                           "--format", "json")
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["total_sentences"] == 3
    assert doc["classes"]["female"]["pro"] == 1
    assert doc["classes"]["male"]["anti"] == 1
    assert doc["classes"]["collective"]["male_occ"] == 1

    # two files equal the merged counts of individual runs
    c2 = workdir / "c2.txt.gz"
    with gzip.open(c2, "wt") as fh:
        fh.write("he is a doctor .\n")
    code, out2, _ = run_cli("count", str(c1), str(c2), "--occupations", str(occ),
                            "--format", "json")
    assert code == EXIT_OK
    doc2 = json.loads(out2)
    assert doc2["total_sentences"] == 4
    assert doc2["classes"]["male"]["pro"] == 1

    # empty corpus: zero report, exit 0
    empty = workdir / "empty.txt"
    empty.write_text("")
    code, out3, _ = run_cli("count", str(empty), "--format", "json")
    assert code == EXIT_OK
    assert json.loads(out3)["total_sentences"] == 0


def test_count_table_output(workdir):
    c1 = workdir / "c1.txt"
    c1.write_text("she is here .\n")
    code, out, _ = run_cli("count", str(c1))
    assert code == EXIT_OK
    assert out.startswith("class")


def test_count_out_writes_json_and_prints_table(workdir):
    c1 = workdir / "c1.txt"
    c1.write_text("she is here .\n")
    out_path = workdir / "report.json"
    code, out, _ = run_cli("count", str(c1), "--out", str(out_path))
    assert code == EXIT_OK
    assert out.startswith("class")
    doc = json.loads(out_path.read_text())
    assert doc["classes"]["female"]["sentences"] == 1


def test_report_rerender(workdir):
    from assocbias.core import AssociationResult

    suite = report.SuiteResult(
        (AssociationResult("weat6", "m", EncodingLevel.WORD, 1.0, 0.5, 0.2,
                           "exact", 0, None, False),),
        {"weat6": "gender"},
    )
    path = workdir / "suite.json"
    path.write_bytes(report.render(suite, "json"))
    code, out, _ = run_cli("report", str(path), "--format", "csv")
    assert code == EXIT_OK
    assert out == report.render(suite, "csv").decode()


def test_segment_approximate(workdir):
    raw = workdir / "raw.txt"
    raw.write_text("One sentence. Two!  Three?\nFour continues")
    code, out, _ = run_cli("segment", str(raw))
    assert code == EXIT_OK
    assert out.splitlines() == ["One sentence.", "Two!", "Three?", "Four continues"]


def test_missing_spec_glob_is_hard_error(workdir):
    code, _, err = run_cli("run", "--specs", str(workdir / "nope-*.json"),
                           "--word-vectors", str(workdir / "vecs.txt"))
    assert code == EXIT_ERROR
    assert "no spec files match" in err
