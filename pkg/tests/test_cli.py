import json
import subprocess
import sys
from pathlib import Path

import pytest

from ordeval.cli import main

DATA = Path(__file__).parent / "data" / "three_class"


def evaluate_args(*extra, systems=("A", "B")):
    args = ["evaluate", "--gold", str(DATA / "gold.tsv"), "--classes", "neg,neu,pos"]
    for name in systems:
        args += ["--system", f"{name}={DATA / f'sys_{name}.tsv'}"]
    return args + list(extra)


def run(capsys, args):
    code = main(args)
    out, err = capsys.readouterr()
    return code, out, err


def test_evaluate_three_class(capsys):
    code, out, err = run(capsys, evaluate_args("--metrics", "cem_ord,accuracy"))
    assert code == 0
    reports = json.loads(out)
    assert [r["system"] for r in reports] == ["A", "B"]
    assert reports[0]["scores"]["cem_ord"] == pytest.approx(0.71, abs=0.005)
    assert reports[1]["scores"]["cem_ord"] == pytest.approx(0.76, abs=0.005)
    assert reports[0]["scores"]["accuracy"] == reports[1]["scores"]["accuracy"] == 0.70
    assert reports[0]["notes"]["tie_convention"] == "half"
    assert list(reports[0]) == ["dataset", "system", "scores", "config", "notes"]
    assert "cem_ord" in err


def test_evaluate_quiet_and_out(capsys, tmp_path):
    target = tmp_path / "r.json"
    code, out, err = run(capsys, evaluate_args("--quiet", "--out", str(target)))
    assert code == 0 and out == "" and err == ""
    assert json.loads(target.read_text())[0]["system"] == "A"


def test_evaluate_is_repeatable(capsys):
    _, first, _ = run(capsys, evaluate_args("--metrics", "all", "--quiet"))
    _, second, _ = run(capsys, evaluate_args("--metrics", "all", "--quiet"))
    assert first == second


def test_scale_file(capsys, tmp_path):
    scale = tmp_path / "scale.txt"
    scale.write_text("neg\nneu\npos\n")
    args = ["evaluate", "--gold", str(DATA / "gold.tsv"), "--scale-file", str(scale),
            "--system", f"A={DATA / 'sys_A.tsv'}", "--quiet"]
    code, out, _ = run(capsys, args)
    assert code == 0 and json.loads(out)[0]["scores"]["cem_ord"] == pytest.approx(0.7117, abs=1e-4)


def test_unknown_metric_exit_2(capsys):
    code, out, err = run(capsys, evaluate_args("--metrics", "accuracy,bogus_metric"))
    assert code == 2 and out == ""
    assert "bogus_metric" in err


@pytest.mark.parametrize(
    "args",
    [
        ["evaluate", "--gold", "/nonexistent.tsv", "--system", "x=/nonexistent.tsv", "--classes", "a,b"],
        ["evaluate", "--gold", str(DATA / "gold.tsv"), "--system", "A", "--classes", "neg,neu,pos"],
        ["evaluate", "--gold", str(DATA / "gold.tsv"), "--system", f"A={DATA / 'sys_A.tsv'}"],
        ["evaluate", "--gold", str(DATA / "gold.tsv"), "--system", f"A={DATA / 'sys_A.tsv'}", "--classes", "neg,pos"],
        ["evaluate", "--gold", str(DATA / "gold.tsv"), "--system", f"A={DATA / 'sys_A.tsv'}",
         "--classes", "neg,neu,pos", "--scale-file", "x"],
        ["frobnicate"],
        [],
    ],
)
def test_input_errors_exit_2(capsys, args):
    code, out, _ = run(capsys, args)
    assert code == 2 and out == ""


def test_missing_item_exit_2(capsys, tmp_path):
    rows = (DATA / "sys_A.tsv").read_text().splitlines()[:-1]
    short = tmp_path / "short.tsv"
    short.write_text("\n".join(rows) + "\n")
    args = ["evaluate", "--gold", str(DATA / "gold.tsv"), "--system", f"A={short}", "--classes", "neg,neu,pos"]
    code, out, err = run(capsys, args)
    assert code == 2 and out == "" and "no prediction" in err


def test_empty_gold_class_exit_3(capsys):
    args = ["evaluate", "--gold", str(DATA / "gold.tsv"), "--classes", "neg,neu,pos,vpos",
            "--system", f"A={DATA / 'sys_A.tsv'}", "--metrics", "accuracy,cem_ord"]
    code, out, err = run(capsys, args)
    assert code == 3 and out == "" and "empty" in err
    code, out, _ = run(capsys, args + ["--allow-empty-classes", "--quiet"])
    assert code == 0 and json.loads(out)[0]["scores"]["cem_ord"] == pytest.approx(0.7117, abs=1e-4)


def test_degenerate_exit_4(capsys, tmp_path):
    const = tmp_path / "const.tsv"
    ids = [line.split("\t")[0] for line in (DATA / "gold.tsv").read_text().splitlines()[1:]]
    const.write_text("".join(f"{i}\tneu\n" for i in ids))
    args = ["evaluate", "--gold", str(DATA / "gold.tsv"), "--classes", "neg,neu,pos",
            "--system", f"C={const}", "--metrics", "accuracy,pearson"]
    code, out, _ = run(capsys, args)
    assert code == 4 and out == ""


def test_audit_subset(capsys, tmp_path):
    args = ["audit", "--metrics", "accuracy,cem_ord", "--trials", "50", "--expect-table1"]
    code, out, err = run(capsys, args)
    assert code == 0
    report = json.loads(out)
    assert report["trials"] == 50 and report["seed"] == 7
    assert len(report["records"]) == 6
    assert "cem_ord" in err
    _, again, _ = run(capsys, args)
    assert again == out


def test_audit_mismatch_exit_1(capsys):
    code, out, _ = run(capsys, ["audit", "--metrics", "spearman", "--trials", "5", "--expect-table1", "--quiet"])
    assert code == 1
    assert "spearman" in json.loads(out)["pattern_mismatches"]
    code, _, _ = run(capsys, ["audit", "--metrics", "spearman", "--trials", "5", "--quiet"])
    assert code == 0


def test_audit_empty_metric_list(capsys):
    code, out, _ = run(capsys, ["audit", "--metrics", "", "--trials", "5", "--quiet", "--expect-table1"])
    assert code == 0 and json.loads(out)["records"] == []


def test_audit_empty_class_diagnostic(capsys):
    code, out, _ = run(capsys, ["audit", "--metrics", "cem_ord", "--trials", "2000", "--empty-classes", "--quiet"])
    assert code == 0
    assert json.loads(out)["records"][0]["verdict"] == "ViolationFound"


def test_synth_and_metaeval(capsys, tmp_path):
    base = ["synth", "--test-cases", "3", "--docs", "30", "--ratios", "0.5:1.0:0.5", "--seed", "3"]
    code, out, _ = run(capsys, base + ["--out", str(tmp_path / "a")])
    assert code == 0 and json.loads(out)["systems"] == 10
    run(capsys, base + ["--out", str(tmp_path / "b")])
    for f in sorted((tmp_path / "a").rglob("*.tsv")):
        assert f.read_bytes() == (tmp_path / "b" / f.relative_to(tmp_path / "a")).read_bytes()
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert manifest["config"]["error_ratios"] == [0.5, 1.0]

    meta = ["metaeval", "--in", str(tmp_path / "a"), "--reference", "acc,kendall_a,mi",
            "--metrics", "cem_ord,cem_flat,accuracy"]
    code, out, err = run(capsys, meta)
    assert code == 0
    report = json.loads(out)
    assert report["columns"] == ["all", "minus_maj", "minus_rand", "minus_tdisp", "minus_odisp", "minus_prox"]
    assert report["reference"] == ["accuracy", "kendall_tau_a", "mutual_information"]
    assert "cem_ord" in err
    _, again, _ = run(capsys, meta + ["--jobs", "2"])
    assert again == out

    code, out, _ = run(capsys, meta[:-1] + ["accuracy", "--quiet"])
    assert list(json.loads(out)["coverage"]) == ["accuracy"]


def test_synth_bad_ratios(capsys, tmp_path):
    code, out, _ = run(capsys, ["synth", "--out", str(tmp_path), "--ratios", "0:1:0.5"])
    assert code == 2 and out == ""
    code, _, _ = run(capsys, ["synth", "--out", str(tmp_path), "--sigma", "abc"])
    assert code == 2


def test_metaeval_missing_dir(capsys, tmp_path):
    code, out, _ = run(capsys, ["metaeval", "--in", str(tmp_path / "nope")])
    assert code == 2 and out == ""


def test_console_script_and_log_env(tmp_path):
    env = {"ORDEVAL_LOG": "debug", "PATH": "/usr/bin:/bin"}
    proc = subprocess.run(
        [sys.executable, "-m", "ordeval.cli", *evaluate_args("--quiet", "--metrics", "bogus")],
        capture_output=True, text=True, env=env,
    )
    assert proc.returncode == 2 and proc.stdout == "" and "bogus" in proc.stderr
