"""Tests for the annsynth command line."""

import json
from pathlib import Path

import pytest

from app.cli import build_parser, main
from app.services.model_io import load_quantized, save_dataset, save_model
from app.services.pipeline import PipelineError
from tests.conftest import labeled_dataset, random_model


@pytest.fixture()
def files(tmp_path: Path) -> dict[str, Path]:
    model = random_model("4-3-2", seed=5)
    return {
        "model": save_model(model, tmp_path / "net.json"),
        "data": save_dataset(labeled_dataset(model, 50, seed=5), tmp_path / "data.csv"),
        "out": tmp_path / "out",
    }


def test_quantize_then_tune_then_simulate(files, capsys):
    out = str(files["out"])
    assert main(["quantize", "--model", str(files["model"]), "--data", str(files["data"]), "--out-dir", out]) == 0
    quantized = files["out"] / "4-3-2" / "quantized.json"
    assert quantized.is_file()
    assert "[ok] q=" in capsys.readouterr().out

    assert main(["tune", "--quantized", str(quantized), "--data", str(files["data"]),
                 "--arch", "parallel", "--out-dir", out]) == 0
    tuned = files["out"] / "4-3-2" / "tuned_parallel.json"
    assert load_quantized(tuned).meta["tuned_for"] == "parallel"

    assert main(["simulate", "--quantized", str(tuned), "--data", str(files["data"])]) == 0
    assert "[ok] hardware_accuracy=" in capsys.readouterr().out


def test_quantize_with_max_q(files, capsys):
    out = str(files["out"])
    code = main([
        "quantize", "--model", str(files["model"]), "--data", str(files["data"]),
        "--max-q", "16", "--out-dir", out,
    ])
    assert code == 0
    qa = load_quantized(files["out"] / "4-3-2" / "quantized.json")
    assert 1 <= qa.format.q <= 16
    history = qa.meta["ha_history"]
    assert len(history) == (16 if qa.meta["q_search_exhausted"] else qa.format.q)
    assert f"[ok] q={qa.format.q} " in capsys.readouterr().out


def test_simulate_from_model_and_q(files, capsys):
    assert main(["simulate", "--model", str(files["model"]), "--q", "8", "--data", str(files["data"])]) == 0
    assert "q=8" in capsys.readouterr().out


def test_simulate_without_a_network_is_an_error_line(files, capsys):
    assert main(["simulate", "--data", str(files["data"])]) == 1
    out = capsys.readouterr().out.strip().splitlines()
    assert out[-1].startswith("[error] stage=simulate kind=PipelineError")


def test_missing_data_file_reports_the_stage(files, capsys):
    code = main(["quantize", "--model", str(files["model"]), "--data", str(files["out"] / "none.csv")])
    assert code == 1
    line = capsys.readouterr().out.strip().splitlines()[-1]
    assert line.startswith("[error] stage=quantize kind=DatasetError detail=")


def test_synth_emit_and_report(files, capsys):
    out = str(files["out"])
    main(["quantize", "--model", str(files["model"]), "--data", str(files["data"]), "--out-dir", out])
    quantized = str(files["out"] / "4-3-2" / "quantized.json")
    design = ["--arch", "parallel", "--mult-style", "cavm", "--trials", "20", "--out-dir", out]

    assert main(["synth", "--quantized", quantized, *design]) == 0
    design_dir = files["out"] / "4-3-2_parallel_cavm"
    assert sorted(p.name for p in (design_dir / "dags").iterdir()) == [
        "l1_n0.txt", "l1_n1.txt", "l1_n2.txt", "l2_n0.txt", "l2_n1.txt",
    ]

    assert main(["emit", "--quantized", quantized, "--data", str(files["data"]), "--vectors", "3", *design]) == 0
    assert (design_dir / "tb" / "ann_top_tb.v").is_file()
    assert (design_dir / "scripts" / "synth.tcl").is_file()

    capsys.readouterr()
    assert main(["report", "--quantized", quantized, "--data", str(files["data"]),
                 "--model", str(files["model"]), *design]) == 0
    printed = capsys.readouterr().out
    assert "[ok] adders=" in printed
    report = json.loads((design_dir / "report.json").read_text(encoding="utf-8"))
    assert report["design"] == "4-3-2_parallel_cavm"
    assert report["software_accuracy"] is not None


def test_pipeline_command(files, capsys):
    code = main([
        "pipeline", "--model", str(files["model"]), "--data", str(files["data"]),
        "--arch", "smac_neuron", "--mult-style", "mcm", "--trials", "20",
        "--out-dir", str(files["out"]),
    ])
    assert code == 0
    assert (files["out"] / "4-3-2_smac_neuron_mcm" / "report.json").is_file()
    assert "[ok] q=" in capsys.readouterr().out


def test_illegal_style_fails_in_synth(files, capsys):
    out = str(files["out"])
    main(["quantize", "--model", str(files["model"]), "--data", str(files["data"]), "--out-dir", out])
    quantized = str(files["out"] / "4-3-2" / "quantized.json")
    assert main(["synth", "--quantized", quantized, "--arch", "smac_ann", "--mult-style", "mcm"]) == 1
    line = capsys.readouterr().out.strip().splitlines()[-1]
    assert line.startswith("[error] stage=synth kind=ShiftAddError")


def test_parser_rejects_unknown_architecture():
    with pytest.raises(PipelineError, match="systolic") as info:
        build_parser().parse_args(["synth", "--quantized", "q.json", "--arch", "systolic"])
    assert info.value.stage == "synth"
    assert info.value.kind == "UsageError"


def test_usage_errors_are_one_error_line(capsys):
    assert main(["synth", "--quantized", "q.json", "--arch", "systolic"]) == 1
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 1
    assert lines[0].startswith("[error] stage=synth kind=UsageError detail=argument --arch: invalid choice")

    assert main([]) == 1
    assert capsys.readouterr().out.startswith("[error] stage=args kind=UsageError")
