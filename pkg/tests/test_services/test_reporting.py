"""Tests for the structural cost report."""

import pytest

from app.models.cost import CostReport
from app.services.model_io import dataset_from_rows
from app.services.reporting import (
    accumulation_adders,
    build_report,
    design_name,
    format_report,
    report_from_payload,
    report_payload,
)
from app.services.shiftadds import ShiftAddError, synthesize_layers


@pytest.fixture()
def matrix_2x2_validation():
    return dataset_from_rows([[0.5, 0.25], [0.1, 0.9], [0.7, 0.7]], [0, 1, 1], 2)


def test_matrix_2x2_cmvm_report(matrix_2x2_qa, matrix_2x2_validation):
    blocks = synthesize_layers("parallel", "cmvm", matrix_2x2_qa)
    report = build_report(matrix_2x2_qa, "parallel", "cmvm", blocks, matrix_2x2_validation, seed=4)
    assert report.design == "2-2_parallel_cmvm"
    assert report.adders == 4
    assert report.adder_depth == 3
    assert report.block_ops == {"l1": 4}
    assert report.cycles == 2
    assert report.tnzd == 10
    assert report.seed == 4
    assert report.tnzd_before_tuning is None


def test_behavioral_adder_counts(matrix_2x2_qa, small_qa):
    assert accumulation_adders("parallel", matrix_2x2_qa) == 4
    assert accumulation_adders("smac_neuron", small_qa) == 5
    assert accumulation_adders("smac_ann", small_qa) == 1


def test_behavioral_report_has_no_shift_add_depth(small_qa, small_data):
    blocks = [[] for _ in range(small_qa.structure.num_layers)]
    report = build_report(small_qa, "smac_ann", "behavioral", blocks, small_data)
    assert report.adder_depth == 0
    assert report.block_ops == {}
    assert report.cycles == 6 * 3 + 5 * 2
    assert len(report.blocks) == 1


def test_report_rejects_illegal_style(small_qa, small_data):
    with pytest.raises(ShiftAddError):
        build_report(small_qa, "smac_ann", "mcm", [[], []], small_data)


def test_optional_accuracies(small_model, small_qa, small_data):
    blocks = [[], []]
    report = build_report(
        small_qa, "parallel", "behavioral", blocks, small_data,
        test=small_data, model=small_model, tnzd_before=99,
    )
    assert report.software_accuracy == 1.0
    assert report.test_hardware_accuracy == report.hardware_accuracy
    assert report.tnzd_before_tuning == 99
    assert "(before tuning 99)" in format_report(report)


def test_payload_round_trip(matrix_2x2_qa, matrix_2x2_validation):
    blocks = synthesize_layers("parallel", "cavm", matrix_2x2_qa)
    report = build_report(matrix_2x2_qa, "parallel", "cavm", blocks, matrix_2x2_validation)
    payload = report_payload(report)
    assert payload["blocks"][0]["block"] == "l1_n0"
    assert payload["interpretations"]
    assert report_from_payload(payload) == report


def test_format_report_lists_every_block(small_qa, small_data):
    report = build_report(small_qa, "smac_neuron", "behavioral", [[], []], small_data)
    text = format_report(report)
    assert text.splitlines()[0].startswith("design")
    for block in report.blocks:
        assert block.block in text


def test_design_name(small_qa):
    assert design_name(small_qa.structure, "smac_neuron", "mcm") == "4-3-2_smac_neuron_mcm"


def test_cost_report_rejects_negative_counts():
    with pytest.raises(ValueError):
        CostReport(
            design="d", structure="1-1", arch="parallel", mult_style="behavioral",
            q=1, seed=0, tnzd=-1, cycles=2, adders=0, adder_depth=0, hardware_accuracy=0.5,
        )
