from xml.etree import ElementTree

import pytest

from ttpoe.schemas.controller import Method
from ttpoe.schemas.experiment import TrialResult
from ttpoe.services.metrics import summarize
from ttpoe.services.outputs import (
    SUMMARY_COLUMNS,
    TIMING_COLUMNS,
    TRIAL_COLUMNS,
    emit_outputs,
    format_table,
    read_trials_csv,
    success_plot_svg,
)


@pytest.fixture
def results():
    rows = []
    for method in Method:
        for samples in (16, 64):
            for trial in range(3):
                rows.append(TrialResult(
                    world="pngrid",
                    method=method,
                    samples=samples,
                    trial=trial,
                    seed=1000 + trial,
                    success=trial != 2,
                    steps=30 + trial,
                    total_cost=1e30 if trial == 2 else 120.5 + trial,
                    violation_fraction=0.125,
                    degenerate_steps=1 if method == Method.TT_POE_MPPI else 0,
                    step_time=0.01,
                ))
    return rows


def test_emit_outputs_writes_every_file(results, tmp_path):
    written = emit_outputs(results, tmp_path / "out")
    names = {p.name for p in written}
    assert names == {"trials.csv", "timing.csv", "summary.csv", "table.txt", "success_vs_samples.svg"}
    out = tmp_path / "out"
    assert (out / "trials.csv").read_text().splitlines()[0] == ",".join(TRIAL_COLUMNS)
    assert (out / "timing.csv").read_text().splitlines()[0] == ",".join(TIMING_COLUMNS)
    summary_lines = (out / "summary.csv").read_text().splitlines()
    assert summary_lines[0] == ",".join(SUMMARY_COLUMNS)
    assert len(summary_lines) == 1 + 6


def test_trials_csv_has_no_timing_and_reads_back(results, tmp_path):
    emit_outputs(results, tmp_path)
    text = (tmp_path / "trials.csv").read_text()
    assert "step_time" not in text
    parsed = read_trials_csv(tmp_path / "trials.csv")
    assert [r.model_dump(exclude={"step_time", "rebuild_time"}) for r in parsed] == [
        r.model_dump(exclude={"step_time", "rebuild_time"}) for r in results
    ]


def test_trials_csv_is_deterministic(results, tmp_path):
    emit_outputs(results, tmp_path / "a")
    emit_outputs(results, tmp_path / "b")
    assert (tmp_path / "a" / "trials.csv").read_bytes() == (tmp_path / "b" / "trials.csv").read_bytes()


def test_empty_results(tmp_path):
    emit_outputs([], tmp_path)
    assert (tmp_path / "trials.csv").read_text() == ",".join(TRIAL_COLUMNS) + "\n"
    assert (tmp_path / "table.txt").read_text() == "(no results)\n"
    ElementTree.fromstring((tmp_path / "success_vs_samples.svg").read_text())


def test_table_lists_methods_per_sample_count(results):
    table = format_table(summarize(results))
    lines = table.splitlines()
    assert "world: pngrid" in lines[0]
    for label in ("MPPI", "Proj-MPPI", "TT-PoE-MPPI"):
        assert label in lines[1]
    assert lines[3].split()[0] == "16" and lines[4].split()[0] == "64"
    assert "67%" in lines[3]


def test_plot_is_valid_svg(results):
    root = ElementTree.fromstring(success_plot_svg(summarize(results)))
    assert root.tag.endswith("svg")
    assert len(root.findall("{http://www.w3.org/2000/svg}polyline")) == 3
