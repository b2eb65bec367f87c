"""Tests for running scenarios end to end."""

import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import polars as pl
import pytest

import projlab.main
from projlab import Laboratory
from projlab.cli import EXIT_OK, main
from projlab.config import build_config
from projlab.main import build_family
from projlab.models.helpers import ReturnFormat
from projlab.utils import config_hash, format_output, render


@pytest.fixture(scope="module")
def lab():
    """One laboratory with the built-in plugins."""
    return Laboratory()


@pytest.fixture
def dense_files(tmp_path):
    """An invertible 4x4 matrix and a coefficient vector, as text files."""
    A = np.array(
        [
            [4.0, 1.0, 0.0, 0.0],
            [1.0, 3.0, 1.0, 0.0],
            [0.0, 1.0, 2.0, 1.0],
            [0.0, 0.0, 1.0, 1.0],
        ]
    )
    matrix = tmp_path / "A.txt"
    coeffs = tmp_path / "x.txt"
    np.savetxt(matrix, A)
    np.savetxt(coeffs, np.array([1.0, -1.0, 0.5, 2.0]))
    return matrix, coeffs


def test_du_sweep(lab):
    """Projected solutions of the Du family sit at `e_1`, off by `|e_1|` from `x_dagger`."""
    cfg = build_config({"operator": {"kind": "du", "K": 8}})
    result = lab.run_scenario(cfg, jobs=2)
    table = result.table
    assert table.height == 7
    assert table["n"].to_list() == [str(n) for n in range(1, 8)]
    e1 = np.sqrt(0.75 / (1 - 0.25**8))
    np.testing.assert_allclose(table["err_to_xdagger"].to_numpy(), e1, atol=1e-10)
    np.testing.assert_allclose(table["err_to_u"].to_numpy(), 0.0, atol=1e-10)
    assert table["err_to_v"].null_count() == 7
    assert not result.inconsistent
    assert result.summary["bounded"]
    assert not result.summary["strong_criterion_met"]
    assert result.summary["space_condition"] == "FAILS"
    assert result.summary["nullspace_dim"] == 1
    assert result.metadata["config_hash"] == config_hash(cfg)


def test_seidman_sweep_reaches_xdagger(lab):
    """At full truncation the projected solution is `x_dagger` itself."""
    cfg = build_config({"operator": {"kind": "seidman", "K": 10}, "seed": 3})
    result = lab.run_scenario(cfg)
    errors = result.table["err_to_xdagger"].to_numpy()
    assert errors[-1] <= 1e-8
    assert result.summary["space_condition"] == "HOLDS"
    assert result.metadata["tail_bound"] > 0


def test_dense_file_scenario(lab, dense_files):
    """Matrices and exact solutions can be read from files."""
    matrix, coeffs = dense_files
    cfg = build_config(
        {
            "operator": {"kind": "dense-file", "path": str(matrix)},
            "xdagger": {"kind": "coeff-file", "path": str(coeffs)},
            "sweep": {"n": [1, 2, 4], "m": [2, "inf"]},
        }
    )
    result = lab.run_scenario(cfg)
    table = result.table
    assert table.height == 6
    assert table.filter((pl.col("n") == "4") & (pl.col("m") == "inf"))["err_to_xdagger"][0] <= 1e-12
    assert table["err_to_u"].null_count() == 6
    assert not result.inconsistent


def test_coefficient_length_mismatch(lab, dense_files, tmp_path):
    """The exact solution must live in the domain of the operator."""
    matrix, _ = dense_files
    short = tmp_path / "short.txt"
    np.savetxt(short, np.ones(3))
    cfg = build_config(
        {
            "operator": {"kind": "dense-file", "path": str(matrix)},
            "xdagger": {"kind": "coeff-file", "path": str(short)},
        }
    )
    with pytest.raises(ValueError, match="3 coefficients"):
        lab.run_scenario(cfg)


def test_level_outside_family(lab):
    """Sweep levels are checked before any work starts."""
    cfg = build_config({"operator": {"kind": "du", "K": 4}, "sweep": {"n": [5]}})
    with pytest.raises(ValueError, match="exceeds the truncation"):
        lab.run_scenario(cfg)


def test_neubauer_output_is_reproducible(lab):
    """Two runs of the same scenario give byte-identical CSV, whatever the thread count."""
    cfg = build_config({"operator": {"kind": "neubauer", "side": 12}, "sweep": {"n": [1, 2, 3, 4, 5, 6]}})
    first = render(lab.run_scenario(cfg, jobs=1), ReturnFormat.CSV)
    second = render(lab.run_scenario(cfg, jobs=4), ReturnFormat.CSV)
    assert first == second
    assert first.count("\r\n") == 7


def test_gallery_neubauer_is_byte_identical(tmp_path):
    """The default Neubauer gallery run writes the same file twice, each within a minute."""
    outputs = []
    for run in range(2):
        out = tmp_path / f"neubauer-{run}.csv"
        start = time.perf_counter()
        assert main(["gallery", "neubauer", "--out", str(out)]) == EXIT_OK
        assert time.perf_counter() - start < 60.0
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1]
    assert outputs[0].count(b"\r\n") == 13


def test_default_workers_follow_cpu_count(lab, monkeypatch):
    """Without `jobs` the sweep pool has one worker per core."""
    sizes = []

    class RecordingExecutor(ThreadPoolExecutor):
        """Thread pool that records its size."""

        def __init__(self, max_workers=None):
            """Record `max_workers` and start the pool."""
            sizes.append(max_workers)
            super().__init__(max_workers=max_workers)

    monkeypatch.setattr(projlab.main, "ThreadPoolExecutor", RecordingExecutor)
    monkeypatch.setattr(projlab.main.os, "cpu_count", lambda: 3)
    cfg = build_config({"operator": {"kind": "du", "K": 4}})
    lab.run_scenario(cfg)
    lab.run_scenario(cfg, jobs=2)
    assert sizes == [3, 2]


def test_neubauer_weak_proxy_stays_away(lab):
    """The u-direction functional keeps `x_n` away from `x_dagger`."""
    cfg = build_config(
        {
            "operator": {"kind": "neubauer", "side": 16},
            "sweep": {"n": list(range(1, 11))},
            "diagnostics": {"ubc": False, "ratios": False, "natterer": False, "oblique": False},
        }
    )
    result = lab.run_scenario(cfg)
    weak = result.table["weak_proxy_max"].to_numpy()
    assert np.all(weak[4:] >= 0.01)
    assert result.summary["space_condition"] == "FAILS"
    assert result.summary["intersection_dims"] == [0] * 10
    assert result.table["err_to_u"].null_count() == 0


def test_build_family():
    """Grid families need a square truncation."""
    assert build_family("grid", 1, 9).max_level == 3
    assert build_family("coordinate", 2, 5).max_level == 3
    with pytest.raises(ValueError, match="square number"):
        build_family("grid", 1, 8)


def test_format_output(lab):
    """Tables convert to dicts, frames and JSON."""
    result = lab.run_scenario(build_config({"operator": {"kind": "du", "K": 4}}))
    data = format_output(result.table, "dict")
    assert data["n"] == ["1", "2", "3"]
    assert format_output(result.table, ReturnFormat.PL_DATAFRAME) is result.table
    assert format_output(result.table, "json").startswith('[{"n": "1"')
    with pytest.raises(ValueError):
        format_output(result.table, "xml")


def test_format_output_pandas(lab):
    """The pandas extra turns sweep tables into pandas frames."""
    pd = pytest.importorskip("pandas")
    pytest.importorskip("pyarrow")
    result = lab.run_scenario(build_config({"operator": {"kind": "du", "K": 4}}))
    frame = format_output(result.table, ReturnFormat.PD_DATAFRAME)
    assert isinstance(frame, pd.DataFrame)
    assert list(frame.columns) == result.table.columns
    assert frame["n"].tolist() == ["1", "2", "3"]
    np.testing.assert_allclose(frame["norm_x"].to_numpy(), result.table["norm_x"].to_numpy())
