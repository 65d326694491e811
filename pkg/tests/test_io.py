from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hausflow import BaseMetricSpec, GridMismatchError, MetricField, metric_matrix, sample_window, window
from hausflow.io import dumps, jsonable, load_field, read_field_csv, save_field, write_field_csv

GRID = sample_window(window("R1", [(-1, 1)], 7, padding_radius=0.4))


def test_jsonable_handles_numpy_and_nonfinite():
    out = jsonable({"a": np.float64(1.5), "b": np.array([1, 2]), "c": math.inf, "d": np.bool_(True),
                    "e": (np.int64(3),)})
    assert out == {"a": 1.5, "b": [1, 2], "c": "inf", "d": True, "e": [3]}
    with pytest.raises(TypeError):
        jsonable(object())
    assert json.loads(dumps({"x": -math.inf}))["x"] == "-inf"


def test_round_trip_with_envelope(tmp_path):
    f = metric_matrix(GRID, BaseMetricSpec("arctan_pullback", "R1")).relabel("d^0", iteration=0)
    env = save_field(f, tmp_path / "field")
    back = load_field(env)
    assert np.array_equal(back.values, f.values)
    assert back.label == "d^0" and back.meta["iteration"] == 0
    assert np.array_equal(back.grid.core_mask, GRID.core_mask)


def test_checksum_and_grid_mismatch(tmp_path):
    f = metric_matrix(GRID, BaseMetricSpec("euclidean", "R1"))
    env = save_field(f, tmp_path / "f")
    csv_path = tmp_path / "f.csv"
    csv_path.write_text(csv_path.read_text().replace("0.0", "0.5", 3))
    with pytest.raises(ValueError):
        load_field(env)
    write_field_csv(f, csv_path)
    other = sample_window(window("R1", [(-1, 1)], 8, padding_radius=0.4))
    with pytest.raises(GridMismatchError):
        read_field_csv(csv_path, other)


def test_infinite_entries_survive(tmp_path):
    v = np.zeros((len(GRID), len(GRID)))
    v[0, -1] = v[-1, 0] = math.inf
    f = MetricField(GRID, v)
    assert np.isinf(load_field(save_field(f, tmp_path / "g")).values[0, -1])


values = arrays(np.float64, (len(GRID), len(GRID)),
                elements=st.floats(0, 1e6, allow_nan=False, allow_subnormal=True))


@given(values)
@settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
def test_round_trip_bit_exact(tmp_path, vals):
    f = MetricField(GRID, vals)
    back = load_field(save_field(f, tmp_path / "h"))
    assert back.values.tobytes() == f.values.tobytes()
