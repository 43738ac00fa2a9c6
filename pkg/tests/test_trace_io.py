import csv

import numpy as np
import pytest

from rmadapt.dists import make_product_form
from rmadapt.numerics import RngStream
from rmadapt.samplers import run_multivariate
from rmadapt.trace_io import MAGIC, read_trace_binary, record_dtype, write_trace_binary, write_trace_csv


@pytest.fixture
def trace():
    return run_multivariate(make_product_form("normal", 3), "rm-adaptive", 300, 0.234, 3, RngStream(1))


def test_binary_round_trip(trace, tmp_path):
    p = tmp_path / "t.rmt"
    write_trace_binary(trace, p)
    raw = p.read_bytes()
    assert raw[:4] == MAGIC
    assert len(raw) == 16 + 300 * record_dtype(3).itemsize
    assert record_dtype(3).itemsize == 8 + 8 + 1 + 24
    back = read_trace_binary(p)
    np.testing.assert_array_equal(back["states"], trace.states)
    np.testing.assert_array_equal(back["sigma"], trace.sigma_path)
    np.testing.assert_array_equal(back["accepted"], trace.accepted)
    np.testing.assert_array_equal(back["step"], np.arange(300))


def test_binary_rejects_corruption(trace, tmp_path):
    p = tmp_path / "t.rmt"
    write_trace_binary(trace, p)
    raw = p.read_bytes()
    (tmp_path / "bad1").write_bytes(b"XXXX" + raw[4:])
    (tmp_path / "bad2").write_bytes(raw[:-3])
    for name in ("bad1", "bad2"):
        with pytest.raises(ValueError):
            read_trace_binary(tmp_path / name)


def test_csv_layout(trace, tmp_path):
    p = tmp_path / "t.csv"
    write_trace_csv(trace, p)
    rows = list(csv.reader(open(p)))
    assert rows[0] == ["step", "x0", "x1", "x2", "accepted", "sigma"]
    assert len(rows) == 301
    assert float(rows[5][1]) == pytest.approx(trace.states[4, 0], rel=1e-5)
    assert rows[5][4] == str(int(trace.accepted[4]))
