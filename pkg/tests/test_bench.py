import csv
import io

import pytest

from fzip import bench
from fzip.pipeline import CompressConfig


@pytest.fixture(scope="module")
def small_text(request):
    from fzip import sample_text
    return sample_text.generate(40_000, seed=3)


def _parse(csv_text):
    return list(csv.DictReader(io.StringIO(csv_text)))


def test_csv_schema_stable(small_text):
    rows = bench.bench_table1(small_text, ["zlib", "fzip-rank"], corpus="t")
    text = bench.write_csv(rows)
    parsed = _parse(text)
    assert list(parsed[0].keys()) == bench.CSV_COLUMNS
    assert parsed[0]["method"] == "zlib"
    assert parsed[1]["method"] == "fzip-rank"
    assert float(parsed[1]["ratio"]) > 0


def test_ratio_columns_reproducible(small_text):
    rows1 = bench.bench_table1(small_text, ["zlib", "gzip", "fzip-rank"], corpus="t")
    rows2 = bench.bench_table1(small_text, ["zlib", "gzip", "fzip-rank"], corpus="t")
    for a, b in zip(rows1, rows2):
        assert a["ratio"] == b["ratio"]
        assert a["bytes_out"] == b["bytes_out"]


def test_missing_tool_marks_skipped(monkeypatch, small_text):
    def boom(data):
        raise FileNotFoundError("xz")
    monkeypatch.setitem(bench.EXTERNAL_TOOLS, "xz", boom)
    rows = bench.bench_table1(small_text, ["xz", "zlib"], corpus="t")
    assert rows[0]["status"] == "skipped"
    assert rows[1]["status"] == "ok"


def test_unknown_method_is_error_row(small_text):
    rows = bench.bench_table1(small_text[:100], ["no-such-method"])
    assert rows[0]["status"] == "error"


def test_empty_methods_header_only(small_text):
    text = bench.write_csv(bench.bench_table1(small_text, []))
    assert text.strip().splitlines() == [",".join(bench.CSV_COLUMNS)]


def test_reference_rows(small_text):
    rows = bench.bench_table1(small_text[:100], [], include_reference=True)
    assert all(r["status"] == "reference" for r in rows)
    assert any(abs(float(r["ratio"]) - 0.15021) < 1e-9 for r in rows)


def test_context_sweep_sorted_and_deduped(small_text):
    cfg = CompressConfig(mode="rank", memorize=True)
    rows = bench.bench_context_sweep(small_text, [128, 32, 128], cfg, corpus="t")
    assert len(rows) == 2
    assert "w32" in rows[0]["method"]
    assert "w128" in rows[1]["method"]


def test_context_sweep_single_window(small_text):
    rows = bench.bench_context_sweep(small_text[:5000], [64])
    assert len(rows) == 1
    assert rows[0]["status"] == "ok"


def test_size_sweep_oversize_is_error_row(small_text):
    rows = bench.bench_size_sweep(small_text, [1000, len(small_text) + 1])
    assert rows[0]["status"] == "ok"
    assert rows[1]["status"] == "error"


def test_size_sweep_dedupes(small_text):
    rows = bench.bench_size_sweep(small_text, [1000, 1000])
    assert len(rows) == 1


def test_plot_data_emission(small_text):
    rows = bench.bench_context_sweep(small_text[:5000], [32, 64])
    for row, w in zip(rows, (32, 64)):
        row["window"] = w
    buf = io.StringIO()
    bench.write_plot_data(rows, "window", "ratio", buf)
    lines = buf.getvalue().splitlines()
    assert lines[0].startswith("#")
    assert len(lines) == 3
