import json

import pytest

from fzip.cli import main


def test_compress_decompress_inspect(tmp_path, capsys):
    src = tmp_path / "f.txt"
    src.write_bytes(b"some text to squeeze " * 50)
    fz = tmp_path / "f.txt.fz"
    out = tmp_path / "f.out"

    rc = main(["compress", str(src), "--mode", "rank", "--context", "dynamic",
               "--window", "512", "--memorize", "--out", str(fz)])
    assert rc == 0
    summary = json.loads(capsys.readouterr().out.strip())
    assert summary["input_len"] == 21 * 50
    assert summary["archive_len"] == fz.stat().st_size
    assert set(summary["wall_ms"]) >= {"tokenize", "memorize", "encode", "total"}

    rc = main(["decompress", str(fz), "--out", str(out)])
    assert rc == 0
    assert out.read_bytes() == src.read_bytes()
    capsys.readouterr()

    rc = main(["inspect", str(fz)])
    assert rc == 0
    info = json.loads(capsys.readouterr().out)
    assert info["mode"] == "rank"
    assert info["predictor_id"] == "builtin-ctx3"
    assert len(info["predictor_fingerprint"]) == 16
    assert info["n_tokens"] == 21 * 50


def test_default_output_names(tmp_path, capsys, monkeypatch):
    src = tmp_path / "g.txt"
    src.write_bytes(b"abc")
    monkeypatch.chdir(tmp_path)
    assert main(["compress", "g.txt"]) == 0
    assert (tmp_path / "g.txt.fz").exists()
    assert main(["decompress", "g.txt.fz", "--out", "g.roundtrip"]) == 0
    assert (tmp_path / "g.roundtrip").read_bytes() == b"abc"


def test_window_zero_is_usage_error(tmp_path):
    src = tmp_path / "f.txt"
    src.write_bytes(b"x")
    with pytest.raises(SystemExit) as exc:
        main(["compress", str(src), "--window", "0"])
    assert exc.value.code != 0


def test_missing_file_is_one_line_error(tmp_path, capsys):
    rc = main(["compress", str(tmp_path / "absent.txt")])
    assert rc == 1
    err = capsys.readouterr().err
    assert err.startswith("error: io:")
    assert "Traceback" not in err


def test_corrupt_archive_is_categorized(tmp_path, capsys):
    bad = tmp_path / "bad.fz"
    bad.write_bytes(b"FZIPgarbagegarbagegarbage")
    rc = main(["decompress", str(bad)])
    assert rc == 1
    err = capsys.readouterr().err
    assert "corrupt-archive" in err or "unsupported-version" in err
    assert "Traceback" not in err


def test_not_an_archive(tmp_path, capsys):
    bad = tmp_path / "bad.fz"
    bad.write_bytes(b"plain text, no magic")
    rc = main(["decompress", str(bad)])
    assert rc == 1
    assert "not-an-archive" in capsys.readouterr().err


def test_bench_table1_cli(tmp_path, capsys):
    corpus = tmp_path / "c.txt"
    corpus.write_bytes(b"benchmark corpus " * 200)
    rc = main(["bench-table1", str(corpus), "--methods", "zlib,fzip-rank"])
    assert rc == 0
    out = capsys.readouterr().out
    lines = out.strip().splitlines()
    assert lines[0].startswith("method,corpus,bytes_in")
    assert len(lines) == 3


def test_bench_context_sweep_cli(tmp_path, capsys):
    corpus = tmp_path / "c.txt"
    corpus.write_bytes(b"sweep corpus " * 100)
    plot = tmp_path / "plot.dat"
    rc = main(["bench-context-sweep", str(corpus), "--windows", "64,32",
               "--plot-data", str(plot)])
    assert rc == 0
    assert plot.exists()
    assert len(plot.read_text().splitlines()) == 3
