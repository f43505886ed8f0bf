import io
import json
import subprocess
import sys

import jsonschema
import numpy as np
import pytest
from PIL import Image

from radonbarcode.barcode import parse_barcode
from radonbarcode.bench import LSH_RERANK, report_schema, run_benchmark, worker_count
from radonbarcode.dataset import read_manifest
from radonbarcode.cli import main
from radonbarcode.index import LshIndex, load_index


def run(*argv):
    out = io.StringIO()
    code = main([str(a) for a in argv], out=out)
    return code, out.getvalue()


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    code, _ = run("synth", root / "data", "--count", 40, "--seed", 3)
    assert code == 0
    return root


def test_encode_defaults(dataset):
    code, out = run("encode", dataset / "data/images/img00.png")
    assert code == 0
    bc = parse_barcode(out)
    assert out.splitlines()[0] == "RBC1;minmax;8;32;5"
    assert bc.rows.shape == (8, 47)


def test_encode_options_and_side_outputs(dataset, tmp_path):
    pbm, csv = tmp_path / "b.pbm", tmp_path / "p.csv"
    code, out = run(
        "encode", dataset / "data/images/img01.png", "--angles", 16, "--encoder", "threshold",
        "--pbm", pbm, "--projections", csv,
    )
    assert code == 0
    assert len(out.splitlines()) == 17
    assert out.startswith("RBC1;threshold;16;32;0")
    assert pbm.read_text().startswith("P1\n47 16\n")
    assert len(csv.read_text().splitlines()) == 16


def test_encode_missing_file(tmp_path, capsys):
    code, _ = run("encode", tmp_path / "missing.png")
    assert code == 2
    assert "missing.png" in capsys.readouterr().err


def test_usage_errors_exit_1(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["encode"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["encode", "x.png", "--angles", "0"])
    assert exc.value.code == 1


def test_index_and_query(dataset, tmp_path):
    manifest = dataset / "data/manifest.csv"
    idx = tmp_path / "i.rbix"
    code, out = run("index", manifest, idx)
    assert code == 0 and out.strip() == "indexed 40 entries"
    assert len(load_index(idx)) == 40

    code, out = run("query", idx, dataset / "data/images/img07.png")
    assert code == 0
    rank, rid, dist, irma = out.strip().split(",")
    assert (rank, rid, dist) == ("1", "img07", "0")

    code, out = run("query", idx, dataset / "data/images/img07.png", "--k", 5)
    lines = [ln.split(",") for ln in out.strip().splitlines()]
    assert [ln[0] for ln in lines] == ["1", "2", "3", "4", "5"]
    dists = [int(ln[2]) for ln in lines]
    assert dists == sorted(dists)


def test_query_rejects_mismatched_options(dataset, tmp_path, capsys):
    idx = tmp_path / "i.rbix"
    run("index", dataset / "data/manifest.csv", idx)
    code, _ = run("query", idx, dataset / "data/images/img00.png", "--angles", 16)
    assert code == 2
    assert "angles" in capsys.readouterr().err
    code, _ = run("query", idx, dataset / "data/images/img00.png", "--angles", 8, "--encoder", "minmax")
    assert code == 0
    code, _ = run("query", idx, dataset / "data/images/img00.png", "--lsh")
    assert code == 2


def test_lsh_query_with_rerank(dataset, tmp_path):
    idx = tmp_path / "l.rbix"
    code, _ = run("index", dataset / "data/manifest.csv", idx, "--lsh", "--seed", 4)
    assert code == 0
    assert isinstance(load_index(idx), LshIndex)
    code, out = run("query", idx, dataset / "data/images/img12.png", "--lsh", "--top", 10, "--rerank")
    assert code == 0
    assert out.strip().split(",")[:3] == ["1", "img12", "0"]


def test_index_is_byte_identical(dataset, tmp_path):
    a, b = tmp_path / "a.rbix", tmp_path / "b.rbix"
    run("index", dataset / "data/manifest.csv", a, "--lsh", "--seed", 11)
    run("index", dataset / "data/manifest.csv", b, "--lsh", "--seed", 11)
    assert a.read_bytes() == b.read_bytes()


def test_index_reports_bad_row(dataset, tmp_path, capsys):
    lines = (dataset / "data/manifest.csv").read_text().splitlines()
    parts = lines[7].split(",")
    lines[7] = ",".join(parts[:2] + ["1*-00-00-00"])
    bad = dataset / "data/bad.csv"
    bad.write_text("\n".join(lines) + "\n")
    code, _ = run("index", bad, tmp_path / "x.rbix")
    assert code == 2
    assert "row 7" in capsys.readouterr().err


def test_bench_self_test(dataset, tmp_path):
    idx, report = tmp_path / "i.rbix", tmp_path / "r.json"
    run("index", dataset / "data/manifest.csv", idx)
    code, out = run("bench", idx, dataset / "data/manifest.csv", "--out", report)
    assert code == 0
    assert "total error" in out
    data = json.loads(report.read_text())
    jsonschema.validate(data, report_schema())
    assert data["total_error"] == 0.0
    assert data["failure_rate"] == 0.0
    assert data["search_mode"] == "linear-knn"
    assert data["config"] == {"encoder": "minmax", "num_angles": 8, "image_side": 32, "window": 5}


def test_bench_lsh_report(dataset, tmp_path):
    idx, report = tmp_path / "l.rbix", tmp_path / "r.json"
    run("index", dataset / "data/manifest.csv", idx, "--lsh", "--tables", 5, "--key-size", 40, "--seed", 2)
    code, _ = run("bench", idx, dataset / "data/manifest.csv", "--lsh", "--out", report)
    assert code == 0
    data = json.loads(report.read_text())
    jsonschema.validate(data, report_schema())
    assert data["search_mode"] == "lsh+correlation"
    assert data["config"]["lsh"] == {"num_tables": 5, "key_size": 40, "seed": 2}
    assert data["total_error"] == 0.0


def test_synth_is_deterministic(tmp_path):
    run("synth", tmp_path / "a", "--count", 6, "--seed", 9)
    run("synth", tmp_path / "b", "--count", 6, "--seed", 9)
    files = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*") if p.is_file())
    assert len(files) == 7
    for f in files:
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_synth_two_rows(tmp_path):
    code, _ = run("synth", tmp_path / "two", "--count", 2)
    assert code == 0
    assert len((tmp_path / "two/manifest.csv").read_text().splitlines()) == 3
    code, _ = run("synth", tmp_path / "one", "--count", 1)
    assert code == 1


def test_module_entry_point(dataset):
    proc = subprocess.run(
        [sys.executable, "-m", "radonbarcode", "encode", str(dataset / "data/images/img02.png"), "--angles", "4"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert len(proc.stdout.splitlines()) == 5


def test_encode_pgm_input(tmp_path):
    p = tmp_path / "g.pgm"
    arr = (np.arange(64 * 64) % 251).astype(np.uint8).reshape(64, 64)
    p.write_bytes(b"P5\n64 64\n255\n" + arr.tobytes())
    q = tmp_path / "g.png"
    Image.fromarray(arr).save(q)
    _, a = run("encode", p)
    _, b = run("encode", q)
    assert a == b


def test_bench_threads_match_serial(dataset, tmp_path, monkeypatch):
    idx = tmp_path / "l.rbix"
    run("index", dataset / "data/manifest.csv", idx, "--lsh", "--seed", 1)
    index = load_index(idx)
    rows = read_manifest(dataset / "data/manifest.csv")[::3]
    serial = run_benchmark(index, rows, mode=LSH_RERANK, threads=1)
    monkeypatch.setenv("RBC_THREADS", "4")
    assert worker_count() == 4
    pooled = run_benchmark(index, rows, mode=LSH_RERANK)
    assert pooled.total_error == serial.total_error
    assert pooled.lsh_fallbacks == serial.lsh_fallbacks
    monkeypatch.setenv("RBC_THREADS", "nope")
    assert worker_count() == 1
