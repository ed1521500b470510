"""Command line surface: image I/O, run outputs, and subcommand behavior."""

import json

import numpy as np
import pytest

from helpers import seeded, square
from polyx import cli, errors, geom, unmix


def toy_image(tmp_path, pixels=24, seed_label="cli-image"):
    """Two well-separated 3-band clusters, saved as header + raw pair."""
    gen = seeded(seed_label)
    half = pixels // 2
    a = np.array([1.0, 0.1, 0.1]) + 0.05 * gen.standard_normal((half, 3))
    b = np.array([0.1, 1.0, 0.1]) + 0.05 * gen.standard_normal((pixels - half, 3))
    img = unmix.SpectralImage(pixels, 1, 3, np.vstack([a, b]))
    cli.save_image(img, tmp_path / "img")
    return img, tmp_path / "img.json"


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_image_round_trip_2x2x1(tmp_path):
    img = unmix.SpectralImage(2, 2, 1, np.array([[1.0], [2.0], [3.0], [4.0]]))
    cli.save_image(img, tmp_path / "tiny")
    back = cli.load_image(tmp_path / "tiny.json")
    assert (back.width, back.height, back.bands) == (2, 2, 1)
    assert back.data.shape == (4, 1)
    assert np.array_equal(back.data, img.data)


def test_image_round_trip_bitwise(tmp_path):
    gen = seeded("cli-roundtrip")
    img = unmix.SpectralImage(5, 4, 7, gen.standard_normal((20, 7)))
    cli.save_image(img, tmp_path / "img")
    back = cli.load_image(tmp_path / "img.json")
    assert np.array_equal(back.data, img.data)
    cli.save_image(back, tmp_path / "img2")
    assert (tmp_path / "img.bin").read_bytes() == (tmp_path / "img2.bin").read_bytes()


def test_image_truncated_data(tmp_path):
    img = unmix.SpectralImage(2, 1, 2, np.ones((2, 2)))
    cli.save_image(img, tmp_path / "img")
    blob = (tmp_path / "img.bin").read_bytes()
    (tmp_path / "img.bin").write_bytes(blob[:-8])
    with pytest.raises(errors.LengthMismatchError):
        cli.load_image(tmp_path / "img.json")


def test_image_header_errors(tmp_path):
    p = tmp_path / "img.json"
    p.write_text("{broken", encoding="utf-8")
    with pytest.raises(errors.HeaderError):
        cli.load_image(p)
    p.write_text('{"width": 1, "height": 1}', encoding="utf-8")
    with pytest.raises(errors.HeaderError):
        cli.load_image(p)
    p.write_text(
        json.dumps(
            {
                "width": 1,
                "height": 1,
                "bands": 1,
                "dtype": "u8",
                "layout": "pixel-major",
                "data_file": "img.bin",
            }
        ),
        encoding="utf-8",
    )
    with pytest.raises(errors.DtypeError):
        cli.load_image(p)


def test_image_csv(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("1,2\n3,4\n", encoding="utf-8")
    img = cli.load_image(p)
    assert (img.pixels, img.bands) == (2, 2)
    assert np.array_equal(img.data, [[1.0, 2.0], [3.0, 4.0]])


def test_image_csv_header_row(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("band0,band1\n1,2\n3,4\n", encoding="utf-8")
    assert cli.load_image(p).pixels == 2


def test_image_csv_errors(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("1,2\n3\n", encoding="utf-8")
    with pytest.raises(errors.FormatError):
        cli.load_image(p)
    p.write_text("", encoding="utf-8")
    with pytest.raises(errors.FormatError):
        cli.load_image(p)
    p.write_text("a,b\nc,d\n", encoding="utf-8")
    with pytest.raises(errors.FormatError):
        cli.load_image(p)


def test_parse_point():
    assert np.array_equal(cli._parse_point("1.5,-2"), [1.5, -2.0])
    with pytest.raises(errors.InputError):
        cli._parse_point("1,zap")


def test_parse_k_values():
    assert cli._parse_k_values("1..5") == (1, 2, 3, 4, 5)
    assert cli._parse_k_values("5,10,20") == (5, 10, 20)
    assert cli._parse_k_values("1..3,10") == (1, 2, 3, 10)
    assert cli._parse_k_values("2,2,1..2") == (1, 2)
    with pytest.raises(errors.InputError):
        cli._parse_k_values("4..x")
    with pytest.raises(errors.InputError):
        cli._parse_k_values(",")


def test_cmd_minnorm(tmp_path, capsys):
    path = tmp_path / "square.json"
    geom.save_polyhedron(square(), path)
    code, out, err = run_cli(
        capsys, "minnorm", "--polyhedron", str(path), "--point", "2,2"
    )
    assert code == 0 and err == ""
    doc = json.loads(out)
    assert np.allclose(doc["point"], [1.0, 1.0], atol=1e-9)
    assert doc["signed_distance"] == pytest.approx(np.sqrt(2.0), abs=1e-9)


def test_cmd_reduce_stdout(tmp_path, capsys):
    P = geom.PolyhedronH.from_rows(
        [(1, [1, 0]), (1, [0, 1]), (2, [-1, -1]), (3, [1, 0]), (2, [1, 1])]
    )
    path = tmp_path / "p.json"
    geom.save_polyhedron(P, path)
    code, out, _ = run_cli(capsys, "reduce", "--polyhedron", str(path))
    assert code == 0
    doc = json.loads(out)
    assert len(doc["halfspaces"]) == 3


def test_cmd_reduce_to_file(tmp_path, capsys):
    P = geom.PolyhedronH.from_rows([(1, [1, 0]), (1, [0, 1]), (5, [1, 0])])
    path = tmp_path / "p.json"
    out_path = tmp_path / "reduced.json"
    geom.save_polyhedron(P, path)
    code, out, _ = run_cli(
        capsys, "reduce", "--polyhedron", str(path), "--out", str(out_path)
    )
    assert code == 0
    assert json.loads(out) == {
        "halfspaces_in": 3,
        "halfspaces_kept": 2,
        "out": str(out_path),
    }
    assert geom.load_polyhedron(out_path).k == 2


def test_cmd_bench(tmp_path, capsys):
    out_path = tmp_path / "bench.csv"
    code, out, _ = run_cli(
        capsys,
        "bench", "--mode", "fixed-n", "--k", "2,3", "--reps", "2",
        "--seed", "1", "--out", str(out_path),
    )
    assert code == 0
    assert json.loads(out) == {"out": str(out_path), "rows": 4, "truncated": 0}
    assert out_path.exists()


def test_cmd_unmix_abundance_contract(tmp_path, capsys):
    _, header = toy_image(tmp_path)
    out_dir = tmp_path / "run"
    code, out, _ = run_cli(
        capsys,
        "unmix", "--image", str(header), "--classifier", "kmeans",
        "--classes", "2", "--mode", "abundance", "--seed", "4",
        "--out", str(out_dir),
    )
    assert code == 0
    assert json.loads(out) == {"out": str(out_dir), "runs": 1}
    names = sorted(p.name for p in out_dir.iterdir())
    assert names == ["abundance.bin", "abundance.json", "endmembers.csv", "manifest.json"]
    manifest = json.loads((out_dir / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["settings"]["clip_abundances"] is False
    assert manifest["runs"][0]["seed"] == 4
    assert set(manifest["runs"][0]["timings_s"]) == {"fit", "distance", "abundance"}


def test_cmd_unmix_same_seed_bitwise(tmp_path, capsys):
    _, header = toy_image(tmp_path)
    blobs = []
    for name in ("a", "b"):
        out_dir = tmp_path / name
        code, _, _ = run_cli(
            capsys,
            "unmix", "--image", str(header), "--classifier", "kmeans",
            "--classes", "2", "--mode", "abundance", "--seed", "9",
            "--out", str(out_dir),
        )
        assert code == 0
        blobs.append((out_dir / "abundance.bin").read_bytes())
    assert blobs[0] == blobs[1]


def test_cmd_unmix_probability_multirun_with_truth(tmp_path, capsys):
    img, header = toy_image(tmp_path)
    truth = np.zeros((img.pixels, 2))
    truth[: img.pixels // 2, 0] = 1.0
    truth[img.pixels // 2 :, 1] = 1.0
    tpath = tmp_path / "truth.csv"
    tpath.write_text(
        "\n".join(",".join(f"{v}" for v in row) for row in truth) + "\n",
        encoding="utf-8",
    )
    out_dir = tmp_path / "runs"
    code, out, _ = run_cli(
        capsys,
        "unmix", "--image", str(header), "--classifier", "kmeans",
        "--classes", "2", "--mode", "probability", "--seed", "11",
        "--runs", "2", "--truth", str(tpath), "--pgm", "--out", str(out_dir),
    )
    assert code == 0
    summary = json.loads(out)
    assert summary["runs"] == 2 and 0.0 <= summary["mean_rmse"] <= 1.0
    names = {p.name for p in out_dir.iterdir()}
    assert {
        "probability_000.json", "probability_000.bin",
        "probability_001.json", "probability_001.bin",
        "probability_000_class0.pgm", "probability_001_class1.pgm",
        "rmse.csv", "manifest.json",
    } <= names
    manifest = json.loads((out_dir / "manifest.json").read_text(encoding="utf-8"))
    assert [r["seed"] for r in manifest["runs"]] == [11, 12]
    assert all("rmse" in r for r in manifest["runs"])


def test_cmd_unmix_truth_shape_guard(tmp_path, capsys):
    _, header = toy_image(tmp_path)
    (tmp_path / "truth.csv").write_text("1,0\n0,1\n", encoding="utf-8")
    code, _, err = run_cli(
        capsys,
        "unmix", "--image", str(header), "--classifier", "kmeans",
        "--classes", "2", "--mode", "abundance", "--seed", "0",
        "--truth", str(tmp_path / "truth.csv"), "--out", str(tmp_path / "o"),
    )
    assert code == 2
    assert json.loads(err)["error"]["code"] == "invalid-input"


def test_cmd_unmix_threads_env(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("POLYX_THREADS", "3")
    _, header = toy_image(tmp_path)
    out_dir = tmp_path / "o"
    code, _, _ = run_cli(
        capsys,
        "unmix", "--image", str(header), "--classifier", "kmeans",
        "--classes", "2", "--mode", "probability", "--seed", "0",
        "--out", str(out_dir),
    )
    assert code == 0
    manifest = json.loads((out_dir / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["settings"]["threads"] == 3


def test_cmd_rmse(tmp_path, capsys):
    (tmp_path / "a.csv").write_text("1,0\n0,1\n", encoding="utf-8")
    (tmp_path / "b.csv").write_text("0,1\n1,0\n", encoding="utf-8")
    code, out, _ = run_cli(
        capsys,
        "rmse", "--est", str(tmp_path / "a.csv"), "--truth", str(tmp_path / "b.csv"),
        "--permute",
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["rmse"] == pytest.approx(0.0, abs=1e-15)
    assert doc["permutation"] == [1, 0]


def test_error_envelope_bad_format(tmp_path, capsys):
    bad = tmp_path / "p.json"
    bad.write_text("{nope", encoding="utf-8")
    code, out, err = run_cli(
        capsys, "minnorm", "--polyhedron", str(bad), "--point", "0,0"
    )
    assert code == 2 and out == ""
    doc = json.loads(err)
    assert doc["error"]["code"] == "bad-format"
    assert doc["error"]["message"]


def test_error_envelope_io(tmp_path, capsys):
    code, _, err = run_cli(
        capsys, "minnorm", "--polyhedron", str(tmp_path / "missing.json"),
        "--point", "0,0",
    )
    assert code == 2
    assert json.loads(err)["error"]["code"] == "io-error"


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["--version"])
    assert exc.value.code == 0
    out = capsys.readouterr().out
    assert out.startswith("polyx ")
