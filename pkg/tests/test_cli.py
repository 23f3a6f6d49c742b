import json
import subprocess
import sys

import numpy as np
import pytest

from curvebound import homotopy
from curvebound.bands import caustic_band_and_caustic
from curvebound.cli import (
    emit_curve_file,
    emit_plot_data,
    parse_curve_file,
    run_command,
    sha256_text,
)
from curvebound.curve import CurveSamples, integrate_frames, space
from curvebound.errors import InvalidInputError


def run(argv, capsys):
    code = run_command([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def great_circle_text(n=256, kappa1="-inf", kappa2="+inf", kappa=0.0):
    return json.dumps(
        {
            "bounds": {"kappa1": kappa1, "kappa2": kappa2},
            "samples": [{"v": 2 * np.pi, "kappa": kappa}] * n,
        }
    )


@pytest.fixture
def gen_file(tmp_path, capsys):
    def make(*args):
        out = tmp_path / f"curve_{len(list(tmp_path.iterdir()))}.json"
        code, _, err = run(["gen", *args, "--out", out], capsys)
        assert code == 0, err
        return out

    return make


# ---------------------------------------------------------------------------
# curve files


def test_parse_great_circle():
    c, s = parse_curve_file(great_circle_text())
    assert c.n == 256 and not s.kappa1.finite and not s.kappa2.finite
    assert np.array_equal(c.q0, np.eye(3))


def test_parse_rejects_boundary_curvature():
    with pytest.raises(InvalidInputError):
        parse_curve_file(great_circle_text(kappa1=0.0, kappa2="+inf", kappa=0.0))


@pytest.mark.parametrize(
    "mutate",
    [
        lambda d: d.update(extra=1),
        lambda d: d["bounds"].update(kappa1="-infinity"),
        lambda d: d["bounds"].pop("kappa2"),
        lambda d: d["samples"][0].update(v=0.0),
        lambda d: d["samples"][0].update(v=True),
        lambda d: d["samples"][0].update(colour="red"),
        lambda d: d.update(q0=[1, 0, 0]),
        lambda d: d.update(q0=[2, 0, 0, 0, 1, 0, 0, 0, 1]),
        lambda d: d.pop("samples"),
    ],
)
def test_parse_rejects_malformed(mutate):
    data = json.loads(great_circle_text())
    mutate(data)
    with pytest.raises(InvalidInputError):
        parse_curve_file(json.dumps(data))


def test_parse_rejects_bad_json():
    with pytest.raises(InvalidInputError):
        parse_curve_file("{not json")


def test_round_trip_is_bit_exact(rng):
    z = rng.normal(size=4)
    from curvebound.geom3 import rotation_from_quaternion

    c = CurveSamples(rng.uniform(0.1, 9, 300), rng.uniform(-2, 2, 300), rotation_from_quaternion(z / np.linalg.norm(z)))
    s = space(-3.0, np.inf)
    text = emit_curve_file(c, s)
    back, s2 = parse_curve_file(text)
    assert np.array_equal(back.v, c.v) and np.array_equal(back.kappa, c.kappa)
    assert np.array_equal(back.q0, c.q0)
    assert emit_curve_file(back, s2) == text


# ---------------------------------------------------------------------------
# plot data


def test_great_circle_plot_rows():
    c = homotopy.make_circle(np.pi / 2, 1, n=256)
    text = emit_plot_data(c, "csv")
    lines = text.split("\n")
    assert lines[0] == "t,x,y,z,v,kappa"
    # header, n + 1 rows, and the final newline
    assert len(lines) == 259 and lines[-1] == ""
    assert "\r" not in text
    row = lines[1].split(",")
    assert float(row[1]) == 1.0
    # 17 significant digits round-trip doubles
    P = integrate_frames(c).positions
    assert float(lines[100].split(",")[2]) == P[99, 1]


def test_plot_json_matches_csv():
    c = homotopy.make_circle(1.0, 2, n=64)
    rows = json.loads(emit_plot_data(c, "json"))
    assert len(rows) == 65 and list(rows[0]) == ["t", "x", "y", "z", "v", "kappa"]


def test_band_rows():
    c = homotopy.make_circle(1.0, 1, n=128)
    b, _ = caustic_band_and_caustic(integrate_frames(c), 0.0, 64)
    lines = emit_plot_data(b).strip().split("\n")
    assert lines[0] == "t,theta,x,y,z"
    assert len(lines) - 1 == 129 * 65


def test_family_files():
    path = homotopy.bending_family(1, n=128, steps=63)
    files = emit_plot_data(path, space=space(-1.1, 1.1))
    assert len(files) == 65
    manifest = json.loads(files["manifest.json"])
    assert [e["s"] for e in manifest["curves"]] == list(np.linspace(0, 1, 64))
    for e in manifest["curves"]:
        assert sha256_text(files[e["file"]]) == e["sha256"]


# ---------------------------------------------------------------------------
# commands


@pytest.mark.parametrize(
    "k1, k2, expected",
    [("0", "+inf", 3), ("-inf", "+inf", 2), ("-1", "1", 3), (str(1 / np.sqrt(3)), "+inf", 4)],
)
def test_count(k1, k2, expected, capsys):
    code, out, _ = run(["count", "--kappa1", k1, "--kappa2", k2], capsys)
    assert code == 0 and out.strip() == str(expected)


def test_classify_sigma5(gen_file, capsys):
    f = gen_file("circle", "--rho", 1.0, "--k", 5, "--kappa1", 0, "--kappa2", "+inf")
    code, out, _ = run(["classify", f], capsys)
    result = json.loads(out)
    assert code == 0 and result["component_index"] == 3 and result["n"] == 3


def test_gen_writes_manifest(gen_file):
    f = gen_file("circle", "--rho", 1.0, "--kappa1", 0, "--kappa2", "+inf")
    manifest = json.loads(f.with_name(f.name + ".manifest.json").read_text())
    assert manifest["outputs"][f.name] == sha256_text(f.read_text())


def test_invariants(gen_file, capsys):
    f = gen_file("circle", "--rho", 1.0, "--k", 2, "--kappa1", 0, "--kappa2", "+inf")
    code, out, _ = run(["invariants", f], capsys)
    data = json.loads(out)
    assert code == 0
    assert data["rotation_number"] == 2 and data["lifted_sign"] == 1
    assert data["condensed"] is True and data["diffuse"] is False
    assert data["total_curvature"] == pytest.approx(4 * np.pi)


def test_validate_bending_manifest(tmp_path, capsys):
    code, out, _ = run(
        ["gen", "bending", "--k", 1, "--n", 256, "--count", 64, "--kappa1", -1.1,
         "--kappa2", 1.1, "--out-dir", tmp_path],
        capsys,
    )
    assert code == 0
    assert len(list(tmp_path.glob("curve_*.json"))) == 64
    manifest = tmp_path / "manifest.json"
    code, out, _ = run(["validate-path", manifest], capsys)
    assert code == 0 and json.loads(out)["passed"] is True
    # a failed check is a result, not an error
    code, out, _ = run(["validate-path", manifest, "--kappa1", -0.9, "--kappa2", 0.9], capsys)
    data = json.loads(out)
    assert code == 0 and data["passed"] is False
    assert {f["reason"] for f in data["failures"]} == {"curvature-margin"}


def test_gen_refuses_curvature_outside_bounds(tmp_path, capsys):
    code, _, err = run(
        ["gen", "bending", "--n", 128, "--count", 8, "--kappa1", -0.9, "--kappa2", 0.9, "--out-dir", tmp_path],
        capsys,
    )
    assert code == 2 and not list(tmp_path.iterdir())
    assert run(["gen", "circle", "--rho", 0.3, "--kappa1", 0, "--kappa2", 1], capsys)[0] == 2


def test_validate_detects_tampering(tmp_path, capsys):
    run(["gen", "bending", "--n", 128, "--count", 4, "--kappa1", -1.1, "--kappa2", 1.1, "--out-dir", tmp_path], capsys)
    f = tmp_path / "curve_001.json"
    f.write_text(f.read_text().replace('"v": ', '"v": 1', 1))
    code, _, err = run(["validate-path", tmp_path / "manifest.json"], capsys)
    assert code == 2 and "hash mismatch" in err


def test_transform_translate_round_trip(gen_file, tmp_path, capsys):
    f = gen_file("circle", "--rho", 1.0, "--kappa1", -1, "--kappa2", 2)
    g = tmp_path / "moved.json"
    h = tmp_path / "back.json"
    assert run(["transform", "translate", f, "--theta", 0.3, "--out", g], capsys)[0] == 0
    assert run(["transform", "translate", g, "--theta", -0.3, "--out", h], capsys)[0] == 0
    a, _ = parse_curve_file(f.read_text())
    b, _ = parse_curve_file(h.read_text())
    assert a.allclose(b, atol=1e-9)


def test_transform_graft_auto(gen_file, tmp_path, capsys):
    f = gen_file("circle", "--rho", 0.4, "--kappa1", -0.5, "--kappa2", "+inf")
    out = tmp_path / "grafted.json"
    code, _, err = run(["transform", "graft", f, "--s", 1.0, "--out", out], capsys)
    assert code == 0, err
    code, text, _ = run(["invariants", out], capsys)
    data = json.loads(text)
    assert data["membership"]["member"]
    assert data["total_curvature"] == pytest.approx(2 * np.pi / np.sin(0.4) * np.sin(0.4) + 2.0, abs=1e-8)


def test_transform_loops(gen_file, tmp_path, capsys):
    f = gen_file("circle", "--rho", 1.0, "--kappa1", 0, "--kappa2", "+inf")
    for what in ("add-loops", "insert-loops"):
        out = tmp_path / f"{what}.json"
        assert run(["transform", what, f, "--loops", 1, "--rho1", 0.4, "--out", out], capsys)[0] == 0
        code, text, _ = run(["invariants", out], capsys)
        assert json.loads(text)["lifted_sign"] == 1


def test_band_command(gen_file, tmp_path, capsys):
    f = gen_file("circle", "--rho", 1.0, "--n", 128, "--kappa1", -1, "--kappa2", 2)
    out = tmp_path / "band.csv"
    assert run(["band", f, "--kind", "caustic", "--m", 64, "--csv", out], capsys)[0] == 0
    assert len(out.read_text().strip().split("\n")) == 1 + 129 * 65
    assert run(["band", f, "--m", 16], capsys)[1].count("\n") == 1 + 129 * 17


def test_plot_command(gen_file, capsys):
    f = gen_file("circle", "--kappa1", "-inf", "--kappa2", "+inf")
    code, out, _ = run(["plot", f], capsys)
    assert code == 0 and out.count("\n") == 258


def test_exotic_generation(gen_file, capsys):
    f = gen_file("exotic", "--p", "0.3,0.2,0.5", "--kappa1", -1.2, "--kappa2", 1.2)
    code, out, _ = run(["invariants", f], capsys)
    assert code == 0 and json.loads(out)["membership"]["member"]


def test_input_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(great_circle_text(kappa1=0.0, kappa2="+inf"))
    code, _, err = run(["classify", bad], capsys)
    assert code == 2
    assert json.loads(err)["error"]


def test_missing_file(capsys):
    assert run(["classify", "/nonexistent/curve.json"], capsys)[0] == 2


def test_non_member_classify(tmp_path, capsys):
    f = tmp_path / "open.json"
    f.write_text(great_circle_text(n=256).replace("6.28", "3.14"))
    code, _, err = run(["classify", f], capsys)
    assert code == 2 and "member" in err


def test_commands_are_deterministic(gen_file, capsys):
    f = gen_file("circle", "--rho", 0.8, "--k", 3, "--kappa1", 0, "--kappa2", "+inf")
    outs = {run(["invariants", f], capsys)[1] for _ in range(2)}
    assert len(outs) == 1


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "curvebound", "count", "--kappa1", "-inf", "--kappa2", "+inf"],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 0 and proc.stdout.strip() == "2"
