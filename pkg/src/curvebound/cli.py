"""Command-line interface, curve file format and plot-data emission.

Curve files are JSON objects::

    {"bounds": {"kappa1": "-inf", "kappa2": 1.5},
     "q0": [9 numbers, row-major, optional],
     "samples": [{"v": 6.28, "kappa": 0.0}, ...]}

Exit status is 0 on success, 2 when input fails validation and 1 when a
computation cannot reach a trustworthy answer; errors go to stderr as JSON.
"""

import argparse
import csv
import functools
import hashlib
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import homotopy
from .bands import DEFAULT_M, BandGrid, caustic_band_and_caustic, regular_band
from .classify import (
    classify_curve,
    component_count,
    is_condensed,
    is_diffuse,
    lifted_sign,
    reduce_space,
    rotation_number,
)
from .curve import (
    CurvatureBound,
    CurveSamples,
    SpaceSpec,
    check_membership,
    curvature_margin,
    integrate_frames,
    total_curvature,
    translate_curve,
)
from .errors import (
    ComputationError,
    CurveboundError,
    InputError,
    InvalidInputError,
    InvalidPathError,
    NotApplicableError,
    UnclassifiableError,
)

CURVE_FIELDS = {"bounds", "q0", "samples"}
BOUND_FIELDS = {"kappa1", "kappa2"}
SAMPLE_FIELDS = {"v", "kappa"}
MANIFEST_NAME = "manifest.json"


# ---------------------------------------------------------------------------
# curve files


def _number(x, what):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise InvalidInputError(f"{what} must be a number", value=repr(x))
    if not np.isfinite(x):
        raise InvalidInputError(f"{what} must be finite", value=repr(x))
    return float(x)


def _bound(x, what):
    if isinstance(x, str):
        if x not in ("+inf", "-inf"):
            raise InvalidInputError(f"{what} must be a number, '+inf' or '-inf'", value=x)
        return CurvatureBound.parse(x)
    return CurvatureBound(_number(x, what))


def parse_curve_file(text):
    """Validated (CurveSamples, SpaceSpec) from curve-file JSON text."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInputError("malformed JSON", detail=str(exc)) from None
    if not isinstance(data, dict):
        raise InvalidInputError("curve file must be a JSON object")
    extra = set(data) - CURVE_FIELDS
    if extra:
        raise InvalidInputError("unknown fields", fields=sorted(extra))
    for key in ("bounds", "samples"):
        if key not in data:
            raise InvalidInputError(f"missing field '{key}'")
    bounds = data["bounds"]
    if not isinstance(bounds, dict) or set(bounds) != BOUND_FIELDS:
        raise InvalidInputError("bounds must have exactly kappa1 and kappa2")
    k1 = _bound(bounds["kappa1"], "kappa1")
    k2 = _bound(bounds["kappa2"], "kappa2")
    s = SpaceSpec(k1, k2)
    q0 = np.eye(3)
    if "q0" in data:
        raw = data["q0"]
        if not isinstance(raw, list) or len(raw) != 9:
            raise InvalidInputError("q0 must be a list of 9 numbers")
        q0 = np.array([_number(x, "q0 entry") for x in raw]).reshape(3, 3)
    samples = data["samples"]
    if not isinstance(samples, list):
        raise InvalidInputError("samples must be a list")
    v = np.empty(len(samples))
    kappa = np.empty(len(samples))
    for i, item in enumerate(samples):
        if not isinstance(item, dict) or set(item) != SAMPLE_FIELDS:
            raise InvalidInputError("each sample needs exactly v and kappa", index=i)
        v[i] = _number(item["v"], "v")
        kappa[i] = _number(item["kappa"], "kappa")
        if v[i] <= 0:
            raise InvalidInputError("v must be positive", index=i, v=v[i])
        # curvature bounds are strict
        if not k1.value < kappa[i] < k2.value:
            raise InvalidInputError(
                "kappa must lie strictly between the bounds",
                index=i,
                kappa=kappa[i],
                kappa1=k1.to_json(),
                kappa2=k2.to_json(),
            )
    return CurveSamples(v, kappa, q0), s


def curve_to_json(c, s):
    return {
        "bounds": {"kappa1": s.kappa1.to_json(), "kappa2": s.kappa2.to_json()},
        "q0": [float(x) for x in c.q0.reshape(-1)],
        "samples": [{"v": float(a), "kappa": float(b)} for a, b in zip(c.v, c.kappa)],
    }


def emit_curve_file(c, s):
    return json.dumps(curve_to_json(c, s), indent=1) + "\n"


# ---------------------------------------------------------------------------
# plot data


def _csv_text(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format(float(x), ".17g") for x in row])
    return buf.getvalue()


def curve_rows(c):
    """(t, x, y, z, v, kappa) at the n + 1 nodes; the last node repeats interval n."""
    fc = integrate_frames(c)
    idx = np.minimum(np.arange(c.n + 1), c.n - 1)
    return np.column_stack([fc.t_grid, fc.positions, c.v[idx], c.kappa[idx]])


def band_rows(b):
    t = np.repeat(b.t_grid, b.m + 1)
    theta = np.tile(b.theta_grid, b.n + 1)
    return np.column_stack([t, theta, b.points.reshape(-1, 3)])


def emit_plot_data(obj, format="csv", space=None):
    """Plot data for a curve, a band or a homotopy family.

    Curves and bands give text.  A family gives a mapping from file name to
    text: one curve file per member plus ``manifest.json``.
    """
    if format not in ("csv", "json"):
        raise InvalidInputError("format must be 'csv' or 'json'", format=format)
    if isinstance(obj, CurveSamples):
        rows = curve_rows(obj)
        header = ["t", "x", "y", "z", "v", "kappa"]
    elif isinstance(obj, BandGrid):
        rows = band_rows(obj)
        header = ["t", "theta", "x", "y", "z"]
    elif isinstance(obj, homotopy.HomotopyPath):
        return family_files(obj, space if space is not None else obj.space)
    else:
        raise InvalidInputError("cannot emit plot data for this object", type=type(obj).__name__)
    if format == "csv":
        return _csv_text(header, rows)
    return json.dumps([dict(zip(header, map(float, r))) for r in rows]) + "\n"


def sha256_text(text):
    return hashlib.sha256(text.encode()).hexdigest()


def family_files(path, s, inputs=None, command=None):
    if s is None:
        raise InvalidInputError("a family needs a space to write curve files")
    files = {}
    entries = []
    width = max(3, len(str(len(path.curves) - 1)))
    for i, (t, c) in enumerate(zip(path.s_grid, path.curves)):
        name = f"curve_{i:0{width}d}.json"
        text = emit_curve_file(c, s)
        files[name] = text
        entries.append({"s": float(t), "file": name, "sha256": sha256_text(text)})
    manifest = {
        "kind": "family",
        "command": command or [],
        "space": s.to_json(),
        "curves": entries,
        "inputs": inputs or {},
    }
    files[MANIFEST_NAME] = json.dumps(manifest, indent=1) + "\n"
    return files


# ---------------------------------------------------------------------------
# command implementations


def _read(path):
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InvalidInputError("cannot read file", path=str(path), detail=exc.strerror) from None


def _load(path):
    text = _read(path)
    c, s = parse_curve_file(text)
    return c, s, {str(path): sha256_text(text)}


def _space_from_args(args, default=None):
    k1 = getattr(args, "kappa1", None)
    k2 = getattr(args, "kappa2", None)
    if k1 is None and k2 is None:
        if default is None:
            raise InvalidInputError("--kappa1 and --kappa2 are required")
        return default
    if default is None and (k1 is None or k2 is None):
        raise InvalidInputError("--kappa1 and --kappa2 are required")
    k1 = default.kappa1 if k1 is None else k1
    k2 = default.kappa2 if k2 is None else k2
    return SpaceSpec(k1, k2)


def _write_outputs(files, out_dir):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (out_dir / name).write_text(text)


def _write_single(path, text, argv, inputs):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    manifest = {
        "kind": "output",
        "command": argv,
        "inputs": inputs,
        "outputs": {path.name: sha256_text(text)},
    }
    Path(str(path) + ".manifest.json").write_text(json.dumps(manifest, indent=1) + "\n")


def _emit(args, text, inputs):
    if getattr(args, "out", None):
        _write_single(args.out, text, args.argv, inputs)
    else:
        sys.stdout.write(text)


def _print_json(obj):
    sys.stdout.write(json.dumps(obj, indent=1, default=_json_default) + "\n")


def _json_default(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, np.generic):
        return x.item()
    raise TypeError(type(x).__name__)


def cmd_count(args):
    s = SpaceSpec(args.kappa1, args.kappa2)
    print(component_count(s))


def cmd_classify(args):
    c, s, _ = _load(args.file)
    _print_json(classify_curve(c, s, m=args.m).to_json())


def cmd_invariants(args):
    c, s, _ = _load(args.file)
    fc = integrate_frames(c)
    tol = {} if args.tol is None else {"tol": args.tol}
    report = check_membership(c, s, fc=fc, **tol)
    out = {
        "membership": report.to_json(),
        "total_curvature": total_curvature(c),
        "lifted_sign": lifted_sign(fc, s.boundary_frame) if report.member else None,
        "rotation_number": None,
        "condensed": None,
        "diffuse": None,
        "h": None,
    }
    if report.member:
        reduced, rs = reduce_space(c, s)
        out["reduced_kappa0"] = rs.kappa1.to_json()
        if rs.kappa1.finite:
            k0 = rs.kappa1.value
            try:
                nu, info = rotation_number(reduced, k0, m=args.m, return_info=True)
                out["rotation_number"] = nu
                out["h"] = info.get("h")
            except UnclassifiableError:
                pass
            out["condensed"] = is_condensed(reduced, k0, args.m).condensed
            out["diffuse"] = is_diffuse(reduced, k0, args.m).diffuse
    _print_json(out)


def _require_within(curves, s):
    # files that parse_curve_file would reject are never written
    for i, c in enumerate(curves):
        margin = curvature_margin(c.kappa, s)
        if margin <= 0:
            raise InvalidInputError(
                "generated curvature does not lie strictly between the bounds",
                index=i,
                margin=margin,
                kappa1=s.kappa1.to_json(),
                kappa2=s.kappa2.to_json(),
            )


def cmd_gen(args):
    s = _space_from_args(args)
    if args.n is None:
        args.n = 384 if args.what == "exotic" else 256
    if args.what == "circle":
        c = homotopy.make_circle(args.rho, args.k, args.phase, args.n)
    elif args.what == "exotic":
        c = homotopy.exotic_sphere_family(args.exotic_kappa1, args.p, args.part, args.n)
    elif args.what == "bending" and args.s is not None:
        c = homotopy.bend_k_equator(args.k, args.s, args.n)
    else:
        path = homotopy.bending_family(args.k, np.linspace(0.0, 1.0, args.count), args.n, space=s)
        if not args.out_dir:
            raise InvalidInputError("a bending family needs --out-dir")
        _require_within(path.curves, s)
        files = family_files(path, s, inputs={}, command=args.argv)
        _write_outputs(files, args.out_dir)
        print(str(Path(args.out_dir) / MANIFEST_NAME))
        return
    _require_within([c], s)
    _emit(args, emit_curve_file(c, s), {})


def _translated_space(s, theta):
    """Bounds whose radii are shifted by -theta, saturating at 0 and pi."""
    r1, r2 = s.rho1 - theta, s.rho2 - theta
    k1 = "-inf" if r1 >= np.pi else CurvatureBound(1.0 / np.tan(r1))
    k2 = "+inf" if r2 <= 0 else CurvatureBound(1.0 / np.tan(r2))
    return SpaceSpec(k1, k2)


def cmd_transform(args):
    c, s, inputs = _load(args.file)
    if args.what == "translate":
        c = translate_curve(c, args.theta)
        if not args.keep_bounds:
            s = _translated_space(s, args.theta)
    elif args.what == "add-loops":
        c = homotopy.add_loops_Fn(c, args.loops, args.rho1, args.n_out)
    elif args.what == "insert-loops":
        c = homotopy.insert_loops_at(c, args.t0, args.loops, args.eps, args.rho1)
    elif args.what == "graft":
        if args.t1 is None:
            if not s.kappa1.finite:
                raise NotApplicableError("automatic pair search needs a finite lower bound")
            (t1, t2, ra, rb), _ = homotopy.find_antipodal_caustic_pair(c, s.rho1)
        else:
            t1, ra, t2, rb = args.t1, args.rho_a, args.t2, args.rho_b
        c = homotopy.graft_antipodal(c, t1, t2, ra, rb, args.s)
    _emit(args, emit_curve_file(c, s), inputs)


def _load_manifest(path):
    path = Path(path)
    text = _read(path)
    try:
        manifest = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidPathError("malformed manifest", detail=str(exc)) from None
    if not isinstance(manifest, dict) or "curves" not in manifest:
        raise InvalidPathError("manifest must list curves")
    entries = manifest["curves"]
    if len(entries) < 2:
        raise InvalidPathError("a path needs at least two curves")
    curves, s_grid, spaces = [], [], []
    for e in entries:
        body = _read(path.parent / e["file"])
        if "sha256" in e and sha256_text(body) != e["sha256"]:
            raise InvalidPathError("hash mismatch", file=e["file"])
        c, s = parse_curve_file(body)
        curves.append(c)
        spaces.append(s)
        s_grid.append(float(e["s"]))
    s = spaces[0]
    if "space" in manifest:
        sp = manifest["space"]
        s = SpaceSpec(sp["kappa1"], sp["kappa2"], np.reshape(sp.get("boundary_frame", np.eye(3).ravel()), (3, 3)))
    return homotopy.HomotopyPath(s, s_grid, curves), s


def cmd_validate_path(args):
    path, s = _load_manifest(args.manifest)
    s = _space_from_args(args, default=s)
    report = homotopy.validate_homotopy(path, s, threshold=args.threshold, tol=args.tol)
    out = report.to_json()
    out.pop("memberships")
    out["min_curvature_margin"] = min(m.curvature_margin for m in report.memberships)
    out["max_closure_defect"] = max(m.closure_defect for m in report.memberships)
    _print_json(out)


def cmd_band(args):
    c, s, inputs = _load(args.file)
    fc = integrate_frames(c)
    if args.kind == "regular":
        b = regular_band(fc, s, args.m)
    else:
        reduced, rs = reduce_space(c, s)
        if not rs.kappa1.finite:
            raise NotApplicableError("caustic band needs a finite reduced lower bound")
        b, _ = caustic_band_and_caustic(integrate_frames(reduced), rs.kappa1.value, args.m)
    text = emit_plot_data(b, "csv")
    if args.csv:
        _write_single(args.csv, text, args.argv, inputs)
    else:
        sys.stdout.write(text)


def cmd_plot(args):
    c, _, inputs = _load(args.file)
    text = emit_plot_data(c, args.format)
    if args.out:
        _write_single(args.out, text, args.argv, inputs)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# argument parsing


def _point(text):
    parts = [float(x) for x in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected x,y,z")
    return np.array(parts)


def build_parser():
    p = argparse.ArgumentParser(prog="curvebound", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("count", help="number of components of a space")
    q.add_argument("--kappa1", required=True)
    q.add_argument("--kappa2", required=True)
    q.set_defaults(func=cmd_count)

    for name, func, helptext in (
        ("classify", cmd_classify, "component of a curve"),
        ("invariants", cmd_invariants, "total curvature, rotation number, sign"),
    ):
        q = sub.add_parser(name, help=helptext)
        q.add_argument("file")
        q.add_argument("--m", type=int, default=DEFAULT_M)
        if name == "invariants":
            q.add_argument("--tol", type=float, help="closure tolerance for membership")
        q.set_defaults(func=func)

    q = sub.add_parser("gen", help="generate circles, bending curves or exotic curves")
    q.add_argument("what", choices=["circle", "bending", "exotic"])
    q.add_argument("--kappa1", help="lower curvature bound written to the file")
    q.add_argument("--kappa2", help="upper curvature bound written to the file")
    q.add_argument("--rho", type=float, default=np.pi / 2, help="circle radius")
    q.add_argument("--k", type=int, default=1, help="turns of a circle, or k of the bent k-equator")
    q.add_argument("--phase", type=float, default=0.0, help="starting angle on the circle")
    q.add_argument("--n", type=int, help="intervals (default 256, 384 for exotic)")
    q.add_argument("--s", type=float, help="single bending parameter")
    q.add_argument("--count", type=int, default=64, help="curves in a bending family")
    q.add_argument("--exotic-kappa1", type=float, default=1.2, help="curvature bound of the exotic family")
    q.add_argument("--p", type=_point, default=np.array([0.0, 0.0, 1.0]), help="point of the sphere as x,y,z")
    q.add_argument("--part", choices=["g", "gbar", "f"], default="f")
    q.add_argument("--out", help="curve file (stdout when omitted)")
    q.add_argument("--out-dir", help="directory for a bending family and its manifest")
    q.set_defaults(func=cmd_gen)

    q = sub.add_parser("transform", help="translate, add loops or graft")
    q.add_argument("what", choices=["translate", "add-loops", "insert-loops", "graft"])
    q.add_argument("file")
    q.add_argument("--theta", type=float, default=0.0, help="translation distance")
    q.add_argument("--keep-bounds", action="store_true", help="do not shift the curvature bounds")
    q.add_argument("--loops", type=int, default=1)
    q.add_argument("--rho1", type=float, default=0.5, help="radius of the added loops")
    q.add_argument("--n-out", type=int)
    q.add_argument("--t0", type=float, default=0.5, help="parameter where loops are inserted")
    q.add_argument("--eps", type=float, default=0.05, help="half-width of the window replaced by the loops")
    q.add_argument("--t1", type=float, help="graft parameters; searched for when omitted")
    q.add_argument("--t2", type=float)
    q.add_argument("--rho-a", type=float)
    q.add_argument("--rho-b", type=float)
    q.add_argument("--s", type=float, default=np.pi, help="turning angle of each grafted arc")
    q.add_argument("--out")
    q.set_defaults(func=cmd_transform)

    q = sub.add_parser("validate-path", help="check a family manifest")
    q.add_argument("manifest")
    q.add_argument("--kappa1")
    q.add_argument("--kappa2")
    q.add_argument("--threshold", type=float, default=homotopy.DEFAULT_THRESHOLD, help="largest allowed frame distance between neighbours")
    q.add_argument("--tol", type=float, help="closure tolerance for membership")
    q.set_defaults(func=cmd_validate_path)

    q = sub.add_parser("band", help="band grid as CSV")
    q.add_argument("file")
    q.add_argument("--kind", choices=["regular", "caustic"], default="regular")
    q.add_argument("--m", type=int, default=DEFAULT_M)
    q.add_argument("--csv")
    q.set_defaults(func=cmd_band)

    q = sub.add_parser("plot", help="curve samples as CSV or JSON")
    q.add_argument("file")
    q.add_argument("--format", choices=["csv", "json"], default="csv")
    q.add_argument("--out")
    q.set_defaults(func=cmd_plot)
    return p


def _attach_negative_values(argv):
    # argparse reads "-inf" as an option name; glue it to the preceding flag
    out = []
    for tok in argv:
        if out and out[-1].startswith("--") and "=" not in out[-1] and tok.lower().startswith("-inf"):
            out[-1] = f"{out[-1]}={tok}"
        else:
            out.append(tok)
    return out


@functools.cache
def _parser():
    # building the parser dominates the cost of the cheap commands
    return build_parser()


def run_command(argv):
    """Run one command; returns the exit status."""
    argv = _attach_negative_values(list(argv))
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args.argv = argv
    try:
        args.func(args)
    except InputError as exc:
        sys.stderr.write(json.dumps(exc.to_dict(), default=_json_default) + "\n")
        return 2
    except ComputationError as exc:
        sys.stderr.write(json.dumps(exc.to_dict(), default=_json_default) + "\n")
        return 1
    except CurveboundError as exc:  # pragma: no cover - every error is one of the two families
        sys.stderr.write(json.dumps(exc.to_dict(), default=_json_default) + "\n")
        return 1
    return 0


def main(argv=None):
    sys.exit(run_command(sys.argv[1:] if argv is None else argv))
