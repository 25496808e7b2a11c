"""``starslice`` command-line entry point.

Exit status: 0 on success or Pass, 1 if any verdict is Fail, 2 on usage,
configuration or precondition errors, 3 when the outcome is Inconclusive
(or a sweep entry errored) without any Fail.
"""
import argparse
import csv
import hashlib
import io
import json
import math
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

from . import __version__, kernels
from ._parallel import get_threads, set_threads
from .config import (
    ConfigError, build_body, build_density, build_entry, build_function, build_subspace,
    load_json, validate,
)
from .constants import GeneralizedMIntersection, ball_volume, c_nm, lewis_bound
from .distance import bm_distance_upper, distance_to_class, geometric_distance
from .harness import (
    ERROR, EXPLORATORY, FAIL, INCONCLUSIVE, PASS, default_candidates, run_entry, sweep,
)
from .quadrature import max_section, measure_of_section, section_volume, volume, measure_of_body
from .radon import intersection_body_of, radon_transform

CSV_HEADER = ["inequality_id", "n", "m", "family", "p", "d", "lhs", "rhs", "ratio",
              "sigma", "verdict", "seed", "wall_ms"]

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INCONCLUSIVE = 0, 1, 2, 3


class UsageError(Exception):
    pass


def build_id():
    """Short SHA-1 over the package sources, in the style of a git revision."""
    h = hashlib.sha1()
    for path in sorted(Path(__file__).parent.glob("*.py")):
        h.update(path.name.encode())
        h.update(path.read_bytes())
    return h.hexdigest()[:12]


# --------------------------------------------------------------------------
# argument parsing


def _json_or_str(text):
    text = text.strip()
    if text.startswith("{") or text.startswith("["):
        try:
            return load_json(text)
        except ConfigError as e:
            raise argparse.ArgumentTypeError(str(e))
    return text


def _vector(text):
    try:
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _candidates(text):
    v = _json_or_str(text)
    return v if isinstance(v, list) else [s for s in v.split(",") if s]


def _function(text):
    v = _json_or_str(text)
    if isinstance(v, dict):
        return v
    parts = v.split(":")
    try:
        if parts[0] == "constant" and len(parts) in (2, 3):
            return {"kind": "constant", "n": int(parts[1]), "c": float(parts[2]) if len(parts) == 3 else 1.0}
        if parts[0] == "monomial" and len(parts) in (3, 4):
            return {"kind": "monomial", "n": int(parts[1]), "coord": int(parts[2]),
                    "power": int(parts[3]) if len(parts) == 4 else 2}
    except ValueError:
        pass
    raise argparse.ArgumentTypeError(f"cannot parse function {text!r} (constant:N[:C], monomial:N:I[:POW] or JSON)")


def _common_parser():
    S = argparse.SUPPRESS
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--config", help="JSON config file; flags override its values")
    g.add_argument("--seed", type=int, default=S)
    g.add_argument("--threads", type=int, default=S)
    g.add_argument("--output", default=S, help="report path (default: standard output)")
    g.add_argument("--format", choices=("json", "csv"), default=S)
    g.add_argument("--compare", action="store_true",
                   help="comparison mode: omit timestamps, wall times and thread counts")
    q = p.add_argument_group("quadrature")
    q.add_argument("--sphere-samples", dest="sphere_samples", type=int, default=S)
    q.add_argument("--radial-nodes", dest="radial_nodes", type=int, default=S)
    q.add_argument("--subspace-samples", dest="subspace_samples", type=int, default=S)
    q.add_argument("--refine-steps", dest="refine_steps", type=int, default=S)
    q.add_argument("--estimator", choices=("monte-carlo", "stratified-antithetic"), default=S)
    return p


def build_parser():
    S = argparse.SUPPRESS
    common = _common_parser()
    parser = argparse.ArgumentParser(prog="starslice", description="Slicing inequalities for star bodies.")
    parser.add_argument("--version", action="version", version=f"starslice {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_):
        return sub.add_parser(name, parents=[common], help=help_)

    def body(sp, other=False):
        sp.add_argument("--body", type=_json_or_str, default=S, help="shorthand (lp:3:1, ball:3, cube:3) or JSON")
        if other:
            sp.add_argument("--other", type=_json_or_str, default=S, help="second body")

    def density(sp):
        sp.add_argument("--density", type=_json_or_str, default=S,
                        help="constant[:C], gaussian[:SIGMA], gengauss:Q:S or JSON")

    def subspace(sp):
        sp.add_argument("--normal", type=_vector, default=S, help="hyperplane normal, comma separated")
        sp.add_argument("--basis", type=_json_or_str, default=S, help="JSON n x k matrix with orthonormal columns")

    sp = add("volume", "volume (or measure) of a body")
    body(sp), density(sp)
    sp = add("section", "volume and measure of a central section")
    body(sp), density(sp), subspace(sp)
    sp = add("max-section", "maximal section over a Grassmannian")
    body(sp), density(sp)
    sp.add_argument("--m", type=int, default=S)
    sp = add("radon", "spherical Radon transform of an even function")
    sp.add_argument("--function", type=_function, default=S)
    subspace(sp)
    sp = add("intersection-body", "radial grid of the intersection body")
    body(sp)
    sp = add("distance", "geometric or Banach-Mazur distance")
    body(sp, other=True)
    sp.add_argument("--kind", dest="distance_kind", choices=("geometric", "bm", "to-class"), default=S)
    sp.add_argument("--budget", type=int, default=S)
    sp.add_argument("--candidates", type=_candidates, default=S)
    sp.add_argument("--m", type=int, default=S)
    sp = add("constant", "closed-form constants")
    sp.add_argument("--name", choices=("ball-volume", "cnm", "lewis"), required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--m", type=int, default=S)
    sp.add_argument("--p", type=float, default=S)
    sp = add("verify", "check one inequality")
    sp.add_argument("--inequality", default=S,
                    help="hyper, hyper-int, arbmeas, sqrtn2, thm1, main-lp, cor-kint, p-gt-2, stability")
    body(sp, other=True), density(sp)
    sp.add_argument("--m", type=int, default=S)
    sp.add_argument("--d", type=float, default=S)
    sp.add_argument("--k", type=int, default=S)
    sp.add_argument("--candidates", type=_candidates, default=S)
    sp.add_argument("--budget", type=int, default=S)
    add("sweep", "run a batch of verifications from --config")
    return parser


def config_from_args(args):
    """Merge a config file (if any) with command-line flags and validate."""
    raw = {}
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as e:
            raise UsageError(f"cannot read config {args.config}: {e.strerror}")
        raw = load_json(text)
        if not isinstance(raw, dict):
            raise ConfigError("config: expected a JSON object")
        if raw.get("command", args.command) != args.command:
            raise UsageError(f"config command {raw['command']!r} does not match subcommand {args.command!r}")
    raw["command"] = args.command
    if args.command == "sweep" and "plan" not in raw:
        raise UsageError("sweep needs --config with a 'plan' list")
    given = vars(args)
    for key in ("seed", "threads", "body", "other", "density", "m", "d", "k", "inequality",
                "candidates", "budget", "distance_kind", "function"):
        if key in given:
            raw[key] = given[key]
    if "normal" in given and "basis" in given:
        raise UsageError("give either --normal or --basis, not both")
    if "normal" in given:
        raw["subspace"] = {"normal": given["normal"]}
    if "basis" in given:
        raw["subspace"] = {"basis": given["basis"]}
    if args.command == "constant":
        raw["constant"] = {k: given[k] for k in ("name", "n", "m", "p") if k in given}
    quad = dict(raw.get("quadrature") or {})
    for key in ("sphere_samples", "radial_nodes", "subspace_samples", "refine_steps", "estimator"):
        if key in given:
            quad[key] = given[key]
    if quad:
        raw["quadrature"] = quad
    out = dict(raw.get("output") or {})
    if "output" in given:
        out["path"] = given["output"]
    if "format" in given:
        out["format"] = given["format"]
    if out:
        raw["output"] = out
    return validate(raw)


# --------------------------------------------------------------------------
# execution


def _exit_for(verdicts):
    if FAIL in verdicts:
        return EXIT_FAIL
    if INCONCLUSIVE in verdicts or ERROR in verdicts:
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def _run_command(cfg, quad):
    cmd = cfg.command
    if cmd in ("verify", "sweep"):
        entries = [cfg.to_dict()] if cmd == "verify" else cfg.plan
        plan = [build_entry(e, quad) for e in entries]
        if cmd == "verify":
            reports = [run_entry(plan[0], quad)]
        else:
            reports = sweep(plan, quad)
        return {"reports": reports}, _exit_for([r.verdict for r in reports])
    if cmd == "constant":
        c = cfg.constant
        if c["name"] == "ball-volume":
            value = ball_volume(c["n"])
        elif c["name"] == "cnm":
            value = c_nm(c["n"], c["m"])
        else:
            value = lewis_bound(c["n"], math.inf if c["p"] == "inf" else c["p"])
        return {"result": {**c, "value": value}}, EXIT_OK
    if cmd == "radon":
        g = build_function(cfg.function)
        return {"result": {"transform": radon_transform(g, build_subspace(cfg.subspace), quad).to_dict()}}, EXIT_OK

    K = build_body(cfg.body, quad)
    if cmd == "volume":
        res = {"volume": volume(K, quad).to_dict(), "closed_form": K.closed_form_volume() is not None}
        f = build_density(cfg.density)
        if f.constant_value != 1.0:
            res["measure"] = measure_of_body(K, f, quad).to_dict()
        return {"result": res}, EXIT_OK
    if cmd == "section":
        H = build_subspace(cfg.subspace)
        f = build_density(cfg.density)
        return {"result": {"volume": section_volume(K, H, quad).to_dict(),
                           "measure": measure_of_section(K, H, f, quad).to_dict()}}, EXIT_OK
    if cmd == "max-section":
        r = max_section(K, build_density(cfg.density), cfg.m, quad)
        return {"result": {"estimate": r.estimate.to_dict(), "sampled_best": r.sampled_best.to_dict(),
                           "subspace": r.subspace.basis.tolist(), "evaluations": r.evaluations,
                           "lower_bound": True}}, EXIT_OK
    if cmd == "intersection-body":
        G = intersection_body_of(K, quad)
        return {"result": {"nodes": G.nodes.tolist(), "values": G.values.tolist(),
                           "std_errors": G.std_errors.tolist(),
                           "min": float(G.values.min()), "max": float(G.values.max())}}, EXIT_OK
    # distance
    if cfg.distance_kind == "geometric":
        r = geometric_distance(K, build_body(cfg.other, quad), seed=cfg.seed)
    elif cfg.distance_kind == "bm":
        r = bm_distance_upper(K, build_body(cfg.other, quad), budget=cfg.budget, seed=cfg.seed)
    else:
        cands = (default_candidates(K.dim) if cfg.candidates is None
                 else [build_body(c, quad) for c in cfg.candidates])
        r = distance_to_class(K, GeneralizedMIntersection(cfg.m), cands, budget=cfg.budget, seed=cfg.seed)
    return {"result": r.to_dict()}, EXIT_OK


def run(cfg):
    """Execute a validated config; returns ``(exit_code, document)``.

    The document's ``metadata`` entries (timestamp, wall time, threads) are
    the only parts that vary between identical runs.
    """
    if cfg.threads is not None:
        set_threads(cfg.threads)
    quad = cfg.quad()
    t0 = time.perf_counter()
    body, code = _run_command(cfg, quad)
    doc = {
        "command": cfg.command,
        "provenance": {
            "version": __version__,
            "build_id": build_id(),
            "config_hash": cfg.config_hash(),
            "config": {k: v for k, v in cfg.to_dict().items() if k not in ("threads", "output")},
            "seed": cfg.seed,
            "quadrature": quad.to_dict(),
            "backend": kernels.BACKEND,
        },
        **body,
        "metadata": {
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "wall_ms": round(1000.0 * (time.perf_counter() - t0), 3),
            "threads": get_threads(),
        },
    }
    return code, doc


def to_json(doc, compare=False):
    def conv(x):
        if hasattr(x, "to_dict") and hasattr(x, "verdict"):
            return x.to_dict(compare=compare)
        raise TypeError(f"cannot serialise {type(x).__name__}")

    d = dict(doc)
    if compare:
        d.pop("metadata", None)
    return json.dumps(d, indent=2, sort_keys=True, default=conv, allow_nan=False) + "\n"


def _cell(x):
    if x is None or (isinstance(x, float) and not math.isfinite(x)):
        return ""
    return repr(x) if isinstance(x, float) else str(x)


def to_csv(doc, compare=False):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in doc["reports"]:
        p = r.parameters
        w.writerow([_cell(v) for v in (
            r.inequality_id, p.get("n"), p.get("m"), p.get("family"),
            p.get("k") if p.get("p") is None and p.get("k") is not None else p.get("p"),
            p.get("d"),
            None if r.lhs is None else r.lhs.value,
            None if r.rhs is None else r.rhs.value,
            r.ratio, r.sigma, r.verdict, r.metadata.get("seed"),
            None if compare else r.metadata.get("wall_ms"),
        )])
    return buf.getvalue()


def emit(doc, cfg, compare=False):
    text = to_csv(doc, compare) if cfg.output["format"] == "csv" else to_json(doc, compare)
    path = cfg.output["path"]
    if path is None:
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text)
    except OSError as e:
        raise UsageError(f"cannot write report {path}: {e.strerror}")


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        code, doc = run(cfg)
        emit(doc, cfg, compare=args.compare)
    except (UsageError, ConfigError, ValueError, ArithmeticError) as e:
        print(f"starslice: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    return code


if __name__ == "__main__":
    sys.exit(main())
