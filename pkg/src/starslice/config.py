"""Run configuration: strict JSON parsing, validation and object builders.

A config is one JSON object.  Unknown keys, duplicate keys and
out-of-range values are rejected with the offending path (and line, where
the JSON text gives one).  See ``README.md`` for the full schema.

Body and density specs may be JSON objects or shorthand strings::

    ball:N[:RADIUS]     lp:N:P[:SCALE]   (P may be "inf")     cube:N
    constant[:C]        gaussian[:SIGMA]                      gengauss:Q:S
"""
import hashlib
import json
import math
import re
from dataclasses import asdict, dataclass, field

import numpy as np

from .bodies import EuclideanBall, Ellipsoid, LinearImage, LpBall, RadialGrid, SectionBody, Subspace
from .quadrature import ESTIMATORS, Constant, Gaussian, GeneralizedGaussian, Product, QuadratureSpec

COMMANDS = ("volume", "section", "max-section", "radon", "intersection-body",
            "distance", "constant", "verify", "sweep")
INEQUALITIES = ("hyper", "hyper-int", "arbmeas", "sqrtn2", "thm1", "main-lp",
                "cor-kint", "p-gt-2", "stability")
DISTANCE_KINDS = ("geometric", "bm", "to-class")
CONSTANT_NAMES = ("ball-volume", "cnm", "lewis")
FORMATS = ("json", "csv")

TOP_KEYS = {
    "command", "body", "other", "density", "quadrature", "inequality", "m", "d", "k",
    "candidates", "subspace", "function", "distance_kind", "budget", "constant", "plan",
    "output", "seed", "threads",
}
ENTRY_KEYS = {"inequality", "body", "other", "density", "m", "d", "k", "candidates", "budget", "seed"}
QUAD_KEYS = {"sphere_samples", "radial_nodes", "estimator", "subspace_samples", "refine_steps"}
BODY_KEYS = {
    "ball": {"n", "radius"},
    "lp": {"n", "p", "scale"},
    "cube": {"n", "scale"},
    "ellipsoid": {"axes", "matrix"},
    "linear_image": {"inner", "matrix"},
    "section": {"inner", "basis"},
    "radial_grid": {"nodes", "values", "rule", "origin", "std_errors"},
    "intersection_body": {"of"},
}
DENSITY_KEYS = {
    "constant": {"c"},
    "gaussian": {"sigma"},
    "generalized_gaussian": {"q", "s"},
    "product": {"factors"},
}
FUNCTION_KEYS = {
    "constant": {"n", "c"},
    "monomial": {"n", "coord", "power"},
    "abs_inner": {"direction", "p"},
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """Validated, fully serialisable run description (specs kept as plain data)."""

    command: str
    body: dict = None
    other: dict = None
    density: dict = None
    quadrature: dict = field(default_factory=dict)
    inequality: str = None
    m: int = None
    d: float = None
    k: int = None
    candidates: list = None
    subspace: dict = None
    function: dict = None
    distance_kind: str = "geometric"
    budget: int = 4
    constant: dict = None
    plan: list = None
    output: dict = field(default_factory=lambda: {"path": None, "format": "json"})
    seed: int = 0
    threads: int = None

    def to_dict(self):
        return asdict(self)

    def quad(self):
        return QuadratureSpec(seed=self.seed, **self.quadrature)

    def config_hash(self):
        """SHA-256 of the canonical config, without thread count and output target."""
        d = self.to_dict()
        d.pop("threads")
        d.pop("output")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()


def serialize(config):
    return json.dumps(config.to_dict(), indent=2, sort_keys=True)


# --------------------------------------------------------------------------
# strict JSON


class _Duplicate(Exception):
    def __init__(self, key):
        self.key = key


def _no_duplicates(pairs):
    seen = {}
    for k, v in pairs:
        if k in seen:
            raise _Duplicate(k)
        seen[k] = v
    return seen


def _line_of_duplicate(text, key):
    pat = re.compile(r'"' + re.escape(key) + r'"\s*:')
    hits = [m.start() for m in pat.finditer(text)]
    pos = hits[1] if len(hits) > 1 else (hits[0] if hits else 0)
    return text.count("\n", 0, pos) + 1


def load_json(text):
    try:
        return json.loads(text, object_pairs_hook=_no_duplicates)
    except _Duplicate as e:
        raise ConfigError(f"line {_line_of_duplicate(text, e.key)}: duplicate key {e.key!r}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"line {e.lineno}, column {e.colno}: {e.msg}") from None


# --------------------------------------------------------------------------
# validation helpers


def _fail(path, msg):
    raise ConfigError(f"{path}: {msg}")


def _check_keys(obj, allowed, path):
    if not isinstance(obj, dict):
        _fail(path, f"expected an object, got {type(obj).__name__}")
    for k in obj:
        if k not in allowed:
            _fail(f"{path}.{k}", "unknown key")


def _int(v, path, lo=None):
    if isinstance(v, bool) or not isinstance(v, int):
        _fail(path, f"expected an integer, got {v!r}")
    if lo is not None and v < lo:
        _fail(path, f"must be >= {lo}, got {v}")
    return v


def _real(v, path, positive=False, lo=None):
    if v == "inf":
        v = math.inf
    if isinstance(v, bool) or not isinstance(v, (int, float)) or math.isnan(v):
        _fail(path, f"expected a number, got {v!r}")
    if positive and not v > 0:
        _fail(path, f"must be > 0, got {v}")
    if lo is not None and v < lo:
        _fail(path, f"must be >= {lo}, got {v}")
    return float(v)


def _matrix(v, path, square=None):
    try:
        A = np.array(v, dtype=np.float64)
    except (TypeError, ValueError):
        _fail(path, "expected a numeric matrix")
    if A.ndim != 2 or not np.all(np.isfinite(A)):
        _fail(path, "expected a finite 2-d matrix")
    if square and A.shape[0] != A.shape[1]:
        _fail(path, "matrix must be square")
    return A.tolist()


def _shorthand_body(s, path):
    parts = s.split(":")
    try:
        fam = parts[0]
        if fam == "ball" and len(parts) in (2, 3):
            spec = {"family": "ball", "n": int(parts[1])}
            if len(parts) == 3:
                spec["radius"] = float(parts[2])
            return spec
        if fam == "lp" and len(parts) in (3, 4):
            p = "inf" if parts[2] == "inf" else float(parts[2])
            spec = {"family": "lp", "n": int(parts[1]), "p": p}
            if len(parts) == 4:
                spec["scale"] = float(parts[3])
            return spec
        if fam == "cube" and len(parts) == 2:
            return {"family": "cube", "n": int(parts[1])}
    except ValueError:
        pass
    _fail(path, f"cannot parse body shorthand {s!r} (ball:N[:R], lp:N:P[:S], cube:N)")


def _shorthand_density(s, path):
    parts = s.split(":")
    try:
        if parts[0] == "constant" and len(parts) <= 2:
            return {"kind": "constant", "c": float(parts[1]) if len(parts) == 2 else 1.0}
        if parts[0] == "gaussian" and len(parts) <= 2:
            return {"kind": "gaussian", "sigma": float(parts[1]) if len(parts) == 2 else 1.0}
        if parts[0] == "gengauss" and len(parts) == 3:
            return {"kind": "generalized_gaussian", "q": float(parts[1]), "s": float(parts[2])}
    except ValueError:
        pass
    _fail(path, f"cannot parse density shorthand {s!r} (constant[:C], gaussian[:SIGMA], gengauss:Q:S)")


def body_spec(v, path="body"):
    """Normalised body spec (shorthands expanded, ``cube`` mapped to ``lp`` with ``p = inf``)."""
    if isinstance(v, str):
        v = _shorthand_body(v, path)
    if not isinstance(v, dict) or "family" not in v:
        _fail(path, "expected a body spec with a 'family' key")
    fam = v["family"]
    if fam not in BODY_KEYS:
        _fail(f"{path}.family", f"unknown family {fam!r}")
    _check_keys(v, BODY_KEYS[fam] | {"family"}, path)
    if fam == "ball":
        return {"family": "ball", "n": _int(v.get("n"), f"{path}.n", 1),
                "radius": _real(v.get("radius", 1.0), f"{path}.radius", positive=True)}
    if fam in ("lp", "cube"):
        p = "inf" if fam == "cube" else v.get("p")
        pv = _real(p, f"{path}.p", positive=True)
        return {"family": "lp", "n": _int(v.get("n"), f"{path}.n", 1),
                "p": "inf" if math.isinf(pv) else pv,
                "scale": _real(v.get("scale", 1.0), f"{path}.scale", positive=True)}
    if fam == "ellipsoid":
        if ("axes" in v) == ("matrix" in v):
            _fail(path, "give exactly one of 'axes' or 'matrix'")
        if "axes" in v:
            axes = v["axes"]
            if not isinstance(axes, list) or not axes:
                _fail(f"{path}.axes", "expected a non-empty list")
            return {"family": "ellipsoid",
                    "axes": [_real(a, f"{path}.axes[{i}]", positive=True) for i, a in enumerate(axes)]}
        return {"family": "ellipsoid", "matrix": _matrix(v["matrix"], f"{path}.matrix", square=True)}
    if fam == "linear_image":
        return {"family": "linear_image", "inner": body_spec(v.get("inner"), f"{path}.inner"),
                "matrix": _matrix(v.get("matrix"), f"{path}.matrix", square=True)}
    if fam == "section":
        return {"family": "section", "inner": body_spec(v.get("inner"), f"{path}.inner"),
                "basis": _matrix(v.get("basis"), f"{path}.basis")}
    if fam == "intersection_body":
        return {"family": "intersection_body", "of": body_spec(v.get("of"), f"{path}.of")}
    out = {"family": "radial_grid", "nodes": _matrix(v.get("nodes"), f"{path}.nodes")}
    vals = v.get("values")
    if not isinstance(vals, list):
        _fail(f"{path}.values", "expected a list")
    out["values"] = [_real(x, f"{path}.values[{i}]", positive=True) for i, x in enumerate(vals)]
    out["rule"] = v.get("rule")
    out["origin"] = v.get("origin")
    out["std_errors"] = v.get("std_errors")
    return out


def body_dim(spec):
    fam = spec["family"]
    if fam in ("ball", "lp"):
        return spec["n"]
    if fam == "ellipsoid":
        return len(spec["axes"]) if "axes" in spec else len(spec["matrix"])
    if fam == "linear_image":
        return body_dim(spec["inner"])
    if fam == "section":
        return len(spec["basis"][0])
    if fam == "intersection_body":
        return body_dim(spec["of"])
    return len(spec["nodes"][0])


def density_spec(v, path="density"):
    if v is None:
        return {"kind": "constant", "c": 1.0}
    if isinstance(v, str):
        v = _shorthand_density(v, path)
    if not isinstance(v, dict) or v.get("kind") not in DENSITY_KEYS:
        _fail(path, f"expected a density spec with kind in {sorted(DENSITY_KEYS)}")
    kind = v["kind"]
    _check_keys(v, DENSITY_KEYS[kind] | {"kind"}, path)
    if kind == "constant":
        return {"kind": kind, "c": _real(v.get("c", 1.0), f"{path}.c", lo=0.0)}
    if kind == "gaussian":
        return {"kind": kind, "sigma": _real(v.get("sigma", 1.0), f"{path}.sigma", positive=True)}
    if kind == "generalized_gaussian":
        return {"kind": kind, "q": _real(v.get("q", 1.0), f"{path}.q", positive=True),
                "s": _real(v.get("s", 1.0), f"{path}.s", positive=True)}
    fs = v.get("factors")
    if not isinstance(fs, list) or len(fs) != 2:
        _fail(f"{path}.factors", "a product needs exactly two factors")
    return {"kind": kind, "factors": [density_spec(f, f"{path}.factors[{i}]") for i, f in enumerate(fs)]}


def _quad_spec(v, path="config.quadrature"):
    v = {} if v is None else v
    _check_keys(v, QUAD_KEYS, path)
    out = {}
    for key in ("sphere_samples", "radial_nodes", "subspace_samples"):
        if key in v:
            out[key] = _int(v[key], f"{path}.{key}", 1)
    if "refine_steps" in v:
        out["refine_steps"] = _int(v["refine_steps"], f"{path}.refine_steps", 0)
    if "estimator" in v:
        if v["estimator"] not in ESTIMATORS:
            _fail(f"{path}.estimator", f"expected one of {list(ESTIMATORS)}")
        out["estimator"] = v["estimator"]
    return out


def _function_spec(v, path="function"):
    if not isinstance(v, dict) or v.get("kind") not in FUNCTION_KEYS:
        _fail(path, f"expected a function spec with kind in {sorted(FUNCTION_KEYS)}")
    kind = v["kind"]
    _check_keys(v, FUNCTION_KEYS[kind] | {"kind"}, path)
    if kind == "constant":
        return {"kind": kind, "n": _int(v.get("n"), f"{path}.n", 2), "c": _real(v.get("c", 1.0), f"{path}.c")}
    if kind == "monomial":
        n = _int(v.get("n"), f"{path}.n", 2)
        coord = _int(v.get("coord", 0), f"{path}.coord", 0)
        power = _int(v.get("power", 2), f"{path}.power", 0)
        if coord >= n:
            _fail(f"{path}.coord", "coordinate index out of range")
        if power % 2:
            _fail(f"{path}.power", "power must be even")
        return {"kind": kind, "n": n, "coord": coord, "power": power}
    direction = v.get("direction")
    if not isinstance(direction, list) or len(direction) < 2:
        _fail(f"{path}.direction", "expected a vector")
    return {"kind": kind, "direction": [_real(x, f"{path}.direction[{i}]") for i, x in enumerate(direction)],
            "p": _real(v.get("p", 1.0), f"{path}.p", positive=True)}


def _subspace_spec(v, n, path="subspace"):
    _check_keys(v, {"basis", "normal"}, path)
    if ("basis" in v) == ("normal" in v):
        _fail(path, "give exactly one of 'basis' (n x k, orthonormal columns) or 'normal'")
    if "normal" in v:
        nv = [_real(x, f"{path}.normal[{i}]") for i, x in enumerate(v["normal"])]
        if n is not None and len(nv) != n:
            _fail(f"{path}.normal", f"expected {n} components")
        return {"normal": nv}
    B = _matrix(v["basis"], f"{path}.basis")
    if n is not None and len(B) != n:
        _fail(f"{path}.basis", f"expected {n} rows")
    try:
        Subspace(np.array(B))
    except ValueError as e:
        _fail(f"{path}.basis", str(e))
    return {"basis": B}


def _codim(m, n, path):
    m = _int(m, path)
    if n is not None and not 1 <= m <= n - 1:
        _fail(path, f"codimension out of range: need 1 <= m <= n-1, got m={m}, n={n}")
    if m < 1:
        _fail(path, "codimension out of range")
    return m


def _entry(v, path, top=None):
    """Validate the verifier fields shared by ``verify`` and each sweep entry."""
    top = top or {}
    out = {}
    ineq = v.get("inequality", top.get("inequality"))
    if ineq not in INEQUALITIES:
        _fail(f"{path}.inequality", f"expected one of {list(INEQUALITIES)}, got {ineq!r}")
    out["inequality"] = ineq
    if v.get("body") is None:
        _fail(f"{path}.body", "required")
    out["body"] = body_spec(v["body"], f"{path}.body")
    n = body_dim(out["body"])
    out["other"] = None if v.get("other") is None else body_spec(v["other"], f"{path}.other")
    if ineq == "thm1":
        if out["other"] is None:
            _fail(f"{path}.other", "thm1 needs the enclosing body K as 'other'")
        if v.get("d") is None:
            _fail(f"{path}.d", "thm1 needs d")
    if out["other"] is not None and body_dim(out["other"]) != n:
        _fail(f"{path}.other", "dimension differs from body")
    out["density"] = density_spec(v.get("density"), f"{path}.density")
    m_default = 1
    out["m"] = _codim(v.get("m", m_default) if v.get("m") is not None else m_default, n, f"{path}.m")
    out["d"] = None if v.get("d") is None else _real(v["d"], f"{path}.d", lo=1.0)
    if ineq == "cor-kint":
        out["k"] = _int(v.get("k", 1), f"{path}.k", 1)
        if out["k"] >= n:
            _fail(f"{path}.k", "k must be < n")
    else:
        out["k"] = None if v.get("k") is None else _int(v["k"], f"{path}.k", 1)
    cands = v.get("candidates")
    if cands is not None:
        if not isinstance(cands, list) or not cands:
            _fail(f"{path}.candidates", "expected a non-empty list")
        cands = [body_spec(c, f"{path}.candidates[{i}]") for i, c in enumerate(cands)]
    out["candidates"] = cands
    out["budget"] = _int(v.get("budget", 4), f"{path}.budget", 1)
    return out


def validate(raw):
    """Validate a decoded config object and return a :class:`RunConfig`."""
    _check_keys(raw, TOP_KEYS, "config")
    cmd = raw.get("command")
    if cmd not in COMMANDS:
        _fail("config.command", f"expected one of {list(COMMANDS)}, got {cmd!r}")
    cfg = RunConfig(command=cmd)
    cfg.seed = _int(raw.get("seed", 0), "config.seed", 0)
    if raw.get("threads") is not None:
        cfg.threads = _int(raw["threads"], "config.threads", 1)
    cfg.quadrature = _quad_spec(raw.get("quadrature"))
    out = raw.get("output") or {}
    _check_keys(out, {"path", "format"}, "config.output")
    fmt = out.get("format", "json")
    if fmt not in FORMATS:
        _fail("config.output.format", f"expected one of {list(FORMATS)}")
    if fmt == "csv" and cmd not in ("verify", "sweep"):
        _fail("config.output.format", "csv output is only available for verify and sweep")
    cfg.output = {"path": out.get("path"), "format": fmt}

    n = None
    if raw.get("body") is not None:
        cfg.body = body_spec(raw["body"], "config.body")
        n = body_dim(cfg.body)
    if raw.get("other") is not None:
        cfg.other = body_spec(raw["other"], "config.other")
    if cmd in ("volume", "section", "max-section", "intersection-body", "distance", "verify") and cfg.body is None:
        _fail("config.body", f"required for {cmd}")
    if cmd in ("volume", "section", "max-section", "verify") or raw.get("density") is not None:
        cfg.density = density_spec(raw.get("density"), "config.density")

    if cmd == "section":
        if raw.get("subspace") is None:
            _fail("config.subspace", "required for section")
        cfg.subspace = _subspace_spec(raw["subspace"], n, "config.subspace")
    elif cmd == "max-section":
        cfg.m = _codim(raw.get("m", 1), n, "config.m")
    elif cmd == "radon":
        cfg.function = _function_spec(raw.get("function", {"kind": "constant", "n": 3}), "config.function")
        fn_dim = cfg.function["n"] if "n" in cfg.function else len(cfg.function["direction"])
        if raw.get("subspace") is None:
            _fail("config.subspace", "required for radon")
        cfg.subspace = _subspace_spec(raw["subspace"], fn_dim, "config.subspace")
    elif cmd == "distance":
        kind = raw.get("distance_kind", "geometric")
        if kind not in DISTANCE_KINDS:
            _fail("config.distance_kind", f"expected one of {list(DISTANCE_KINDS)}")
        cfg.distance_kind = kind
        cfg.budget = _int(raw.get("budget", 4), "config.budget", 1)
        if kind != "to-class" and cfg.other is None:
            _fail("config.other", f"{kind} distance needs a second body")
        if cfg.other is not None and body_dim(cfg.other) != n:
            _fail("config.other", "dimension differs from body")
        if kind == "to-class":
            cfg.m = _codim(raw.get("m", 1), n, "config.m")
            cands = raw.get("candidates")
            if cands is not None:
                cfg.candidates = [body_spec(c, f"config.candidates[{i}]") for i, c in enumerate(cands)]
    elif cmd == "constant":
        c = raw.get("constant")
        _check_keys(c, {"name", "n", "m", "p"}, "config.constant")
        name = c.get("name")
        if name not in CONSTANT_NAMES:
            _fail("config.constant.name", f"expected one of {list(CONSTANT_NAMES)}")
        spec = {"name": name, "n": _int(c.get("n"), "config.constant.n", 1)}
        if name == "cnm":
            spec["m"] = _codim(c.get("m", 1), spec["n"], "config.constant.m")
        if name == "lewis":
            p = _real(c.get("p"), "config.constant.p", positive=True)
            if not p > 2:
                _fail("config.constant.p", "the Lewis bound needs p > 2")
            spec["p"] = "inf" if math.isinf(p) else p
        cfg.constant = spec
    elif cmd == "verify":
        e = _entry(raw, "config")
        cfg.inequality, cfg.body, cfg.other, cfg.density = e["inequality"], e["body"], e["other"], e["density"]
        cfg.m, cfg.d, cfg.k, cfg.candidates, cfg.budget = e["m"], e["d"], e["k"], e["candidates"], e["budget"]
    elif cmd == "sweep":
        plan = raw.get("plan")
        if not isinstance(plan, list):
            _fail("config.plan", "sweep needs a list of entries")
        entries = []
        for i, v in enumerate(plan):
            path = f"config.plan[{i}]"
            _check_keys(v, ENTRY_KEYS, path)
            e = _entry(v, path)
            e["seed"] = None if v.get("seed") is None else _int(v["seed"], f"{path}.seed", 0)
            entries.append(e)
        cfg.plan = entries
    return cfg


def parse_config(text):
    """Parse and validate a JSON config document."""
    return validate(load_json(text))


# --------------------------------------------------------------------------
# builders


def build_body(spec, quad=None):
    fam = spec["family"]
    if fam == "ball":
        return EuclideanBall(spec["n"], spec.get("radius", 1.0))
    if fam == "lp":
        p = math.inf if spec["p"] == "inf" else spec["p"]
        return LpBall(spec["n"], p, spec.get("scale", 1.0))
    if fam == "ellipsoid":
        return Ellipsoid.from_axes(spec["axes"]) if "axes" in spec else Ellipsoid(np.array(spec["matrix"]))
    if fam == "linear_image":
        return LinearImage(build_body(spec["inner"], quad), np.array(spec["matrix"]))
    if fam == "section":
        return SectionBody(build_body(spec["inner"], quad), np.array(spec["basis"]))
    if fam == "intersection_body":
        from .radon import intersection_body_of

        return intersection_body_of(build_body(spec["of"], quad), quad or QuadratureSpec())
    se = spec.get("std_errors")
    return RadialGrid(np.array(spec["nodes"]), np.array(spec["values"]), rule=spec.get("rule"),
                      origin=spec.get("origin"), std_errors=None if se is None else np.array(se))


def build_density(spec):
    kind = spec["kind"]
    if kind == "constant":
        return Constant(spec["c"])
    if kind == "gaussian":
        return Gaussian(spec["sigma"])
    if kind == "generalized_gaussian":
        return GeneralizedGaussian(spec["q"], spec["s"])
    a, b = (build_density(f) for f in spec["factors"])
    return Product(a, b)


def build_function(spec):
    from .radon import SphericalFunction

    if spec["kind"] == "constant":
        return SphericalFunction.constant(spec["n"], spec["c"])
    if spec["kind"] == "monomial":
        return SphericalFunction.monomial(spec["n"], spec["coord"], spec["power"])
    return SphericalFunction.abs_inner(spec["direction"], spec["p"])


def build_subspace(spec):
    if "normal" in spec:
        return Subspace.hyperplane(np.array(spec["normal"]))
    return Subspace(np.array(spec["basis"]))


def build_entry(e, quad):
    """Turn a validated verifier entry into a :class:`harness.PlanEntry`."""
    from .harness import PlanEntry

    ineq = e["inequality"]
    L = build_body(e["body"], quad)
    f = build_density(e["density"])
    cands = None if e.get("candidates") is None else [build_body(c, quad) for c in e["candidates"]]
    if ineq in ("hyper-int",):
        kw = {"K": L}
    elif ineq in ("hyper", "arbmeas", "sqrtn2"):
        kw = {"K": L, "f": f}
    elif ineq == "thm1":
        kw = {"L": L, "K": build_body(e["other"], quad), "d": e["d"], "m": e["m"], "f": f}
    elif ineq == "main-lp":
        kw = {"L": L, "m": e["m"], "f": f, "d": e["d"], "candidates": cands, "budget": e["budget"]}
    elif ineq == "cor-kint":
        kw = {"L": L, "k": e["k"], "m": e["m"], "f": f, "d": e["d"], "candidates": cands,
              "budget": e["budget"]}
    elif ineq == "p-gt-2":
        kw = {"L": L, "m": e["m"], "f": f}
    else:
        kw = {"K": L, "g": f, "m": e["m"]}
    return PlanEntry(ineq, kw, e.get("seed"))
