import json

import pytest
from hypothesis import given, settings, strategies as st

from starslice.bodies import LpBall
from starslice.config import ConfigError, build_body, parse_config, serialize


def test_minimal_volume_config():
    cfg = parse_config('{"command": "volume", "body": {"family": "lp", "n": 3, "p": 1}}')
    assert cfg.body == {"family": "lp", "n": 3, "p": 1.0, "scale": 1.0}
    assert cfg.quadrature == {} and cfg.quad().sphere_samples == 20000


def test_codimension_equal_to_dimension_rejected():
    with pytest.raises(ConfigError, match="codimension out of range"):
        parse_config('{"command": "max-section", "body": "ball:3", "m": 3}')


def test_duplicate_key_rejected_with_line():
    text = '{\n  "command": "volume",\n  "body": "ball:3",\n  "body": "ball:4"\n}'
    with pytest.raises(ConfigError, match=r"line 4: duplicate key 'body'"):
        parse_config(text)


def test_unknown_key_reports_path():
    with pytest.raises(ConfigError, match=r"config\.quadrature\.sphere_sample: unknown key"):
        parse_config('{"command": "volume", "body": "ball:3", "quadrature": {"sphere_sample": 5}}')


def test_syntax_error_reports_line():
    with pytest.raises(ConfigError, match="line 2"):
        parse_config('{"command": "volume",\n "body": }')


@pytest.mark.parametrize("body", ['{"family": "lp", "n": 3, "p": 0}', '{"family": "lp", "n": 3, "p": -1}'])
def test_nonpositive_p_rejected(body):
    with pytest.raises(ConfigError, match="must be > 0"):
        parse_config('{"command": "volume", "body": %s}' % body)


def test_nonpositive_sigma_rejected():
    with pytest.raises(ConfigError, match="sigma"):
        parse_config('{"command": "volume", "body": "ball:3", "density": {"kind": "gaussian", "sigma": 0}}')


def test_shorthands():
    cfg = parse_config('{"command": "verify", "inequality": "sqrtn2", "body": "cube:3", "density": "gaussian:2"}')
    assert cfg.body["p"] == "inf"
    assert cfg.density == {"kind": "gaussian", "sigma": 2.0}
    assert isinstance(build_body(cfg.body), LpBall)


def test_thm1_needs_enclosing_body():
    with pytest.raises(ConfigError, match="other"):
        parse_config('{"command": "verify", "inequality": "thm1", "body": "ball:3", "d": 1}')


def test_csv_only_for_reports():
    with pytest.raises(ConfigError, match="csv"):
        parse_config('{"command": "volume", "body": "ball:3", "output": {"format": "csv"}}')


def test_sweep_entries_validated_with_index():
    text = json.dumps({"command": "sweep", "plan": [
        {"inequality": "hyper-int", "body": "ball:3"},
        {"inequality": "hyper-int", "body": "ball:3", "m": 5},
    ]})
    with pytest.raises(ConfigError, match=r"plan\[1\]\.m"):
        parse_config(text)


bodies = st.one_of(
    st.builds(lambda n: f"ball:{n}", st.integers(2, 6)),
    st.builds(lambda n, p: f"lp:{n}:{p}", st.integers(2, 6), st.sampled_from(["0.5", "1", "1.5", "4", "inf"])),
    st.builds(lambda n: {"family": "ellipsoid", "axes": [1.0 + 0.5 * i for i in range(n)]}, st.integers(2, 5)),
)
densities = st.sampled_from(["constant", "gaussian:0.7", "gengauss:1:2", None])


@settings(max_examples=50, deadline=None)
@given(bodies, densities, st.integers(0, 2 ** 31), st.sampled_from(["hyper-int", "arbmeas", "main-lp"]))
def test_roundtrip(body, density, seed, ineq):
    raw = {"command": "verify", "inequality": ineq, "body": body, "seed": seed,
           "quadrature": {"sphere_samples": 1000, "estimator": "stratified-antithetic"}}
    if density is not None:
        raw["density"] = density
    cfg = parse_config(json.dumps(raw))
    again = parse_config(serialize(cfg))
    assert again == cfg
    assert again.config_hash() == cfg.config_hash()
