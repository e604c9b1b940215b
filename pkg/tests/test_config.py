from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from binlat.config import ExperimentConfig, canonical_text, load_config, parse_config

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

BASIC = """
[experiment]
schema_version = 1
n = 200, 500
m = 1, 2
phi = 0.8, -0.2
replications = 50
outputs = table2, table3
"""


def test_parse_basic():
    cfg = parse_config(BASIC)
    assert cfg.n == (200, 500) and cfg.m == (1, 2)
    assert cfg.phi == (0.8, -0.2)
    assert cfg.outputs == ("table2", "table3")
    assert cfg.seed == 20161016 and cfg.C == (1, 2, 4, 8)
    assert cfg.trial_specs == [1, 2]


def test_m_dist():
    cfg = parse_config(BASIC + "m_dist = 1:0.5, 3:0.5\n")
    assert cfg.trial_specs == [{1: 0.5, 3: 0.5}]
    assert cfg.to_dict()["m_dist"] == [[1, 0.5], [3, 0.5]]


def _with(line):
    key = line.split("=")[0].strip()
    kept = [ln for ln in BASIC.splitlines() if not ln.startswith(key + " ")]
    return "\n".join(kept) + "\n" + line + "\n"


@pytest.mark.parametrize("line", [
    "phi = 1.0", "replications = 0", "outputs = table9", "tau0 = -1",
    "moments = fourth", "boundary_rule = nearest", "n = 1", "C = 1, x",
])
def test_invalid_values(line):
    with pytest.raises(ValueError):
        parse_config(_with(line))


def test_duplicate_key_rejected():
    with pytest.raises(ValueError):
        parse_config(BASIC + "seed = 4\nseed = 5\n")


def test_schema_checks():
    with pytest.raises(ValueError):
        parse_config(BASIC.replace("schema_version = 1", "schema_version = 2"))
    with pytest.raises(ValueError):
        parse_config(BASIC.replace("schema_version = 1\n", ""))
    with pytest.raises(ValueError):
        parse_config(BASIC + "replicatons = 5\n")
    with pytest.raises(ValueError):
        parse_config("[other]\nschema_version = 1\n")


def test_hash_ignores_formatting():
    a = parse_config(BASIC)
    b = parse_config(BASIC.replace("n = 200, 500", "n=200,500") + "# comment\n")
    assert a.sha256() == b.sha256()
    assert a.sha256() != a.replace(seed=1).sha256()


@given(st.integers(0, 2 ** 31), st.lists(st.integers(2, 5000), min_size=1, max_size=4))
def test_canonical_round_trip(seed, ns):
    cfg = ExperimentConfig(n=tuple(ns), seed=seed)
    back = parse_config(canonical_text(cfg))
    assert back == cfg


@pytest.mark.parametrize("name", ["table1", "table2", "table3", "analytic"])
def test_shipped_configs_load(name):
    cfg = load_config(CONFIGS / f"{name}.ini")
    assert cfg.outputs == (name,)
    assert cfg.seed == 20161016
