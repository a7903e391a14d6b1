import json
import os

import numpy as np
import pytest

from lowmach_mhd import harness as Hn
from lowmach_mhd.compressible import Trajectory

TINY = """
[grid]
n1 = 17
n2 = 8
[physics]
lambdas = 2, 4
T = 0.05
dissipation = split
[data]
kind = ill_prepared
amp_phi = 0.002
"""


def test_parse_defaults_and_overrides():
    cfg = Hn.parse_config("")
    assert cfg.lambdas == (4.0, 8.0, 16.0, 32.0) and (cfg.n1, cfg.n2) == (129, 64)
    cfg = Hn.parse_config(TINY, {"lambdas": (3.0,), "seed": 7, "out_dir": "x"})
    assert cfg.lambdas == (3.0,) and cfg.family.seed == 7 and cfg.family.kind == "ill_prepared"
    assert cfg.measure_subdomain == ((0.0, 0.8), (0.0, 1.0))
    assert cfg.layer_split == pytest.approx(0.005)


@pytest.mark.parametrize(
    "text",
    [
        "[bogus]\na = 1\n",
        "[physics]\nlambdas = 4, 2\n",
        "[physics]\nlambdas = 0.5\n",
        "[physics]\nT = -1\n",
        "[physics]\ncfl = 2\n",
        "[physics]\neos = steam\n",
        "[physics]\ndissipation = heavy\n",
        "[data]\nfoo = 1\n",
        "[data]\nkind = sloppy\n",
        "[measure]\nsubdomain = 0, 0.9, 0, 1\n",
        "[measure]\nsubdomain = 0, 0.5\n",
        "[measure]\nt0 = 2\n",
        "[grid]\nn1 = 3\n",
        "[grid]\nn1 = many\n",
        "not an ini file",
    ],
)
def test_bad_configs(text):
    with pytest.raises(Hn.ConfigError):
        Hn.parse_config(text)


def test_digest_ignores_output_location():
    a = Hn.parse_config(TINY, {"out_dir": "a", "workers": 1})
    b = Hn.parse_config(TINY, {"out_dir": "b", "workers": 2})
    c = Hn.parse_config(TINY, {"seed": 3})
    assert a.digest() == b.digest() != c.digest()


def test_table_csv_round_trip():
    t = Hn.ConvergenceTable()
    for lam in (2.0, 4.0):
        for s in (0.0, 0.5):
            row = {c: 1.0 / 3.0 + lam + s for c in Hn.COLUMNS}
            row.update(lam=lam, t=s)
            t.add(**row)
    back = Hn.ConvergenceTable.from_csv(t.to_csv())
    assert back.rows == t.rows and back.columns == t.columns
    assert back.value("err_v", 4.0, 0.5) == pytest.approx(4.5 + 1 / 3)
    with pytest.raises(KeyError):
        back.value("err_v", 4.0, 0.25)


def test_zero_amplitude_gives_zero_errors():
    cfg = Hn.parse_config(TINY.replace("amp_phi = 0.002", "amp_phi = 0\namp_H = 0\namp_v = 0"))
    res = Hn.run_sweep(cfg)
    for c in ("err_v", "err_q", "err_H", "grad_q_err", "wp_metric"):
        assert np.all(res.table.column(c) == 0), c
    assert res.pg_norm == 0


def test_sweep_isolated_and_deterministic(tmp_path):
    cfg = Hn.parse_config(TINY, {"out_dir": str(tmp_path / "a")})
    one = Hn.run_sweep(cfg)
    single = Hn.run_sweep(Hn.parse_config(TINY, {"lambdas": (4.0,)}))
    # a lambda's rows do not depend on which other lambdas were run
    assert np.array_equal(one.table.column("err_v", 4.0), single.table.column("err_v", 4.0))
    files = sorted(os.listdir(tmp_path / "a"))
    assert files == ["final_lam2.ckpt", "final_lam4.ckpt", "layer.json", "meta.json", "table.csv"]
    meta = json.loads((tmp_path / "a" / "meta.json").read_text())
    assert meta["config_sha256"] == cfg.digest()
    assert set(meta["runs"]) == {"2.0", "4.0"}


def test_compare_requires_common_times():
    g = Hn.parse_config(TINY).grid()
    a = Trajectory(lam=2.0, grid=g)
    b = Trajectory(lam=1.0, grid=g)
    a.append(0.0, np.zeros((7,) + g.shape), None)
    b.append(1.0, np.zeros((6,) + g.shape), None)
    with pytest.raises(ValueError):
        Hn.compare_to_limit(a, b, ((0, 0.8), (0, 1)))


def _table(early, late):
    t = Hn.ConvergenceTable()
    for lam, (e, l) in zip((4.0, 8.0, 16.0), zip(early, late)):
        for s, val in ((0.0, e), (0.02, e), (0.05, l), (0.5, l)):
            row = {c: 0.0 for c in Hn.COLUMNS}
            row.update(lam=lam, t=s, err_v=val)
            t.add(**row)
    return t


def test_layer_detection():
    flagged = Hn.detect_initial_layer(_table([1.0, 1.0, 1.0], [0.4, 0.2, 0.1]), 0.05)
    assert flagged.trends["layer"]
    clean = Hn.detect_initial_layer(_table([0.01, 0.005, 0.0025], [0.01, 0.005, 0.0025]), 0.05)
    assert not clean.trends["layer"]
    assert json.dumps(flagged.to_dict())
