import pytest
from hypothesis import given
from hypothesis import strategies as st

from aircons.errors import ConfigError
from aircons.harness.config import SimConfig, dump_config, load_config, parse_config


def test_empty_text_gives_defaults():
    cfg = parse_config("")
    assert cfg == SimConfig()
    assert (cfg.n_followers, cfg.power_dbm, cfg.bandwidth) == (10, 23.0, 20e6)
    assert (cfg.consensus_rounds, cfg.round_spacing, cfg.rho) == (6, 915e-6, 0.9)


def test_derived_quantities():
    cfg = SimConfig()
    assert cfg.consensus_latency == pytest.approx(5.49e-3)
    assert cfg.subcarrier_count == 333
    assert cfg.norm_len == 55.0
    assert cfg.power_watts == pytest.approx(0.19953, rel=1e-4)
    assert cfg.n_ticks == 30_000
    assert cfg.ticks(cfg.broadcast_interval) == 10


def test_rho_out_of_range_names_field():
    with pytest.raises(ConfigError) as exc:
        parse_config("rho = 1.5")
    assert exc.value.field == "rho"


def test_unknown_key_reports_line():
    with pytest.raises(ConfigError) as exc:
        parse_config("# header\nrho = 0.5\nbogus = 1\n")
    assert exc.value.line == 3 and exc.value.field == "bogus"
    assert "line 3" in str(exc.value)


def test_malformed_and_duplicate_lines():
    with pytest.raises(ConfigError) as exc:
        parse_config("rho 0.5")
    assert exc.value.line == 1
    with pytest.raises(ConfigError) as exc:
        parse_config("rho = 0.5\nrho = 0.6")
    assert exc.value.line == 2
    with pytest.raises(ConfigError) as exc:
        parse_config("n_followers = ten")
    assert exc.value.field == "n_followers"


def test_interval_must_sit_on_the_tick_grid():
    with pytest.raises(ConfigError) as exc:
        SimConfig(broadcast_interval=0.0105)
    assert exc.value.field == "broadcast_interval"
    SimConfig(broadcast_interval=0.02, radar_interval=0.005)


def test_neighbor_override():
    cfg = parse_config("neighbors = 1:2; 3:1,2")
    sets = cfg.neighbor_sets("aircons")
    assert sets[1] == (2,) and sets[3] == (1, 2) and sets[5] == (3, 4, 6, 7)
    assert cfg.neighbor_sets("benchmark")[1] == (0,)
    for bad in ("1:1", "1:99", "x:2", "2:"):
        with pytest.raises(ConfigError):
            parse_config(f"neighbors = {bad}")


def test_initial_offsets():
    cfg = parse_config("initial_offsets = 0.5, -0.25")
    assert cfg.initial_offsets == (0.5, -0.25)
    with pytest.raises(ConfigError):
        SimConfig(n_followers=1, initial_offsets=(1.0, 2.0))


def test_bool_fields():
    assert parse_config("reciprocal = true").reciprocal is True
    with pytest.raises(ConfigError):
        parse_config("reciprocal = maybe")


def test_load_sources(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("seed = 7\n")
    assert load_config(path).seed == 7
    assert load_config(str(path)).seed == 7
    assert load_config("seed = 8").seed == 8
    assert load_config({"seed": 9, "rho": 0.3}).rho == 0.3
    assert load_config(None) == SimConfig()
    with pytest.raises(FileNotFoundError):
        load_config(str(tmp_path / "missing.cfg"))


def test_dump_is_canonical_and_idempotent():
    text = dump_config(parse_config("rho = 0.25\nseed = 3\nreciprocal = yes"))
    assert dump_config(parse_config(text)) == text
    assert "reciprocal = true\n" in text and "rho = 0.25\n" in text


@given(
    rho=st.floats(0.01, 0.99),
    seed=st.integers(0, 2 ** 63 - 1),
    gap=st.floats(0.5, 20.0),
    offsets=st.lists(st.floats(-1, 1), max_size=3),
    mode=st.sampled_from(["exact", "paper"]),
)
def test_round_trip(rho, seed, gap, offsets, mode):
    cfg = SimConfig(rho=rho, seed=seed, target_gap=gap, initial_offsets=tuple(offsets), pattern_mode=mode)
    assert parse_config(dump_config(cfg)) == cfg
