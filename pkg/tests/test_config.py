import pytest
from pydantic import ValidationError

from qherm.config import EngineConfig, RunConfig, load_engine_config
from qherm.parallel import chunked, run_ordered
from qherm.reporting import field_table, key_value_lines


def test_default_yaml_matches_dataclass():
    assert load_engine_config() == EngineConfig()


def test_yaml_overrides_and_unknown_keys(tmp_path):
    path = tmp_path / "cfg.yaml"
    path.write_text("group_cap: 50\nsampled_pairs: 3\nunused: true\n")
    cfg = load_engine_config(str(path))
    assert cfg.group_cap == 50 and cfg.sampled_pairs == 3
    assert cfg.spectrum_chunk == EngineConfig().spectrum_chunk


def test_run_config_validation():
    assert RunConfig(q=8).k == 3
    with pytest.raises(ValidationError):
        RunConfig(q=32)
    with pytest.raises(ValidationError):
        RunConfig(q=2, mode="partial")


def test_run_ordered_keeps_order():
    assert run_ordered(lambda x: x * x, range(20), threads=4) == [x * x for x in range(20)]
    assert [len(r) for r in chunked(10, 4)] == [4, 4, 2]


def test_report_helpers(gf4):
    assert key_value_lines({"QH": True, "spectrum": {9: 40}}) == ["QH=true", "spectrum={9:40}"]
    assert len(field_table(gf4)) == 4


def test_sampled_mode_requires_seed():
    with pytest.raises(ValidationError):
        RunConfig(q=2, mode="sampled")
    assert RunConfig(q=2, mode="sampled", seed=3).seed == 3
    assert RunConfig(q=2).seed is None
