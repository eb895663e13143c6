import json

import pytest
from pydantic import ValidationError

from safe_evolver.config import EvolutionConfig, load_evolution_config
from safe_evolver.core.errors import ConfigError


def _write(tmp_path, body):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(body))
    return path


def test_defaults_and_overrides(tmp_path):
    path = _write(tmp_path, {"population_size": 10, "seed": 5})
    cfg = load_evolution_config(path, seed=None, log_path="out.jsonl")
    assert cfg.population_size == 10
    assert cfg.seed == 5
    assert cfg.log_path == "out.jsonl"
    assert cfg.offspring_per_parent == 1
    assert cfg.mutation_weights.change_initial == 1.0

    assert load_evolution_config(path, seed=99).seed == 99


@pytest.mark.parametrize("body, fragment", [
    ({"population_size": 0}, "population_size"),
    ({"seed": -1}, "seed"),
    ({"seed": 2**64}, "seed"),
    ({"generations": 10}, "generations"),
    ({"mutation_weights": {"add_state": 0, "delete_state": 0, "change_transition": 0,
                           "change_output": 0, "change_initial": 0}}, "mutation weight"),
    ({"mutation_weights": {"add_state": -1}}, "add_state"),
])
def test_invalid_configs(tmp_path, body, fragment):
    with pytest.raises(ConfigError) as exc:
        load_evolution_config(_write(tmp_path, body))
    assert fragment in str(exc.value)


def test_unreadable_config(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_evolution_config(tmp_path / "missing.json")


def test_config_is_frozen():
    cfg = EvolutionConfig()
    with pytest.raises(ValidationError):
        cfg.seed = 3


def test_config_with_invalid_utf8(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_bytes(b'{"task": "t\xffnk"}')
    with pytest.raises(ConfigError, match="not valid UTF-8"):
        load_evolution_config(path)
