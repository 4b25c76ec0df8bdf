import json

import pytest

from darkcavity.config import ScenarioConfig, load_schema, shipped_scenarios
from darkcavity.errors import ConfigError

EXPECTED = {"arhcl_like", "eckart_bare", "gaussian_well_2d", "harmonic", "odd_like", "separable_2d", "symmetric_eckart"}


def test_shipped_scenarios_validate():
    assert set(shipped_scenarios()) == EXPECTED
    for name in shipped_scenarios():
        cfg = ScenarioConfig.load(name)
        assert cfg.name == name
        cfg.grid()
        cfg.static_barrier()


def test_schema_is_loadable():
    assert load_schema()["title"] == "darkcavity scenario"


def test_digest_is_stable():
    a = ScenarioConfig.load("arhcl_like")
    b = ScenarioConfig.from_dict(json.loads(json.dumps(a.document)))
    assert a.digest == b.digest


@pytest.mark.parametrize(
    "mutate",
    [
        lambda d: d.pop("grid"),
        lambda d: d["grid"].update(n_points=4),
        lambda d: d["scaling"].update(theta_center=2.0),
        lambda d: d.update(unexpected=1),
        lambda d: d["channel"].update(mu=-1.0),
        lambda d: d["channel"]["static_barrier"].update(model="morse"),
        lambda d: d["grid"].update(x_min=30.0),
    ],
)
def test_malformed_configs_raise(mutate):
    doc = json.loads(json.dumps(ScenarioConfig.load("arhcl_like").document))
    mutate(doc)
    with pytest.raises(ConfigError):
        ScenarioConfig.from_dict(doc)


def test_missing_config():
    with pytest.raises(ConfigError):
        ScenarioConfig.load("no_such_scenario")
    with pytest.raises(ConfigError):
        ScenarioConfig.load("/nonexistent/path.json")


def test_epsilon_modes():
    cfg = ScenarioConfig.load("arhcl_like")
    eps = cfg.epsilon_values()
    assert eps[0] == 0.0 and len(eps) == 201
    doc = json.loads(json.dumps(cfg.document))
    doc["cavity"]["epsilon"] = {"max": 1e-6, "min": 1e-9, "count": 4, "spacing": "log"}
    assert ScenarioConfig.from_dict(doc).epsilon_values() == pytest.approx([0.0, 1e-9, 10**-7.5, 1e-6])
    doc["cavity"].pop("epsilon")
    doc["cavity"]["geometry_n_molecules"] = [1, 4]
    geo = ScenarioConfig.from_dict(doc).epsilon_values(1e-4, 1e6)
    assert geo[2] == pytest.approx(2 * geo[1])


def test_table_profile_is_fitted_from_shipped_csv():
    cfg = ScenarioConfig.load("odd_like")
    prof = cfg.frequency()
    assert prof.max_residual < 1e-10
    assert len(prof.gaussians) == 2
