"""
Tests of the YAML run configuration
"""
import pytest

from cowbound.optimize import Objective
from cowbound.utils.config_utils import load_config, parse_config, parse_experiment
from cowbound.utils.errors import ConfigValidationException
from test.helpers import write_config

PROTOCOL = {'alpha2': 0.5, 'f': 0.155}


def _invalid(raw, overrides=None) -> ConfigValidationException:
    with pytest.raises(ConfigValidationException) as info:
        parse_config(raw, overrides)
    return info.value


def test_defaults():
    config = parse_config({'protocol': PROTOCOL})
    assert config.protocol.t_B == 0.5
    assert config.protocol.eta == 1.0
    assert config.target.objective is Objective.MAX_MIN_VISIBILITY
    assert config.target.v_th == 1.0
    assert config.sim.n_signals == 200000
    assert config.optimizer.m_min_grid == tuple(range(1, 9))
    assert config.attack is None
    assert config.format == 'csv'
    assert len(config.q_inc_grid) == 21


def test_full_config():
    config = parse_config({
        'protocol': {**PROTOCOL, 't_B': 0.9, 'eta': 0.01, 'delta_t': 1e-9},
        'attack': {'q_inc': 0.7, 'q_p': 1, 'm_min': 3, 'beta2': 2},
        'target': {'objective': 'max_average_visibility', 'q_th': 0.01, 'v_th': 0.98},
        'sim': {'n_signals': 1000, 'estimator': 'runs', 'phase_mode': 'sample'},
        'optimizer': {'budget': 3, 'm_min_grid': [1, 4], 'q_p_grid': [0, 1]},
        'sweep': {'eta_grid': [1.0, 0.1], 'gain_grid': [0.01], 'f_values': [0.1]},
        'visibility_weights': {'d': 1, '01': 1},
        'output': {'directory': 'out', 'format': 'json'},
    })
    assert config.attack.m_min == 3
    assert config.target.objective is Objective.MAX_AVERAGE_VISIBILITY
    assert config.optimizer.sim is config.sim
    assert config.optimizer.weights == {'d': 1.0, '01': 1.0, '0d': 0.0, 'd1': 0.0, 'dd': 0.0}
    assert config.eta_grid == [1.0, 0.1]
    assert config.directory == 'out'


@pytest.mark.parametrize('raw, path', [
    ({'protocol': PROTOCOL, 'extra': 1}, 'extra'),
    ({'protocol': {**PROTOCOL, 'alpha': 1}}, 'protocol.alpha'),
    ({'protocol': {'alpha2': 0.5}}, 'protocol.f'),
    ({'protocol': {**PROTOCOL, 'f': 1.5}}, 'protocol.f'),
    ({'protocol': {**PROTOCOL, 'alpha2': 'bright'}}, 'protocol.alpha2'),
    ({'protocol': PROTOCOL, 'attack': {'q_inc': 0.5, 'q_p': 0.5, 'm_min': 2}}, 'attack.beta2'),
    ({'protocol': PROTOCOL, 'attack': {'q_inc': 0.5, 'q_p': 0.5, 'm_min': 2.5, 'beta2': 1}},
     'attack.m_min'),
    ({'protocol': PROTOCOL, 'sim': {'estimator': 'exact'}}, 'sim.estimator'),
    ({'protocol': PROTOCOL, 'sweep': {'eta_grid': [0.1, 0.5]}}, 'sweep.eta_grid'),
    ({'protocol': PROTOCOL, 'visibility_weights': {'d': 0}}, 'visibility_weights'),
    ({'protocol': PROTOCOL, 'output': {'format': 'xml'}}, 'output.format'),
])
def test_invalid(raw, path):
    assert _invalid(raw).path == path


def test_overrides():
    config = parse_config({'protocol': PROTOCOL, 'sim': {'seed': 1, 'replicas': 1}},
                          {'seed': 7, 'replicas': 4, 'out': 'elsewhere', 'format': 'json',
                           'config': None})
    assert config.sim.seed == 7
    assert config.sim.replicas == 4
    assert config.directory == 'elsewhere'
    assert config.format == 'json'
    resolved = config.resolved()
    assert resolved['sim']['seed'] == 7
    assert 'replicas' not in resolved['sim']


def test_parse_experiment():
    point = parse_experiment({'label': 'x', 'gain': 1e-4, 'qber': 0.03, 'alpha2': 0.5,
                              'f': 0.155, 'visibilities': {'d': 0.98}}, 0)
    assert point.visibilities == {'d': 0.98}
    assert point.v_ave is None
    with pytest.raises(ConfigValidationException) as info:
        parse_experiment({'label': 'y', 'gain': 1e-4, 'alpha2': 0.5, 'f': 0.1}, 1)
    assert 'qber' in info.value.message
    assert 'visibilities or v_ave' in info.value.message
    with pytest.raises(ConfigValidationException):
        parse_experiment({'gain': 1e-4, 'qber': 0.0, 'alpha2': 0.5, 'f': 0.1,
                          'visibilities': {'ddd': 1.0}}, 2)
    with pytest.raises(ConfigValidationException) as info:
        parse_experiment({'gain': 1e-4, 'qber': 0.0, 'alpha2': 0.5, 'f': 0.1, 'v_ave': 1.0,
                          'colour': 'red'}, 3)
    assert info.value.path == 'experiments[3].colour'


def test_load_config(tmp_path):
    path = write_config(tmp_path, protocol=PROTOCOL)
    assert load_config(path).source == path
    with pytest.raises(ConfigValidationException):
        load_config(str(tmp_path / 'missing.yaml'))
    broken = tmp_path / 'broken.yaml'
    broken.write_text('protocol: [unclosed\n')
    with pytest.raises(ConfigValidationException):
        load_config(str(broken))
