'''
Strict YAML run configuration.

Every section is checked against a whitelist of keys and every value is
range-checked before any computation starts; unknown keys are an error.
'''
import math
import os
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Mapping, Optional, Tuple

import numpy as np
import yaml

from cowbound.attack import AttackParams, SimSettings
from cowbound.optimize import ExperimentPoint, Objective, OptimizationTarget, OptimizerSettings
from cowbound.states import SEQUENCES, ProtocolParams
from cowbound.utils.errors import ConfigValidationException, InvalidParameterException

FORMATS = ('csv', 'json')

SCHEMA: Dict[str, Tuple[str, ...]] = {
    'protocol': ('alpha2', 'f', 't_B', 'eta', 'delta_t'),
    'attack': ('q_inc', 'q_p', 'm_min', 'beta2'),
    'target': ('objective', 'q_th', 'v_th'),
    'sim': ('n_signals', 'seed', 'replicas', 'estimator', 'phase_mode', 'chunk_signals',
            'run_length_tilt'),
    'optimizer': ('budget', 'm_min_grid', 'q_p_grid', 'beta2_max', 'gain_rtol'),
    'sweep': ('eta_grid', 'gain_grid', 'f_values'),
    'visibility_weights': SEQUENCES,
    'experiments': (),
    'discriminate': ('q_inc_grid',),
    'output': ('directory', 'format'),
}
EXPERIMENT_KEYS = ('label', 'gain', 'qber', 'visibilities', 'v_ave', 'alpha2', 'f')


@dataclass
class RunConfig:
    protocol: ProtocolParams
    target: OptimizationTarget
    sim: SimSettings
    optimizer: OptimizerSettings
    attack: Optional[AttackParams] = None
    eta_grid: List[float] = field(default_factory=list)
    gain_grid: List[float] = field(default_factory=list)
    f_values: List[float] = field(default_factory=list)
    weights: Optional[Dict[str, float]] = None
    experiments: List[Any] = field(default_factory=list)
    q_inc_grid: List[float] = field(default_factory=list)
    directory: str = 'results'
    format: str = 'csv'
    source: Optional[str] = None

    def resolved(self) -> Dict[str, Any]:
        '''
        Returns the fully resolved configuration, defaults included.
        '''
        p = self.protocol
        resolved: Dict[str, Any] = {
            'protocol': {'alpha2': p.alpha2, 'f': p.f, 't_B': p.t_B, 'eta': p.eta,
                         'delta_t': p.delta_t},
            'target': {'objective': self.target.objective.value, 'q_th': self.target.q_th,
                       'v_th': self.target.v_th},
            'sim': {'n_signals': self.sim.n_signals, 'seed': self.sim.seed,
                    'replicas': self.sim.replicas, 'estimator': self.sim.estimator,
                    'phase_mode': self.sim.phase_mode,
                    'chunk_signals': self.sim.chunk_signals,
                    'run_length_tilt': self.sim.run_length_tilt},
            'optimizer': {'budget': self.optimizer.budget,
                          'm_min_grid': list(self.optimizer.m_min_grid),
                          'q_p_grid': list(self.optimizer.q_p_grid),
                          'beta2_max': self.optimizer.beta2_max,
                          'gain_rtol': self.optimizer.gain_rtol},
            'sweep': {'eta_grid': list(self.eta_grid), 'gain_grid': list(self.gain_grid),
                      'f_values': list(self.f_values)},
            'visibility_weights': dict(self.weights) if self.weights else None,
            'experiments': list(self.experiments),
            'discriminate': {'q_inc_grid': list(self.q_inc_grid)},
            'output': {'directory': self.directory, 'format': self.format},
        }
        if self.attack is not None:
            resolved['attack'] = self.attack.as_row()
        # Replicas only change the worker count, never the results.
        del resolved['sim']['replicas']
        return resolved


def _section(raw: Mapping, name: str) -> Dict[str, Any]:
    value = raw.get(name)
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ConfigValidationException(name, 'must be a mapping')
    unknown = sorted(set(value) - set(SCHEMA[name]))
    if unknown:
        raise ConfigValidationException(f'{name}.{unknown[0]}', 'unknown key')
    return value


def _number(section: Mapping, path: str, key: str, default=None, required=False,
            integer=False):
    if key not in section or section[key] is None:
        if required:
            raise ConfigValidationException(f'{path}.{key}', 'missing required field')
        return default
    value = section[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigValidationException(f'{path}.{key}', f'expected a number, got {value!r}')
    if integer:
        if int(value) != value:
            raise ConfigValidationException(f'{path}.{key}', f'expected an integer, got {value}')
        return int(value)
    if not math.isfinite(value):
        raise ConfigValidationException(f'{path}.{key}', 'must be finite')
    return float(value)


def _numbers(section: Mapping, path: str, key: str, default=(), integer=False) -> List:
    values = section.get(key)
    if values is None:
        return list(default)
    if not isinstance(values, list):
        raise ConfigValidationException(f'{path}.{key}', 'must be a list')
    return [_number({key: value}, path, key, integer=integer) for value in values]


def _choice(section: Mapping, path: str, key: str, options, default):
    value = section.get(key, default)
    if value not in options:
        raise ConfigValidationException(f'{path}.{key}',
                                        f'must be one of {", ".join(map(str, options))}')
    return value


def _build(path: str, factory: Callable, **kwargs):
    '''
    Calls a domain constructor, reporting its validation errors under the
    configuration path.
    '''
    try:
        return factory(**kwargs)
    except InvalidParameterException as e:
        raise ConfigValidationException(f'{path}.{e.name}', e.reason)


def parse_experiment(raw: Any, index: int) -> ExperimentPoint:
    '''
    Builds one ExperimentPoint; errors name the missing or invalid fields.
    '''
    path = f'experiments[{index}]'
    if not isinstance(raw, dict):
        raise ConfigValidationException(path, 'must be a mapping')
    unknown = sorted(set(raw) - set(EXPERIMENT_KEYS))
    if unknown:
        raise ConfigValidationException(f'{path}.{unknown[0]}', 'unknown key')
    missing = [name for name in ('gain', 'qber', 'alpha2', 'f') if raw.get(name) is None]
    if raw.get('visibilities') is None and raw.get('v_ave') is None:
        missing.append('visibilities or v_ave')
    if missing:
        raise ConfigValidationException(path, f'missing observables: {", ".join(missing)}')
    visibilities = raw.get('visibilities')
    if visibilities is not None:
        if not isinstance(visibilities, dict):
            raise ConfigValidationException(f'{path}.visibilities', 'must be a mapping')
        unknown = sorted(set(map(str, visibilities)) - set(SEQUENCES))
        if unknown:
            raise ConfigValidationException(f'{path}.visibilities.{unknown[0]}',
                                            'unknown sequence')
        visibilities = {str(s): _number({'v': v}, f'{path}.visibilities', 'v')
                        for s, v in visibilities.items()}
    return _build(path, ExperimentPoint,
                  label=str(raw.get('label', f'point-{index}')),
                  gain=_number(raw, path, 'gain'),
                  qber=_number(raw, path, 'qber'),
                  alpha2=_number(raw, path, 'alpha2'),
                  f=_number(raw, path, 'f'),
                  visibilities=visibilities,
                  v_ave=_number(raw, path, 'v_ave'))


def parse_config(raw: Any, overrides: Optional[Mapping[str, Any]] = None,
                 source: Optional[str] = None) -> RunConfig:
    '''
    Validates a loaded YAML document and applies command-line overrides
    (seed, out, format, replicas).
    '''
    overrides = {key: value for key, value in (overrides or {}).items() if value is not None}
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigValidationException('<root>', 'must be a mapping')
    unknown = sorted(set(raw) - set(SCHEMA))
    if unknown:
        raise ConfigValidationException(unknown[0], 'unknown key')

    section = _section(raw, 'protocol')
    protocol = _build('protocol', ProtocolParams,
                      alpha2=_number(section, 'protocol', 'alpha2', required=True),
                      f=_number(section, 'protocol', 'f', required=True),
                      t_B=_number(section, 'protocol', 't_B', 0.5),
                      eta=_number(section, 'protocol', 'eta', 1.0),
                      delta_t=_number(section, 'protocol', 'delta_t'))

    attack = None
    if raw.get('attack') is not None:
        section = _section(raw, 'attack')
        attack = _build('attack', AttackParams,
                        q_inc=_number(section, 'attack', 'q_inc', required=True),
                        q_p=_number(section, 'attack', 'q_p', required=True),
                        m_min=_number(section, 'attack', 'm_min', required=True, integer=True),
                        beta2=_number(section, 'attack', 'beta2', required=True))

    section = _section(raw, 'target')
    objective = _choice(section, 'target', 'objective', [o.value for o in Objective],
                        Objective.MAX_MIN_VISIBILITY.value)
    target = _build('target', OptimizationTarget,
                    objective=Objective(objective),
                    q_th=_number(section, 'target', 'q_th', 0.0),
                    v_th=_number(section, 'target', 'v_th', 1.0))

    section = _section(raw, 'sim')
    defaults = SimSettings()
    sim = _build('sim', SimSettings,
                 n_signals=_number(section, 'sim', 'n_signals', defaults.n_signals, integer=True),
                 seed=overrides.get('seed',
                                    _number(section, 'sim', 'seed', defaults.seed, integer=True)),
                 replicas=overrides.get('replicas', _number(section, 'sim', 'replicas',
                                                            defaults.replicas, integer=True)),
                 estimator=str(section.get('estimator', defaults.estimator)),
                 phase_mode=str(section.get('phase_mode', defaults.phase_mode)),
                 chunk_signals=_number(section, 'sim', 'chunk_signals', defaults.chunk_signals,
                                       integer=True),
                 run_length_tilt=_number(section, 'sim', 'run_length_tilt',
                                         defaults.run_length_tilt))

    weights = None
    if raw.get('visibility_weights') is not None:
        section = _section(raw, 'visibility_weights')
        weights = {s: _number(section, 'visibility_weights', s, 0.0) for s in SEQUENCES}
        if any(w < 0 for w in weights.values()) or not sum(weights.values()) > 0:
            raise ConfigValidationException('visibility_weights',
                                            'weights must be non-negative and not all zero')

    section = _section(raw, 'optimizer')
    base = OptimizerSettings()
    optimizer = _build('optimizer', OptimizerSettings,
                       budget=_number(section, 'optimizer', 'budget', base.budget, integer=True),
                       m_min_grid=tuple(_numbers(section, 'optimizer', 'm_min_grid',
                                                 base.m_min_grid, integer=True)),
                       q_p_grid=tuple(_numbers(section, 'optimizer', 'q_p_grid',
                                               base.q_p_grid)),
                       beta2_max=_number(section, 'optimizer', 'beta2_max', base.beta2_max),
                       gain_rtol=_number(section, 'optimizer', 'gain_rtol', base.gain_rtol),
                       sim=sim,
                       weights=weights)

    section = _section(raw, 'sweep')
    eta_grid = _numbers(section, 'sweep', 'eta_grid')
    gain_grid = _numbers(section, 'sweep', 'gain_grid')
    f_values = _numbers(section, 'sweep', 'f_values')
    if any(not 0.0 < eta <= 1.0 for eta in eta_grid):
        raise ConfigValidationException('sweep.eta_grid', 'values must lie in (0, 1]')
    if any(b >= a for a, b in zip(eta_grid, eta_grid[1:])):
        raise ConfigValidationException('sweep.eta_grid', 'must be strictly decreasing')
    if any(not 0.0 < gain <= 1.0 for gain in gain_grid):
        raise ConfigValidationException('sweep.gain_grid', 'values must lie in (0, 1]')
    if any(not 0.0 < f <= 1.0 for f in f_values):
        raise ConfigValidationException('sweep.f_values', 'values must lie in (0, 1]')

    experiments = raw.get('experiments') or []
    if not isinstance(experiments, list):
        raise ConfigValidationException('experiments', 'must be a list')

    section = _section(raw, 'discriminate')
    q_inc_grid = _numbers(section, 'discriminate', 'q_inc_grid',
                          np.linspace(0.0, 1.0, 21).tolist())
    if any(not 0.0 <= q <= 1.0 for q in q_inc_grid):
        raise ConfigValidationException('discriminate.q_inc_grid', 'values must lie in [0, 1]')

    section = _section(raw, 'output')
    directory = str(overrides.get('out', section.get('directory', 'results')))
    output_format = overrides.get('format', section.get('format', 'csv'))
    if output_format not in FORMATS:
        raise ConfigValidationException('output.format', f'must be one of {", ".join(FORMATS)}')

    return RunConfig(protocol=protocol, target=target, sim=sim, optimizer=optimizer,
                     attack=attack, eta_grid=eta_grid, gain_grid=gain_grid, f_values=f_values,
                     weights=weights, experiments=experiments, q_inc_grid=q_inc_grid,
                     directory=directory, format=output_format, source=source)


def load_config(path: str, overrides: Optional[Mapping[str, Any]] = None) -> RunConfig:
    if not os.path.isfile(path):
        raise ConfigValidationException(path, 'configuration file does not exist')
    with open(path, encoding='utf-8') as config_file:
        try:
            raw = yaml.safe_load(config_file)
        except yaml.YAMLError as e:
            raise ConfigValidationException(path, f'not valid YAML: {e}')
    return parse_config(raw, overrides, source=path)
