import math
from typing import Optional, Tuple

import numpy as np
import pytest

from cowbound.states import SEQUENCES
from test.conftest import MockCowBound
from test.helpers import (
    FAST_OPTIMIZER, FAST_SIM, as_float, read_csv, read_footer, run_command, write_config,
)

GRID_SLACK = 0.01


def test_frontier(cowbound: MockCowBound, tmp_path):
    '''
    Test frontier with one unreachable and one reachable gain
    '''
    path = write_config(tmp_path,
                        protocol={'alpha2': 0.5, 'f': 0.155},
                        target={'objective': 'max_average_visibility'},
                        sim=FAST_SIM, optimizer=FAST_OPTIMIZER,
                        sweep={'gain_grid': [1e-3, 0.99]},
                        output={'directory': str(tmp_path / 'out')})
    assert run_command(cowbound, ['frontier', '--config', path]) == 0
    rows = read_csv(str(tmp_path / 'out' / 'frontier.csv'))
    assert [row['gain'] for row in rows] == ['0.99', '0.001']
    unreachable, reachable = rows
    assert unreachable['status'] == 'infeasible'
    assert 0 < as_float(unreachable['max_gain']) < 0.99
    assert unreachable['qber'] == ''
    assert reachable['status'] == 'ok'
    assert as_float(reachable['gain_bit']) == pytest.approx(1e-3, rel=1e-6)
    assert reachable['qber'] == '0.0'
    footer = read_footer(str(tmp_path / 'out' / 'frontier.csv'))
    assert as_float(footer['honest_gain']) == pytest.approx(0.845 * -math.expm1(-0.25))
    assert 0 < as_float(footer['perfect_usd_max_gain']) < 1 - 0.6675


def test_frontier_needs_gains(cowbound: MockCowBound, tmp_path):
    path = write_config(tmp_path, protocol={'alpha2': 0.5, 'f': 0.155})
    assert run_command(cowbound, ['frontier', '--config', path]) == 2


def _min_visibility(row) -> Optional[Tuple[float, float]]:
    values = [(as_float(row[f'V_{s}']), as_float(row[f'V_{s}_err'])) for s in SEQUENCES]
    if any(value is None for value, _ in values):
        return None
    return min(values, key=lambda pair: pair[0])


def test_frontier_monotone(cowbound: MockCowBound, tmp_path):
    '''
    Along the frontier the QBER does not fall and min V_s does not rise as
    the gain grows, up to statistical error and the optimizer's grid.
    '''
    gains = [float(gain) for gain in np.geomspace(1e-4, 0.05, 12)]
    path = write_config(tmp_path,
                        protocol={'alpha2': 0.5, 'f': 0.155},
                        sim={'n_signals': 40000, 'seed': 2, 'chunk_signals': 8192},
                        optimizer=FAST_OPTIMIZER,
                        sweep={'gain_grid': gains},
                        output={'directory': str(tmp_path / 'out')})
    assert run_command(cowbound, ['frontier', '--config', path]) == 0
    rows = read_csv(str(tmp_path / 'out' / 'frontier.csv'))
    assert len(rows) == 12
    rows = [row for row in reversed(rows) if row['status'] == 'ok']
    assert len(rows) >= 8
    for lower, higher in zip(rows, rows[1:]):
        spread = 4 * math.hypot(as_float(lower['qber_err']), as_float(higher['qber_err']))
        assert as_float(higher['qber']) >= as_float(lower['qber']) - spread - GRID_SLACK
        first, second = _min_visibility(lower), _min_visibility(higher)
        if first is None or second is None:
            continue
        spread = 4 * math.hypot(first[1], second[1])
        assert second[0] <= first[0] + spread + GRID_SLACK
