import json
import os

from test.conftest import MockCowBound
from test.helpers import FAST_SIM, read_csv, run_command, write_config

# q_usd is about 0.6675 at this operating point, so q_inc = 0.75 is error-free
PERFECT = {
    'protocol': {'alpha2': 0.5, 'f': 0.155},
    'attack': {'q_inc': 0.75, 'q_p': 1.0, 'm_min': 1, 'beta2': 3.0},
    'sim': FAST_SIM,
}


def _simulate(cowbound: MockCowBound, tmp_path, name: str, *flags, **config) -> str:
    out = str(tmp_path / name)
    path = write_config(tmp_path, f'{name}.yaml', **config)
    assert run_command(cowbound, ['simulate', '--config', path, '--out', out, *flags]) == 0
    return os.path.join(out, 'simulate.json' if 'json' in flags else 'simulate.csv')


def test_simulate_perfect(cowbound: MockCowBound, tmp_path):
    '''
    Test simulate with an error-free fully trimmed attack
    '''
    result = _simulate(cowbound, tmp_path, 'perfect', **PERFECT)
    assert result in cowbound.test_output
    row = read_csv(result)[0]
    assert row['qber'] == '0.0'
    assert row['V_01'] == '1.0'
    assert float(row['gain_bit']) > 0
    assert float(row['honest_gain_bit']) > 0


def test_simulate_reproducible(cowbound: MockCowBound, tmp_path):
    '''
    Same configuration and seed give byte-identical output, whatever the
    number of workers.
    '''
    result = _simulate(cowbound, tmp_path, 'repeat', **PERFECT)
    with open(result, 'rb') as result_file:
        first = result_file.read()
    _simulate(cowbound, tmp_path, 'repeat', '--replicas', '3', **PERFECT)
    with open(result, 'rb') as result_file:
        assert result_file.read() == first


def test_simulate_json(cowbound: MockCowBound, tmp_path):
    result = _simulate(cowbound, tmp_path, 'json', '--format', 'json', '--seed', '4',
                       **PERFECT)
    with open(result) as result_file:
        document = json.load(result_file)
    assert document['config']['sim']['seed'] == 4
    assert document['rows'][0]['qber'] == 0.0


def test_simulate_missing_field(cowbound: MockCowBound, tmp_path):
    '''
    A missing attack field is a validation error and writes nothing
    '''
    attack = {key: value for key, value in PERFECT['attack'].items() if key != 'beta2'}
    path = write_config(tmp_path, protocol=PERFECT['protocol'], attack=attack)
    out = tmp_path / 'out'
    assert run_command(cowbound, ['simulate', '--config', path, '--out', str(out)]) == 2
    assert not out.exists()


def test_simulate_without_attack(cowbound: MockCowBound, tmp_path):
    path = write_config(tmp_path, protocol=PERFECT['protocol'])
    assert run_command(cowbound, ['simulate', '--config', path]) == 2


def test_simulate_without_config(cowbound: MockCowBound):
    assert run_command(cowbound, ['simulate']) == 2
    assert cowbound.test_output == ''
