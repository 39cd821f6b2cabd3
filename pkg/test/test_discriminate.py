import pytest

from test.conftest import MockCowBound
from test.helpers import as_float, read_csv, read_footer, run_command, write_config


def test_discriminate(cowbound: MockCowBound, tmp_path):
    '''
    Test discriminate writes the error/inconclusive trade-off
    '''
    path = write_config(tmp_path, protocol={'alpha2': 0.5, 'f': 0.155},
                        discriminate={'q_inc_grid': [0.0, 0.3, 1.0]})
    assert run_command(cowbound, ['discriminate', '--config', path,
                                  '--out', str(tmp_path)]) == 0
    result = str(tmp_path / 'discriminate.csv')
    rows = read_csv(result)
    assert [row['strategy'] for row in (rows[0], rows[2])] == ['med', 'usd']
    errors = [as_float(row['avg_error']) for row in rows]
    assert errors[0] >= errors[1] >= errors[2] == 0.0
    assert rows[2]['c_0'] == '0.0'
    footer = read_footer(result)
    assert as_float(footer['q_usd']) == pytest.approx(0.6675, abs=1e-3)
    assert as_float(footer['med_error']) <= as_float(footer['pgm_error'])
    assert as_float(footer['med_error']) == pytest.approx(errors[0])
    assert footer['degenerate'] == 'false'


def test_discriminate_degenerate(cowbound: MockCowBound, tmp_path):
    path = write_config(tmp_path, protocol={'alpha2': 0.0, 'f': 0.155},
                        discriminate={'q_inc_grid': [0.0]})
    assert run_command(cowbound, ['discriminate', '--config', path,
                                  '--out', str(tmp_path)]) == 0
    footer = read_footer(str(tmp_path / 'discriminate.csv'))
    assert footer['degenerate'] == 'true'
    assert footer['q_usd'] == '1.0'
