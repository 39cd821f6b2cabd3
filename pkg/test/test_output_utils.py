"""
Tests of result file rendering
"""
import json

import numpy as np

from cowbound.utils.output_utils import columns_of, format_value, render_csv, write_result
from test.helpers import read_csv, read_footer


def test_format_value():
    assert format_value(None) == ''
    assert format_value(0.1) == '0.1'
    assert format_value(np.float64(1e-20)) == '1e-20'
    assert format_value(np.int64(3)) == '3'
    assert format_value(True) == 'true'
    assert format_value(('ok', 'cap-reached')) == 'ok;cap-reached'


def test_render_csv():
    text = render_csv([{'a': 1.5, 'b': None}], ['a', 'b'], {'protocol': {'f': 0.155}},
                      footer={'q_usd': 0.25})
    lines = text.splitlines()
    assert lines[0] == '# protocol:'
    assert lines[1] == '#   f: 0.155'
    assert lines[2] == 'a,b'
    assert lines[3] == '1.5,'
    assert lines[4] == '# q_usd: 0.25'


def test_write_result(tmp_path):
    rows = [{'gain': 0.01, 'status': 'ok'}, {'gain': 0.5, 'status': 'infeasible'}]
    columns = columns_of(rows)
    assert columns == ['gain', 'status']
    path = write_result('frontier', rows, columns, {'seed': 1}, str(tmp_path / 'out'), 'csv',
                        footer={'note': 'x'})
    assert read_csv(path)[1] == {'gain': '0.5', 'status': 'infeasible'}
    assert read_footer(path) == {'note': 'x'}
    path = write_result('frontier', rows, columns, {'seed': 1}, str(tmp_path), 'json')
    with open(path) as result_file:
        document = json.load(result_file)
    assert document['config'] == {'seed': 1}
    assert document['rows'][0] == {'gain': 0.01, 'status': 'ok'}
