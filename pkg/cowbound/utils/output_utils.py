'''
Result files. Every file starts with the fully resolved configuration so a
run can be reproduced from its output alone.
'''
import csv
import enum
import io
import json
import logging
import os
from typing import Any, Dict, List, Mapping, Optional, Sequence

import numpy as np
import yaml

LOGGER = logging.getLogger(__name__)


def format_value(value: Any) -> str:
    '''
    Locale-independent CSV field: floats in shortest round-trip form,
    undefined values as the empty field.
    '''
    if value is None:
        return ''
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, enum.Enum):
        return str(value.value)
    if isinstance(value, (list, tuple)):
        return ';'.join(format_value(item) for item in value)
    return str(value)


def _plain(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(key): _plain(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(item) for item in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, enum.Enum):
        return value.value
    return value


def render_csv(rows: Sequence[Mapping[str, Any]], columns: Sequence[str],
               header: Mapping[str, Any], footer: Optional[Mapping[str, Any]] = None) -> str:
    buffer = io.StringIO()
    for line in yaml.safe_dump(_plain(dict(header)), sort_keys=True).splitlines():
        buffer.write(f'# {line}\n')
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(row.get(column)) for column in columns])
    if footer:
        for key, value in footer.items():
            buffer.write(f'# {key}: {format_value(value)}\n')
    return buffer.getvalue()


def render_json(rows: Sequence[Mapping[str, Any]], columns: Sequence[str],
                header: Mapping[str, Any], footer: Optional[Mapping[str, Any]] = None) -> str:
    document: Dict[str, Any] = {
        'config': _plain(dict(header)),
        'columns': list(columns),
        'rows': [{column: _plain(row.get(column)) for column in columns} for row in rows],
    }
    if footer:
        document['footer'] = _plain(dict(footer))
    return json.dumps(document, indent=2, sort_keys=True) + '\n'


def write_result(name: str, rows: Sequence[Mapping[str, Any]], columns: Sequence[str],
                 header: Mapping[str, Any], directory: str, output_format: str,
                 footer: Optional[Mapping[str, Any]] = None) -> str:
    '''
    Writes `rows` to <directory>/<name>.<format> and returns the path.
    '''
    render = render_json if output_format == 'json' else render_csv
    text = render(rows, columns, header, footer)
    os.makedirs(directory, exist_ok=True)
    path = os.path.join(directory, f'{name}.{output_format}')
    with open(path, 'w', encoding='utf-8', newline='') as result_file:
        result_file.write(text)
    LOGGER.info(f'Wrote {len(rows)} rows to {path}')
    return path


def columns_of(rows: List[Mapping[str, Any]]) -> List[str]:
    '''
    Returns the union of row keys in first-seen order.
    '''
    columns: List[str] = []
    for row in rows:
        for key in row:
            if key not in columns:
                columns.append(key)
    return columns
