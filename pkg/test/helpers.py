"""
Handy helpers for testing the toolkit
"""

import csv
import io
import os
from typing import Dict, List, Optional

import yaml

from cowbound import build_parser
from cowbound.base import Command

# Small but complete simulation/optimizer sections for command tests
FAST_SIM = {'n_signals': 8000, 'seed': 1, 'chunk_signals': 4096}
FAST_OPTIMIZER = {'budget': 1, 'm_min_grid': [1, 2], 'q_p_grid': [0.0, 1.0]}


def write_config(directory, name: str = 'run.yaml', **sections) -> str:
    '''
    Writes the given sections as a YAML configuration and returns its path.
    '''
    path = os.path.join(str(directory), name)
    with open(path, 'w', encoding='utf-8') as config_file:
        yaml.safe_dump(sections, config_file, sort_keys=True)
    return path


def run_command(toolkit, argv: List[str]) -> int:
    '''
    Parses argv the way `python -m cowbound` does and runs the command on the
    given toolkit.
    '''
    return toolkit.run_command(Command.from_args(build_parser().parse_args(argv)))


def read_csv(path: str) -> List[Dict[str, str]]:
    '''
    Returns the data rows of a result CSV, skipping the commented header and
    footer.
    '''
    with open(path, encoding='utf-8') as result_file:
        lines = [line for line in result_file if not line.startswith('#')]
    return list(csv.DictReader(io.StringIO(''.join(lines))))


def read_footer(path: str) -> Dict[str, str]:
    footer = {}
    with open(path, encoding='utf-8') as result_file:
        lines = result_file.read().splitlines()
    for line in reversed(lines):
        if not line.startswith('# ') or ': ' not in line:
            break
        key, value = line[2:].rsplit(': ', 1)
        footer[key] = value
    return footer


def as_float(value: str) -> Optional[float]:
    return None if value == '' else float(value)
