import os
import sys
import importlib
import logging
import argparse
from typing import List, Optional
from cowbound.base import toolkit, Command, CowBound # noqa

LOGGER = logging.getLogger("cowbound")


def import_scripts():
    dir_path = os.path.dirname(__file__)
    scripts_dir = os.path.join(dir_path, 'scripts')
    for sub_file in sorted(os.listdir(scripts_dir)):
        if not sub_file.endswith('.py') or sub_file == '__init__.py':
            continue
        module = f'cowbound.scripts.{sub_file[:-3]}'
        importlib.import_module(module)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='cowbound',
        description='Sequential-attack bounds for coherent-one-way QKD')
    parser.add_argument('command',
                        help='One of simulate, frontier, bound, check, discriminate, help')
    parser.add_argument('arg',
                        nargs='?',
                        default=None,
                        help='Optional command argument (e.g. the command name for help)')
    parser.add_argument('--config',
                        dest='config',
                        help='Path of the YAML run configuration')
    parser.add_argument('--seed',
                        dest='seed',
                        type=int,
                        help='Overrides sim.seed')
    parser.add_argument('--out',
                        dest='out',
                        help='Overrides output.directory')
    parser.add_argument('--format',
                        dest='format',
                        choices=('csv', 'json'),
                        help='Overrides output.format')
    parser.add_argument('--replicas',
                        dest='replicas',
                        type=int,
                        help='Number of worker threads; results do not depend on it')
    parser.add_argument('--log_level',
                        dest='log_level',
                        default='INFO',
                        help='Specifies the output logging level to be used '
                             '(i.e. DEBUG, INFO, WARNING, ERROR, CRITICAL)')
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    # Import scripts
    import_scripts()

    # Retrieve the CLI args
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=args.log_level)

    return toolkit.run_command(Command.from_args(args))


if __name__ == "__main__":
    sys.exit(main())
