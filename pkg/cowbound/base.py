from functools import wraps
import argparse
import collections
import concurrent.futures
import logging
import sys
from typing import Any, Callable, DefaultDict, Dict, Optional, Type, TypeVar, TextIO
from cowbound.utils.command_utils import UsageSyntaxException, get_helper_doc
from cowbound.utils.errors import EXIT_OK, EXIT_VALIDATION


CmdT = TypeVar('CmdT', bound='Command')
EXIT_FAILURE = 1
OVERRIDE_FLAGS = ('seed', 'out', 'format', 'replicas')


class Command(object):
    def __init__(self, name: str, arg: Optional[str], options: Dict[str, Any]) -> None:
        self.name = name
        self.arg = arg
        self.options = options

    def has_arg(self) -> bool:
        return self.arg is not None

    @classmethod
    def from_args(cls: Type[CmdT], args: argparse.Namespace) -> CmdT:
        return cls(
            name=args.command,
            arg=args.arg,
            options={key: getattr(args, key, None) for key in ('config',) + OVERRIDE_FLAGS}
        )

    @property
    def config_path(self) -> Optional[str]:
        '''
        Returns the path given with --config, if any.
        '''
        return self.options.get('config')

    @property
    def overrides(self) -> Dict[str, Any]:
        '''
        Returns the command-line flags that override configuration values.
        '''
        return {key: self.options.get(key) for key in OVERRIDE_FLAGS
                if self.options.get(key) is not None}

    def load_config(self):
        '''
        Loads the run configuration named by --config. Raises a usage error
        when no configuration was given.
        '''
        from cowbound.utils.config_utils import load_config
        if self.config_path is None:
            raise UsageSyntaxException(f'{self.name} needs --config')
        return load_config(self.config_path, self.overrides)


CommandHandler = Callable[[Command], None]


def protected_property(prop_name: str, attr_name: str):
    """
    Makes a read-only getter called `prop_name` that gets `attr_name`
    """
    def prop_fn(self):
        return getattr(self, attr_name)
    prop_fn.__name__ = prop_name
    return property(prop_fn)


def underscored_getter(s: str) -> Any:
    return protected_property(s, '_' + s)


class CowBound(object):
    executor: concurrent.futures.ThreadPoolExecutor = underscored_getter("executor")

    def __init__(self, logger=None, stream: Optional[TextIO] = None):
        self._executor = concurrent.futures.ThreadPoolExecutor(max_workers=1)
        self.logger = logger or logging.getLogger("cowbound")
        self.stream = stream
        self._command_registry: DefaultDict[str, list] = collections.defaultdict(list)

    def on_command(self, command_name: str):
        def decorator(command_fn):
            '''
            Decorator function which returns a wrapper function that catches any
            UsageSyntaxExceptions and writes the wrapped command's helper doc to
            standard error. Also adds the function as a handler for the given
            command name.
            '''
            @wraps(command_fn)
            def wrapper(command: Command):
                try:
                    return command_fn(command)
                except UsageSyntaxException as e:
                    helper_doc = get_helper_doc(command.name)
                    self.logger.error(str(e) or 'Invalid usage')
                    print(f'usage: {helper_doc}', file=sys.stderr)
                    return EXIT_VALIDATION
            self._command_registry[command_name].append(wrapper)
            return wrapper
        return decorator

    @property
    def commands(self):
        return sorted(self._command_registry)

    def write(self, text: str):
        '''
        Writes command output to the toolkit's stream (standard output by
        default).
        '''
        print(text, file=self.stream or sys.stdout)

    def _execute_catching_error(self, handler: CommandHandler, command: Command) -> int:
        """
        Wraps handler execution so that errors are logged and mapped to the
        exit code of their exception type.
        """
        try:
            result = handler(command)
        except Exception as e:
            exit_code = getattr(e, 'exit_code', None)
            if exit_code is None:
                self.logger.exception(f'Error in handler while processing {command.name}')
                return EXIT_FAILURE
            self.logger.error(getattr(e, 'message', str(e)))
            return exit_code
        return EXIT_OK if result is None else int(result)

    def run_command(self, command: Command) -> int:
        """
        Runs the handlers registered for the command on the executor and
        returns the first non-zero exit code, or 0.
        """
        handlers = self._command_registry.get(command.name)
        if not handlers:
            self.logger.error(f'Unknown command "{command.name}"; '
                              f'available: {", ".join(self.commands)}')
            return EXIT_VALIDATION
        self.logger.info(f'Running {command.name}')
        futures = [self.executor.submit(self._execute_catching_error, handler, command)
                   for handler in handlers]
        exit_codes = [future.result() for future in futures]
        exit_code = next((code for code in exit_codes if code != EXIT_OK), EXIT_OK)
        self.logger.info(f'{command.name} finished with exit code {exit_code}')
        return exit_code


toolkit = CowBound()
