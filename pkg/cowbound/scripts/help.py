from cowbound import toolkit, Command
from cowbound.utils.command_utils import get_helper_docs


@toolkit.on_command('help')
def handle_help(command: Command):
    """
    `help [COMMAND]` - Display the helper docstring for the given command. If
    unspecified, will display the helper docstrings for all commands.
    """
    helper_docs = get_helper_docs(command.arg)
    if len(helper_docs) == 0:
        message = 'Could not find any helper docstrings.'
    else:
        message = '\n'.join(helper_docs)
    toolkit.write(message)
