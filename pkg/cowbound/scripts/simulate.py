from cowbound import toolkit, Command
from cowbound.attack import run_attack_sim
from cowbound.states import trivial_key_bound
from cowbound.utils.command_utils import timed_status
from cowbound.utils.errors import ConfigValidationException
from cowbound.utils.output_utils import columns_of, write_result


@toolkit.on_command('simulate')
@timed_status
def handle_simulate(command: Command):
    """
    `simulate --config FILE` - Simulates the fixed attack given in the `attack`
    section and writes Bob's expected gain, QBER and visibilities with their
    standard errors.
    """
    config = command.load_config()
    if config.attack is None:
        raise ConfigValidationException('attack', 'simulate needs fixed attack parameters '
                                                  '(q_inc, q_p, m_min, beta2)')
    stats = run_attack_sim(config.protocol, config.attack, settings=config.sim,
                           weights=config.weights)
    honest_gain, _ = trivial_key_bound(config.protocol)
    row = {**config.attack.as_row(), **stats.as_row(), 'honest_gain_bit': honest_gain}
    path = write_result('simulate', [row], columns_of([row]), config.resolved(),
                        config.directory, config.format)
    toolkit.write(path)
