from cowbound import toolkit, Command
from cowbound.optimize import honest_gain, optimize_attack_at_gain, perfect_usd_max_gain
from cowbound.states import SEQUENCES
from cowbound.utils.command_utils import timed_status
from cowbound.utils.errors import ConfigValidationException, InfeasibleGainException
from cowbound.utils.output_utils import write_result

COLUMNS = (['gain', 'status', 'qber', 'qber_err']
           + [f'V_{s}' for s in SEQUENCES] + ['V_ave']
           + [f'V_{s}_err' for s in SEQUENCES] + ['V_ave_err']
           + ['gain_bit', 'gain_all', 'q_inc', 'q_p', 'm_min', 'beta2', 'max_gain'])


@toolkit.on_command('frontier')
@timed_status
def handle_frontier(command: Command):
    """
    `frontier --config FILE` - For every gain in `sweep.gain_grid` finds the
    attack with the best visibilities (then lowest QBER) reproducing that
    gain, one row per gain from highest to lowest. Unreachable gains are
    marked infeasible. The footer reports the honest gain and the largest
    gain of the error-free fully trimmed attack.
    """
    config = command.load_config()
    if not config.gain_grid:
        raise ConfigValidationException('sweep.gain_grid', 'frontier needs at least one gain')
    rows = []
    for gain in sorted(config.gain_grid, reverse=True):
        toolkit.logger.info(f'frontier: gain {gain:.6g}')
        try:
            params, stats = optimize_attack_at_gain(config.protocol, gain, config.target,
                                                    settings=config.optimizer)
        except InfeasibleGainException as e:
            rows.append({'gain': gain, 'status': 'infeasible', 'max_gain': e.max_gain})
            continue
        rows.append({'gain': gain, 'status': 'ok', **stats.as_row(), **params.as_row()})
    footer = {
        'honest_gain': honest_gain(config.protocol),
        'perfect_usd_max_gain': perfect_usd_max_gain(config.protocol, config.optimizer),
    }
    path = write_result('frontier', rows, COLUMNS, config.resolved(), config.directory,
                        config.format, footer=footer)
    toolkit.write(path)
