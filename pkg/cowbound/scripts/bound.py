from cowbound import toolkit, Command
from cowbound.optimize import bound_sweep
from cowbound.utils.command_utils import timed_status
from cowbound.utils.errors import ConfigValidationException
from cowbound.utils.output_utils import write_result

COLUMNS = ['f', 'eta', 'alpha_max2', 'R', 'status']


@toolkit.on_command('bound')
@timed_status
def handle_bound(command: Command):
    """
    `bound --config FILE` - Computes alpha_max(f) and the key-rate bound
    R = (1 - f) eta alpha_max2 for every eta in `sweep.eta_grid` (and every f in
    `sweep.f_values`, or the protocol's f), followed by the fitted log-log slope
    of R against eta.
    """
    config = command.load_config()
    if not config.eta_grid:
        raise ConfigValidationException('sweep.eta_grid', 'bound needs at least one eta')
    rows = []
    footer = {}
    for f in config.f_values or [config.protocol.f]:
        sweep = bound_sweep(f, config.eta_grid, config.target, settings=config.optimizer,
                            t_B=config.protocol.t_B)
        for point in sweep.points:
            rows.append({'f': point.f, 'eta': point.eta, 'alpha_max2': point.alpha_max2,
                         'R': point.r, 'status': ';'.join(point.flags) or 'ok'})
        footer[f'f={f!r} loglog_slope'] = sweep.loglog.slope if sweep.loglog else None
        footer[f'f={f!r} alpha_slope'] = sweep.alpha_fit.slope if sweep.alpha_fit else None
        footer[f'f={f!r} alpha_r2'] = sweep.alpha_fit.r2 if sweep.alpha_fit else None
    path = write_result('bound', rows, COLUMNS, config.resolved(), config.directory,
                        config.format, footer=footer)
    toolkit.write(path)
