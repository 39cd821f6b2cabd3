from cowbound import toolkit, Command
from cowbound.optimize import check_experiment
from cowbound.states import SEQUENCES
from cowbound.utils.command_utils import timed_status
from cowbound.utils.config_utils import parse_experiment
from cowbound.utils.errors import ConfigValidationException, InvalidParameterException
from cowbound.utils.output_utils import write_result

COLUMNS = (['label', 'verdict', 'note', 'gain', 'measured_qber', 'measured_V_ave',
            'qber'] + [f'V_{s}' for s in SEQUENCES]
           + ['V_ave', 'q_inc', 'q_p', 'm_min', 'beta2'])


@toolkit.on_command('check')
@timed_status
def handle_check(command: Command):
    """
    `check --config FILE` - For every point in `experiments` optimises the
    attack at the measured gain and reports Insecure when the attack's QBER and
    visibilities dominate the measured ones, NotDecidedByThisAttack otherwise.
    Malformed points are reported on their own row.
    """
    config = command.load_config()
    if not config.experiments:
        raise ConfigValidationException('experiments', 'check needs at least one point')
    rows = []
    for index, raw in enumerate(config.experiments):
        try:
            point = parse_experiment(raw, index)
            p = config.protocol.with_values(alpha2=point.alpha2, f=point.f)
        except (ConfigValidationException, InvalidParameterException) as e:
            label = raw.get('label', f'point-{index}') if isinstance(raw, dict) else index
            toolkit.logger.warning(f'check: skipping {label}: {e.message}')
            rows.append({'label': label, 'verdict': 'error', 'note': e.message})
            continue
        verdict = check_experiment(point, p, config.target, settings=config.optimizer)
        row = {'label': point.label, 'verdict': verdict.verdict, 'note': verdict.note,
               'gain': point.gain, 'measured_qber': point.qber,
               'measured_V_ave': point.v_ave}
        if verdict.stats is not None:
            row.update(verdict.stats.as_row())
        if verdict.params is not None:
            row.update(verdict.params.as_row())
        rows.append(row)
    path = write_result('check', rows, COLUMNS, config.resolved(), config.directory,
                        config.format)
    toolkit.write(path)
