from cowbound import toolkit, Command
from cowbound.discrimination import (
    build_problem, intermediate_measurement, med_measurement, pretty_good_measurement,
    usd_failure_probability,
)
from cowbound.states import build_ensemble
from cowbound.utils.command_utils import timed_status
from cowbound.utils.output_utils import write_result

KINDS = ('0', '1', 'd')
COLUMNS = (['q_inc', 'avg_error', 'strategy'] + [f'c_{j}' for j in KINDS]
           + [f'e_{i}|{j}' for j in KINDS for i in KINDS])


@toolkit.on_command('discriminate')
@timed_status
def handle_discriminate(command: Command):
    """
    `discriminate --config FILE` - Writes q_usd, the minimum error and Eve's
    best measurement for every q_inc in `discriminate.q_inc_grid`, at the
    protocol's alpha2 and f.
    """
    config = command.load_config()
    ensemble = build_ensemble(config.protocol)
    problem = build_problem(ensemble)
    rows = []
    for q_inc in config.q_inc_grid:
        model = intermediate_measurement(problem, q_inc)
        row = {'q_inc': q_inc, 'avg_error': model.avg_error, 'strategy': model.strategy}
        for j, sent in enumerate(KINDS):
            row[f'c_{sent}'] = float(model.conclusive_prob[j])
            for i, reported in enumerate(KINDS):
                row[f'e_{reported}|{sent}'] = float(model.confusion[i, j])
        rows.append(row)
    footer = {
        'q_usd': usd_failure_probability(problem),
        'med_error': med_measurement(problem).avg_error,
        'pgm_error': pretty_good_measurement(problem).avg_error,
        'gram_min_eigenvalue': ensemble.min_eigenvalue,
        'degenerate': problem.degenerate,
    }
    path = write_result('discriminate', rows, COLUMNS, config.resolved(), config.directory,
                        config.format, footer=footer)
    toolkit.write(path)
