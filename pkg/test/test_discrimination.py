"""
Tests of Eve's single-signal measurements
"""
import numpy as np
import pytest
from scipy import optimize
from scipy.spatial.transform import Rotation

from cowbound.discrimination import (
    INCONCLUSIVE_OUTCOME, build_problem, check_povm, intermediate_measurement,
    med_measurement, mixture, pretty_good_measurement, repair_povm, usd_failure_probability,
    usd_measurement,
)
from cowbound.states import ProtocolParams, build_ensemble
from cowbound.utils.errors import InvalidParameterException


def _largest_feasible(gram: np.ndarray, scalings, index: int) -> float:
    '''
    Largest value of scalings[index] in [0, 1] keeping G - diag(c) >= 0, by
    bisection on the smallest eigenvalue.
    '''
    c = np.array(scalings, dtype=float)
    low, high = 0.0, 1.0
    for _ in range(60):
        c[index] = 0.5 * (low + high)
        if np.linalg.eigvalsh(gram - np.diag(c))[0] >= 0:
            low = c[index]
        else:
            high = c[index]
    return low


def _search_usd_failure(gram: np.ndarray, priors: np.ndarray) -> float:
    '''
    Brute-force q_usd over all three scalings. The best success for fixed c0
    (and for fixed c0, c1) is concave, so nested bounded searches find it.
    '''
    def maximise(function, upper):
        result = optimize.minimize_scalar(lambda x: -function(x), bounds=(0.0, upper),
                                          method='bounded', options={'xatol': 1e-13})
        return max(-result.fun, function(0.0), function(upper))

    def best_for_c0(c0):
        def success(c1):
            return priors[1] * c1 + priors[2] * _largest_feasible(gram, [c0, c1, 0.0], 2)
        return priors[0] * c0 + maximise(success, _largest_feasible(gram, [c0, 0.0, 0.0], 1))

    return 1.0 - maximise(best_for_c0, _largest_feasible(gram, [0.0, 0.0, 0.0], 0))


@pytest.mark.parametrize('alpha2', [0.1, 0.25, 0.5, 1.0, 2.0])
def test_usd_failure_matches_search(alpha2):
    p = ProtocolParams(alpha2=alpha2, f=0.155)
    ensemble = build_ensemble(p)
    q_usd = usd_failure_probability(build_problem(ensemble))
    assert q_usd == pytest.approx(_search_usd_failure(ensemble.gram, ensemble.priors), abs=1e-6)


def test_usd_failure_non_increasing_in_alpha2():
    failures = [usd_failure_probability(build_problem(build_ensemble(
        ProtocolParams(alpha2=float(alpha2), f=0.155)))) for alpha2 in np.linspace(0.1, 2.0, 20)]
    assert all(later <= earlier + 1e-7 for earlier, later in zip(failures, failures[1:]))
    assert failures[0] < 1.0


def test_usd_is_error_free(problem):
    model = usd_measurement(problem)
    assert np.array_equal(model.confusion, np.eye(3))
    assert model.avg_error == 0.0
    assert model.is_zero_error
    assert model.q_inc == pytest.approx(usd_failure_probability(problem), abs=1e-9)
    smallest, residual = check_povm(np.array(model.operators))
    assert smallest >= -1e-9
    assert residual <= 1e-9
    # No conclusive outcome fires on a wrong state
    states = problem.embedding
    for i in range(3):
        for j in range(3):
            if i != j:
                assert states[j] @ model.operators[i] @ states[j] == pytest.approx(0, abs=1e-9)


def test_usd_above_failure_probability(problem):
    '''
    Spare conclusive probability above q_usd goes to the least identified
    state, so the decoy is identified too.
    '''
    q_usd = usd_failure_probability(problem)
    assert usd_measurement(problem).conclusive_prob[2] == pytest.approx(0.0, abs=1e-4)
    target = (1 + q_usd) / 2
    model = usd_measurement(problem, target)
    assert model.q_inc == pytest.approx(target, abs=1e-6)
    assert model.avg_error == 0.0
    assert min(model.conclusive_prob) > 0.01
    smallest, residual = check_povm(np.array(model.operators))
    assert smallest >= -1e-9
    assert residual <= 1e-9
    assert np.allclose(usd_measurement(problem, 1.0).conclusive_prob, 0.0)
    with pytest.raises(InvalidParameterException):
        usd_measurement(problem, q_usd / 2)


def test_med_not_worse_than_pgm(problem):
    med = med_measurement(problem)
    pgm = pretty_good_measurement(problem)
    assert med.avg_error <= pgm.avg_error + 1e-12
    assert med.q_inc == pytest.approx(0.0, abs=1e-9)
    smallest, residual = check_povm(np.array(pgm.operators))
    assert smallest >= -1e-9
    assert residual <= 1e-9


def test_med_beats_random_bases(problem):
    '''
    No random orthonormal basis has a lower error than the MED.
    '''
    med = med_measurement(problem)
    states = problem.embedding
    priors = problem.priors
    bases = Rotation.random(2000, random_state=1).as_matrix()
    amplitudes = np.einsum('ja,nab->njb', states, bases)
    diagonal = amplitudes[:, [0, 1, 2], [0, 1, 2]]
    errors = 1.0 - (priors[None, :] * diagonal ** 2).sum(axis=1)
    assert errors.min() >= med.avg_error - 1e-9


def test_intermediate_endpoints(problem):
    assert intermediate_measurement(problem, 0.0).strategy == 'med'
    full = intermediate_measurement(problem, 1.0)
    assert full.avg_error == 0.0
    assert np.allclose(full.conclusive_prob, 0.0)
    with pytest.raises(InvalidParameterException):
        intermediate_measurement(problem, 1.5)


def test_intermediate_tradeoff(problem):
    '''
    Error is non-increasing in q_inc and never above the MED/USD mixture.
    '''
    q_usd = usd_failure_probability(problem)
    med = med_measurement(problem)
    usd = usd_measurement(problem)
    previous = None
    for q_inc in np.linspace(0.0, q_usd, 6):
        model = intermediate_measurement(problem, float(q_inc))
        line = mixture(problem, med, usd, q_inc / usd.q_inc)
        assert model.avg_error <= line.avg_error + 1e-7
        assert model.q_inc == pytest.approx(q_inc, abs=1e-5)
        if previous is not None:
            assert model.avg_error <= previous + 1e-6
        previous = model.avg_error
    assert previous == 0.0


def test_degenerate_ensemble():
    problem = build_problem(build_ensemble(ProtocolParams(alpha2=0.0, f=0.155)))
    assert problem.degenerate
    assert usd_failure_probability(problem) == 1.0
    med = med_measurement(problem)
    assert med.avg_error == pytest.approx(1 - (1 - 0.155) / 2)
    assert intermediate_measurement(problem, 0.3).q_inc == pytest.approx(0.3)


def test_repair_povm(problem):
    pgm = np.array(pretty_good_measurement(problem).operators)
    noisy = pgm + 1e-6 * np.random.default_rng(0).normal(size=pgm.shape)
    repaired = repair_povm(noisy)
    smallest, residual = check_povm(repaired)
    assert smallest >= -1e-12
    assert residual <= 1e-9
    assert np.allclose(repaired[INCONCLUSIVE_OUTCOME], 0.0, atol=1e-5)
