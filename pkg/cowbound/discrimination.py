'''
Eve's single-signal measurements on the ensemble (BIT0, BIT1, DECOY).

States live in the real 3-dimensional span given by a Cholesky factor of the
Gram matrix: row j of `embedding` is the coordinate vector of state j.
Measurements are four-outcome POVMs stored as a (4, 3, 3) array: identify
BIT0, BIT1, DECOY, or declare the result inconclusive.
'''
import functools
import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import cvxpy as cp
import numpy as np
from scipy import linalg, optimize
from scipy.spatial.transform import Rotation

from cowbound.states import SignalEnsemble
from cowbound.utils.errors import InvalidParameterException, SolverConvergenceException

LOGGER = logging.getLogger(__name__)

INCONCLUSIVE_OUTCOME = 3
# Below this intensity the three states are treated as one.
DEGENERATE_ALPHA2 = 1e-6
ZERO_ERROR_TOL = 1e-9
POVM_TOL = 1e-9
MED_RESTARTS = 32

# Tried in order; SCS settings follow the usual tight-tolerance recipe.
SDP_SOLVERS = (
    ('CLARABEL', {}),
    ('SCS', {'eps_abs': 1e-10, 'eps_rel': 1e-10, 'max_iters': 100000}),
)


@dataclass(frozen=True)
class DiscriminationProblem:
    ensemble: SignalEnsemble
    embedding: np.ndarray = field(repr=False)
    degenerate: bool = False

    @property
    def priors(self) -> np.ndarray:
        return self.ensemble.priors

    @property
    def key(self) -> Tuple[Tuple[float, ...], Tuple[float, ...]]:
        return (tuple(self.ensemble.gram.ravel().tolist()),
                tuple(self.ensemble.priors.tolist()))


@dataclass(frozen=True)
class MeasurementModel:
    '''
    Eve's measurement as seen by the attack: conclusive probability per sent
    state and the confusion matrix conditioned on a conclusive result
    (confusion[i, j] = P(report i | sent j, conclusive)).
    '''
    q_inc: float
    conclusive_prob: np.ndarray
    confusion: np.ndarray
    avg_error: float
    operators: Optional[np.ndarray] = field(default=None, repr=False)
    strategy: str = ''

    @property
    def is_zero_error(self) -> bool:
        return self.avg_error <= ZERO_ERROR_TOL


def _freeze(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


def build_problem(ensemble: SignalEnsemble) -> DiscriminationProblem:
    '''
    Embeds the three states in R^3 through a Cholesky factor of the Gram
    matrix. Near-identical states collapse onto a single unit vector.
    '''
    gram = ensemble.gram
    if 1.0 - gram[0, 1] < -math.expm1(-DEGENERATE_ALPHA2):
        embedding = np.zeros((3, 3))
        embedding[:, 0] = 1.0
        return DiscriminationProblem(ensemble, _freeze(embedding), degenerate=True)
    embedding = linalg.cholesky(gram, lower=True)
    return DiscriminationProblem(ensemble, _freeze(embedding))


def check_povm(operators: np.ndarray) -> Tuple[float, float]:
    '''
    Returns the smallest eigenvalue over all operators and the largest
    deviation of their sum from the identity.
    '''
    smallest = min(float(np.linalg.eigvalsh(op)[0]) for op in operators)
    residual = float(np.abs(operators.sum(axis=0) - np.eye(operators.shape[1])).max())
    return smallest, residual


def repair_povm(operators: np.ndarray) -> np.ndarray:
    '''
    Projects solver output onto a valid POVM: symmetrise, clip negative
    eigenvalues and renormalise by the inverse square root of the sum.
    '''
    cleaned = []
    for op in operators:
        op = 0.5 * (op + op.T)
        values, vectors = np.linalg.eigh(op)
        cleaned.append((vectors * np.clip(values, 0.0, None)) @ vectors.T)
    clipped = np.array(cleaned)
    values, vectors = np.linalg.eigh(clipped.sum(axis=0))
    inv_sqrt = (vectors / np.sqrt(values)) @ vectors.T
    return np.array([inv_sqrt @ op @ inv_sqrt for op in clipped])


def model_from_operators(prob: DiscriminationProblem, operators: np.ndarray,
                         strategy: str) -> MeasurementModel:
    states = prob.embedding
    priors = prob.priors
    # joint[i, j] = <psi_j| Pi_i |psi_j>
    joint = np.einsum('ja,iab,jb->ij', states, operators, states)
    joint = np.clip(joint, 0.0, 1.0)
    conclusive = np.clip(1.0 - joint[INCONCLUSIVE_OUTCOME], 0.0, 1.0)
    confusion = np.eye(3)
    for j in range(3):
        column = joint[:3, j]
        if conclusive[j] > 0 and column.sum() > 0:
            confusion[:, j] = column / column.sum()
    conclusive_mass = float(np.dot(priors, conclusive))
    error_mass = float(np.dot(priors, conclusive * (1.0 - np.diag(confusion))))
    avg_error = error_mass / conclusive_mass if conclusive_mass > 0 else 0.0
    diagonal = np.diag(confusion)
    if np.any(confusion > diagonal[None, :] + 1e-12):
        LOGGER.warning(f'{strategy} measurement has a confusion diagonal that is not '
                       f'dominant: {confusion.round(6).tolist()}')
    return MeasurementModel(
        q_inc=float(1.0 - conclusive_mass),
        conclusive_prob=_freeze(conclusive),
        confusion=_freeze(confusion),
        avg_error=float(max(avg_error, 0.0)),
        operators=_freeze(operators),
        strategy=strategy,
    )


def _solve_sdp(problem: cp.Problem, name: str) -> None:
    installed = cp.installed_solvers()
    attempts = 0
    for solver, options in SDP_SOLVERS:
        if solver not in installed:
            continue
        attempts += 1
        try:
            problem.solve(solver=solver, **options)
        except cp.error.SolverError as e:
            LOGGER.debug(f'{name}: solver {solver} failed: {e}')
            continue
        LOGGER.debug(f'{name}: solver {solver} finished with status {problem.status}')
        if problem.status in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
            return
    raise SolverConvergenceException(name, attempts, math.inf)


def _fit_scalings(gram: np.ndarray, scalings: np.ndarray) -> np.ndarray:
    scalings = np.clip(np.asarray(scalings, dtype=float), 0.0, 1.0)

    def margin(t):
        return float(np.linalg.eigvalsh(gram - t * np.diag(scalings))[0])

    if margin(1.0) < 0.0:
        t = optimize.brentq(margin, 0.0, 1.0, xtol=1e-15)
        scalings = scalings * t * (1.0 - 1e-12)
    return _freeze(scalings)


@functools.lru_cache(maxsize=1024)
def _usd_scalings(key) -> np.ndarray:
    gram = np.array(key[0]).reshape(3, 3)
    priors = np.array(key[1])
    # Pi_j = c_j |psi~_j><psi~_j| is a valid USD POVM iff G - diag(c) >= 0.
    scalings = cp.Variable(3, nonneg=True)
    slack = cp.Variable((3, 3), PSD=True)
    problem = cp.Problem(cp.Maximize(priors @ scalings),
                         [slack == gram - cp.diag(scalings), scalings <= 1])
    _solve_sdp(problem, 'USD')
    return _fit_scalings(gram, scalings.value)


@functools.lru_cache(maxsize=4096)
def _balanced_scalings(key, q_inc: float) -> np.ndarray:
    '''
    Error-free scalings with average conclusive probability 1 - q_inc that
    keep the smallest per-state conclusive probability as large as possible.
    '''
    gram = np.array(key[0]).reshape(3, 3)
    priors = np.array(key[1])
    scalings = cp.Variable(3, nonneg=True)
    floor = cp.Variable()
    slack = cp.Variable((3, 3), PSD=True)
    problem = cp.Problem(cp.Maximize(floor),
                         [slack == gram - cp.diag(scalings), scalings <= 1,
                          scalings >= floor, priors @ scalings == 1.0 - q_inc])
    _solve_sdp(problem, 'balanced USD')
    return _fit_scalings(gram, scalings.value)


def usd_failure_probability(prob: DiscriminationProblem) -> float:
    '''
    Returns the smallest average inconclusive probability of an error-free
    measurement. A degenerate ensemble returns 1.
    '''
    if prob.degenerate:
        LOGGER.warning('Degenerate ensemble: states cannot be unambiguously identified')
        return 1.0
    return float(1.0 - np.dot(prob.priors, _usd_scalings(prob.key)))


def _usd_conclusive(prob: DiscriminationProblem, q_inc: float, q_usd: float) -> np.ndarray:
    if prob.degenerate or q_inc >= 1.0:
        return np.zeros(3)
    optimal = np.array(_usd_scalings(prob.key))
    if q_inc <= q_usd + ZERO_ERROR_TOL:
        return optimal
    try:
        return np.array(_balanced_scalings(prob.key, float(q_inc)))
    except SolverConvergenceException as e:
        LOGGER.warning(f'{e.message} Diluting the optimal error-free measurement instead.')
        return optimal * (1.0 - (q_inc - q_usd) / (1.0 - q_usd))


def usd_measurement(prob: DiscriminationProblem,
                    q_inc: Optional[float] = None) -> MeasurementModel:
    '''
    Returns an error-free measurement. Without q_inc this is the optimal
    unambiguous measurement. A larger q_inc spends the spare conclusive
    probability so that every state, the decoy included, is identified as
    often as possible.
    '''
    q_usd = usd_failure_probability(prob)
    if q_inc is None:
        q_inc = q_usd
    if q_inc < q_usd - ZERO_ERROR_TOL:
        raise InvalidParameterException('q_inc', q_inc,
                                         f'an error-free measurement needs q_inc >= {q_usd:.6g}')
    reciprocal = np.linalg.inv(prob.embedding) if not prob.degenerate else np.zeros((3, 3))
    conclusive = _usd_conclusive(prob, q_inc, q_usd)
    operators = np.zeros((4, 3, 3))
    for j in range(3):
        operators[j] = conclusive[j] * np.outer(reciprocal[:, j], reciprocal[:, j])
    operators[INCONCLUSIVE_OUTCOME] = np.eye(3) - operators[:3].sum(axis=0)
    return MeasurementModel(
        q_inc=float(1.0 - np.dot(prob.priors, conclusive)),
        conclusive_prob=_freeze(conclusive),
        confusion=_freeze(np.eye(3)),
        avg_error=0.0,
        operators=_freeze(operators),
        strategy='usd',
    )


def pretty_good_measurement(prob: DiscriminationProblem) -> MeasurementModel:
    '''
    Square-root measurement Pi_j = P_j rho^-1/2 |psi_j><psi_j| rho^-1/2.
    '''
    if prob.degenerate:
        return _guess_most_likely(prob, q_inc=0.0)
    states = prob.embedding
    rho = states.T @ (prob.priors[:, None] * states)
    values, vectors = np.linalg.eigh(rho)
    inv_sqrt = (vectors / np.sqrt(values)) @ vectors.T
    operators = np.zeros((4, 3, 3))
    for j in range(3):
        vector = math.sqrt(prob.priors[j]) * inv_sqrt @ states[j]
        operators[j] = np.outer(vector, vector)
    return model_from_operators(prob, operators, 'pgm')


def _guess_most_likely(prob: DiscriminationProblem, q_inc: float) -> MeasurementModel:
    guess = int(np.argmax(prob.priors))
    confusion = np.zeros((3, 3))
    confusion[guess, :] = 1.0
    operators = np.zeros((4, 3, 3))
    operators[guess] = (1.0 - q_inc) * np.eye(3)
    operators[INCONCLUSIVE_OUTCOME] = q_inc * np.eye(3)
    return MeasurementModel(
        q_inc=float(q_inc),
        conclusive_prob=_freeze(np.full(3, 1.0 - q_inc)),
        confusion=_freeze(confusion),
        avg_error=float(1.0 - prob.priors[guess]),
        operators=_freeze(operators),
        strategy='degenerate',
    )


def _basis_error(rotvec: np.ndarray, states: np.ndarray, priors: np.ndarray) -> float:
    basis = Rotation.from_rotvec(rotvec).as_matrix()
    amplitudes = np.diag(states @ basis)
    return float(1.0 - np.dot(priors, amplitudes * amplitudes))


def _rotvec_from_operators(operators: np.ndarray) -> np.ndarray:
    basis = np.zeros((3, 3))
    for j in range(3):
        values, vectors = np.linalg.eigh(operators[j])
        basis[:, j] = vectors[:, -1]
    if np.linalg.det(basis) < 0:
        basis[:, 2] *= -1.0
    return Rotation.from_matrix(basis).as_rotvec()


def med_measurement(prob: DiscriminationProblem, restarts: int = MED_RESTARTS,
                    seed: int = 0) -> MeasurementModel:
    '''
    Minimum-error measurement. For linearly independent pure states the
    optimum is a projective measurement, so the search runs over orthonormal
    bases (rotation vectors) from the square-root measurement and `restarts`
    random starts.
    '''
    if prob.degenerate:
        return _guess_most_likely(prob, q_inc=0.0)
    pgm = pretty_good_measurement(prob)
    states = np.array(prob.embedding)
    priors = np.array(prob.priors)
    rng = np.random.default_rng(seed)
    starts = [_rotvec_from_operators(np.array(pgm.operators))]
    for _ in range(restarts):
        axis = rng.normal(size=3)
        starts.append(axis / np.linalg.norm(axis) * rng.uniform(0.0, math.pi))
    best = None
    converged = 0
    spread = math.inf
    for start in starts:
        res = optimize.minimize(_basis_error, start, args=(states, priors),
                                method='Nelder-Mead',
                                options={'xatol': 1e-10, 'fatol': 1e-15, 'maxiter': 5000})
        spread = min(spread, float(np.ptp(res.final_simplex[1])))
        if res.success:
            converged += 1
        if best is None or res.fun < best.fun:
            best = res
    if converged == 0:
        raise SolverConvergenceException('MED', len(starts), spread)
    basis = Rotation.from_rotvec(best.x).as_matrix()
    operators = np.zeros((4, 3, 3))
    for j in range(3):
        operators[j] = np.outer(basis[:, j], basis[:, j])
    model = model_from_operators(prob, operators, 'med')
    if model.avg_error > pgm.avg_error + 1e-12:
        # Cannot happen with the square-root start included; kept as a certificate.
        LOGGER.warning(f'MED search worse than square-root measurement '
                       f'({model.avg_error:.3g} > {pgm.avg_error:.3g})')
        return pgm
    LOGGER.debug(f'MED error {model.avg_error:.10g} ({converged}/{len(starts)} converged)')
    return model


@functools.lru_cache(maxsize=64)
def _med_cached(key, restarts: int, seed: int) -> MeasurementModel:
    return med_measurement(_problem_from_key(key), restarts, seed)


def _problem_from_key(key) -> DiscriminationProblem:
    ensemble = SignalEnsemble(gram=np.array(key[0]).reshape(3, 3), priors=np.array(key[1]))
    return build_problem(ensemble)


def mixture(prob: DiscriminationProblem, first: MeasurementModel,
            second: MeasurementModel, weight: float) -> MeasurementModel:
    '''
    Returns the randomised measurement that runs `second` with probability
    `weight` and `first` otherwise.
    '''
    operators = (1.0 - weight) * np.array(first.operators) + weight * np.array(second.operators)
    model = model_from_operators(prob, operators, 'mixture')
    if first.is_zero_error and second.is_zero_error:
        return MeasurementModel(model.q_inc, model.conclusive_prob, _freeze(np.eye(3)),
                                0.0, model.operators, model.strategy)
    return model


def _interpolated_sdp(prob: DiscriminationProblem, q_inc: float) -> MeasurementModel:
    states = np.array(prob.embedding)
    priors = np.array(prob.priors)
    projectors = [np.outer(psi, psi) for psi in states]
    operators = [cp.Variable((3, 3), PSD=True) for _ in range(4)]

    def mass(op, j):
        return cp.sum(cp.multiply(op, projectors[j]))

    error = sum(priors[j] * mass(operators[i], j)
                for j in range(3) for i in range(3) if i != j)
    inconclusive = sum(priors[j] * mass(operators[INCONCLUSIVE_OUTCOME], j) for j in range(3))
    problem = cp.Problem(cp.Minimize(error),
                         [sum(operators) == np.eye(3), inconclusive == q_inc])
    _solve_sdp(problem, 'interpolated measurement')
    solution = repair_povm(np.array([op.value for op in operators]))
    return model_from_operators(prob, solution, 'intermediate')


@functools.lru_cache(maxsize=8192)
def _intermediate_cached(key, q_inc: float) -> MeasurementModel:
    prob = _problem_from_key(key)
    med = _med_cached(key, MED_RESTARTS, 0)
    usd = usd_measurement(prob)
    # The MED/USD mixture is feasible at this q_inc; keep it if the solver is worse.
    line = mixture(prob, med, usd, q_inc / usd.q_inc)
    try:
        model = _interpolated_sdp(prob, q_inc)
    except SolverConvergenceException as e:
        LOGGER.warning(f'{e.message} Falling back to the MED/USD mixture.')
        return line
    if model.avg_error > line.avg_error:
        return line
    return model


def intermediate_measurement(prob: DiscriminationProblem, q_inc: float) -> MeasurementModel:
    '''
    Returns the measurement with average inconclusive probability q_inc that
    minimises the error conditioned on a conclusive result. q_inc = 0 gives
    the MED, q_inc >= q_usd an error-free measurement.
    '''
    if not 0.0 <= q_inc <= 1.0:
        raise InvalidParameterException('q_inc', q_inc, 'must lie in [0, 1]')
    if prob.degenerate:
        return _guess_most_likely(prob, q_inc)
    q_usd = usd_failure_probability(prob)
    if q_inc >= q_usd - ZERO_ERROR_TOL:
        return usd_measurement(prob, max(q_inc, q_usd))
    if q_inc == 0.0:
        return _med_cached(prob.key, MED_RESTARTS, 0)
    return _intermediate_cached(prob.key, float(q_inc))
