'''
Optimisation of the sequential attack: best attack at a fixed gain, the
largest secure intensity alpha_max(f) and key-rate bound sweeps.
'''
import dataclasses
import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize as spo
from scipy import stats as sps

from cowbound.attack import (
    AttackParams, AttackStructure, SimSettings, SimulationDraws, draw_chunks,
    evaluate_structure, measurement_for, structure_from_draws,
)
from cowbound.discrimination import build_problem, usd_failure_probability
from cowbound.estimators import ObservedStats
from cowbound.states import SEQUENCES, ProtocolParams, build_ensemble, trivial_key_bound
from cowbound.utils.errors import (
    ConfigValidationException, InfeasibleGainException, InvalidParameterException,
)

LOGGER = logging.getLogger(__name__)

ALPHA2_FLOOR = 1e-6
ALPHA2_START = 1.0
ALPHA2_CAP = 64.0
ALPHA_RTOL = 1e-2
VERIFY_FACTOR = 1.1

FLAG_NO_SECURE_INTENSITY = 'no-secure-intensity'
FLAG_CAP_REACHED = 'cap-reached'
FLAG_VERIFICATION_FAILED = 'verification-failed'
FLAG_NO_BIT_SIGNALS = 'no-bit-signals'

INSECURE = 'Insecure'
NOT_DECIDED = 'NotDecidedByThisAttack'

Accept = Callable[[ObservedStats], bool]


class Objective(enum.Enum):
    MAX_MIN_VISIBILITY = 'max_min_visibility'
    MAX_AVERAGE_VISIBILITY = 'max_average_visibility'


@dataclass(frozen=True)
class OptimizationTarget:
    objective: Objective = Objective.MAX_MIN_VISIBILITY
    q_th: float = 0.0
    v_th: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.q_th <= 0.5:
            raise InvalidParameterException('q_th', self.q_th, 'must lie in [0, 0.5]')
        if not 0.0 <= self.v_th <= 1.0:
            raise InvalidParameterException('v_th', self.v_th, 'must lie in [0, 1]')

    def value(self, stats: ObservedStats) -> Optional[float]:
        if self.objective is Objective.MAX_MIN_VISIBILITY:
            return stats.min_visibility
        return stats.v_ave


@dataclass(frozen=True)
class OptimizerSettings:
    budget: int = 8
    m_min_grid: Tuple[int, ...] = tuple(range(1, 9))
    q_p_grid: Tuple[float, ...] = tuple(np.linspace(0.0, 1.0, 11).tolist())
    beta2_max: float = 100.0
    gain_rtol: float = 0.01
    sim: SimSettings = field(default_factory=SimSettings)
    weights: Optional[Mapping[str, float]] = None

    def __post_init__(self):
        if self.budget < 1:
            raise InvalidParameterException('budget', self.budget, 'must be at least 1')
        if not self.m_min_grid or min(self.m_min_grid) < 1:
            raise InvalidParameterException('m_min_grid', self.m_min_grid,
                                            'needs positive run lengths')
        if not self.q_p_grid or not all(0.0 <= q <= 1.0 for q in self.q_p_grid):
            raise InvalidParameterException('q_p_grid', self.q_p_grid,
                                            'needs probabilities in [0, 1]')
        if self.beta2_max <= 0:
            raise InvalidParameterException('beta2_max', self.beta2_max, 'must be positive')
        if not 0.0 < self.gain_rtol < 1.0:
            raise InvalidParameterException('gain_rtol', self.gain_rtol, 'must lie in (0, 1)')


@dataclass(frozen=True)
class Candidate:
    params: AttackParams
    stats: ObservedStats
    accepted: bool = False


@dataclass(frozen=True)
class AlphaMaxResult:
    alpha_max2: float
    flags: Tuple[str, ...] = ()
    evaluations: int = 0


@dataclass(frozen=True)
class BoundPoint:
    eta: float
    f: float
    alpha_max2: float
    r: float
    flags: Tuple[str, ...] = ()

    def __post_init__(self):
        if self.r < 0 or self.alpha_max2 < 0:
            raise InvalidParameterException('r', self.r, 'bound points are non-negative')


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    r2: float


@dataclass(frozen=True)
class BoundSweep:
    points: List[BoundPoint]
    loglog: Optional[LinearFit]
    alpha_fit: Optional[LinearFit]


@dataclass(frozen=True)
class ExperimentPoint:
    '''
    A published operating point: measured gain, QBER and visibilities (per
    sequence, or averaged).
    '''
    label: str
    gain: float
    qber: float
    alpha2: float
    f: float
    visibilities: Optional[Dict[str, float]] = None
    v_ave: Optional[float] = None

    def __post_init__(self):
        if self.visibilities is None and self.v_ave is None:
            raise ConfigValidationException(f'experiments.{self.label}',
                                            'needs visibilities or v_ave')
        for name in ('gain', 'qber'):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise InvalidParameterException(f'{self.label}.{name}', value,
                                                'must lie in [0, 1]')
        observed = dict(self.visibilities or {})
        if self.v_ave is not None:
            observed['v_ave'] = self.v_ave
        for name, value in observed.items():
            if not -1.0 <= value <= 1.0:
                raise InvalidParameterException(f'{self.label}.{name}', value,
                                                'must lie in [-1, 1]')


@dataclass(frozen=True)
class Verdict:
    label: str
    verdict: str
    params: Optional[AttackParams] = None
    stats: Optional[ObservedStats] = None
    note: str = ''


def success_diagnostics(stats: ObservedStats, t: OptimizationTarget) -> List[str]:
    '''
    Returns the reasons the attack fails the thresholds; empty on success.
    '''
    reasons = []
    if stats.qber is None:
        reasons.append('qber undefined')
    elif stats.qber > t.q_th:
        reasons.append(f'qber {stats.qber:.6g} > {t.q_th}')
    if t.objective is Objective.MAX_MIN_VISIBILITY:
        for s in SEQUENCES:
            value = stats.vis.get(s)
            if value is None:
                reasons.append(f'V_{s} undefined')
            elif value < t.v_th:
                reasons.append(f'V_{s} {value:.6g} < {t.v_th}')
    elif stats.v_ave is None:
        reasons.append('V_ave undefined')
    elif stats.v_ave < t.v_th:
        reasons.append(f'V_ave {stats.v_ave:.6g} < {t.v_th}')
    return reasons


def attack_succeeds(stats: ObservedStats, t: OptimizationTarget) -> bool:
    reasons = success_diagnostics(stats, t)
    if any('undefined' in reason for reason in reasons):
        LOGGER.debug(f'Attack judged on undefined observables: {", ".join(reasons)}')
    return not reasons


def dominates(stats: ObservedStats, point: ExperimentPoint) -> bool:
    '''
    True when the attack reproduces the point's gain with a QBER no higher
    and visibilities no lower than measured.
    '''
    if stats.qber is None or stats.qber > point.qber:
        return False
    if point.visibilities is not None:
        for s, measured in point.visibilities.items():
            achieved = stats.vis.get(s)
            if achieved is None or achieved < measured:
                return False
    if point.v_ave is not None:
        if stats.v_ave is None or stats.v_ave < point.v_ave:
            return False
    return True


def error_free_limit(stats: ObservedStats) -> ObservedStats:
    '''
    Visibilities of an error-free, fully trimmed attack in the limit q_inc
    -> q_usd from above. Undefined V_s become 1: no monitored pair of such an
    attack ever clicks on the dark port, whatever its rate.
    '''
    if not stats.undefined:
        return stats
    vis = {s: 1.0 if stats.vis.get(s) is None else stats.vis[s] for s in SEQUENCES}
    errors = {s: stats.vis_err.get(s, 0.0) for s in SEQUENCES}
    v_ave = 1.0 if stats.v_ave is None else stats.v_ave
    return dataclasses.replace(stats, vis=vis, vis_err=errors, v_ave=v_ave)


def _rank(candidate: Candidate, t: OptimizationTarget) -> tuple:
    value = t.value(candidate.stats)
    qber = candidate.stats.qber
    a = candidate.params
    return (candidate.accepted,
            -math.inf if value is None else value,
            -1.0 if qber is None else -qber,
            -a.m_min, -a.q_p, -a.q_inc)


def match_gain(structure: AttackStructure, p: ProtocolParams, target_gain: float,
               settings: OptimizerSettings) -> Optional[float]:
    '''
    Returns the beta2 at which Eve's bit gain equals target_gain, beta2_max
    if that is within tolerance, or None if the target is out of reach.
    '''
    reachable = structure.gain_bit(settings.beta2_max, p.t_B)
    if reachable < target_gain * (1.0 - settings.gain_rtol):
        return None
    if reachable <= target_gain:
        return settings.beta2_max
    return spo.brentq(lambda beta2: structure.gain_bit(beta2, p.t_B) - target_gain,
                      0.0, settings.beta2_max, xtol=1e-14, rtol=1e-12)


class _Search(object):
    '''
    One optimisation at a fixed gain: shares random numbers across all
    candidates and remembers every evaluated candidate.
    '''

    def __init__(self, p: ProtocolParams, target_gain: float, t: OptimizationTarget,
                 settings: OptimizerSettings, accept: Optional[Accept]):
        self.p = p
        self.target_gain = target_gain
        self.t = t
        self.settings = settings
        self.accept = accept
        self.best: Optional[Candidate] = None
        self.max_gain = 0.0
        self.evaluations = 0

    def offer(self, candidate: Candidate):
        if self.best is None or _rank(candidate, self.t) > _rank(self.best, self.t):
            self.best = candidate

    def cells(self, q_inc: float) -> Optional[Candidate]:
        '''
        Evaluates every (m_min, q_p) cell at q_inc and returns the best.
        '''
        model = measurement_for(self.p, q_inc)
        draws: SimulationDraws = draw_chunks(self.p, model, self.settings.sim)
        local: Optional[Candidate] = None
        for m_min in self.settings.m_min_grid:
            for q_p in self.settings.q_p_grid:
                params = AttackParams(q_inc=q_inc, q_p=q_p, m_min=m_min, beta2=0.0)
                structure = structure_from_draws(draws, params)
                self.max_gain = max(self.max_gain,
                                    structure.gain_bit(self.settings.beta2_max, self.p.t_B))
                beta2 = match_gain(structure, self.p, self.target_gain, self.settings)
                if beta2 is None:
                    continue
                params = params.with_values(beta2=beta2)
                stats = evaluate_structure(structure, self.p, beta2, self.settings.weights)
                if model.is_zero_error and q_p >= 1.0:
                    stats = error_free_limit(stats)
                self.evaluations += 1
                accepted = bool(self.accept(stats)) if self.accept else False
                candidate = Candidate(params, stats, accepted)
                LOGGER.debug(f'q_inc={q_inc:.6g} m_min={m_min} q_p={q_p:.3g} '
                             f'beta2={beta2:.6g} qber={stats.qber} '
                             f'objective={self.t.value(stats)} accepted={accepted}')
                self.offer(candidate)
                if local is None or _rank(candidate, self.t) > _rank(local, self.t):
                    local = candidate
                if accepted:
                    return local
        return local

    @property
    def done(self) -> bool:
        return self.best is not None and self.best.accepted


def _score(candidate: Optional[Candidate], t: OptimizationTarget) -> float:
    if candidate is None:
        return math.inf
    key = _rank(candidate, t)
    value = key[1] if math.isfinite(key[1]) else -2.0
    return -(2.0 * key[0] + value + 1e-3 * key[2])


def _with_overrides(settings: OptimizerSettings, budget: Optional[int],
                    seed: Optional[int]) -> OptimizerSettings:
    if budget is not None:
        settings = dataclasses.replace(settings, budget=budget)
    if seed is not None:
        settings = dataclasses.replace(settings, sim=settings.sim.with_values(seed=seed))
    return settings


def q_inc_grid(q_usd: float, budget: int) -> List[float]:
    '''
    Coarse grid over [0, 1), highest first: budget + 1 points on [0, q_usd]
    (q_usd included exactly) and budget error-free points above it.
    '''
    points = np.linspace(0.0, q_usd, budget + 1)
    points[-1] = q_usd
    above = np.linspace(q_usd, 1.0, budget + 2)[1:-1]
    return sorted(set(float(x) for x in np.concatenate([points, above])), reverse=True)


def optimize_attack_at_gain(p: ProtocolParams, target_gain: float, t: OptimizationTarget,
                            budget: Optional[int] = None, seed: Optional[int] = None,
                            settings: Optional[OptimizerSettings] = None,
                            accept: Optional[Accept] = None) -> Tuple[AttackParams, ObservedStats]:
    '''
    Finds attack parameters reproducing target_gain that maximise the
    target's visibility objective, then minimise the QBER. Candidates for
    which `accept` holds rank above all others and end the search early.
    '''
    settings = _with_overrides(settings or OptimizerSettings(), budget, seed)
    if not target_gain > 0:
        raise InvalidParameterException('target_gain', target_gain, 'must be positive')

    q_usd = usd_failure_probability(build_problem(build_ensemble(p)))
    grid = q_inc_grid(q_usd, settings.budget)
    search = _Search(p, target_gain, t, settings, accept)
    scores = []
    for q_inc in grid:
        scores.append(_score(search.cells(q_inc), t))
        if search.done:
            break

    if search.best is None:
        raise InfeasibleGainException(target_gain, search.max_gain)

    if not search.done and len(grid) > 1:
        # Grid is descending; polish between the neighbours of the best point.
        index = int(np.argmin(scores))
        low = grid[min(index + 1, len(grid) - 1)]
        high = grid[max(index - 1, 0)]
        if high > low:
            spo.minimize_scalar(lambda q: _score(search.cells(float(q)), t),
                                bounds=(low, high), method='bounded',
                                options={'maxiter': settings.budget,
                                         'xatol': max(1e-6, 1e-3 * (high - low))})

    best = search.best
    LOGGER.debug(f'Best attack at gain {target_gain:.6g}: {best.params} '
                 f'after {search.evaluations} evaluations')
    return best.params, best.stats


def honest_gain(p: ProtocolParams) -> float:
    return trivial_key_bound(p)[0]


def perfect_usd_max_gain(p: ProtocolParams, settings: Optional[OptimizerSettings] = None,
                         seed: Optional[int] = None) -> float:
    '''
    Returns the largest bit gain reachable with zero-error discrimination,
    full trimming and no run cutoff.
    '''
    settings = _with_overrides(settings or OptimizerSettings(), None, seed)
    q_usd = usd_failure_probability(build_problem(build_ensemble(p)))
    params = AttackParams(q_inc=q_usd, q_p=1.0, m_min=1, beta2=settings.beta2_max)
    draws = draw_chunks(p, measurement_for(p, q_usd), settings.sim)
    return structure_from_draws(draws, params).gain_bit(settings.beta2_max, p.t_B)


def _attack_wins(p: ProtocolParams, t: OptimizationTarget,
                 settings: OptimizerSettings) -> bool:
    try:
        _, stats = optimize_attack_at_gain(p, honest_gain(p), t, settings=settings,
                                           accept=lambda s: attack_succeeds(s, t))
    except InfeasibleGainException:
        return False
    return attack_succeeds(stats, t)


def alpha_max(f: float, eta: float, t: OptimizationTarget, budget: Optional[int] = None,
              seed: Optional[int] = None, settings: Optional[OptimizerSettings] = None,
              t_B: float = 0.5) -> AlphaMaxResult:
    '''
    Returns the largest alpha2 for which the optimised attack fails, found by
    geometric bisection to a relative tolerance of 1e-2.
    '''
    settings = _with_overrides(settings or OptimizerSettings(), budget, seed)
    base = ProtocolParams(alpha2=ALPHA2_START, f=f, t_B=t_B, eta=eta)
    evaluations = 0

    def wins(alpha2: float) -> bool:
        nonlocal evaluations
        evaluations += 1
        result = _attack_wins(base.with_values(alpha2=alpha2), t, settings)
        LOGGER.info(f'f={f} eta={eta:.4g} alpha2={alpha2:.6g}: '
                    f'attack {"succeeds" if result else "fails"}')
        return result

    if wins(ALPHA2_FLOOR):
        LOGGER.warning(f'Attack succeeds at alpha2={ALPHA2_FLOOR} (f={f}, eta={eta})')
        return AlphaMaxResult(0.0, (FLAG_NO_SECURE_INTENSITY,), evaluations)

    flags: List[str] = []
    low, high = ALPHA2_FLOOR, ALPHA2_START
    while not wins(high):
        low = high
        high *= 2.0
        if high > ALPHA2_CAP:
            LOGGER.warning(f'Attack still fails at alpha2={low} (f={f}, eta={eta})')
            return AlphaMaxResult(low, (FLAG_CAP_REACHED,), evaluations)
    while high / low > 1.0 + ALPHA_RTOL:
        middle = math.sqrt(low * high)
        if wins(middle):
            high = middle
        else:
            low = middle
    if not wins(VERIFY_FACTOR * low):
        LOGGER.warning(f'alpha_max={low:.6g} not confirmed at {VERIFY_FACTOR}x (f={f}, eta={eta})')
        flags.append(FLAG_VERIFICATION_FAILED)
    return AlphaMaxResult(low, tuple(flags), evaluations)


def linear_fit(x: Sequence[float], y: Sequence[float]) -> Optional[LinearFit]:
    if len(x) < 2:
        return None
    result = sps.linregress(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    return LinearFit(float(result.slope), float(result.intercept), float(result.rvalue ** 2))


def bound_sweep(f: float, eta_grid: Sequence[float], t: OptimizationTarget,
                budget: Optional[int] = None, seed: Optional[int] = None,
                settings: Optional[OptimizerSettings] = None,
                t_B: float = 0.5) -> BoundSweep:
    '''
    Returns R = (1 - f) eta alpha_max2 per eta, the log-log fit of R against
    eta and the linear fit of alpha_max2 against eta.
    '''
    if not eta_grid:
        raise InvalidParameterException('eta_grid', eta_grid, 'must not be empty')
    if any(not 0.0 < eta <= 1.0 for eta in eta_grid):
        raise InvalidParameterException('eta_grid', eta_grid, 'values must lie in (0, 1]')
    if any(b >= a for a, b in zip(eta_grid, eta_grid[1:])):
        raise InvalidParameterException('eta_grid', eta_grid, 'must be strictly decreasing')
    if not 0.0 < f <= 1.0:
        raise InvalidParameterException('f', f, 'must lie in (0, 1]')

    points = []
    for eta in eta_grid:
        if f >= 1.0:
            points.append(BoundPoint(eta, f, 0.0, 0.0, (FLAG_NO_BIT_SIGNALS,)))
            continue
        LOGGER.info(f'Bound sweep f={f}: eta={eta:.4g}')
        result = alpha_max(f, eta, t, budget, seed, settings, t_B)
        r = (1.0 - f) * eta * result.alpha_max2
        points.append(BoundPoint(eta, f, result.alpha_max2, r, result.flags))

    positive = [point for point in points if point.r > 0]
    loglog = linear_fit([math.log(point.eta) for point in positive],
                        [math.log(point.r) for point in positive])
    alpha_fit = linear_fit([point.eta for point in points],
                           [point.alpha_max2 for point in points])
    return BoundSweep(points, loglog, alpha_fit)


def check_experiment(point: ExperimentPoint, p: ProtocolParams, t: OptimizationTarget,
                     budget: Optional[int] = None, seed: Optional[int] = None,
                     settings: Optional[OptimizerSettings] = None) -> Verdict:
    '''
    Optimises the attack at the point's gain; the point is insecure if the
    attack's QBER and visibilities dominate the measured ones.
    '''
    try:
        params, stats = optimize_attack_at_gain(p, point.gain, t, budget, seed, settings,
                                                accept=lambda s: dominates(s, point))
    except InfeasibleGainException as e:
        return Verdict(point.label, NOT_DECIDED, note=e.message)
    verdict = INSECURE if dominates(stats, point) else NOT_DECIDED
    return Verdict(point.label, verdict, params, stats)
