"""
Fine-Gray Estimator for NICR Planner
Two-group proportional sub-distribution hazard fit: censoring Kaplan-Meier,
IPCW risk sets, Newton-Raphson on the partial likelihood, Wald interval and
the non-inferiority verdict
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Optional, Tuple

import numpy as np

from src.core.simgen import STATUS_CENSORED, STATUS_COMPETING, STATUS_EVENT, TrialDataset
from src.utils.exceptions import ConvergenceError, InvalidParameterError
from src.utils.numerics import StepFunction, normal_quantile

logger = logging.getLogger(__name__)

MAX_ITERATIONS = 50
SCORE_TOL = 1e-8
STEP_TOL = 1e-10
MAX_HALVINGS = 10
# Beyond this the likelihood is treated as monotone
COEF_BOUND = 20.0


class WeightMode(str, Enum):
    IPCW_KM = "ipcw-km"
    ORACLE = "oracle"

    @classmethod
    def parse(cls, value) -> "WeightMode":
        if isinstance(value, cls):
            return value
        text = str(value).strip().lower().replace("_", "-")
        for member in cls:
            if member.value == text:
                return member
        raise InvalidParameterError(f"unknown weighting mode '{value}'", fields=("mode",))


class Decision(str, Enum):
    NON_INFERIOR = "non_inferior"
    NOT_SHOWN = "not_shown"


@dataclass(frozen=True)
class FineGrayFit:
    b_hat: float
    se: float
    ci: Tuple[float, float]
    iterations: int
    converged: bool
    mode: WeightMode
    alpha: float = 0.05

    @property
    def sdh_ratio(self) -> float:
        return math.exp(self.b_hat) if abs(self.b_hat) < 700 else float("inf")

    def to_dict(self) -> Dict:
        def clean(value: float) -> Optional[float]:
            return float(value) if np.isfinite(value) else None

        return {
            'b_hat': clean(self.b_hat),
            'se': clean(self.se),
            'ci_lower': clean(self.ci[0]),
            'ci_upper': clean(self.ci[1]),
            'converged': bool(self.converged),
            'iterations': int(self.iterations),
            'mode': self.mode.value,
        }


def _as_dataset(data) -> TrialDataset:
    return data if isinstance(data, TrialDataset) else TrialDataset.from_records(data)


def km_censoring(data) -> StepFunction:
    """
    Pooled Kaplan-Meier estimate of the censoring survival function G

    Status 0 is the "event"; events of either cause count as censored for G.
    """
    data = _as_dataset(data)
    if len(data) == 0:
        raise InvalidParameterError("cannot estimate censoring distribution from an empty dataset")

    uniq, inverse = np.unique(data.time, return_inverse=True)
    totals = np.bincount(inverse, minlength=uniq.size)
    at_risk = totals[::-1].cumsum()[::-1]
    censored = np.bincount(inverse, weights=(data.status == STATUS_CENSORED), minlength=uniq.size)

    keep = censored > 0
    values = np.cumprod(1.0 - censored[keep] / at_risk[keep])
    return StepFunction(uniq[keep], values, initial=1.0)


class RiskSetWeights:
    """
    Weighted sub-distribution risk sets at each distinct event-of-interest time

    A subject still under observation counts fully; a subject whose competing
    event came first stays in with weight G(t-)/G(T_i-) (IPCW) or while its
    known censoring time exceeds t (oracle); anyone else has left.
    """

    def __init__(self, data, mode=WeightMode.IPCW_KM):
        self.data = _as_dataset(data)
        self.mode = WeightMode.parse(mode)
        data = self.data

        events = data.status == STATUS_EVENT
        if not np.any(events):
            raise InvalidParameterError("no events of interest: the partial likelihood is flat", fields=("status",))
        if self.mode is WeightMode.ORACLE and not data.has_oracle:
            raise InvalidParameterError("oracle weighting needs censor times on every record",
                                        fields=("censor_time",))

        self.event_times, inverse = np.unique(data.time[events], return_inverse=True)
        self.n_events = np.bincount(inverse).astype(float)
        self.n_events_group1 = np.bincount(inverse, weights=(data.group[events] == 1),
                                           minlength=self.event_times.size)

        self.censoring = km_censoring(data) if self.mode is WeightMode.IPCW_KM else None
        self.y0 = self._group_total(0)
        self.y1 = self._group_total(1)

    def _group_total(self, x: int) -> np.ndarray:
        data, tau = self.data, self.event_times
        in_group = data.group == x

        followed = np.sort(data.time[in_group])
        total = (followed.size - np.searchsorted(followed, tau, side='left')).astype(float)

        competing = in_group & (data.status == STATUS_COMPETING)
        order = np.argsort(data.time[competing], kind='mergesort')
        comp_times = data.time[competing][order]
        if comp_times.size == 0:
            return total

        before = np.searchsorted(comp_times, tau, side='left')
        if self.mode is WeightMode.IPCW_KM:
            inv_g = 1.0 / self.censoring.left_limit(comp_times)
            cumulative = np.concatenate(([0.0], np.cumsum(inv_g)))
            total += self.censoring.left_limit(tau) * cumulative[before]
        else:
            comp_censor = np.sort(data.censor_time[competing])
            total += before - np.searchsorted(comp_censor, tau, side='right')
        return total

    def weight(self, i: int, t: float) -> float:
        """Membership weight of subject i in the risk set at time t"""
        data = self.data
        if data.time[i] >= t:
            return 1.0
        if data.status[i] != STATUS_COMPETING:
            return 0.0
        if self.mode is WeightMode.ORACLE:
            return 1.0 if data.censor_time[i] > t else 0.0
        return float(self.censoring.left_limit(t) / self.censoring.left_limit(data.time[i]))


def risk_set_weights(data, mode=WeightMode.IPCW_KM) -> RiskSetWeights:
    return RiskSetWeights(data, mode)


def _weights_for(data, weights: Optional[RiskSetWeights]) -> RiskSetWeights:
    return weights if weights is not None else RiskSetWeights(data)


def score_and_information(b: float, data=None, weights: Optional[RiskSetWeights] = None) -> Tuple[float, float]:
    """Weighted score and observed information at b (Breslow handling of tied event times)"""
    w = _weights_for(data, weights)
    eb = math.exp(b)
    denom = w.y0 + w.y1 * eb
    share1 = w.y1 * eb / denom
    score = float(np.sum(w.n_events_group1 - w.n_events * share1))
    info = float(np.sum(w.n_events * w.y0 * w.y1 * eb / denom ** 2))
    return score, info


def log_partial_likelihood(b: float, data=None, weights: Optional[RiskSetWeights] = None) -> float:
    w = _weights_for(data, weights)
    return float(np.sum(b * w.n_events_group1 - w.n_events * np.log(w.y0 + w.y1 * math.exp(b))))


def _monotone_likelihood(w: RiskSetWeights) -> bool:
    # Finite maximiser exists iff the score changes sign between b = -inf and b = +inf
    score_low = np.sum(w.n_events_group1 - w.n_events * (w.y0 <= 0))
    score_high = np.sum(w.n_events_group1 - w.n_events * (w.y1 > 0))
    return not (score_low > 0 > score_high)


def fit(data, mode=WeightMode.IPCW_KM, alpha: float = 0.05) -> FineGrayFit:
    """
    Maximise the Fine-Gray partial likelihood by safeguarded Newton-Raphson from b = 0

    Non-convergence (monotone likelihood, exhausted iterations) is reported
    through the converged flag.
    """
    data = _as_dataset(data)
    mode = WeightMode.parse(mode)
    if not 0.0 < alpha < 1.0:
        raise InvalidParameterError(f"alpha must lie in (0, 1), got {alpha}", fields=("alpha",))
    if not (np.any(data.group == 0) and np.any(data.group == 1)):
        raise InvalidParameterError("both groups must be present", fields=("group",))

    weights = RiskSetWeights(data, mode)
    monotone = _monotone_likelihood(weights)

    b = 0.0
    score, info = score_and_information(b, weights=weights)
    converged = False
    iterations = 0

    while iterations < MAX_ITERATIONS:
        if abs(score) < SCORE_TOL:
            converged = True
            break
        if info <= 0:
            break

        iterations += 1
        step = score / info
        for _ in range(MAX_HALVINGS + 1):
            trial = b + step
            trial_score, trial_info = score_and_information(trial, weights=weights)
            if abs(trial_score) <= abs(score):
                break
            step /= 2.0

        moved = trial - b
        b, score, info = trial, trial_score, trial_info
        logger.debug("newton %d: b=%.10f score=%.3e info=%.6g", iterations, b, score, info)

        if abs(b) > COEF_BOUND:
            break
        if abs(moved) < STEP_TOL:
            converged = True
            break

    if monotone or abs(b) > COEF_BOUND or info <= 0:
        converged = False

    if converged:
        se = 1.0 / math.sqrt(info)
        z = normal_quantile(1.0 - alpha / 2.0)
        ci = (math.exp(b - z * se), math.exp(b + z * se))
    else:
        logger.warning("⚠️ Fine-Gray fit did not converge after %d iterations (b=%.4g)", iterations, b)
        se = float("nan")
        ci = (float("nan"), float("nan"))

    return FineGrayFit(b_hat=b, se=se, ci=ci, iterations=iterations,
                       converged=converged, mode=mode, alpha=alpha)


def noninferiority_decision(fit_result: FineGrayFit, delta0: float) -> Decision:
    """Non-inferior iff the upper confidence limit of the SDH ratio stays strictly below delta0"""
    if not fit_result.converged:
        raise ConvergenceError("no verdict from an unconverged fit")
    if delta0 <= 0:
        raise InvalidParameterError(f"delta0 must be > 0, got {delta0}", fields=("delta0",))
    return Decision.NON_INFERIOR if fit_result.ci[1] < delta0 else Decision.NOT_SHOWN


if __name__ == "__main__":
    toy = TrialDataset(time=[1, 2, 3, 4], status=[1, 1, 2, 1], group=[0, 1, 0, 1])
    s, i = score_and_information(0.0, toy)
    result = fit(toy)
    print("NICR Planner Fine-Gray Estimator")
    print("=" * 40)
    print(f"score(0)={s:.6f} information(0)={i:.6f}")
    print(f"b_hat={result.b_hat:.6f} se={result.se:.4f} CI={result.ci[0]:.3f}-{result.ci[1]:.3f}")
