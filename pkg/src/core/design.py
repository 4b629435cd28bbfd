"""
Sample Size Designer for NICR Planner
Events and total sample size for non-inferiority trials with competing risks
under the proportional sub-distribution hazard model
"""

import logging
import math
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Callable, Dict, List, Optional, Tuple

from src.utils.exceptions import DegenerateDesignError, InvalidParameterError
from src.utils.numerics import DEFAULT_ABS_TOL, integrate, normal_cdf, normal_quantile

logger = logging.getLogger(__name__)

# Ceilings are taken after removing float noise so that 110.0000000001 stays 110
_CEIL_GUARD = 1e-9


class Method(str, Enum):
    """Which incidence the planning integral uses"""

    SDH = "sdh"
    SINGLE_EVENT = "single-event"

    @classmethod
    def parse(cls, value) -> "Method":
        if isinstance(value, cls):
            return value
        text = str(value).strip().lower().replace("_", "-")
        for member in cls:
            if member.value == text:
                return member
        raise InvalidParameterError(f"unknown mode '{value}' (expected sdh or single-event)", fields=("mode",))


@dataclass(frozen=True)
class DesignParams:
    """
    Planning inputs

    Weibull scale/shape of the event of interest (control group) and of the
    competing event, the control-group share q01 of events that are of interest,
    exponential dropout hazard phi, follow-up tf and accrual r (time units),
    margin delta0 and SDH ratio under H1 delta1, two-sided alpha, power and
    allocation proportions p0/p1.
    """

    lambda01: float
    k1: float
    lambda2: float
    k2: float
    q01: float
    tf: float
    delta0: float
    phi: float = 0.0
    r: float = 0.0
    delta1: float = 1.0
    alpha: float = 0.05
    power: float = 0.8
    p0: float = 0.5
    p1: float = 0.5

    def __post_init__(self):
        problems: List[Tuple[str, str]] = []

        def need(ok: bool, name: str, text: str):
            if not ok:
                problems.append((name, text))

        need(self.lambda01 > 0, "lambda01", "must be > 0")
        need(self.k1 > 0, "k1", "must be > 0")
        need(self.lambda2 > 0, "lambda2", "must be > 0")
        need(self.k2 > 0, "k2", "must be > 0")
        need(0.0 <= self.q01 <= 1.0, "q01", "must lie in [0, 1]")
        need(self.phi >= 0, "phi", "must be >= 0")
        need(self.tf > 0, "tf", "must be > 0")
        need(self.r >= 0, "r", "must be >= 0")
        need(self.delta0 > 0, "delta0", "must be > 0")
        need(self.delta1 > 0, "delta1", "must be > 0")
        need(0.0 < self.alpha < 1.0, "alpha", "must lie in (0, 1)")
        need(0.0 < self.power < 1.0, "power", "must lie in (0, 1)")
        need(0.0 < self.p0 < 1.0, "p0", "must lie in (0, 1)")
        need(0.0 < self.p1 < 1.0, "p1", "must lie in (0, 1)")
        if problems:
            names = [name for name, _ in problems]
            text = "; ".join(f"{name} {why}" for name, why in problems)
            raise InvalidParameterError(f"invalid design parameters: {text}", fields=names)

        if abs(self.p0 + self.p1 - 1.0) > 1e-9:
            raise InvalidParameterError(f"p0 + p1 must equal 1, got {self.p0 + self.p1:g}", fields=("p0", "p1"))
        if not self.delta1 < self.delta0:
            raise InvalidParameterError(
                f"delta1 ({self.delta1:g}) must be below delta0 ({self.delta0:g}); "
                "no finite trial separates equal hypotheses",
                fields=("delta0", "delta1"),
            )

    @property
    def allocation(self) -> Tuple[float, float]:
        return (self.p0, self.p1)

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


@dataclass(frozen=True)
class EventsResult:
    events_fractional: float
    events_per_group: Tuple[int, int]
    events_total: int


@dataclass(frozen=True)
class SampleSizeResult:
    method: Method
    w: float
    events: EventsResult
    n_per_group: Tuple[int, int]
    n_total: int
    w_by_group: Tuple[float, float] = (float("nan"), float("nan"))

    def to_dict(self) -> Dict:
        return {
            'method': self.method.value,
            'w': self.w,
            'w_group0': self.w_by_group[0],
            'w_group1': self.w_by_group[1],
            'events_fractional': self.events.events_fractional,
            'events_per_group': list(self.events.events_per_group),
            'events_total': self.events.events_total,
            'n_per_group': list(self.n_per_group),
            'n_total': self.n_total,
        }


@dataclass(frozen=True)
class Table2Row:
    k1: float
    lambda1: float
    lambda2: float
    delta0: float
    phi: float
    events: int
    n_cr: int
    n_se: int


def _ceil(x: float) -> int:
    return int(math.ceil(x - _CEIL_GUARD))


def q1_for_group1(q01: float, delta1: float) -> float:
    """Cause-1 mass in the experimental group under the Fine-Gray model: 1 - (1 - q01)^delta1"""
    if not 0.0 <= q01 <= 1.0:
        raise InvalidParameterError(f"q01 must lie in [0, 1], got {q01}", fields=("q01",))
    if delta1 <= 0:
        raise InvalidParameterError(f"delta1 must be > 0, got {delta1}", fields=("delta1",))
    return 1.0 - (1.0 - q01) ** delta1


def _subdensity_in_v(lam: float, q: float, eta: float) -> Callable[[float], float]:
    """
    Sub-density of the event of interest written in v = u^k1 (so du-Jacobian is absorbed)

    For the control group eta = 1 and this is q*lam*exp(-lam*v); for the experimental
    group the Fine-Gray CIF 1 - {1 - q[1 - exp(-lam v)]}^eta differentiates to the
    eta-weighted form below.
    """
    if eta == 1.0:
        return lambda v: q * lam * math.exp(-lam * v)

    def density(v: float) -> float:
        surv = math.exp(-lam * v)
        return eta * q * lam * surv * (1.0 - q * (1.0 - surv)) ** (eta - 1.0)

    return density


def compute_w_group(params: DesignParams, group: int, mode: Method = Method.SDH,
                    abs_tol: float = DEFAULT_ABS_TOL) -> float:
    """
    Probability that a group-x subject has an observed event of interest

    Integrates the sub-density against exponential dropout and the uniform-accrual
    administrative censoring weight: 1 on [0, tf], (tf + r - u)/r on [tf, tf + r].
    With r = 0 only the first piece remains. SINGLE_EVENT drops the competing
    cause entirely (q = 1).
    """
    if group not in (0, 1):
        raise InvalidParameterError(f"group must be 0 or 1, got {group}", fields=("group",))
    mode = Method.parse(mode)

    q = params.q01 if mode is Method.SDH else 1.0
    if q == 0.0:
        return 0.0
    eta = 1.0 if group == 0 else params.delta1
    lam, k, phi = params.lambda01, params.k1, params.phi
    tf, r = params.tf, params.r

    density = _subdensity_in_v(lam, q, eta)

    def u_of(v: float) -> float:
        return v ** (1.0 / k)

    if phi > 0:
        def observed(v: float) -> float:
            return density(v) * math.exp(-phi * u_of(v))
    else:
        observed = density

    w = integrate(observed, 0.0, tf ** k, abs_tol)
    if r > 0:
        end = tf + r
        w += integrate(lambda v: observed(v) * (end - u_of(v)) / r, tf ** k, end ** k, abs_tol)
    return w


def events_variance_factor(params: DesignParams) -> float:
    """Allocation/effect multiplier of the Wald variance: (p0 + p1*delta1)^2 / (p0*p1*delta1)"""
    p0, p1, d1 = params.p0, params.p1, params.delta1
    return (p0 + p1 * d1) ** 2 / (p0 * p1 * d1)


def _log_ratio_gap(params: DesignParams) -> float:
    gap = math.log(params.delta0) - math.log(params.delta1)
    if gap <= 0:
        raise DegenerateDesignError(
            f"delta0 ({params.delta0:g}) must exceed delta1 ({params.delta1:g})"
        )
    return gap


def required_events(params: DesignParams) -> EventsResult:
    """Number of events of interest needed, rounded up per group"""
    gap = _log_ratio_gap(params)
    z = normal_quantile(1.0 - params.alpha / 2.0) + normal_quantile(params.power)
    fractional = (z / gap) ** 2 * events_variance_factor(params)

    per_group = (_ceil(fractional * params.p0), _ceil(fractional * params.p1))
    return EventsResult(
        events_fractional=fractional,
        events_per_group=per_group,
        events_total=per_group[0] + per_group[1],
    )


def pooled_w(params: DesignParams, mode: Method = Method.SDH) -> Tuple[float, Tuple[float, float]]:
    """Allocation-weighted incidence p0*w0 + p1*w1 and its two components"""
    w0 = compute_w_group(params, 0, mode)
    w1 = compute_w_group(params, 1, mode) if params.delta1 != 1.0 else w0
    return params.p0 * w0 + params.p1 * w1, (w0, w1)


def sample_size(params: DesignParams, mode: Method = Method.SDH) -> SampleSizeResult:
    """Total and per-group sample size N = #E / w"""
    mode = Method.parse(mode)
    w, by_group = pooled_w(params, mode)
    if w <= 0.0:
        raise DegenerateDesignError("no observable events of interest (w = 0): the sample size is infinite")

    events = required_events(params)
    base = events.events_total / w
    n_per_group = (_ceil(base * params.p0), _ceil(base * params.p1))
    logger.debug("%s: w=%.6f events=%d N=%s", mode.value, w, events.events_total, n_per_group)

    return SampleSizeResult(
        method=mode,
        w=w,
        events=events,
        n_per_group=n_per_group,
        n_total=n_per_group[0] + n_per_group[1],
        w_by_group=by_group,
    )


def analytic_power(params: DesignParams, n_total: int, mode: Method = Method.SDH) -> float:
    """Power the Wald test reaches with n_total subjects (inverse of sample_size)"""
    if n_total <= 0:
        raise InvalidParameterError(f"n_total must be positive, got {n_total}", fields=("n_total",))
    w, _ = pooled_w(params, Method.parse(mode))
    if w <= 0.0:
        return 0.0
    drift = math.sqrt(n_total * w / events_variance_factor(params)) * _log_ratio_gap(params)
    return normal_cdf(drift - normal_quantile(1.0 - params.alpha / 2.0))


def scale_from_median(median: float, k: float) -> float:
    """Weibull scale with the given median: -ln(0.5) / median^k"""
    if median <= 0 or k <= 0:
        raise InvalidParameterError("median and shape must be positive", fields=("median", "k"))
    return -math.log(0.5) / median ** k


def scale_from_survival(t: float, s: float, k: float) -> float:
    """Weibull scale with survival s at time t: -ln(s) / t^k"""
    if t <= 0 or k <= 0 or not 0.0 < s < 1.0:
        raise InvalidParameterError("need t > 0, 0 < s < 1 and k > 0", fields=("t", "s", "k"))
    return -math.log(s) / t ** k


# Prostate-cancer planning example: median cancer-death time 9.45 years in the
# control arm, 90% free of the competing death at 5.1 years, 12 years accrual,
# 7.5 years follow-up, 73.7% of deaths from cancer, margin 1.5, 85% power.
TABLE2_SHAPES = (0.5, 1.0, 2.0)
TABLE2_DROPOUT = (0.0, 0.02)
# The competing-risks column is planned from the scales as tabulated
TABLE2_SCALE_DECIMALS = 3


def table2_params(k: float, phi: float, decimals: Optional[int] = None) -> DesignParams:
    """Planning inputs for one row; decimals rounds both Weibull scales"""
    lambda01 = scale_from_median(9.45, k)
    lambda2 = scale_from_survival(5.1, 0.9, k)
    if decimals is not None:
        lambda01, lambda2 = round(lambda01, decimals), round(lambda2, decimals)
    return DesignParams(
        lambda01=lambda01, k1=k, lambda2=lambda2, k2=k,
        q01=0.737, phi=phi, tf=7.5, r=12.0,
        delta0=1.5, delta1=1.0, alpha=0.05, power=0.85,
    )


def table2_rows() -> List[Table2Row]:
    """
    The six planning scenarios of the prostate-cancer example, computed

    N_CR uses the scales rounded to TABLE2_SCALE_DECIMALS; N_SE uses them at
    full precision.
    """
    rows = []
    for k in TABLE2_SHAPES:
        for phi in TABLE2_DROPOUT:
            shown = table2_params(k, phi, TABLE2_SCALE_DECIMALS)
            cr = sample_size(shown, Method.SDH)
            se = sample_size(table2_params(k, phi), Method.SINGLE_EVENT)
            rows.append(Table2Row(
                k1=k, lambda1=shown.lambda01, lambda2=shown.lambda2,
                delta0=shown.delta0, phi=phi,
                events=cr.events.events_total, n_cr=cr.n_total, n_se=se.n_total,
            ))
    return rows


if __name__ == "__main__":
    print("NICR Planner - Table 2 reproduction")
    print("=" * 40)
    for row in table2_rows():
        print(f"k1={row.k1:<4} phi={row.phi:<5} events={row.events} N_CR={row.n_cr} N_SE={row.n_se}")
    print(f"Curve check: {analytic_power(table2_params(1.0, 0.0), 486):.4f} power at N=486")
