"""
Numerical primitives for NICR Planner
Gaussian quantile, adaptive quadrature on finite intervals and a right-continuous step function
"""

import logging
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np
from scipy import integrate as _integrate
from scipy import special

from src.utils.exceptions import IntegrationError, InvalidParameterError

logger = logging.getLogger(__name__)

# Absolute tolerance for the planning integrals
DEFAULT_ABS_TOL = 1e-10
QUAD_SUBINTERVAL_LIMIT = 200

ArrayLike = Union[float, Sequence[float], np.ndarray]


def normal_quantile(p: float) -> float:
    """Lower standard normal quantile: returns x with Phi(x) = p"""
    p = float(p)
    if not 0.0 < p < 1.0:
        raise InvalidParameterError(f"normal quantile needs 0 < p < 1, got {p}", fields=("p",))
    return float(special.ndtri(p))


def normal_cdf(x: ArrayLike) -> Union[float, np.ndarray]:
    """Standard normal distribution function"""
    out = special.ndtr(x)
    return float(out) if np.ndim(out) == 0 else out


def integrate(f: Callable[[float], float], a: float, b: float,
              abs_tol: float = DEFAULT_ABS_TOL) -> float:
    """
    Adaptive Gauss-Kronrod quadrature of f over [a, b]

    QUADPACK's extrapolating bisection tolerates an integrable singularity at a.
    Raises IntegrationError when the subinterval budget runs out before the
    absolute error estimate drops below abs_tol.
    """
    if b < a:
        raise InvalidParameterError(f"integration limits out of order: a={a} > b={b}", fields=("a", "b"))
    if abs_tol <= 0:
        raise InvalidParameterError("abs_tol must be positive", fields=("abs_tol",))
    if a == b:
        return 0.0

    out = _integrate.quad(f, a, b, epsabs=abs_tol, epsrel=0.0,
                          limit=QUAD_SUBINTERVAL_LIMIT, full_output=1)
    value, abserr = out[0], out[1]
    if len(out) > 3 or not np.isfinite(value) or abserr > abs_tol:
        detail = out[3] if len(out) > 3 else f"error estimate {abserr:.3g}"
        raise IntegrationError(
            f"quadrature on [{a:g}, {b:g}] did not reach tolerance {abs_tol:g}: {detail}"
        )
    logger.debug("quad [%g, %g] = %.12g (err %.2g, %d evals)", a, b, value, abserr, out[2]["neval"])
    return float(value)


@dataclass(frozen=True, eq=False)
class StepFunction:
    """
    Right-continuous step function

    values[i] holds on [breakpoints[i], breakpoints[i+1]); before the first
    breakpoint the function equals initial.
    """

    breakpoints: np.ndarray
    values: np.ndarray
    initial: float = 1.0

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, 'breakpoints', bp)
        object.__setattr__(self, 'values', vals)
        if bp.ndim != 1 or bp.shape != vals.shape:
            raise InvalidParameterError("breakpoints and values must be 1-d and of equal length",
                                        fields=("breakpoints", "values"))
        if bp.size > 1 and np.any(np.diff(bp) <= 0):
            raise InvalidParameterError("breakpoints must be strictly ascending", fields=("breakpoints",))

    def __call__(self, t: ArrayLike) -> Union[float, np.ndarray]:
        return self._lookup(t, side='right')

    def left_limit(self, t: ArrayLike) -> Union[float, np.ndarray]:
        """Value just before t, i.e. lim_{s -> t-} f(s)"""
        return self._lookup(t, side='left')

    def _lookup(self, t: ArrayLike, side: str) -> Union[float, np.ndarray]:
        idx = np.searchsorted(self.breakpoints, t, side=side) - 1
        padded = np.concatenate(([self.initial], self.values))
        out = padded[np.asarray(idx) + 1]
        return float(out) if np.ndim(out) == 0 else out


def step_eval(s: StepFunction, t: ArrayLike) -> Union[float, np.ndarray]:
    """Right-continuous evaluation of a step function"""
    return s(t)
