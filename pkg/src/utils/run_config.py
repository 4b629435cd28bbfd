"""
Run Configuration for NICR Planner
JSON run documents: strict keys, defaults, flag overrides and an exact echo
"""

import json
import logging
from dataclasses import asdict, dataclass, fields, replace
from typing import Dict, Optional, Tuple

import numpy as np

from src.core.design import DesignParams, Method, sample_size
from src.core.power import Hypothesis, PowerScenario
from src.core.simgen import GenScenario
from src.utils.exceptions import ConfigError, FileAccessError

logger = logging.getLogger(__name__)

REQUIRED_KEYS = ('lambda01', 'k1', 'lambda2', 'k2', 'q01', 'tf', 'delta0')
INT_KEYS = ('seed', 'replications', 'n0', 'n1')
STR_KEYS = ('hypothesis', 'mode')

DEFAULTS = {
    'phi': 0.0,
    'r': 0.0,
    'delta1': 1.0,
    'alpha': 0.05,
    'power': 0.8,
    'p0': 0.5,
    'p1': 0.5,
    'replications': 1000,
    'hypothesis': Hypothesis.ALT.value,
    'mode': Method.SDH.value,
}


@dataclass(frozen=True)
class RunConfig:
    """Keys of a run document; None means "not given" """

    lambda01: Optional[float] = None
    k1: Optional[float] = None
    lambda2: Optional[float] = None
    k2: Optional[float] = None
    q01: Optional[float] = None
    phi: Optional[float] = None
    tf: Optional[float] = None
    r: Optional[float] = None
    delta0: Optional[float] = None
    delta1: Optional[float] = None
    alpha: Optional[float] = None
    power: Optional[float] = None
    p0: Optional[float] = None
    p1: Optional[float] = None
    seed: Optional[int] = None
    replications: Optional[int] = None
    hypothesis: Optional[str] = None
    mode: Optional[str] = None
    n0: Optional[int] = None
    n1: Optional[int] = None

    @classmethod
    def keys(cls) -> Tuple[str, ...]:
        return tuple(f.name for f in fields(cls))

    @classmethod
    def from_dict(cls, doc: Dict) -> "RunConfig":
        if not isinstance(doc, dict):
            raise ConfigError("configuration must be a JSON object")
        unknown = sorted(set(doc) - set(cls.keys()))
        if unknown:
            raise ConfigError(f"unknown configuration key(s): {', '.join(unknown)}", keys=unknown)

        values = {}
        for key, value in doc.items():
            if value is None:
                continue
            values[key] = _coerce(key, value)
        return cls(**values)

    @classmethod
    def from_file(cls, path: str) -> "RunConfig":
        try:
            with open(path, 'r') as f:
                doc = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid JSON at line {e.lineno}: {e.msg}")
        except OSError as e:
            raise FileAccessError(f"cannot read configuration {path}: {e.strerror or e}")
        return cls.from_dict(doc)

    def with_overrides(self, **flags) -> "RunConfig":
        """Command-line flags win over file values; None leaves a key untouched"""
        given = {k: _coerce(k, v) for k, v in flags.items() if v is not None}
        unknown = sorted(set(given) - set(self.keys()))
        if unknown:
            raise ConfigError(f"unknown override(s): {', '.join(unknown)}", keys=unknown)
        return replace(self, **given)

    def require(self, *names: str):
        missing = [name for name in names if getattr(self, name) is None]
        if missing:
            raise ConfigError(f"missing required key(s): {', '.join(missing)}", keys=missing)

    def resolved(self) -> "RunConfig":
        """Defaults filled in and a seed drawn from OS entropy when none was given"""
        filled = {k: v for k, v in DEFAULTS.items() if getattr(self, k) is None}
        if self.seed is None:
            filled['seed'] = int(np.random.SeedSequence().entropy % 2 ** 64)
        return replace(self, **filled)

    def to_dict(self) -> Dict:
        return {k: v for k, v in asdict(self).items() if v is not None}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def _get(self, name: str):
        value = getattr(self, name)
        return DEFAULTS.get(name) if value is None else value

    @property
    def method(self) -> Method:
        return Method.parse(self._get('mode'))

    @property
    def hypothesis_value(self) -> Hypothesis:
        return Hypothesis.parse(self._get('hypothesis'))

    def design_params(self) -> DesignParams:
        self.require(*REQUIRED_KEYS)
        return DesignParams(
            lambda01=self.lambda01, k1=self.k1, lambda2=self.lambda2, k2=self.k2,
            q01=self.q01, tf=self.tf, delta0=self.delta0,
            phi=self._get('phi'), r=self._get('r'), delta1=self._get('delta1'),
            alpha=self._get('alpha'), power=self._get('power'),
            p0=self._get('p0'), p1=self._get('p1'),
        )

    def explicit_sizes(self) -> Optional[Tuple[int, int]]:
        if self.n0 is None and self.n1 is None:
            return None
        if self.n0 is None or self.n1 is None:
            missing = ['n0'] if self.n0 is None else ['n1']
            raise ConfigError("n0 and n1 must be given together", keys=missing)
        return (self.n0, self.n1)

    def power_scenario(self) -> PowerScenario:
        params = self.design_params()
        return PowerScenario(
            lambda01=params.lambda01, k1=params.k1, lambda2=params.lambda2, k2=params.k2,
            q01=params.q01, phi=params.phi, tf=params.tf, r=params.r,
            delta0=params.delta0, delta1=params.delta1, alpha=params.alpha,
            target_power=params.power, p0=params.p0, p1=params.p1,
            replications=self._get('replications'),
            hypothesis=self.hypothesis_value,
            n_override=self.explicit_sizes(),
        )

    def gen_scenario(self) -> GenScenario:
        """Generation settings: sizes from n0/n1 or the SDH formula, b from the hypothesis"""
        if self.seed is None:
            raise ConfigError("a seed is required to generate data", keys=['seed'])
        scenario = self.power_scenario()
        sizes = self.explicit_sizes() or sample_size(scenario.design_params(), Method.SDH).n_per_group
        return scenario.gen_scenario(sizes[0], sizes[1], self.seed)


def _coerce(key: str, value):
    if key in STR_KEYS:
        if not isinstance(value, str):
            raise ConfigError(f"{key} must be a string, got {value!r}", keys=[key])
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key} must be a number, got {value!r}", keys=[key])
    if key in INT_KEYS:
        if int(value) != value:
            raise ConfigError(f"{key} must be an integer, got {value!r}", keys=[key])
        if value < 0:
            raise ConfigError(f"{key} must be non-negative, got {value!r}", keys=[key])
        return int(value)
    if not np.isfinite(value):
        raise ConfigError(f"{key} must be finite", keys=[key])
    return float(value)


def validate(config: RunConfig) -> RunConfig:
    """Re-run the range checks of the underlying types; raises InvalidParameterError or ConfigError"""
    config.method
    config.hypothesis_value
    config.design_params()
    return config
