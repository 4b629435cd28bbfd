"""
Power Simulator for NICR Planner
Replicated generate -> fit -> decide runs that check the sample size formula
against empirical power and type I error
"""

import itertools
import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed
from tqdm import tqdm

from src.analysis.finegray import Decision, WeightMode, fit, noninferiority_decision
from src.core.design import DesignParams, Method, sample_size
from src.core.simgen import GenScenario, generate_dataset, summarize_dataset
from src.utils.exceptions import InvalidParameterError

logger = logging.getLogger(__name__)

DEFAULT_CHUNK = 50

# Scenario grid of the simulation study
TABLE1_Q01 = (0.3, 0.5, 0.8)
TABLE1_SHAPES = ((0.5, 0.5), (1.0, 1.0), (2.0, 2.0), (0.5, 1.5), (1.5, 0.5))
TABLE1_LAMBDA01 = (1.0, 2.0)
TABLE1_LAMBDA2 = (0.15, 0.5)
TABLE1_PHI = (0.0, 0.1)
TABLE1_MARGINS = (1.3, 1.0)


class Hypothesis(str, Enum):
    NULL = "null"
    ALT = "alt"

    @classmethod
    def parse(cls, value) -> "Hypothesis":
        if isinstance(value, cls):
            return value
        text = str(value).strip().lower()
        for member in cls:
            if member.value == text:
                return member
        raise InvalidParameterError(f"unknown hypothesis '{value}' (expected alt or null)", fields=("hypothesis",))


@dataclass(frozen=True)
class PowerScenario:
    """One cell of a power study: generating model, hypotheses, design inputs and replication count"""

    lambda01: float
    k1: float
    lambda2: float
    k2: float
    q01: float
    phi: float
    tf: float
    r: float
    delta0: float
    delta1: float = 1.0
    alpha: float = 0.05
    target_power: float = 0.8
    p0: float = 0.5
    p1: float = 0.5
    replications: int = 1000
    hypothesis: Hypothesis = Hypothesis.ALT
    n_override: Optional[Tuple[int, int]] = None

    def __post_init__(self):
        object.__setattr__(self, 'hypothesis', Hypothesis.parse(self.hypothesis))
        if int(self.replications) != self.replications or self.replications < 1:
            raise InvalidParameterError("replications must be a positive integer", fields=("replications",))
        if self.n_override is not None:
            n0, n1 = self.n_override
            if min(n0, n1) < 1:
                raise InvalidParameterError("explicit group sizes must be >= 1", fields=("n0", "n1"))
        self.design_params()

    def design_params(self) -> DesignParams:
        return DesignParams(
            lambda01=self.lambda01, k1=self.k1, lambda2=self.lambda2, k2=self.k2,
            q01=self.q01, phi=self.phi, tf=self.tf, r=self.r,
            delta0=self.delta0, delta1=self.delta1, alpha=self.alpha,
            power=self.target_power, p0=self.p0, p1=self.p1,
        )

    def group_sizes(self) -> Tuple[int, int]:
        if self.n_override is not None:
            return (int(self.n_override[0]), int(self.n_override[1]))
        return sample_size(self.design_params(), Method.SDH).n_per_group

    @property
    def true_b(self) -> float:
        margin = self.delta0 if self.hypothesis is Hypothesis.NULL else self.delta1
        return math.log(margin)

    @property
    def target_rate(self) -> float:
        """Rejection rate the study should reproduce"""
        return self.alpha / 2.0 if self.hypothesis is Hypothesis.NULL else self.target_power

    def gen_scenario(self, n0: int, n1: int, seed: int) -> GenScenario:
        return GenScenario(
            lambda01=self.lambda01, k1=self.k1, lambda2=self.lambda2, k2=self.k2,
            q01=self.q01, phi=self.phi, tf=self.tf, r=self.r,
            b=self.true_b, n0=n0, n1=n1, seed=seed,
        )


@dataclass(frozen=True)
class PowerStudyResult:
    scenario: PowerScenario
    n_per_group: Tuple[int, int]
    replications: int
    rejection_rate: float
    mc_stderr: float
    mean_frac_censored: float
    mean_frac_event1: float
    mean_frac_event2: float
    unconverged_count: int
    seed: int

    def to_row(self) -> Dict:
        s = self.scenario
        return {
            'q01': s.q01, 'k1': s.k1, 'k2': s.k2,
            'lambda01': s.lambda01, 'lambda2': s.lambda2, 'phi': s.phi,
            'delta0': s.delta0, 'delta1': s.delta1,
            'hypothesis': s.hypothesis.value,
            'n0': self.n_per_group[0], 'n1': self.n_per_group[1],
            'reps': self.replications,
            'rejection_rate': self.rejection_rate,
            'mc_stderr': self.mc_stderr,
            'frac_censored': self.mean_frac_censored,
            'frac_event1': self.mean_frac_event1,
            'frac_event2': self.mean_frac_event2,
            'unconverged': self.unconverged_count,
            'seed': self.seed,
        }


def replication_seed(base_seed: int, scenario_index: int, replication: int) -> int:
    """64-bit seed hashed from (base seed, scenario index, replication index)"""
    seq = np.random.SeedSequence(entropy=int(base_seed), spawn_key=(int(scenario_index), int(replication)))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def _run_replications(scenario: PowerScenario, sizes: Tuple[int, int], base_seed: int,
                      scenario_index: int, start: int, stop: int) -> List[Tuple[bool, bool, float, float, float]]:
    outcomes = []
    for rep in range(start, stop):
        gen = scenario.gen_scenario(sizes[0], sizes[1], replication_seed(base_seed, scenario_index, rep))
        data = generate_dataset(gen)
        mix = summarize_dataset(data).pooled
        try:
            result = fit(data, WeightMode.IPCW_KM, scenario.alpha)
        except InvalidParameterError as e:
            # A replication without any event of interest cannot be fitted
            logger.debug("replication %d of scenario %d not fitted: %s", rep, scenario_index, e)
            result = None

        converged = result is not None and result.converged
        rejected = converged and noninferiority_decision(result, scenario.delta0) is Decision.NON_INFERIOR
        outcomes.append((rejected, converged, mix.frac_event1, mix.frac_event2, mix.frac_censored))
    return outcomes


def _aggregate(scenario: PowerScenario, sizes: Tuple[int, int], outcomes, seed: int) -> PowerStudyResult:
    table = np.asarray(outcomes, dtype=float)
    reps = table.shape[0]
    rate = float(table[:, 0].mean())
    return PowerStudyResult(
        scenario=scenario,
        n_per_group=sizes,
        replications=reps,
        rejection_rate=rate,
        mc_stderr=math.sqrt(rate * (1.0 - rate) / reps),
        mean_frac_event1=float(table[:, 2].mean()),
        mean_frac_event2=float(table[:, 3].mean()),
        mean_frac_censored=float(table[:, 4].mean()),
        unconverged_count=int(reps - table[:, 1].sum()),
        seed=int(seed),
    )


class PowerSimulator:
    """
    Monte Carlo harness for power and type I error

    Replications are split into chunks that run through joblib; results are
    reduced in replication order, so output does not depend on parallelism.
    """

    def __init__(self, parallelism: int = 1, progress: bool = False, chunk_size: int = DEFAULT_CHUNK):
        if parallelism == 0 or chunk_size < 1:
            raise InvalidParameterError("parallelism must be non-zero and chunk_size >= 1",
                                        fields=("parallelism", "chunk_size"))
        self.parallelism = parallelism
        self.progress = progress
        self.chunk_size = chunk_size

    def run_scenario(self, scenario: PowerScenario, seed: int) -> PowerStudyResult:
        return self.run_grid([scenario], seed=seed)[0]

    def run_grid(self, grid: Sequence[PowerScenario], seed: int,
                 reps_per_scenario: Optional[int] = None) -> List[PowerStudyResult]:
        grid = list(grid)
        if not grid:
            raise InvalidParameterError("empty scenario grid", fields=("grid",))
        if reps_per_scenario is not None:
            grid = [replace(s, replications=int(reps_per_scenario)) for s in grid]

        logger.info("🧪 Running %d scenario(s), %d replications in total (seed %d)",
                    len(grid), sum(s.replications for s in grid), seed)
        sizes = [s.group_sizes() for s in grid]

        tasks = []
        for index, (scenario, n) in enumerate(zip(grid, sizes)):
            for start in range(0, scenario.replications, self.chunk_size):
                stop = min(start + self.chunk_size, scenario.replications)
                tasks.append((index, delayed(_run_replications)(scenario, n, seed, index, start, stop)))

        runner = Parallel(n_jobs=self.parallelism, return_as="generator")
        chunks = runner(task for _, task in tasks)
        per_scenario: List[list] = [[] for _ in grid]
        for (index, _), outcome in tqdm(zip(tasks, chunks), total=len(tasks),
                                        disable=not self.progress, desc="replications"):
            per_scenario[index].extend(outcome)

        results = [_aggregate(s, n, out, seed) for s, n, out in zip(grid, sizes, per_scenario)]
        logger.info("✅ Power study complete")
        return results


def run_scenario(s: PowerScenario, seed: int, parallelism: int = 1) -> PowerStudyResult:
    return PowerSimulator(parallelism).run_scenario(s, seed)


def run_grid(grid: Sequence[PowerScenario], reps_per_scenario: Optional[int], seed: int,
             parallelism: int = 1, progress: bool = False) -> List[PowerStudyResult]:
    return PowerSimulator(parallelism, progress=progress).run_grid(grid, seed, reps_per_scenario)


def table1_grid(tf: float = 1.0, r_accrual: float = 0.5,
                hypothesis: Hypothesis = Hypothesis.ALT,
                replications: int = 1000) -> List[PowerScenario]:
    """All 120 combinations of the simulation study's parameter grid"""
    if tf <= 0 or r_accrual < 0:
        raise InvalidParameterError("need tf > 0 and r >= 0", fields=("tf", "r"))
    delta0, delta1 = TABLE1_MARGINS
    grid = []
    for q01, (k1, k2), lambda01, lambda2, phi in itertools.product(
            TABLE1_Q01, TABLE1_SHAPES, TABLE1_LAMBDA01, TABLE1_LAMBDA2, TABLE1_PHI):
        grid.append(PowerScenario(
            lambda01=lambda01, k1=k1, lambda2=lambda2, k2=k2, q01=q01, phi=phi,
            tf=tf, r=r_accrual, delta0=delta0, delta1=delta1,
            alpha=0.05, target_power=0.8, p0=0.5, p1=0.5,
            replications=replications, hypothesis=hypothesis,
        ))
    return grid
