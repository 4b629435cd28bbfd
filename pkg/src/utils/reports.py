"""
Report writers for NICR Planner
Power-study CSV, Table 2 CSV and the power-vs-censoring SVG scatter
"""

import logging
from typing import List, Optional, Sequence

import matplotlib
import pandas as pd

from src.core.design import Table2Row
from src.core.power import PowerStudyResult
from src.utils.exceptions import FileAccessError

logger = logging.getLogger(__name__)

POWER_COLUMNS = [
    'q01', 'k1', 'k2', 'lambda01', 'lambda2', 'phi', 'delta0', 'delta1', 'hypothesis',
    'n0', 'n1', 'reps', 'rejection_rate', 'mc_stderr', 'frac_censored', 'frac_event1',
    'frac_event2', 'unconverged', 'seed',
]
TABLE2_COLUMNS = ['k1', 'lambda1', 'lambda2', 'delta0', 'phi', 'events', 'N_CR', 'N_SE']

# One colour per q01 band
_BAND_COLOURS = {0.3: '#1f77b4', 0.5: '#ff7f0e', 0.8: '#2ca02c'}


def power_frame(results: Sequence[PowerStudyResult]) -> pd.DataFrame:
    return pd.DataFrame([r.to_row() for r in results], columns=POWER_COLUMNS)


def write_power_csv(results: Sequence[PowerStudyResult], path: str):
    try:
        power_frame(results).to_csv(path, index=False, lineterminator='\n')
    except OSError as e:
        raise FileAccessError(f"cannot write {path}: {e.strerror or e}")
    logger.info("💾 Wrote %d power rows to %s", len(results), path)


def table2_frame(rows: List[Table2Row]) -> pd.DataFrame:
    """Table 2 with scales shown at three decimals"""
    return pd.DataFrame([{
        'k1': row.k1,
        'lambda1': f"{row.lambda1:.3f}",
        'lambda2': f"{row.lambda2:.3f}",
        'delta0': f"{row.delta0:.2f}",
        'phi': row.phi,
        'events': row.events,
        'N_CR': row.n_cr,
        'N_SE': row.n_se,
    } for row in rows], columns=TABLE2_COLUMNS)


def plot_power_svg(results: Sequence[PowerStudyResult], path: str, target: Optional[float] = None):
    """Scatter of rejection rate against censoring fraction with a reference line at the target rate"""
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    if target is None:
        target = results[0].scenario.target_rate
    plt.rcParams['svg.hashsalt'] = 'nicr-planner'

    fig, ax = plt.subplots(figsize=(7, 4.5))
    try:
        bands = sorted({r.scenario.q01 for r in results})
        for q01 in bands:
            subset = [r for r in results if r.scenario.q01 == q01]
            ax.scatter([r.mean_frac_censored for r in subset], [r.rejection_rate for r in subset],
                       s=18, color=_BAND_COLOURS.get(q01), label=f"q01 = {q01:g}")
        ax.axhline(target, linestyle='--', color='black', linewidth=1)
        ax.set_xlabel("Censoring fraction")
        ax.set_ylabel("Rejection rate")
        ax.set_xlim(0.0, 1.0)
        ax.legend(loc='best', fontsize=8)
        fig.tight_layout()
        fig.savefig(path, format='svg', metadata={'Date': None})
    except OSError as e:
        raise FileAccessError(f"cannot write {path}: {e.strerror or e}")
    finally:
        plt.close(fig)
    logger.info("📈 Wrote power plot to %s", path)
