"""
Visualization Module
Charts of measure trajectories. Requires the optional plotting extra
(matplotlib, seaborn); the numerical modules never import it.
"""

import logging
from pathlib import Path
from typing import Optional

import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt
import pandas as pd
import seaborn as sns

logger = logging.getLogger(__name__)

sns.set_style("whitegrid")
plt.rcParams['figure.figsize'] = (12, 7)
plt.rcParams['font.size'] = 10
plt.rcParams['axes.labelsize'] = 11
plt.rcParams['axes.titlesize'] = 13
plt.rcParams['legend.fontsize'] = 10


class TrajectoryVisualizer:
    """
    Plot non-Markovianity trajectories produced by NonMarkovianityEngine.

    Methods:
        - plot_rates: g(t), D_T(t) and the finite-eps g
        - plot_cumulative: N_T(t), R(t) and T(t)
        - plot_dashboard: both panels in one figure
    """

    def __init__(self, output_dir: Optional[Path] = None, dpi: int = 150):
        """
        Args:
            output_dir: Directory to save plots
            dpi: Resolution for saved figures
        """
        self.output_dir = Path(output_dir) if output_dir else Path.cwd() / 'output'
        self.dpi = dpi
        self.output_dir.mkdir(parents=True, exist_ok=True)
        logger.info(f"Visualizer initialized with output dir: {self.output_dir}")

    def _finish(self, fig, name: str, save: bool, show: bool) -> Optional[Path]:
        fig.tight_layout()
        filepath = None
        if save:
            filepath = self.output_dir / name
            fig.savefig(filepath, dpi=self.dpi, bbox_inches='tight')
            logger.info(f"Saved {name} to {filepath}")
        if show:
            plt.show()
        else:
            plt.close(fig)
        return filepath

    def _draw_rates(self, ax, frame: pd.DataFrame, title: str):
        ax.plot(frame['t'], frame['g'], linewidth=2.0, color='#2E86AB', label='g (RHP rate)')
        ax.plot(frame['t'], frame['d_T'], linewidth=1.5, linestyle='--', color='#A23B72',
                label='D_T rate')
        if frame['g_finite_eps'].notna().any():
            ax.plot(frame['t'], frame['g_finite_eps'], linewidth=1.0, linestyle=':',
                    color='#F18F01', label='g (finite eps)')
        ax.fill_between(frame['t'], frame['g'], alpha=0.2, color='#2E86AB')
        ax.set_xlabel('t', fontweight='bold')
        ax.set_ylabel('rate (1/time)', fontweight='bold')
        ax.set_title(title, fontweight='bold', pad=15)
        ax.grid(True, alpha=0.3, linestyle='--')
        ax.legend(loc='best')

    def _draw_cumulative(self, ax, frame: pd.DataFrame, title: str):
        ax.plot(frame['t'], frame['N_T'], linewidth=2.0, color='#2E86AB', label='N_T')
        ax.plot(frame['t'], frame['R_cum'], linewidth=1.5, color='#C73E1D', label='R = N_T/2')
        ax.set_xlabel('t', fontweight='bold')
        ax.set_ylabel('cumulative measure', fontweight='bold')
        ax.set_title(title, fontweight='bold', pad=15)
        ax.grid(True, alpha=0.3, linestyle='--')

        # T lives in [0, 1); give it its own axis
        twin = ax.twinx()
        twin.plot(frame['t'], frame['T_norm'], linewidth=1.5, linestyle='-.', color='#3B1F2B',
                  label='T = N_T/(1+N_T)')
        twin.set_ylim(0.0, 1.0)
        twin.set_ylabel('T', fontweight='bold')
        lines = ax.get_legend_handles_labels()
        twin_lines = twin.get_legend_handles_labels()
        ax.legend(lines[0] + twin_lines[0], lines[1] + twin_lines[1], loc='upper left')

    def plot_rates(self, frame: pd.DataFrame, model_name: str = 'model',
                   save: bool = True, show: bool = False) -> Optional[Path]:
        fig, ax = plt.subplots(figsize=(12, 6))
        self._draw_rates(ax, frame, f'{model_name}: CP-divisibility breaking rates')
        return self._finish(fig, f'{model_name}_rates.png', save, show)

    def plot_cumulative(self, frame: pd.DataFrame, model_name: str = 'model',
                        save: bool = True, show: bool = False) -> Optional[Path]:
        fig, ax = plt.subplots(figsize=(12, 6))
        self._draw_cumulative(ax, frame, f'{model_name}: cumulative measures')
        return self._finish(fig, f'{model_name}_cumulative.png', save, show)

    def plot_dashboard(self, frame: pd.DataFrame, model_name: str = 'model',
                       save: bool = True, show: bool = False) -> Optional[Path]:
        """
        Two-panel overview of a trajectory.

        Args:
            frame: Trajectory DataFrame
            model_name: Used in titles and the file name
            save: Whether to save the plot
            show: Whether to display the plot

        Returns:
            Path to saved figure if save=True
        """
        fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(12, 10), sharex=True)
        self._draw_rates(ax1, frame, 'Rates')
        self._draw_cumulative(ax2, frame, 'Cumulative measures')
        fig.suptitle(f'{model_name}: non-Markovianity trajectory', fontsize=15, fontweight='bold')
        return self._finish(fig, f'{model_name}_dashboard.png', save, show)
