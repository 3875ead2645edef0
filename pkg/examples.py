"""
Example Usage Script
Demonstrates how to use the non-Markovianity toolkit.
"""

import math
import sys
from pathlib import Path

import numpy as np

# Add src to path
sys.path.insert(0, str(Path(__file__).parent / 'src'))

from choi import choi_derivative, choi_of_propagator, derivative_from_kossakowski
from dynamics import incremental_map
from generators import KossakowskiGenerator
from measures import (
    NonMarkovianityEngine, dt_measure, monotonicity_gap, rhp_g, robustness_decomposition
)
from models import from_spec, get_model, model_names, to_spec
from optimizer import OptimizerConfig


def example_basic_measures():
    """
    Example 1: Measures of the eternal non-Markovian model at a few instants
    """
    print("="*60)
    print("EXAMPLE 1: RHP Rate and D_T")
    print("="*60)

    model = get_model('eternal-nm')
    print(f"\nModel: {model.name} ({model.description})")

    for t in [0.5, 1.0, 2.0]:
        k = choi_derivative(model.generator, t)
        g = rhp_g(k)
        d_t, report = dt_measure(k)
        print(f"  t={t:.1f}: g={g:.6f} (tanh t = {math.tanh(t):.6f}), "
              f"D_T={d_t:.6f} [{report.stop_reason}]")


def example_trajectory():
    """
    Example 2: Full trajectory with exact and finite-eps columns
    """
    print("\n\n" + "="*60)
    print("EXAMPLE 2: Trajectory of Sinusoidal Dephasing")
    print("="*60)

    model = get_model('dephasing-sin')
    engine = NonMarkovianityEngine(model.generator, mode='both', eps=1e-4)
    frame = engine.simulate(t_max=2 * math.pi, dt=0.01)

    print(f"\n{frame.iloc[::100].to_string(index=False)}")
    summary = engine.summary(frame)
    print(f"\nN_T(2 pi) = {summary['N_T']:.4f} (closed form 4)")
    print(f"R(2 pi)   = {summary['R_cum']:.4f}")
    print(f"T(2 pi)   = {summary['T_norm']:.4f}")
    print(f"Fraction of the period breaking CP-divisibility: {summary['cp_breaking_fraction']:.2%}")


def example_robustness():
    """
    Example 3: Pseudo-mixture decomposition of a non-CP increment
    """
    print("\n\n" + "="*60)
    print("EXAMPLE 3: Robustness Decomposition")
    print("="*60)

    model = get_model('dephasing-sin')
    c = choi_of_propagator(incremental_map(model.generator, 4.0, 0.05))
    r, delta, tau = robustness_decomposition(c)

    print(f"\nIncrement over [4.0, 4.05]: ||C||_1 = {c.trace_norm:.6f}, R = {r:.6f}")
    print(f"  min eig(delta) = {np.linalg.eigvalsh(delta)[0]:+.2e} (free)")
    print(f"  min eig(tau)   = {np.linalg.eigvalsh(tau)[0]:+.2e} (state)")
    error = np.max(np.abs((1 + r) * delta - r * tau - c.matrix))
    print(f"  reconstruction error = {error:.2e}")


def example_oracle():
    """
    Example 4: Subgradient optimizer against the brute-force oracle
    """
    print("\n\n" + "="*60)
    print("EXAMPLE 4: Optimizer Certification")
    print("="*60)

    rng = np.random.default_rng(7)
    config = OptimizerConfig(oracle=True, oracle_restarts=200)
    for trial in range(3):
        b = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        a = 0.5 * (b + b.conj().T)
        k = derivative_from_kossakowski(a, 2)
        d_t, report = dt_measure(k, config)
        print(f"  instance {trial}: g={rhp_g(k):.6f}, D_T={d_t:.6f}, "
              f"oracle={report.oracle_objective:.6f}, gap={report.oracle_gap:+.2e}")


def example_monotonicity():
    """
    Example 5: D_T under Markovian post-processing
    """
    print("\n\n" + "="*60)
    print("EXAMPLE 5: Monotonicity Under Free Operations")
    print("="*60)

    k = choi_derivative(get_model('eternal-nm').generator, 1.0)
    for rate in [0.1, 0.5, 2.0]:
        depolarizing = KossakowskiGenerator.constant(2, rate * np.eye(3))
        before, after = monotonicity_gap(k, depolarizing, delta=0.5)
        print(f"  depolarizing rate {rate:.1f}: D_T {before:.6f} -> {after:.6f}")


def example_custom_model():
    """
    Example 6: Round trip through the JSON generator specification
    """
    print("\n\n" + "="*60)
    print("EXAMPLE 6: Custom Generator Specification")
    print("="*60)

    print(f"\nCatalog: {', '.join(model_names())}")
    text = to_spec(get_model('random-kossakowski'))
    model = from_spec(text)
    print(f"Loaded '{model.name}' with {len(model.generator.terms)} Lindblad terms")

    output_dir = Path(__file__).parent / 'output' / 'examples'
    output_dir.mkdir(parents=True, exist_ok=True)
    path = output_dir / 'random-kossakowski.json'
    path.write_text(text)
    print(f"Specification saved to {path}")


def example_visualizations():
    """
    Example 7: Generate visualizations (requires the plot extra)
    """
    print("\n\n" + "="*60)
    print("EXAMPLE 7: Generating Visualizations")
    print("="*60)

    from visualizations import TrajectoryVisualizer

    model = get_model('eternal-nm')
    frame = NonMarkovianityEngine(model.generator).simulate(t_max=3.0, dt=0.01)

    output_dir = Path(__file__).parent / 'output' / 'examples'
    viz = TrajectoryVisualizer(output_dir=output_dir)
    print(f"\nSaving visualizations to: {output_dir}")

    viz.plot_rates(frame, model_name=model.name)
    print("  ✓ Rates saved")
    viz.plot_cumulative(frame, model_name=model.name)
    print("  ✓ Cumulative measures saved")
    viz.plot_dashboard(frame, model_name=model.name)
    print("  ✓ Dashboard saved")


def main():
    """Run all examples."""

    print("\n" + "="*60)
    print("NMLAB - USAGE EXAMPLES")
    print("="*60)

    try:
        example_basic_measures()
        example_trajectory()
        example_robustness()
        example_oracle()
        example_monotonicity()
        example_custom_model()
        example_visualizations()

        print("\n\n" + "="*60)
        print("ALL EXAMPLES COMPLETED SUCCESSFULLY!")
        print("="*60)

    except Exception as e:
        print(f"\n\nERROR: {str(e)}")
        import traceback
        traceback.print_exc()
        return 1

    return 0


if __name__ == '__main__':
    exit(main())
