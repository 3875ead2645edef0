"""
Main Application Entry Point
Command-line driver for the non-Markovianity toolkit: simulate measure
trajectories, measure a single instant, and run the verification suites.

Exit codes: 0 success, 1 verification failure, 2 configuration or parse
error, 3 numerical failure (non-convergence with --strict-convergence).
"""

import argparse
import json
import logging
import sys
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

# Add src to path
sys.path.insert(0, str(Path(__file__).parent / 'src'))
sys.path.insert(0, str(Path(__file__).parent))

from config.config import Config
from errors import NotConverged
from measures import NonMarkovianityEngine, time_grid
from models import get_model, model_names
from optimizer import OptimizerConfig
from verification import SUITES, VerificationRunner, write_report

EXIT_OK = 0
EXIT_VERIFICATION_FAILED = 1
EXIT_CONFIG_ERROR = 2
EXIT_NUMERICAL_ERROR = 3

CSV_FLOAT_FORMAT = '%.12g'


def setup_logging(log_level: str = 'INFO', log_file: Optional[Path] = None, stream=None):
    """Configure logging for the application."""
    handlers = [logging.StreamHandler(stream or sys.stdout)]

    if log_file:
        log_file.parent.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(log_file))

    logging.basicConfig(
        level=getattr(logging, log_level.upper()),
        format=Config.LOG_FORMAT,
        handlers=handlers,
        force=True
    )

    return logging.getLogger(__name__)


@dataclass
class RunConfig:
    """
    Validated per-run settings for simulate and measure.

    Raises:
        ValueError: If t_max, dt or eps is not positive, or mode/threads is invalid
    """

    model: str
    t_max: float = 5.0
    dt: float = Config.DEFAULT_DT
    eps: float = Config.DEFAULT_EPS
    mode: str = Config.DEFAULT_MODE
    max_iter: int = Config.MAX_ITERATIONS
    tol: float = Config.CONVERGENCE_TOLERANCE
    step0: Optional[float] = None
    step: Optional[float] = None
    oracle: bool = False
    allow_hamiltonian: bool = Config.ALLOW_HAMILTONIAN_IN_FREE_SET
    output: Optional[Path] = None
    seed: Optional[int] = None
    threads: int = Config.THREADS
    plot: bool = False
    strict_convergence: bool = False

    def __post_init__(self):
        if not self.t_max > 0:
            raise ValueError(f"--t-max must be positive, got {self.t_max}")
        if not self.dt > 0:
            raise ValueError(f"--dt must be positive, got {self.dt}")
        if not self.eps > 0:
            raise ValueError(f"--eps must be positive, got {self.eps}")
        if self.mode not in NonMarkovianityEngine.MODES:
            raise ValueError(f"--mode must be one of {NonMarkovianityEngine.MODES}, got '{self.mode}'")
        if self.threads < 1:
            raise ValueError(f"--threads must be positive, got {self.threads}")
        if self.step is not None and not self.step > 0:
            raise ValueError(f"--step must be positive, got {self.step}")

    def optimizer_config(self) -> OptimizerConfig:
        return OptimizerConfig(
            max_iter=self.max_iter,
            tol=self.tol,
            stall_window=Config.STALL_WINDOW,
            step0=self.step0,
            step0_fraction=Config.STEP0_FRACTION,
            restarts=Config.RESTARTS,
            restart_decay=Config.RESTART_DECAY,
            allow_hamiltonian=self.allow_hamiltonian,
            oracle=self.oracle,
            oracle_restarts=Config.ORACLE_RESTARTS,
            oracle_polish=Config.ORACLE_POLISH,
            oracle_maxfev=Config.ORACLE_MAXFEV,
            seed=0 if self.seed is None else self.seed,
            strict=self.strict_convergence,
        )

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['output'] = None if self.output is None else str(self.output)
        return data


def _engine(cfg: RunConfig) -> NonMarkovianityEngine:
    model = get_model(cfg.model, seed=cfg.seed)
    return NonMarkovianityEngine(
        model.generator,
        mode=cfg.mode,
        eps=cfg.eps,
        optimizer_config=cfg.optimizer_config(),
        n_jobs=cfg.threads,
        step=cfg.step,
    )


def cmd_simulate(cfg: RunConfig) -> Path:
    """
    Sweep the time grid and write the trajectory CSV.

    Returns:
        Path of the written CSV

    Raises:
        NotConverged: With --strict-convergence, if any grid point missed the stopping rule
    """
    logger = logging.getLogger(__name__)
    model_name = Path(cfg.model).stem if Path(cfg.model).suffix else cfg.model
    logger.info(f"Simulating '{cfg.model}' on [0, {cfg.t_max}] with dt={cfg.dt} ({cfg.mode})")

    engine = _engine(cfg)
    frame = engine.trajectory(time_grid(cfg.t_max, cfg.dt))
    if cfg.strict_convergence and not engine.all_converged:
        raise NotConverged("optimizer did not converge at every grid point")

    output = cfg.output or Path(Config.OUTPUT_DIR) / f'{model_name}_trajectory.csv'
    output.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(output, index=False, float_format=CSV_FLOAT_FORMAT, na_rep='nan')
    logger.info(f"Trajectory written to {output}")

    summary = engine.summary(frame)
    logger.info(
        f"N_T = {summary['N_T']:.6g}, R = {summary['R_cum']:.6g}, T = {summary['T_norm']:.6g}, "
        f"max g = {summary['max_g']:.6g}, max D_T = {summary['max_d_T']:.6g}"
    )

    if cfg.plot:
        from visualizations import TrajectoryVisualizer

        viz = TrajectoryVisualizer(output_dir=output.parent, dpi=Config.PLOT_DPI)
        viz.plot_dashboard(frame, model_name=model_name)
    return output


def cmd_measure(cfg: RunConfig, t: float) -> Dict[str, Any]:
    """All measures at time t, with the optimizer report, as a JSON-ready dict."""
    if t < 0:
        raise ValueError(f"--t must be nonnegative, got {t}")
    engine = _engine(cfg)
    point = engine.measure_point(t, dt=cfg.dt)
    if cfg.strict_convergence and point.report is not None and not point.report.converged:
        raise NotConverged(f"optimizer did not converge at t = {t}")
    result = point.to_dict()
    result['model'] = cfg.model
    result['mode'] = cfg.mode
    return result


def cmd_verify(
    suite: str,
    seed: int,
    output: Optional[Path] = None,
    samples: int = Config.VERIFY_SAMPLES,
    random_instances: int = Config.VERIFY_RANDOM_INSTANCES,
    oracle_instances: int = Config.VERIFY_ORACLE_INSTANCES
) -> int:
    """
    Run a verification suite and write its JSON report.

    Returns:
        EXIT_OK if every property passed, EXIT_VERIFICATION_FAILED otherwise
    """
    optimizer_config = OptimizerConfig(
        max_iter=Config.MAX_ITERATIONS,
        tol=Config.CONVERGENCE_TOLERANCE,
        stall_window=Config.STALL_WINDOW,
        restarts=Config.RESTARTS,
        restart_decay=Config.RESTART_DECAY,
        oracle_restarts=Config.ORACLE_RESTARTS,
        oracle_polish=Config.ORACLE_POLISH,
        oracle_maxfev=Config.ORACLE_MAXFEV,
        seed=seed,
    )
    runner = VerificationRunner(
        seed=seed,
        samples=samples,
        random_instances=random_instances,
        oracle_instances=oracle_instances,
        grid_dt=Config.VERIFY_GRID_DT,
        t_max=Config.VERIFY_T_MAX,
        optimizer_config=optimizer_config,
    )
    report = runner.run(suite)
    path = output or Path(Config.OUTPUT_DIR) / f'verify_{suite}_seed{seed}.json'
    write_report(report, path)
    return EXIT_OK if report['passed'] else EXIT_VERIFICATION_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='nmlab',
        description='Quantify non-Markovianity of GKSL generators (RHP rate, D_T, robustness)',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=f"""
Catalog models: {', '.join(model_names())}

Examples:
  # Trajectory of the sinusoidal dephasing model over one period
  python main.py simulate --model dephasing-sin --t-max 6.2832 --dt 0.001

  # Single instant, JSON on stdout
  python main.py measure --model eternal-nm --t 1

  # Lower-bound sweep with a fixed seed
  python main.py verify --suite theorem1 --seed 7
        """
    )
    parser.add_argument('--verbose', action='store_true', help='Enable DEBUG logging')
    parser.add_argument('--log-file', type=Path, default=None, help='Also log to this file')
    subparsers = parser.add_subparsers(dest='command', required=True)

    def add_run_flags(sub: argparse.ArgumentParser):
        sub.add_argument('--model', required=True,
                         help='Catalog model name or path to a JSON generator specification')
        sub.add_argument('--dt', type=float, default=Config.DEFAULT_DT, help='Grid spacing')
        sub.add_argument('--eps', type=float, default=Config.DEFAULT_EPS,
                         help='Finite increment for finite-eps columns')
        sub.add_argument('--step', type=float, default=None,
                         help='Propagation step for finite-eps increments (default: one step of eps)')
        sub.add_argument('--mode', choices=NonMarkovianityEngine.MODES, default=Config.DEFAULT_MODE)
        sub.add_argument('--max-iter', type=int, default=Config.MAX_ITERATIONS,
                         help='Optimizer iteration cap')
        sub.add_argument('--tol', type=float, default=Config.CONVERGENCE_TOLERANCE,
                         help='Optimizer stall tolerance (relative)')
        sub.add_argument('--step0', type=float, default=None,
                         help='Initial optimizer step (default 0.1 * ||K_N||_1)')
        sub.add_argument('--oracle', action='store_true',
                         help='Also run the brute-force oracle and report the gap')
        sub.add_argument('--allow-hamiltonian', action='store_true',
                         help='Include Hamiltonian directions in the free set')
        sub.add_argument('--seed', type=int, default=None,
                         help='Seed for random-kossakowski and the oracle screen')
        sub.add_argument('--threads', type=int, default=Config.THREADS,
                         help='Parallel grid workers (env NMLAB_THREADS)')
        sub.add_argument('--strict-convergence', action='store_true',
                         help='Exit with code 3 if the optimizer misses its stopping rule')

    simulate = subparsers.add_parser('simulate', help='Write a measure trajectory CSV')
    add_run_flags(simulate)
    simulate.add_argument('--t-max', type=float, required=True)
    simulate.add_argument('--output', type=Path, default=None, help='CSV path')
    simulate.add_argument('--plot', action='store_true', help='Save a PNG dashboard next to the CSV')

    measure = subparsers.add_parser('measure', help='Print all measures at one time as JSON')
    add_run_flags(measure)
    measure.add_argument('--t', type=float, required=True)

    verify = subparsers.add_parser('verify', help='Run a verification suite')
    verify.add_argument('--suite', choices=SUITES + ('all',), default='all')
    verify.add_argument('--seed', type=int, default=0)
    verify.add_argument('--output', type=Path, default=None, help='JSON report path')
    verify.add_argument('--samples', type=int, default=Config.VERIFY_SAMPLES,
                        help='Trials per proposition property')
    verify.add_argument('--random-instances', type=int, default=Config.VERIFY_RANDOM_INSTANCES)
    verify.add_argument('--oracle-instances', type=int, default=Config.VERIFY_ORACLE_INSTANCES)
    return parser


def _run_config(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        model=args.model,
        t_max=getattr(args, 't_max', None) or max(getattr(args, 't', 0.0), Config.DEFAULT_DT),
        dt=args.dt,
        eps=args.eps,
        mode=args.mode,
        max_iter=args.max_iter,
        tol=args.tol,
        step0=args.step0,
        step=args.step,
        oracle=args.oracle,
        allow_hamiltonian=args.allow_hamiltonian,
        output=getattr(args, 'output', None),
        seed=args.seed,
        threads=args.threads,
        plot=getattr(args, 'plot', False),
        strict_convergence=args.strict_convergence,
    )


def main(argv: Optional[List[str]] = None) -> int:
    """Command-line interface for the non-Markovianity toolkit."""
    parser = build_parser()
    args = parser.parse_args(argv)

    log_level = 'DEBUG' if args.verbose else Config.LOG_LEVEL
    # measure keeps stdout for its JSON document
    stream = sys.stderr if args.command == 'measure' else sys.stdout
    logger = setup_logging(log_level, args.log_file, stream)

    try:
        if args.command == 'simulate':
            path = cmd_simulate(_run_config(args))
            print(f"Trajectory written to {path}")
            return EXIT_OK
        if args.command == 'measure':
            result = cmd_measure(_run_config(args), args.t)
            print(json.dumps(result, indent=2))
            return EXIT_OK
        return cmd_verify(
            args.suite, args.seed, args.output,
            samples=args.samples,
            random_instances=args.random_instances,
            oracle_instances=args.oracle_instances,
        )

    except (NotConverged, RuntimeError, np.linalg.LinAlgError) as e:
        logger.error(f"Numerical failure: {e}")
        return EXIT_NUMERICAL_ERROR
    except (ValueError, OSError) as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG_ERROR


if __name__ == '__main__':
    sys.exit(main())
