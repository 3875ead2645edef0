"""
Configuration Module
Centralized defaults for the non-Markovianity toolkit. Environment variables
(optionally from a .env file) override the marked entries.
"""

import json
import os
from pathlib import Path
from typing import Any, Dict

from dotenv import load_dotenv

load_dotenv()


def _env_int(name: str, default: int) -> int:
    value = os.getenv(name)
    if value is None or value.strip() == '':
        return default
    try:
        parsed = int(value)
    except ValueError as e:
        raise ValueError(f"{name} must be an integer, got '{value}'") from e
    if parsed < 1:
        raise ValueError(f"{name} must be positive, got {parsed}")
    return parsed


class Config:
    """Application configuration settings."""

    # Project paths
    ROOT_DIR = Path(__file__).parent.parent
    OUTPUT_DIR = Path(os.getenv('NMLAB_OUTPUT_DIR', ROOT_DIR / 'output'))

    # Integration
    DEFAULT_EPS = 1e-4
    DEFAULT_DT = 0.01
    DEFAULT_MODE = 'exact-limit'

    # D_T optimizer
    MAX_ITERATIONS = 5000
    CONVERGENCE_TOLERANCE = 1e-9
    STALL_WINDOW = 50
    STEP0_FRACTION = 0.1
    RESTARTS = 6
    RESTART_DECAY = 0.25
    ORACLE_RESTARTS = 1000
    ORACLE_POLISH = 5
    ORACLE_MAXFEV = 20000
    ALLOW_HAMILTONIAN_IN_FREE_SET = False

    # Verification sample counts
    VERIFY_SAMPLES = 100
    VERIFY_RANDOM_INSTANCES = 200
    VERIFY_ORACLE_INSTANCES = 50
    VERIFY_GRID_DT = 0.05
    VERIFY_T_MAX = 5.0

    # Parallelism (grid points)
    THREADS = _env_int('NMLAB_THREADS', 1)

    # Visualization settings
    PLOT_DPI = 150

    # Logging settings
    LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO')
    LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

    @classmethod
    def create_directories(cls):
        """Create the output directory if it doesn't exist."""
        Path(cls.OUTPUT_DIR).mkdir(parents=True, exist_ok=True)

    @classmethod
    def to_dict(cls) -> Dict[str, Any]:
        """Convert configuration to dictionary."""
        return {
            key: getattr(cls, key)
            for key in dir(cls)
            if key.isupper() and not callable(getattr(cls, key))
        }

    @classmethod
    def save(cls, filepath: Path):
        """Save configuration to JSON file."""
        config_dict = {
            key: str(value) if isinstance(value, Path) else value
            for key, value in cls.to_dict().items()
        }
        with open(filepath, 'w') as f:
            json.dump(config_dict, f, indent=2)

    @classmethod
    def load(cls, filepath: Path):
        """Load configuration from JSON file; unknown keys are ignored."""
        with open(filepath, 'r') as f:
            config_dict = json.load(f)

        for key, value in config_dict.items():
            if hasattr(cls, key):
                current = getattr(cls, key)
                setattr(cls, key, Path(value) if isinstance(current, Path) else value)


if __name__ == '__main__':
    Config.create_directories()
    print("Configuration initialized successfully")
    print(f"Root directory: {Config.ROOT_DIR}")
    print(f"Output directory: {Config.OUTPUT_DIR}")
