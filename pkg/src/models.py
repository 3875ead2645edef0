"""
Benchmark Models
Catalog of generators with analytically known measure trajectories, and the
JSON generator specification used to load custom models.

Schema (version 1):
    {
      "schema": 1,
      "name": "optional identifier",
      "dim": 2,
      "hamiltonian": [[[re, im], ...], ...] | null,
      "terms": [
        {"matrix": [[[re, im], ...], ...],
         "rate": {"kind": "constant" | "sinusoid" | "tanh_negative" | "table" | "composite", ...}}
      ]
    }
Complex numbers are always [re, im] pairs.
"""

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Union

import numpy as np

from errors import DimensionMismatch, NonHermitian, ParseError, ValidationError
from generators import DiagonalGenerator, LindbladTerm, RateSchedule, pauli_matrices
from linops import hermitize

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
RANDOM_MODEL_SEED = 2024


@dataclass(frozen=True)
class ModelSpec:
    """
    A named generator, optionally with closed-form measure trajectories.

    Attributes:
        name: Identifier used on the command line
        generator: Diagonal-form generator
        description: Closed-form summary of g(t), or a short note
        analytic_g: Exact RHP rate as a function of t, if known
        analytic_n_t: Exact N_T(t), if known
        markovian: True if every instant is Markovian
    """

    name: str
    generator: DiagonalGenerator
    description: str = ''
    analytic_g: Optional[Callable[[float], float]] = None
    analytic_n_t: Optional[Callable[[float], float]] = None
    markovian: bool = False


def _dephasing_sin_n_t(t: float) -> float:
    # Each full period contributes 4; within a period only (pi, 2 pi) counts
    periods, rest = divmod(t, 2.0 * math.pi)
    partial = 2.0 * (1.0 + math.cos(rest)) if rest > math.pi else 0.0
    return 4.0 * periods + partial


def dephasing_const(gamma0: float = 0.5) -> ModelSpec:
    sigma_z = pauli_matrices()[2]
    return ModelSpec(
        name='dephasing-const',
        generator=DiagonalGenerator(2, (LindbladTerm(sigma_z, RateSchedule.constant(gamma0)),)),
        description=f"L = sigma_z, gamma = {gamma0}; g = 0",
        analytic_g=lambda t: 0.0,
        analytic_n_t=lambda t: 0.0,
        markovian=True,
    )


def dephasing_sin(omega: float = 1.0) -> ModelSpec:
    sigma_z = pauli_matrices()[2]
    return ModelSpec(
        name='dephasing-sin',
        generator=DiagonalGenerator(
            2, (LindbladTerm(sigma_z, RateSchedule.sinusoid(1.0, omega=omega)),)
        ),
        description="L = sigma_z, gamma(t) = sin t; g(t) = 2 max(0, -sin t)",
        analytic_g=lambda t: 2.0 * max(0.0, -math.sin(omega * t)),
        analytic_n_t=(lambda t: _dephasing_sin_n_t(omega * t) / omega),
    )


def eternal_nm() -> ModelSpec:
    """
    L(rho) = 1/2 sum_i gamma_i (sigma_i rho sigma_i - rho), gamma = (1, 1, -tanh t),
    i.e. Lindblad operators sigma_i/sqrt2 with rates gamma_i. CP-divisibility
    breaks at every t > 0 while the map itself stays CP.
    """
    terms = tuple(
        LindbladTerm(sigma / math.sqrt(2.0), rate)
        for sigma, rate in zip(
            pauli_matrices(),
            (RateSchedule.constant(1.0), RateSchedule.constant(1.0), RateSchedule.tanh_negative(1.0)),
        )
    )
    return ModelSpec(
        name='eternal-nm',
        generator=DiagonalGenerator(2, terms),
        description="L_i = sigma_i/sqrt2, rates (1, 1, -tanh t); g(t) = tanh t, N_T = ln cosh t",
        analytic_g=lambda t: math.tanh(t),
        analytic_n_t=lambda t: math.log(math.cosh(t)),
    )


def amplitude_damping_const(gamma0: float = 1.0) -> ModelSpec:
    lowering = np.array([[0, 1], [0, 0]], dtype=complex)
    return ModelSpec(
        name='amplitude-damping-const',
        generator=DiagonalGenerator(2, (LindbladTerm(lowering, RateSchedule.constant(gamma0)),)),
        description=f"L = |0><1|, gamma = {gamma0}; g = 0",
        analytic_g=lambda t: 0.0,
        analytic_n_t=lambda t: 0.0,
        markovian=True,
    )


def random_kossakowski(seed: int = RANDOM_MODEL_SEED, n_terms: int = 3) -> ModelSpec:
    """
    Qubit model with seeded random traceless Lindblad operators and sinusoidal
    rates whose offsets are small enough for the rates to change sign.
    """
    rng = np.random.default_rng(seed)
    terms = []
    for _ in range(n_terms):
        op = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        op -= np.trace(op) / 2.0 * np.eye(2)
        op /= np.linalg.norm(op)
        rate = RateSchedule.sinusoid(
            amplitude=float(rng.uniform(0.5, 1.5)),
            omega=float(rng.uniform(0.5, 2.0)),
            phase=float(rng.uniform(0.0, 2.0 * math.pi)),
            offset=float(rng.uniform(-0.2, 0.5)),
        )
        terms.append(LindbladTerm(op, rate))
    return ModelSpec(
        name='random-kossakowski',
        generator=DiagonalGenerator(2, tuple(terms)),
        description=f"{n_terms} random traceless L with sinusoidal rates (seed {seed})",
    )


_BUILDERS: Dict[str, Callable[[], ModelSpec]] = {
    'dephasing-const': dephasing_const,
    'dephasing-sin': dephasing_sin,
    'eternal-nm': eternal_nm,
    'amplitude-damping-const': amplitude_damping_const,
    'random-kossakowski': random_kossakowski,
}


def catalog() -> List[ModelSpec]:
    """All benchmark models, in a fixed order."""
    return [build() for build in _BUILDERS.values()]


def model_names() -> List[str]:
    return list(_BUILDERS)


def _encode_matrix(m: np.ndarray) -> List:
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def to_spec(model: ModelSpec) -> str:
    """Serialize a model's generator to schema-1 JSON text."""
    g = model.generator
    document = {
        'schema': SCHEMA_VERSION,
        'name': model.name,
        'dim': g.dim,
        'hamiltonian': None if g.hamiltonian is None else _encode_matrix(g.hamiltonian),
        'terms': [
            {'matrix': _encode_matrix(term.operator), 'rate': term.rate.to_dict()}
            for term in g.terms
        ],
    }
    return json.dumps(document, indent=2)


def _decode_matrix(value: Any, dim: int, field: str) -> np.ndarray:
    if not isinstance(value, list):
        raise ParseError("matrix must be a list of rows", field=field)
    if len(value) != dim:
        raise ValidationError(
            f"{field} has {len(value)} rows, expected {dim}", invariant='dimension consistency'
        )
    out = np.zeros((dim, dim), dtype=complex)
    for i, row in enumerate(value):
        if not isinstance(row, list):
            raise ParseError("matrix row must be a list", field=f"{field}[{i}]")
        if len(row) != dim:
            raise ValidationError(
                f"{field}[{i}] has {len(row)} entries, expected {dim}",
                invariant='dimension consistency'
            )
        for j, entry in enumerate(row):
            where = f"{field}[{i}][{j}]"
            if (
                not isinstance(entry, list) or len(entry) != 2
                or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in entry)
            ):
                raise ParseError("complex entry must be a [re, im] pair of numbers", field=where)
            if not all(math.isfinite(x) for x in entry):
                raise ParseError("complex entry must be finite", field=where)
            out[i, j] = complex(entry[0], entry[1])
    return out


def _decode_rate(value: Any, field: str) -> RateSchedule:
    if not isinstance(value, dict):
        raise ParseError("rate must be an object with a 'kind'", field=field)
    try:
        return RateSchedule.from_dict(value)
    except (TypeError, ValueError) as e:
        raise ParseError(f"invalid rate: {e}", field=field) from e


def from_spec(json_text: str) -> ModelSpec:
    """
    Parse and validate a schema-1 generator specification.

    Args:
        json_text: JSON document

    Returns:
        ModelSpec wrapping the parsed DiagonalGenerator

    Raises:
        ParseError: Malformed JSON or field (carries line and field)
        ValidationError: Well-formed spec violating a model invariant
    """
    try:
        document = json.loads(json_text)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e.msg}", line=e.lineno) from e
    if not isinstance(document, dict):
        raise ParseError("specification must be a JSON object")

    schema = document.get('schema', SCHEMA_VERSION)
    if schema != SCHEMA_VERSION:
        raise ParseError(f"unsupported schema version {schema!r}", field='schema')

    dim = document.get('dim')
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise ParseError("dim must be a positive integer", field='dim')

    terms_raw = document.get('terms')
    if not isinstance(terms_raw, list):
        raise ParseError("terms must be a list", field='terms')
    if len(terms_raw) > dim * dim:
        raise ValidationError(
            f"{len(terms_raw)} Lindblad terms exceed d^2 = {dim * dim}", invariant='n <= d^2'
        )

    terms = []
    for k, term in enumerate(terms_raw):
        if not isinstance(term, dict):
            raise ParseError("term must be an object", field=f"terms[{k}]")
        if 'matrix' not in term or 'rate' not in term:
            raise ParseError("term needs 'matrix' and 'rate'", field=f"terms[{k}]")
        operator = _decode_matrix(term['matrix'], dim, f"terms[{k}].matrix")
        rate = _decode_rate(term['rate'], f"terms[{k}].rate")
        terms.append(LindbladTerm(operator, rate))

    hamiltonian = None
    if document.get('hamiltonian') is not None:
        hamiltonian = _decode_matrix(document['hamiltonian'], dim, 'hamiltonian')
        try:
            hamiltonian = hermitize(hamiltonian)
        except NonHermitian as e:
            raise ValidationError(str(e), invariant='Hamiltonian Hermitian') from e

    try:
        generator = DiagonalGenerator(dim, tuple(terms), hamiltonian)
    except DimensionMismatch as e:
        raise ValidationError(str(e), invariant='dimension consistency') from e

    name = document.get('name', 'custom')
    if not isinstance(name, str):
        raise ParseError("name must be a string", field='name')
    logger.debug(f"Parsed model '{name}' with d={dim} and {len(terms)} term(s)")
    return ModelSpec(name=name, generator=generator, description='loaded from specification')


def get_model(name_or_path: Union[str, Path], seed: Optional[int] = None) -> ModelSpec:
    """
    Look up a catalog model by name, or load a specification file.

    seed reseeds random-kossakowski (default RANDOM_MODEL_SEED); the other
    models ignore it.

    Raises:
        ValueError: If the name is unknown and no such file exists
        ParseError, ValidationError: From from_spec
    """
    key = str(name_or_path)
    if key == 'random-kossakowski' and seed is not None:
        return random_kossakowski(seed)
    if key in _BUILDERS:
        return _BUILDERS[key]()
    path = Path(key)
    if not path.is_file():
        raise ValueError(f"Unknown model '{key}'. Catalog models: {model_names()}")
    logger.info(f"Loading generator specification from {path}")
    return from_spec(path.read_text())
