from __future__ import annotations
from dataclasses import dataclass, field
from fractions import Fraction
import os
import commentjson as json
import numpy as np
from .errors import InvalidSystemError, PresetError
from .rng import substream

STRUCTURE_TOLERANCE = 1e-12

MAXIMIZE = "maximize"
MINIMIZE = "minimize"


def _frozen(array, dtype) -> np.ndarray:
    array = np.array(array, dtype=dtype)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class QuantumSystem:
    """
    Closed N-level system H(t) = H0 - mu E(t), hbar = 1.
    h0 holds the diagonal of the field-free Hamiltonian.
    """

    h0: np.ndarray
    dipole: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "h0", _frozen(self.h0, float))
        object.__setattr__(self, "dipole", _frozen(self.dipole, float))

    @property
    def n_levels(self) -> int:
        return len(self.h0)

    @property
    def h0_matrix(self) -> np.ndarray:
        return np.diag(self.h0).astype(complex)


@dataclass(frozen=True)
class EnsembleObjective:
    """
    J_O = tr(U rho0 U^dagger O)
    """

    rho0: np.ndarray
    observable: np.ndarray
    direction: str = MAXIMIZE

    def __post_init__(self):
        object.__setattr__(self, "rho0", _frozen(self.rho0, complex))
        object.__setattr__(self, "observable", _frozen(self.observable, complex))

    @property
    def n_levels(self) -> int:
        return self.rho0.shape[0]


@dataclass(frozen=True)
class UnitaryTarget:
    """
    J_W = ||W - U||_F^2, always minimized
    """

    w: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "w", _frozen(self.w, complex))

    @property
    def n_levels(self) -> int:
        return self.w.shape[0]

    @property
    def direction(self) -> str:
        return MINIMIZE


@dataclass(frozen=True)
class SystemPreset:
    tag: str
    dipole_sign_seed: int = 0
    # Recommended number of sine components of the random initial fields
    field_components: int = field(default=20, compare=False)
    horizon: float = field(default=10.0, compare=False)


@dataclass(frozen=True)
class Violation:
    kind: str
    message: str

    def __str__(self) -> str:
        return f"{self.kind}: {self.message}"


def _rational_diagonal(values: list) -> np.ndarray:
    # Fractions are converted once, at full double precision
    return np.diag([float(Fraction(v)) for v in values])


def _projector(n_levels: int, level: int) -> np.ndarray:
    projector = np.zeros((n_levels, n_levels))
    projector[level, level] = 1.0
    return projector


H0_EIGHT_LEVEL = [-10, -8, -4, 2, 10, 20, 32, 46]
H0_FOUR_LEVEL = [-10, -7, -1, 8]
H0_THREE_LEVEL = [-10, -5, 5]
H0_TWO_LEVEL = [-1, 1]

DIPOLE_THREE_LEVEL = [[0, -1, -0.5], [-1, 0, 1], [-0.5, 1, 0]]
DIPOLE_TWO_LEVEL = [[0, 1], [1, 0]]

RHO = {
    "r1": _projector(8, 0),
    "r2": _rational_diagonal(["1/4"] * 4 + ["0"] * 4),
    "r3": _rational_diagonal([f"{k}/28" for k in range(7, -1, -1)]),
}

OBSERVABLES = {
    "o1": _rational_diagonal(["0"] * 6 + ["4/9", "5/9"]),
    "o2": _rational_diagonal(["0"] * 4 + ["4/17"] * 3 + ["5/17"]),
    "o3": _rational_diagonal([f"{k}/28" for k in range(8)]),
}

W_FOUR_LEVEL = [[1, 0, 0, 0], [0, 0, 1, 0], [0, -1, 0, 0], [0, 0, 0, 1]]
# NOT gate with the global phase that puts it in SU(2), where traceless Hamiltonians keep U
W_NOT_GATE = [[0, -1j], [-1j, 0]]

PRESET_TAGS = [
    "ensemble8_r1o1",
    "ensemble8_r1o2",
    "ensemble8_r2o1",
    "ensemble8_r2o2",
    "ensemble8_r3o3",
    "unitary4",
    "statetransfer3",
    "twolevel_p12",
    "twolevel_unitary",
]


def list_presets() -> list[str]:
    return list(PRESET_TAGS)


def preset_info(tag: str, dipole_sign_seed: int = 0) -> SystemPreset:
    if tag not in PRESET_TAGS:
        raise PresetError(f"Unknown preset: {tag} (known: {', '.join(PRESET_TAGS)})")
    components = 60 if tag.startswith("ensemble8") else 20
    return SystemPreset(tag, dipole_sign_seed, field_components=components)


def random_sign_dipole(n_levels: int, dipole_sign_seed: int) -> np.ndarray:
    """
    Banded dipole with |mu_ij| = 0.5^(|i-j|-1) off the diagonal and random
    signs on the strict upper triangle, mirrored to keep mu symmetric.
    """
    rows, cols = np.triu_indices(n_levels, k=1)
    signs = substream(dipole_sign_seed, "dipole").choice([-1.0, 1.0], size=len(rows))

    dipole = np.zeros((n_levels, n_levels))
    dipole[rows, cols] = signs * 0.5 ** (cols - rows - 1)
    dipole[cols, rows] = dipole[rows, cols]
    return dipole


def build_preset(
    tag: str, dipole_sign_seed: int = 0
) -> tuple[QuantumSystem, EnsembleObjective | UnitaryTarget]:
    """
    Expands a preset tag into its system and objective
    """
    preset_info(tag, dipole_sign_seed)

    if tag.startswith("ensemble8"):
        rho_key, observable_key = tag.split("_")[1][:2], tag.split("_")[1][2:]
        system = QuantumSystem(H0_EIGHT_LEVEL, random_sign_dipole(8, dipole_sign_seed))
        return system, EnsembleObjective(RHO[rho_key], OBSERVABLES[observable_key])

    if tag == "unitary4":
        system = QuantumSystem(H0_FOUR_LEVEL, random_sign_dipole(4, dipole_sign_seed))
        return system, UnitaryTarget(W_FOUR_LEVEL)

    if tag == "statetransfer3":
        system = QuantumSystem(H0_THREE_LEVEL, DIPOLE_THREE_LEVEL)
        return system, EnsembleObjective(_projector(3, 0), _projector(3, 2))

    system = QuantumSystem(H0_TWO_LEVEL, DIPOLE_TWO_LEVEL)
    if tag == "twolevel_p12":
        return system, EnsembleObjective(_projector(2, 0), _projector(2, 1))
    return system, UnitaryTarget(W_NOT_GATE)


def _matrix_from_json(value) -> np.ndarray:
    if isinstance(value, dict):
        return np.array(value["real"], dtype=float) + 1j * np.array(
            value.get("imag", np.zeros_like(value["real"])), dtype=float
        )
    return np.array(value, dtype=complex)


def load_system_file(
    path: str,
) -> tuple[QuantumSystem, EnsembleObjective | UnitaryTarget]:
    """
    Loads a custom system from a JSON file with fields
    {h0, dipole, rho0 + observable (+ direction) | w}
    """
    if not os.path.exists(path):
        raise PresetError(f"ERROR: The system file {path} can't be found")
    with open(path, "r", encoding="utf8") as stream:
        data: dict = json.load(stream)

    for key in ["h0", "dipole"]:
        if key not in data:
            raise PresetError(f"ERROR: missing required key {key} in {path}")

    system = QuantumSystem(data["h0"], data["dipole"])
    if "w" in data:
        return system, UnitaryTarget(_matrix_from_json(data["w"]))
    if "rho0" in data and "observable" in data:
        direction = data.get("direction", MAXIMIZE)
        if direction not in [MAXIMIZE, MINIMIZE]:
            raise PresetError(f"Value for direction should be one of: {MAXIMIZE},{MINIMIZE}")
        objective = EnsembleObjective(
            _matrix_from_json(data["rho0"]),
            _matrix_from_json(data["observable"]),
            direction,
        )
        return system, objective

    raise PresetError(f"ERROR: {path} needs either w or rho0 and observable")


def _hermitian_error(matrix: np.ndarray) -> float:
    return float(np.max(np.abs(matrix - matrix.conj().T)))


def validate(system: QuantumSystem, objective) -> list[Violation]:
    """
    Checks every structural invariant; returns all violations (empty when valid)
    """
    violations: list[Violation] = []
    n = system.n_levels

    if system.h0.ndim != 1 or n < 1:
        violations.append(Violation("shape", "h0 must be a non-empty vector"))
    if system.dipole.shape != (n, n):
        violations.append(
            Violation("shape", f"dipole shape {system.dipole.shape}, expected {(n, n)}")
        )
    elif not np.array_equal(system.dipole, system.dipole.T):
        violations.append(Violation("symmetry", "dipole is not exactly symmetric"))
    if not (np.all(np.isfinite(system.h0)) and np.all(np.isfinite(system.dipole))):
        violations.append(Violation("finite", "system contains non-finite entries"))

    if isinstance(objective, EnsembleObjective):
        for name, matrix in [("rho0", objective.rho0), ("observable", objective.observable)]:
            if matrix.shape != (n, n):
                violations.append(
                    Violation("shape", f"{name} shape {matrix.shape}, expected {(n, n)}")
                )
        if any(v.kind == "shape" for v in violations):
            return violations

        if _hermitian_error(objective.observable) > STRUCTURE_TOLERANCE:
            violations.append(Violation("hermitian", "observable is not Hermitian"))
        if _hermitian_error(objective.rho0) > STRUCTURE_TOLERANCE:
            violations.append(Violation("hermitian", "rho0 is not Hermitian"))
        else:
            trace = np.trace(objective.rho0).real
            if abs(trace - 1.0) > STRUCTURE_TOLERANCE:
                violations.append(Violation("trace", f"rho0 trace is {trace}, expected 1"))
            smallest = np.linalg.eigvalsh(objective.rho0).min()
            if smallest < -STRUCTURE_TOLERANCE:
                violations.append(
                    Violation("positivity", f"rho0 has negative eigenvalue {smallest}")
                )
        if objective.direction not in [MAXIMIZE, MINIMIZE]:
            violations.append(Violation("direction", f"unknown direction {objective.direction}"))

    elif isinstance(objective, UnitaryTarget):
        if objective.w.shape != (n, n):
            violations.append(
                Violation("shape", f"w shape {objective.w.shape}, expected {(n, n)}")
            )
        else:
            error = np.max(np.abs(objective.w.conj().T @ objective.w - np.eye(n)))
            if error > STRUCTURE_TOLERANCE:
                violations.append(Violation("unitary", f"w^dagger w deviates by {error}"))
    else:
        violations.append(Violation("objective", f"unsupported objective {type(objective)}"))

    return violations


def ensure_valid(system: QuantumSystem, objective):
    violations = validate(system, objective)
    if violations:
        raise InvalidSystemError(violations)
