from __future__ import annotations
from dataclasses import dataclass
import numpy as np
from .errors import GridMismatchError, PropagationError
from .system import QuantumSystem

DEFAULT_N_POINTS = 1001


@dataclass(frozen=True)
class TimeGrid:
    """
    Uniform grid t_k = k T / (n_points - 1)
    """

    horizon: float
    n_points: int = DEFAULT_N_POINTS

    def __post_init__(self):
        if self.horizon <= 0:
            raise ValueError(f"Horizon must be positive, got {self.horizon}")
        if self.n_points < 2:
            raise ValueError(f"A time grid needs at least 2 points, got {self.n_points}")

    @property
    def dt(self) -> float:
        return self.horizon / (self.n_points - 1)

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.n_points)


def trapezoid_weights(grid: TimeGrid) -> np.ndarray:
    """
    Quadrature weights of the trapezoidal rule: dt inside, dt/2 at both ends
    """
    weights = np.full(grid.n_points, grid.dt)
    weights[[0, -1]] *= 0.5
    return weights


@dataclass(frozen=True)
class ControlField:
    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.n_points,):
            raise GridMismatchError(
                f"Field has {values.shape} samples, grid expects {self.grid.n_points}"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def with_values(self, values: np.ndarray) -> ControlField:
        return ControlField(self.grid, values)


@dataclass(frozen=True)
class PropagationResult:
    u_final: np.ndarray
    # U(t_k, 0) for every grid point, or only the two endpoints
    u_history: np.ndarray
    has_history: bool = True


@dataclass(frozen=True)
class SegmentSpectra:
    """
    Eigen-decomposition of the midpoint Hamiltonian of every time segment,
    H0 - mu E_k = V diag(energies) V^T, along with the segment propagators
    """

    energies: np.ndarray
    vectors: np.ndarray
    propagators: np.ndarray
    dt: float


def segment_spectra(system: QuantumSystem, field: ControlField) -> SegmentSpectra:
    values = field.values
    if not np.all(np.isfinite(values)):
        raise PropagationError("ERROR: control field contains non-finite values")
    if len(system.h0) != system.dipole.shape[0]:
        raise PropagationError("ERROR: h0 and dipole dimensions disagree")

    dt = field.grid.dt
    midpoints = 0.5 * (values[1:] + values[:-1])
    hamiltonians = np.diag(system.h0)[None, :, :] - midpoints[:, None, None] * system.dipole

    # Real symmetric Hamiltonians: real orthogonal eigenvectors
    energies, vectors = np.linalg.eigh(hamiltonians)
    phases = np.exp(-1j * dt * energies)
    propagators = (vectors * phases[:, None, :]) @ vectors.transpose(0, 2, 1)

    return SegmentSpectra(energies, vectors, propagators, dt)


def chain_propagators(propagators: np.ndarray) -> np.ndarray:
    """
    Accumulates U(t_{k+1}, 0) = P_k U(t_k, 0) from U(0, 0) = 1
    """
    n_levels = propagators.shape[1]
    history = np.empty((len(propagators) + 1, n_levels, n_levels), dtype=complex)
    history[0] = np.eye(n_levels)
    for k, propagator in enumerate(propagators):
        history[k + 1] = propagator @ history[k]
    return history


def propagate(
    system: QuantumSystem, field: ControlField, keep_history: bool = True
) -> PropagationResult:
    """
    Midpoint piecewise-constant solution of i dU/dt = (H0 - mu E(t)) U
    """
    spectra = segment_spectra(system, field)
    history = chain_propagators(spectra.propagators)

    if keep_history:
        return PropagationResult(history[-1], history, True)
    return PropagationResult(history[-1], history[[0, -1]], field.grid.n_points == 2)


def heisenberg_dipole(system: QuantumSystem, result: PropagationResult, k: int) -> np.ndarray:
    """
    mu(t_k) = U^dagger(t_k, 0) mu U(t_k, 0)
    """
    if not result.has_history:
        raise PropagationError("ERROR: propagation was computed without history")
    if not 0 <= k < len(result.u_history):
        raise IndexError(f"Time index {k} out of range")

    u = result.u_history[k]
    return u.conj().T @ system.dipole @ u


def heisenberg_dipoles(system: QuantumSystem, result: PropagationResult) -> np.ndarray:
    if not result.has_history:
        raise PropagationError("ERROR: propagation was computed without history")
    history = result.u_history
    return history.conj().transpose(0, 2, 1) @ system.dipole @ history


def fluence(field: ControlField) -> float:
    """
    Integral of E(t)^2 over [0, T], trapezoidal
    """
    return float(np.sum(trapezoid_weights(field.grid) * field.values**2))
