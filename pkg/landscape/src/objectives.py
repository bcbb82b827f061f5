from __future__ import annotations
from dataclasses import dataclass
import numpy as np
from .dynamics import (
    ControlField,
    SegmentSpectra,
    TimeGrid,
    chain_propagators,
    heisenberg_dipoles,
    PropagationResult,
    segment_spectra,
    trapezoid_weights,
)
from .errors import NumericalError
from .system import EnsembleObjective, QuantumSystem, UnitaryTarget, MAXIMIZE

IMAGINARY_TOLERANCE = 1e-10
HESSIAN_ASYMMETRY_TOLERANCE = 1e-3

GRADIENT_METHODS = ["exact", "pointwise"]


@dataclass(frozen=True)
class GradientField:
    """
    Continuum kernel dJ/dE(t_k) sampled on the grid
    """

    grid: TimeGrid
    values: np.ndarray

    def norm(self) -> float:
        """
        T-normalized L2 norm, [(1/T) int g(t)^2 dt]^(1/2)
        """
        weights = trapezoid_weights(self.grid)
        return float(np.sqrt(np.sum(weights * self.values**2) / self.grid.horizon))


@dataclass(frozen=True)
class HessianMatrix:
    grid: TimeGrid
    values: np.ndarray
    # Relative asymmetry ||H - H^T||_F / ||H||_F before symmetrization
    asymmetry: float
    tolerance: float = HESSIAN_ASYMMETRY_TOLERANCE

    def weighted(self) -> np.ndarray:
        """
        W^(1/2) H W^(1/2), the symmetric matrix of the integral operator
        """
        root = np.sqrt(trapezoid_weights(self.grid))
        return root[:, None] * self.values * root[None, :]

    def spectrum(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.weighted())


@dataclass(frozen=True)
class QuadraticTestObjective:
    """
    J[E] = -1/2 ||E - E*||^2, with a known Hessian -1/w_k on the diagonal
    """

    target: ControlField

    @property
    def direction(self) -> str:
        return MAXIMIZE


def inner(grid: TimeGrid, a: np.ndarray, b: np.ndarray) -> float:
    return float(np.sum(trapezoid_weights(grid) * a * b))


def _real_part(value, what: str):
    residue = np.max(np.abs(np.imag(value)))
    scale = max(1.0, float(np.max(np.abs(np.real(value)))))
    if residue > IMAGINARY_TOLERANCE * scale:
        raise NumericalError(f"ERROR: {what} has imaginary residue {residue:.3e}")
    return np.real(value)


def evaluate_jo(objective: EnsembleObjective, u_final: np.ndarray) -> float:
    rho_t = u_final @ objective.rho0 @ u_final.conj().T
    return float(_real_part(np.trace(rho_t @ objective.observable), "J_O"))


def evaluate_jw(target: UnitaryTarget, u_final: np.ndarray) -> float:
    n_levels = target.n_levels
    return float(2 * n_levels - 2 * np.trace(target.w.conj().T @ u_final).real)


def landscape_extremes(objective) -> tuple[float, float]:
    """
    (J_min, J_max) over all unitaries
    """
    if isinstance(objective, UnitaryTarget):
        return 0.0, 4.0 * objective.n_levels

    # von Neumann bounds from sorted spectra
    rho = np.sort(np.linalg.eigvalsh(objective.rho0))[::-1]
    observable = np.sort(np.linalg.eigvalsh(objective.observable))[::-1]
    return float(np.dot(observable[::-1], rho)), float(np.dot(observable, rho))


def _cost_matrix(objective, u_final: np.ndarray) -> np.ndarray:
    """
    C such that the first variation is dJ = tr(C dU(T))
    """
    u_dagger = u_final.conj().T
    if isinstance(objective, EnsembleObjective):
        rho_t = u_final @ objective.rho0 @ u_dagger
        commutator = rho_t @ objective.observable - objective.observable @ rho_t
        return u_dagger @ commutator
    w = objective.w
    return u_dagger @ w @ u_dagger - w.conj().T


def _divided_differences(exponents: np.ndarray) -> np.ndarray:
    """
    (e^a_k - e^a_l) / (a_k - a_l), with e^a_k on the diagonal
    """
    z = exponents[:, :, None] - exponents[:, None, :]
    small = np.abs(z) < 1e-4
    safe = np.where(small, 1.0, z)
    ratio = np.where(small, 1.0 + z / 2 + z**2 / 6, (np.exp(z) - 1.0) / safe)
    return np.exp(exponents)[:, None, :] * ratio


def _exact_kernel(
    system: QuantumSystem,
    grid: TimeGrid,
    spectra: SegmentSpectra,
    history: np.ndarray,
    cost_u: np.ndarray,
) -> np.ndarray:
    """
    Exact derivative of the discretized objective, as a continuum kernel
    """
    dt = spectra.dt
    vectors = spectra.vectors
    vectors_t = vectors.transpose(0, 2, 1)

    # X_k = U(t_k) C U(T) U^dagger(t_{k+1})
    costates = history[:-1] @ cost_u @ history[1:].conj().transpose(0, 2, 1)
    rotated = vectors_t @ costates @ vectors
    dipole_rotated = 1j * dt * (vectors_t @ system.dipole @ vectors)
    divided = _divided_differences(-1j * dt * spectra.energies)

    per_segment = np.einsum("skl,skl,slk->s", divided, dipole_rotated, rotated)
    per_segment = _real_part(per_segment, "gradient")

    # Each grid value enters the two neighbouring midpoints with weight 1/2
    discrete = np.zeros(grid.n_points)
    discrete[:-1] += 0.5 * per_segment
    discrete[1:] += 0.5 * per_segment
    return discrete / trapezoid_weights(grid)


def _pointwise_kernel(
    system: QuantumSystem, history: np.ndarray, cost_u: np.ndarray
) -> np.ndarray:
    mu_tilde = heisenberg_dipoles(system, PropagationResult(history[-1], history))
    values = 1j * np.einsum("ij,kji->k", cost_u, mu_tilde)
    return _real_part(values, "gradient")


def _value_and_kernel(
    system: QuantumSystem, objective, field: ControlField, method: str = "exact"
) -> tuple[float, np.ndarray]:
    if method not in GRADIENT_METHODS:
        raise ValueError(f"Unknown gradient method {method}")

    if isinstance(objective, QuadraticTestObjective):
        difference = field.values - objective.target.values
        value = -0.5 * inner(field.grid, difference, difference)
        return value, -difference

    spectra = segment_spectra(system, field)
    history = chain_propagators(spectra.propagators)
    u_final = history[-1]

    if isinstance(objective, EnsembleObjective):
        value = evaluate_jo(objective, u_final)
    else:
        value = evaluate_jw(objective, u_final)

    cost_u = _cost_matrix(objective, u_final) @ u_final
    if method == "exact":
        kernel = _exact_kernel(system, field.grid, spectra, history, cost_u)
    else:
        kernel = _pointwise_kernel(system, history, cost_u)
    return value, kernel


def evaluate(system: QuantumSystem, objective, field: ControlField) -> float:
    if isinstance(objective, QuadraticTestObjective):
        return _value_and_kernel(system, objective, field)[0]

    history = chain_propagators(segment_spectra(system, field).propagators)
    if isinstance(objective, EnsembleObjective):
        return evaluate_jo(objective, history[-1])
    return evaluate_jw(objective, history[-1])


def evaluate_with_gradient(
    system: QuantumSystem, objective, field: ControlField, method: str = "exact"
) -> tuple[float, GradientField]:
    """
    J and dJ/dE(t) from a single propagation
    """
    value, kernel = _value_and_kernel(system, objective, field, method)
    return value, GradientField(field.grid, kernel)


def gradient(
    system: QuantumSystem, objective, field: ControlField, method: str = "exact"
) -> GradientField:
    return evaluate_with_gradient(system, objective, field, method)[1]


def gradient_jo(
    system: QuantumSystem,
    objective: EnsembleObjective,
    field: ControlField,
    method: str = "exact",
) -> GradientField:
    """
    dJ_O/dE(t_k) = Re[i tr(U^dagger(T) [rho(T), O] U(T) mu(t_k))]
    """
    return gradient(system, objective, field, method)


def gradient_jw(
    system: QuantumSystem,
    target: UnitaryTarget,
    field: ControlField,
    method: str = "exact",
) -> GradientField:
    """
    dJ_W/dE(t_k) = Re[-i tr((W^dagger U(T) - U^dagger(T) W) mu(t_k))]
    """
    return gradient(system, target, field, method)


def hessian_step(field: ControlField) -> float:
    return 1e-4 * max(1.0, float(np.max(np.abs(field.values))))


def hessian(
    system: QuantumSystem,
    objective,
    field: ControlField,
    method: str = "fd_of_gradient",
    step: float | None = None,
) -> HessianMatrix:
    """
    Hessian kernel H(t_k, t_l) by central differences of the gradient.
    Column l perturbs E(t_l) by +-h and is divided by the quadrature weight
    of t_l, so that H acts through the trapezoidal inner product.
    """
    if method != "fd_of_gradient":
        raise ValueError(f"Unknown Hessian method {method}")

    h = step if step is not None else hessian_step(field)
    weights = trapezoid_weights(field.grid)
    n_points = field.grid.n_points
    values = np.empty((n_points, n_points))

    for column in range(n_points):
        plus = field.values.copy()
        plus[column] += h
        minus = field.values.copy()
        minus[column] -= h
        g_plus = gradient(system, objective, field.with_values(plus)).values
        g_minus = gradient(system, objective, field.with_values(minus)).values
        values[:, column] = (g_plus - g_minus) / (2 * h) / weights[column]

    scale = np.linalg.norm(values)
    asymmetry = float(np.linalg.norm(values - values.T) / scale) if scale > 0 else 0.0
    if asymmetry >= HESSIAN_ASYMMETRY_TOLERANCE:
        raise NumericalError(f"ERROR: Hessian asymmetry {asymmetry:.3e} exceeds tolerance")

    return HessianMatrix(field.grid, 0.5 * (values + values.T), asymmetry)
