import numpy as np
import pytest
from landscape.src.dynamics import ControlField, TimeGrid, trapezoid_weights
from landscape.src.flow import generate_random_field
from landscape.src.objectives import evaluate
from landscape.src.system import build_preset


def random_unitary(rng: np.random.Generator, n_levels: int) -> np.ndarray:
    """
    Haar-distributed unitary from the QR decomposition of a complex Gaussian matrix
    """
    z = rng.standard_normal((n_levels, n_levels)) + 1j * rng.standard_normal((n_levels, n_levels))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def small_grid() -> TimeGrid:
    return TimeGrid(10.0, 61)


@pytest.fixture
def flow_grid() -> TimeGrid:
    return TimeGrid(10.0, 101)


@pytest.fixture
def twolevel():
    return build_preset("twolevel_p12")


@pytest.fixture
def twolevel_unitary():
    return build_preset("twolevel_unitary")


@pytest.fixture
def statetransfer():
    return build_preset("statetransfer3")


@pytest.fixture
def unitary4():
    return build_preset("unitary4")


@pytest.fixture
def r2o1():
    return build_preset("ensemble8_r2o1")


@pytest.fixture
def random_field(small_grid):
    return generate_random_field(small_grid, 20, 7)


def finite_difference_kernel(system, objective, field: ControlField, h: float = 1e-6) -> np.ndarray:
    """
    Central differences of J in each field sample, divided by the quadrature weight
    """
    weights = trapezoid_weights(field.grid)
    kernel = np.empty(field.grid.n_points)
    for k in range(field.grid.n_points):
        plus = field.values.copy()
        plus[k] += h
        minus = field.values.copy()
        minus[k] -= h
        difference = evaluate(system, objective, field.with_values(plus)) - evaluate(
            system, objective, field.with_values(minus)
        )
        kernel[k] = difference / (2 * h) / weights[k]
    return kernel
