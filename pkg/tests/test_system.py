import numpy as np
import pytest
from landscape.src.errors import InvalidSystemError, PresetError
from landscape.src.system import (
    MAXIMIZE,
    MINIMIZE,
    PRESET_TAGS,
    EnsembleObjective,
    QuantumSystem,
    UnitaryTarget,
    build_preset,
    ensure_valid,
    list_presets,
    load_system_file,
    preset_info,
    random_sign_dipole,
    validate,
)


@pytest.mark.parametrize("tag", PRESET_TAGS)
def test_presets_are_valid(tag):
    system, objective = build_preset(tag)
    assert validate(system, objective) == []
    assert objective.n_levels == system.n_levels


def test_list_presets():
    assert list_presets() == PRESET_TAGS
    assert "ensemble8_r2o1" in list_presets()


def test_unknown_preset():
    with pytest.raises(PresetError):
        build_preset("ensemble9_r1o1")
    with pytest.raises(PresetError):
        preset_info("nothing")


def test_field_components_per_preset():
    assert preset_info("ensemble8_r1o1").field_components == 60
    assert preset_info("statetransfer3").field_components == 20


def test_random_sign_dipole_structure():
    dipole = random_sign_dipole(8, 3)
    assert np.array_equal(dipole, dipole.T)
    assert np.all(np.diag(dipole) == 0)
    for i in range(8):
        for j in range(i + 1, 8):
            assert abs(dipole[i, j]) == 0.5 ** (j - i - 1)


def test_random_sign_dipole_is_seeded():
    assert np.array_equal(random_sign_dipole(8, 5), random_sign_dipole(8, 5))
    assert not np.array_equal(random_sign_dipole(8, 0), random_sign_dipole(8, 1))


def test_ensemble_matrices():
    _, r2o1 = build_preset("ensemble8_r2o1")
    assert np.allclose(np.diag(r2o1.rho0).real, [0.25] * 4 + [0] * 4)
    assert np.allclose(np.diag(r2o1.observable).real, [0] * 6 + [4 / 9, 5 / 9])

    _, r3o3 = build_preset("ensemble8_r3o3")
    assert np.trace(r3o3.rho0).real == pytest.approx(1.0, abs=1e-15)
    assert np.allclose(np.diag(r3o3.observable).real, np.arange(8) / 28)


def test_unitary_presets_minimize():
    _, target = build_preset("unitary4")
    assert target.direction == MINIMIZE
    _, objective = build_preset("statetransfer3")
    assert objective.direction == MAXIMIZE


def test_validate_reports_every_violation():
    system = QuantumSystem([0.0, 1.0], [[0.0, 1.0], [1.0, 0.0]])
    objective = EnsembleObjective([[0.7, 0.0], [0.0, 0.7]], [[0.0, 1.0], [0.0, 0.0]])
    kinds = {violation.kind for violation in validate(system, objective)}
    assert kinds == {"trace", "hermitian"}


def test_validate_negative_density():
    system = QuantumSystem([0.0, 1.0], [[0.0, 1.0], [1.0, 0.0]])
    objective = EnsembleObjective([[1.5, 0.0], [0.0, -0.5]], np.eye(2))
    assert [violation.kind for violation in validate(system, objective)] == ["positivity"]


def test_validate_shapes_and_symmetry():
    system = QuantumSystem([0.0, 1.0], [[0.0, 1.0], [0.5, 0.0]])
    kinds = [violation.kind for violation in validate(system, UnitaryTarget(np.eye(3)))]
    assert "symmetry" in kinds
    assert "shape" in kinds


def test_ensure_valid_raises_with_violations():
    system = QuantumSystem([0.0, 1.0], [[0.0, 1.0], [1.0, 0.0]])
    with pytest.raises(InvalidSystemError) as error:
        ensure_valid(system, UnitaryTarget([[1.0, 1.0], [0.0, 1.0]]))
    assert error.value.violations[0].kind == "unitary"


def test_load_system_file(tmp_path):
    path = tmp_path / "system.json"
    path.write_text(
        """
        {
          // Hadamard-like target with a complex phase
          "h0": [-1, 1],
          "dipole": [[0, 1], [1, 0]],
          "w": {"real": [[0, 0], [0, 0]], "imag": [[1, 0], [0, 1]]}
        }
        """
    )
    system, target = load_system_file(str(path))
    assert system.n_levels == 2
    assert np.allclose(target.w, 1j * np.eye(2))
    assert validate(system, target) == []


def test_load_system_file_ensemble(tmp_path):
    path = tmp_path / "system.json"
    path.write_text(
        '{"h0": [0, 1], "dipole": [[0, 1], [1, 0]], "rho0": [[1, 0], [0, 0]],'
        ' "observable": [[0, 0], [0, 1]], "direction": "minimize"}'
    )
    _, objective = load_system_file(str(path))
    assert objective.direction == MINIMIZE


def test_load_system_file_errors(tmp_path):
    with pytest.raises(PresetError):
        load_system_file(str(tmp_path / "missing.json"))

    path = tmp_path / "system.json"
    path.write_text('{"h0": [0, 1], "dipole": [[0, 1], [1, 0]]}')
    with pytest.raises(PresetError):
        load_system_file(str(path))


def test_system_arrays_are_read_only():
    system, _ = build_preset("twolevel_p12")
    with pytest.raises(ValueError):
        system.dipole[0, 1] = 2.0
