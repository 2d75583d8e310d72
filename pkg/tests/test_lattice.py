import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from latmag import (
    FieldProfile,
    LatticeSpec,
    ProfileError,
    discrete_curl,
    field_magnitude,
    magnetic_length,
    sample_vector_potential,
    validate_profile,
)


def test_lattice_geometry(spec31):
    assert spec31.dimension == 961
    assert spec31.center == (16, 16)
    assert spec31.half_width == 15
    assert spec31.canonical


def test_even_lattice_center_rounds_down():
    spec = LatticeSpec(8, 6)
    assert spec.center == (4, 3)
    assert not spec.canonical
    assert spec.half_width == 4


@pytest.mark.parametrize("n_x, n_y", [(4, 9), (9, 3), (0, 0)])
def test_lattice_too_small(n_x, n_y):
    with pytest.raises(ValueError):
        LatticeSpec(n_x, n_y)


def test_field_magnitude_examples(spec31):
    homo = FieldProfile.centered(spec31, 0.5)
    assert field_magnitude(homo, 3.0) == 0.5
    assert field_magnitude(homo, 27.0) == 0.5
    grad = FieldProfile.centered(spec31, 0.5, 0.015)
    assert field_magnitude(grad, grad.x0) == 0.5
    # hand evaluation: 0.5 - 0.015 * 15
    assert field_magnitude(grad, grad.x0 + 15) == pytest.approx(0.275, abs=1e-15)


@given(st.floats(0.01, 1.0), st.floats(0.0, 0.05), st.integers(0, 15))
def test_field_magnitude_even_about_center(b0, m_x, dx):
    p = FieldProfile(b0=b0, m_x=m_x, x0=16.0, y0=16.0)
    assert field_magnitude(p, 16 + dx) == field_magnitude(p, 16 - dx)


@pytest.mark.parametrize("b, expected", [(1.0, 1.0), (0.25, 2.0), (0.01, 10.0)])
def test_magnetic_length(b, expected):
    assert magnetic_length(b) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("b", [0.0, -1.0])
def test_magnetic_length_rejects_nonpositive(b):
    with pytest.raises(ValueError):
        magnetic_length(b)


def test_validate_profile_examples(spec31):
    validate_profile(spec31, FieldProfile.centered(spec31, 0.225, 0.015))
    with pytest.raises(ProfileError) as exc:
        validate_profile(spec31, FieldProfile.centered(spec31, 0.2, 0.015))
    assert exc.value.reason == "reversal"
    with pytest.raises(ProfileError) as exc:
        validate_profile(spec31, FieldProfile.centered(spec31, 1.5, 0.0))
    assert exc.value.reason == "magnetic_length"


@given(st.floats(1e-4, 0.06), st.floats(1e-12, 1e-3))
def test_validate_profile_reversal_boundary(m_x, eps):
    spec = LatticeSpec(31, 31)
    edge = m_x * spec.half_width
    validate_profile(spec, FieldProfile.centered(spec, edge, m_x))
    with pytest.raises(ProfileError):
        validate_profile(spec, FieldProfile.centered(spec, edge - eps * edge, m_x))


def test_profile_type_invariants():
    with pytest.raises(ValueError):
        FieldProfile(b0=0.0)
    with pytest.raises(ValueError):
        FieldProfile(b0=0.5, m_x=-0.1)


def test_vector_potential_examples(spec31):
    x0, y0 = spec31.center
    a = sample_vector_potential(spec31, FieldProfile.centered(spec31, 0.7))
    assert a.at(x0, y0) == (0.0, 0.0)
    assert a.at(x0, y0 + 1) == (-0.35, 0.0)
    g = sample_vector_potential(spec31, FieldProfile.centered(spec31, 0.5, 0.015))
    assert g.at(x0, y0) == (0.0, 0.0)
    ax, ay = g.at(x0 + 2, y0)
    assert ax == 0.0
    # alpha = 2 m_x / 3 = 0.01; (0.5 - 0.01 * 2) / 2 * 2
    assert ay == pytest.approx(0.48, abs=1e-15)


def test_homogeneous_potential_is_symmetric_gauge(spec31):
    b0 = 0.37
    a = sample_vector_potential(spec31, FieldProfile.centered(spec31, b0))
    x, y = spec31.coordinates()
    assert np.array_equal(a.a_x, -(b0 / 2) * (y - 16))
    assert np.array_equal(a.a_y, (b0 / 2) * (x - 16))


def test_potential_is_read_only(spec31):
    a = sample_vector_potential(spec31, FieldProfile.centered(spec31, 0.3))
    with pytest.raises(ValueError):
        a.a_x[0, 0] = 1.0


def test_discrete_curl_homogeneous(spec31):
    for b0 in (0.05, 0.5, 1.0):
        a = sample_vector_potential(spec31, FieldProfile.centered(spec31, b0))
        curl = discrete_curl(a)
        assert curl.shape == (27, 27)
        # potential is linear, so the five-point difference is exact up to rounding
        assert np.max(np.abs(curl - b0)) <= 1e-14


def test_discrete_curl_graded_profile(spec31):
    p = FieldProfile.centered(spec31, 0.5, 0.015)
    curl = discrete_curl(sample_vector_potential(spec31, p))
    x = np.arange(3, 30)
    dev = np.abs(curl - field_magnitude(p, x)[None, :])
    away = np.abs(x - 16) >= 2
    # exact for the piecewise-quadratic A_y away from the |x - x0| kink
    assert dev[:, away].max() <= 1e-14
    # stencil straddling the kink: regression value
    assert dev.max() == pytest.approx(0.015 * 2 / 9, rel=1e-9)
