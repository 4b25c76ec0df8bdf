import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from darkcavity.errors import DomainError, FitDiverged, NonContinuableModel
from darkcavity.grid import ScalingSpec, make_grid, potential_matrix
from darkcavity.potentials import (
    AdiabaticChannel,
    ClosedForm,
    EckartParams,
    FrequencyProfile,
    RphSurface,
    TabulatedCurve,
    adiabatic_gradient,
    constant_potential,
    eval_adiabatic,
    fit_tabulated,
    gaussian_damped_well,
    harmonic_potential,
    read_tabulated_csv,
    sample_profile,
    write_tabulated_csv,
)


def test_eckart_asymptotes_and_top():
    eck = EckartParams()
    assert eck(np.array([-40.0]))[0] == pytest.approx(0.0, abs=1e-12)
    x = np.linspace(-10, 10, 20001)
    assert np.max(eck(x)) == pytest.approx(0.02, rel=0.05)


def test_eckart_rejects_bad_parameters():
    with pytest.raises(DomainError):
        EckartParams(amplitude=-1.0)
    with pytest.raises(DomainError):
        EckartParams(steepness=0.0)


def test_eckart_real_and_complex_inputs_agree_on_axis():
    eck = EckartParams()
    x = np.linspace(-5, 5, 11)
    assert np.array_equal(eck(x), np.real(eck(x + 0j)))


@settings(max_examples=50, deadline=None)
@given(st.floats(-8, 8))
def test_eckart_derivative_matches_difference(x):
    eck = EckartParams()
    h = 1e-5
    fd = (eck(np.array([x + h])) - eck(np.array([x - h]))) / (2 * h)
    assert eck.derivative(np.array([x]))[0] == pytest.approx(fd[0], abs=1e-9)


def test_benchmark_well_forms():
    x = np.linspace(-3, 3, 7)
    bare = gaussian_damped_well(height=0.0)
    np.testing.assert_allclose(bare(x), 0.5 * x**2 * np.exp(-0.1 * x**2))
    assert gaussian_damped_well()(np.array([50.0]))[0] == pytest.approx(0.8)


def test_closed_form_numeric_derivative_fallback():
    f = ClosedForm(lambda x: x**3, None, "cube")
    assert f.derivative(np.array([2.0]))[0] == pytest.approx(12.0, rel=1e-8)


def test_profile_constructors():
    step = FrequencyProfile.tanh_step(0.03, 0.01, 2.0, 0.0)
    assert step.limits == pytest.approx((0.03, 0.01))
    bump = FrequencyProfile.gaussian_well(4e-4, -1.6e-3, 4.0)
    assert bump(np.array([0.0]))[0] == pytest.approx(2e-3)
    assert bump(np.array([60.0]))[0] == pytest.approx(4e-4)
    assert FrequencyProfile.from_dict(bump.to_dict()) == bump


def test_adiabatic_channel_adds_zero_point_energy():
    ch = AdiabaticChannel(1800.0, constant_potential(0.0), FrequencyProfile.constant(0.01), n_perp=1)
    assert ch(np.array([3.0]))[0] == pytest.approx(0.015)
    assert ch.bare()(np.array([3.0]))[0] == pytest.approx(0.0)


def test_shift_invariance_of_gradient():
    prof = FrequencyProfile.gaussian_well(4e-4, -1.6e-3, 4.0)
    a = AdiabaticChannel(1813.0, constant_potential(0.0), prof)
    b = AdiabaticChannel(1813.0, constant_potential(0.3), prof)
    x = np.linspace(-5, 5, 21)
    np.testing.assert_allclose(eval_adiabatic(b, x) - eval_adiabatic(a, x), 0.3)
    np.testing.assert_allclose(adiabatic_gradient(a, x), adiabatic_gradient(b, x))


@settings(max_examples=40, deadline=None)
@given(st.floats(-8, 8))
def test_adiabatic_gradient_matches_difference(x):
    ch = AdiabaticChannel(5833.2, EckartParams(), FrequencyProfile.tanh_step(0.045, 0.038, 1.0, -1.3))
    h = 1e-5
    fd = (ch(np.array([x + h])) - ch(np.array([x - h]))) / (2 * h)
    assert adiabatic_gradient(ch, np.array([x]))[0] == pytest.approx(fd[0], rel=1e-6, abs=1e-12)


def test_rph_surface_reduces_to_channel_at_minimum():
    surf = RphSurface(harmonic_potential(), FrequencyProfile.constant(0.5), 2.0)
    assert surf(np.array([1.0]), np.array([0.0]))[0] == pytest.approx(0.5)
    assert surf.channel(0)(np.array([1.0]))[0] == pytest.approx(0.75)


def test_tabulated_curve_validation():
    with pytest.raises(DomainError):
        TabulatedCurve(np.arange(3.0), np.zeros(3))
    with pytest.raises(DomainError):
        TabulatedCurve(np.array([0, 1, 2, 3, 3, 4, 5, 6.0]), np.zeros(8))
    tab = TabulatedCurve(np.arange(10.0), np.zeros(10))
    with pytest.raises(NonContinuableModel):
        potential_matrix(tab, make_grid(0, 9, 16), ScalingSpec(0.5))


def test_table_round_trip_with_reference(tmp_path):
    x = np.linspace(-4, 4, 17)
    tab = TabulatedCurve(x, -0.001 * np.exp(-(x**2)))
    path = tmp_path / "t.csv"
    write_tabulated_csv(path, tab, comment="relative to the reactant value")
    back = read_tabulated_csv(path, reference_frequency=0.04)
    np.testing.assert_allclose(back.values, tab.values + 0.04)


def test_read_table_rejects_wrong_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("x,y\n" + "".join(f"{i},{i}\n" for i in range(10)))
    with pytest.raises(DomainError):
        read_tabulated_csv(path)


def test_fit_recovers_exact_tanh_plus_gaussian():
    prof = FrequencyProfile("fitted_tabulated", 0.04, -0.003, 0.9, -1.0, ((-0.01, 1.2, 0.1),))
    tab = sample_profile(prof, np.round(np.arange(-10, 10.001, 0.1), 10))
    fit = fit_tabulated(tab, n_terms=1)
    assert fit.max_residual < 1e-10


def test_fit_honours_residual_bound_on_noisy_table():
    rng = np.random.default_rng(3)
    x = np.linspace(-6, 6, 121)
    y = 0.02 + 0.004 * np.tanh(x) + rng.normal(scale=1e-5, size=x.size)
    fit = fit_tabulated(TabulatedCurve(x, y), n_terms=1, tolerance=1e-4)
    assert fit.max_residual <= 1e-4
    with pytest.raises(FitDiverged) as info:
        fit_tabulated(TabulatedCurve(x, y), n_terms=1, tolerance=1e-7)
    assert info.value.residual > 1e-7


def test_fit_is_deterministic():
    x = np.linspace(-6, 6, 61)
    tab = TabulatedCurve(x, 0.01 * np.tanh(0.7 * x) - 0.002 * np.exp(-(x**2)))
    assert fit_tabulated(tab) == fit_tabulated(tab)
