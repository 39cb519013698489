"""Exterior calculus: analytic oracles and structural invariants."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fluxlab.forms import (CohomologyClass1, NonClosedFormError, OneForm,
                           ScalarField, TwoForm, codifferential,
                           exterior_derivative, harmonic_representative,
                           hodge_decompose, l2_inner, l2_norm, oscillation,
                           periods, sup_norm, tol_hodge, wedge_integral)
from fluxlab.mesh import GridMesh

TWO_PI = 2 * np.pi


@pytest.fixture(scope="module")
def mesh():
    return GridMesh(N=64)


def random_scalar(mesh, seed, max_mode=3, amp=1.0):
    """Band-limited random field (trig polynomial below Nyquist)."""
    rng = np.random.default_rng(seed)
    X, Y = mesh.points
    f = np.zeros(mesh.shape)
    for k1 in range(-max_mode, max_mode + 1):
        for k2 in range(-max_mode, max_mode + 1):
            if k1 == 0 and k2 == 0:
                continue
            w = amp * rng.normal() / (1 + k1 * k1 + k2 * k2)
            phase = rng.uniform(0, TWO_PI)
            f += w * np.cos(TWO_PI * (k1 * X + k2 * Y) + phase)
    return ScalarField(mesh, f)


def random_oneform(mesh, seed):
    a = random_scalar(mesh, seed)
    b = random_scalar(mesh, seed + 1)
    return OneForm(mesh, a.values, b.values)


# -- exterior derivative ------------------------------------------------------

def test_d_constant_is_zero(mesh):
    df = exterior_derivative(ScalarField.constant(mesh, 3.7))
    assert sup_norm(df) == 0.0


def test_d_sin_analytic(mesh):
    X, _ = mesh.points
    f = ScalarField(mesh, np.sin(TWO_PI * X))
    df = exterior_derivative(f)
    assert np.abs(df.ax - TWO_PI * np.cos(TWO_PI * X)).max() < 1e-11
    assert np.abs(df.ay).max() < 1e-12


def test_d_constant_oneform_is_zero(mesh):
    assert sup_norm(exterior_derivative(OneForm.constant(mesh, 2.0, -1.0))) == 0.0


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_dd_is_zero(seed):
    mesh = GridMesh(N=32)
    f = random_scalar(mesh, seed)
    dd = exterior_derivative(exterior_derivative(f))
    assert sup_norm(dd) <= 1e-12 * (1.0 + sup_norm(f))


# -- codifferential -----------------------------------------------------------

def test_codifferential_constant(mesh):
    assert sup_norm(codifferential(OneForm.constant(mesh, 1.0, 0.0))) == 0.0


def test_codifferential_laplacian_sign(mesh):
    X, _ = mesh.points
    f = ScalarField(mesh, np.sin(TWO_PI * X))
    lap = codifferential(exterior_derivative(f))
    assert np.abs(lap.values - TWO_PI ** 2 * np.sin(TWO_PI * X)).max() < 1e-9


def test_codifferential_kills_harmonic(mesh):
    assert sup_norm(codifferential(OneForm.constant(mesh, 0.7, -0.3))) == 0.0


# -- norms --------------------------------------------------------------------

def test_sup_norm_scaling(mesh):
    assert sup_norm(OneForm.constant(mesh, 3.0, 0.0)) == 3.0


def test_sup_norm_diagonal(mesh):
    assert abs(sup_norm(OneForm.constant(mesh, 1.0, 1.0)) - math.sqrt(2)) < 1e-15


def test_sup_norm_cosine(mesh):
    _, Y = mesh.points
    alpha = OneForm(mesh, np.cos(TWO_PI * Y), np.zeros(mesh.shape))
    assert abs(sup_norm(alpha) - 1.0) < 1e-15  # grid contains y = 0


def test_l2_zero(mesh):
    assert l2_norm(OneForm.constant(mesh, 0.0, 0.0)) == 0.0


def test_l2_dx_unit_torus(mesh):
    assert abs(l2_norm(OneForm.constant(mesh, 1.0, 0.0)) - 1.0) < 1e-14


def test_l2_cosine(mesh):
    _, Y = mesh.points
    alpha = OneForm(mesh, np.cos(TWO_PI * Y), np.zeros(mesh.shape))
    assert abs(l2_norm(alpha) - math.sqrt(0.5)) < 1e-14


# -- Hodge decomposition ------------------------------------------------------

def test_hodge_harmonic_passthrough(mesh):
    alpha = OneForm.constant(mesh, 0.4, -0.9)
    split = hodge_decompose(alpha)
    assert sup_norm(split.exact) < 1e-14
    assert sup_norm(split.coexact) < 1e-14
    assert np.allclose(split.harmonic.ax, 0.4)


def test_hodge_analytic_potential(mesh):
    _, Y = mesh.points
    alpha = OneForm(mesh, np.ones(mesh.shape), np.cos(TWO_PI * Y))
    split = hodge_decompose(alpha)
    assert np.allclose(split.harmonic.ax, 1.0)
    assert np.abs(split.harmonic.ay).max() < 1e-14
    expected_F = np.sin(TWO_PI * Y) / TWO_PI
    assert np.abs(split.potential.values - expected_F).max() < 1e-13
    assert sup_norm(split.coexact) < 1e-13


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_hodge_reconstruction_and_orthogonality(seed):
    mesh = GridMesh(N=32)
    alpha = random_oneform(mesh, seed)
    split = hodge_decompose(alpha)
    assert sup_norm(alpha - split.reconstruct()) <= tol_hodge(alpha)
    ip = abs(l2_inner(split.exact, split.harmonic))
    bound = 1e-10 * max(l2_norm(split.exact) * l2_norm(split.harmonic), 1e-30)
    assert ip <= max(bound, 1e-16)
    ip2 = abs(l2_inner(split.exact, split.coexact))
    assert ip2 <= 1e-10 * max(l2_norm(split.exact) * l2_norm(split.coexact), 1e-16)
    assert abs(split.potential.mean()) < 1e-13


def test_closed_form_has_no_coexact_part(mesh):
    f = random_scalar(mesh, 5)
    alpha = exterior_derivative(f) + OneForm.constant(mesh, 0.3, 0.2)
    split = hodge_decompose(alpha)
    assert sup_norm(split.coexact) <= tol_hodge(alpha)


def test_norm_equivalence_on_harmonic_forms():
    # on the unit torus the sup and L2 norms agree exactly on harmonic forms
    mesh = GridMesh(N=32)
    rng = np.random.default_rng(3)
    for _ in range(10):
        h = OneForm.constant(mesh, rng.normal(), rng.normal())
        a, b = sup_norm(h), l2_norm(h)
        assert abs(a - b) <= 1e-12 * max(a, 1e-30)


# -- periods ------------------------------------------------------------------

def test_periods_dx(mesh):
    assert periods(OneForm.constant(mesh, 1.0, 0.0)).periods == (1.0, 0.0)


def test_periods_exact_form(mesh):
    f = random_scalar(mesh, 11)
    p = periods(exterior_derivative(f))
    assert p.max_abs() < 1e-12


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_periods_linearity_and_exact_invariance(seed):
    mesh = GridMesh(N=32)
    rng = np.random.default_rng(seed)
    a, b = rng.normal(), rng.normal()
    G = random_scalar(mesh, seed + 7)
    alpha = OneForm.constant(mesh, a, b) + exterior_derivative(G)
    p = periods(alpha)
    assert abs(p[0] - a) < 1e-8 and abs(p[1] - b) < 1e-8


def test_periods_rejects_nonclosed(mesh):
    _, Y = mesh.points
    alpha = OneForm(mesh, np.cos(TWO_PI * Y), np.zeros(mesh.shape))
    with pytest.raises(NonClosedFormError):
        periods(alpha)


def test_harmonic_representative_roundtrip(mesh):
    cls = CohomologyClass1((0.7, -1.2))
    h = harmonic_representative(mesh, cls)
    q = periods(h)
    assert abs(q[0] - 0.7) < 1e-14 and abs(q[1] + 1.2) < 1e-14


# -- oscillation and wedge ----------------------------------------------------

def test_oscillation_constant(mesh):
    assert oscillation(ScalarField.constant(mesh, 4.2)) == 0.0


def test_oscillation_sine(mesh):
    X, _ = mesh.points
    assert abs(oscillation(ScalarField(mesh, np.sin(TWO_PI * X))) - 2.0) < 1e-14


def test_oscillation_shift_invariance(mesh):
    f = random_scalar(mesh, 21)
    assert abs(oscillation(f) - oscillation(f + 13.5)) < 1e-12


def test_wedge_integral_harmonic(mesh):
    a = OneForm.constant(mesh, 2.0, 3.0)
    b = OneForm.constant(mesh, -1.0, 4.0)
    assert abs(wedge_integral(a, b) - (2.0 * 4.0 - 3.0 * (-1.0))) < 1e-12


def test_rectangular_torus_quadrature():
    mesh = GridMesh(N=32, L=(2.0, 0.5))
    assert abs(mesh.volume - 1.0) < 1e-15
    assert abs(l2_norm(OneForm.constant(mesh, 1.0, 0.0)) - 1.0) < 1e-14
    p = periods(OneForm.constant(mesh, 1.0, 2.0))
    assert abs(p[0] - 2.0) < 1e-14 and abs(p[1] - 1.0) < 1e-14


def test_nonfinite_rejected(mesh):
    bad = np.zeros(mesh.shape)
    bad[0, 0] = np.nan
    with pytest.raises(ValueError):
        ScalarField(mesh, bad)
