"""Displacement potentials, the norm estimator, energies, rigidity."""

import math

import numpy as np
import pytest

from fluxlab import catalog
from fluxlab.displacement import (NotIsotopicError, UnitSphereSampler,
                                  commutator_collapse_check, conjugation_check,
                                  delta, delta_tilde, delta_via_flux,
                                  displaces, displacement_energy_upper,
                                  energy_chain_check, map_commutator,
                                  norm_axiom_report, nu_function, psi_norm,
                                  rigidity_limit_check,
                                  supported_commutator_pair)
from fluxlab.forms import (OneForm, ScalarField, exterior_derivative, l2_norm,
                           sup_norm)
from fluxlab.isotopy import orbit_integral
from fluxlab.maps import Region, TorusMap, c0_distance, compose
from fluxlab.mesh import GridMesh

TWO_PI = 2 * np.pi


@pytest.fixture(scope="module")
def mesh():
    return GridMesh(N=64)


@pytest.fixture(scope="module")
def sampler(mesh):
    return UnitSphereSampler(mesh, max_mode=4, count=24, seed=5)


# -- displacement potential ---------------------------------------------------

def test_nu_identity(mesh):
    nu = nu_function(TorusMap.identity(mesh), OneForm.constant(mesh, 1.0, 0.0),
                     (0.2, 0.3))
    assert sup_norm(nu) < 1e-13


def test_nu_translation_harmonic(mesh):
    nu = nu_function(catalog.translation(mesh, 0.3, 0.1),
                     OneForm.constant(mesh, 1.0, 2.0), (0.2, 0.3))
    assert sup_norm(nu) < 1e-12


def test_nu_shear_analytic(mesh):
    _, Y = mesh.points
    nu = nu_function(catalog.shear(mesh, 0.1), OneForm.constant(mesh, 1.0, 0.0),
                     (0.0, 0.25))
    expected = 0.1 * np.sin(TWO_PI * Y) - 0.1
    assert np.abs(nu.values - expected).max() < 1e-12


def test_nu_matches_segment_quadrature(mesh):
    # independent oracle: integrate psi^*alpha - alpha along the straight
    # segment from the base point
    psi = catalog.twist(mesh, 0.08, 0.05)
    G = ScalarField.from_function(mesh, lambda x, y: 0.2 * np.sin(TWO_PI * y))
    alpha = OneForm.constant(mesh, 0.7, -0.2) + exterior_derivative(G)
    p = np.array([0.15, 0.35])
    nu = nu_function(psi, alpha, p)
    from fluxlab.maps import pullback_oneform
    diff = pullback_oneform(psi, alpha) - alpha
    rng = np.random.default_rng(0)
    S = 256
    w = np.ones(S + 1)
    w[1:-1:2], w[2:-1:2] = 4.0, 2.0
    w /= (3.0 * S)
    for _ in range(5):
        z = rng.uniform(0, 1, 2)
        seg = p[:, None] + np.linspace(0, 1, S + 1)[None, :] * (z - p)[:, None]
        vals = diff.at(seg)
        direct = float(np.sum(w * ((z - p)[:, None] * vals).sum(axis=0)))
        assert abs(direct - float(nu.at(z))) < 1e-8 * (1 + sup_norm(alpha))


def test_nu_rejects_nonisotopic_pair(mesh):
    # a form whose class moves under no torus map isotopic to the identity
    # cannot appear, so emulate a violation with a synthetic non-exact diff:
    # translation by an irrational shift keeps harmonic forms invariant, so
    # instead check the period gate via a hand-built map with nonzero winding
    X, Y = mesh.points
    disp = np.stack([0.2 * np.sin(TWO_PI * X) * 0 + 0.3 * np.sin(TWO_PI * Y) * 0,
                     np.zeros(mesh.shape)])
    # x -> x + x-component shift is not periodic unless constant; use the
    # degree check indirectly: perturb alpha so the difference is non-closed
    psi = catalog.shear(mesh, 0.1)
    bad = OneForm(mesh, np.cos(TWO_PI * Y), np.zeros(mesh.shape))
    with pytest.raises(Exception):
        nu_function(psi, bad, (0.0, 0.0))


# -- delta --------------------------------------------------------------------

def test_delta_zero_form(mesh):
    assert delta(catalog.shear(mesh, 0.1), OneForm.constant(mesh, 0.0, 0.0),
                 (0.1, 0.2)) == 0.0


def test_delta_shear_spot(mesh):
    val = delta(catalog.shear(mesh, 0.1), OneForm.constant(mesh, 1.0, 0.0),
                (0.0, 0.25))
    assert abs(val + 0.1) < 1e-12


def test_delta_translation_harmonic(mesh):
    assert abs(delta(catalog.translation(mesh, 0.25, 0.4),
                     OneForm.constant(mesh, 1.0, 2.0), (0.7, 0.1))) < 1e-12


def test_delta_base_point_relation(mesh):
    # the base-point dependence sits entirely in the orbit term
    flow = catalog.translation_shear_flow(mesh, 0.2, 0.3, 0.1, K=64)
    psi = flow.end_map
    G = ScalarField.from_function(mesh, lambda x, y: 0.2 * np.sin(TWO_PI * y))
    alpha = OneForm.constant(mesh, 0.7, -0.2) + exterior_derivative(G)
    z1, z2 = np.array([0.2, 0.6]), np.array([0.8, 0.15])
    lhs = delta_tilde(psi, alpha, z1) - delta_tilde(psi, alpha, z2)
    rhs = -(orbit_integral(flow, z1, alpha) - orbit_integral(flow, z2, alpha))
    assert abs(lhs - rhs) < 1e-6


def test_delta_via_flux_agreement(mesh):
    flows = [catalog.translation_flow(mesh, 0.3, 0.4, 32),
             catalog.shear_flow(mesh, 0.1, K=32),
             catalog.translation_shear_flow(mesh, 0.2, 0.3, 0.1, K=32)]
    G = ScalarField.from_function(mesh, lambda x, y: 0.2 * np.cos(TWO_PI * x))
    forms = [OneForm.constant(mesh, 1.0, 0.0),
             OneForm.constant(mesh, 0.4, 0.8) + exterior_derivative(G)]
    for flow in flows:
        psi = flow.end_map
        for alpha in forms:
            for p in (np.array([0.1, 0.3]), np.array([0.8, 0.6])):
                d1 = delta(psi, alpha, p)
                d2 = delta_via_flux(psi, alpha, p, flow)
                assert abs(d1 - d2) <= 1e-4 * (1 + abs(d1))


def test_delta_via_flux_endpoint_gate(mesh):
    flow = catalog.translation_flow(mesh, 0.3, 0.4, 32)
    other = catalog.translation(mesh, 0.31, 0.4)
    with pytest.raises(ValueError):
        delta_via_flux(other, OneForm.constant(mesh, 1.0, 0.0),
                       (0.1, 0.1), flow)


def test_delta_translation_cancellation(mesh):
    # pairing and orbit term cancel exactly for translations
    flow = catalog.translation_flow(mesh, 0.3, 0.4, 32)
    alpha = OneForm.constant(mesh, 0.7, -0.5)
    val = delta_via_flux(flow.end_map, alpha, (0.25, 0.85), flow)
    assert abs(val) < 1e-10


# -- the norm -----------------------------------------------------------------

def test_psi_norm_identity(mesh, sampler):
    assert psi_norm(TorusMap.identity(mesh), sampler).norm_lower_bound == 0.0


def test_psi_norm_shear_witness(mesh, sampler):
    rep = psi_norm(catalog.shear(mesh, 0.1), sampler)
    assert rep.norm_lower_bound >= 0.1 - 1e-6


def test_psi_norm_monotone_in_budget(mesh):
    S = catalog.shear(mesh, 0.1)
    small = psi_norm(S, UnitSphereSampler(mesh, max_mode=4, count=8, seed=9))
    large = psi_norm(S, UnitSphereSampler(mesh, max_mode=4, count=32, seed=9))
    assert large.norm_lower_bound >= small.norm_lower_bound - 1e-15


def test_psi_norm_witness_is_unit_closed(mesh, sampler):
    rep = psi_norm(catalog.twist(mesh, 0.1, 0.08), sampler)
    w = rep.witness_form(sampler)
    assert abs(l2_norm(w) - 1.0) < 1e-10
    assert w.closedness_residual < 1e-8
    assert max(r["value"] for r in rep.table) == rep.norm_lower_bound


def test_psi_norm_report_json(mesh, sampler, tmp_path):
    rep = psi_norm(catalog.shear(mesh, 0.1), sampler)
    payload = rep.to_json(sampler, table_path=tmp_path / "table.csv")
    assert set(payload) == {"norm_lower_bound", "witness_point", "sampler",
                            "map", "table_path", "witness_form_periods"}
    lines = open(payload["table_path"]).read().strip().split("\n")
    assert lines[0] == "sample,value,point_x,point_y"
    assert len(lines) == len(rep.table) + 1


def test_psi_norm_budget_zero(mesh):
    with pytest.raises(ValueError):
        psi_norm(catalog.shear(mesh, 0.1),
                 UnitSphereSampler(mesh, max_mode=4, count=0, refine=0, seed=1))


def test_psi_norm_duality_estimate(mesh, sampler):
    tw = catalog.twist(mesh, 0.1, 0.08)
    a = psi_norm(tw, sampler).norm_lower_bound
    b = psi_norm(tw.inverse(), sampler).norm_lower_bound
    assert abs(a - b) <= 0.05 * max(a, b)


def test_norm_axiom_report_passes(mesh, sampler):
    maps = [TorusMap.identity(mesh), catalog.translation(mesh, 1 / 3, 0.0),
            catalog.shear(mesh, 0.1)]
    rep = norm_axiom_report(maps, sampler)
    assert rep.passed, rep.violations


# -- conjugation --------------------------------------------------------------

def test_conjugation_identity_map(mesh, sampler):
    h = catalog.shear(mesh, 0.1)
    ident = TorusMap.identity(mesh)
    ident.provenance["flux_periods"] = (0.0, 0.0)
    rep = conjugation_check(h, ident, (0.3, 0.7),
                            OneForm.constant(mesh, 1.0, 0.0), sampler)
    assert rep.identity_residual < 1e-12


def test_conjugation_hamiltonian(mesh, sampler):
    h = catalog.shear(mesh, 0.1)
    phi = catalog.hamiltonian_time1(mesh, "cos_x_cos_y", 0.08, 32)
    rep = conjugation_check(h, phi, (0.3, 0.7),
                            OneForm.constant(mesh, 1.0, 0.0), sampler)
    assert rep.identity_residual <= 1e-4
    assert rep.sandwich_ok


def test_conjugation_requires_flux_certificate(mesh, sampler):
    h = catalog.shear(mesh, 0.1)
    bare = TorusMap(mesh, catalog.twist(mesh, 0.05, 0.05).disp)
    with pytest.raises(ValueError):
        conjugation_check(h, bare, (0.1, 0.1),
                          OneForm.constant(mesh, 1.0, 0.0), sampler)


# -- displacement of regions ----------------------------------------------------

def test_identity_never_displaces(mesh):
    U = Region.rectangle((0.0, 0.0), (0.25, 1.0))
    chk = displaces(TorusMap.identity(mesh), U)
    assert not chk and not chk.marginal


def test_translation_displaces_strip(mesh):
    U = Region.rectangle((0.0, 0.0), (0.25, 1.0))
    assert displaces(catalog.translation(mesh, 0.5, 0.0), U)


def test_shear_does_not_displace_y_strip(mesh):
    U = Region.rectangle((0.0, 0.0), (1.0, 0.25))
    chk = displaces(catalog.shear(mesh, 0.1), U)
    assert not chk


def test_displacement_energy_upper(mesh, sampler):
    U = Region.rectangle((0.0, 0.0), (0.25, 1.0))
    half = catalog.translation(mesh, 0.5, 0.0)
    third = catalog.translation(mesh, 1 / 3, 0.0)
    S = catalog.shear(mesh, 0.1)
    up = displacement_energy_upper(U, [half, third, S], sampler)
    assert math.isfinite(up) and up > 0
    assert up <= min(psi_norm(half, sampler).norm_lower_bound,
                     psi_norm(third, sampler).norm_lower_bound) + 1e-12


def test_displacement_energy_infinite_branch(mesh, sampler):
    U = Region.rectangle((0.0, 0.0), (0.9, 0.9))
    up = displacement_energy_upper(U, [catalog.shear(mesh, 0.1)], sampler)
    assert math.isinf(up)


def test_energy_monotone_in_region(mesh, sampler):
    small = Region.rectangle((0.0, 0.0), (0.2, 1.0))
    large = Region.rectangle((0.0, 0.0), (0.25, 1.0))
    cands = [catalog.translation(mesh, 0.5, 0.0), catalog.translation(mesh, 0.4, 0.0)]
    assert (displacement_energy_upper(small, cands, sampler)
            <= displacement_energy_upper(large, cands, sampler) + 1e-12)


# -- supported commutators ------------------------------------------------------

def test_supported_pair_properties(mesh):
    B = Region.ball((0.5, 0.5), 0.25)
    phi, psi = supported_commutator_pair(B, mesh)
    outside = ~B.contains(mesh.points, mesh)
    for m in (phi, psi):
        assert np.abs(m.disp[:, outside]).max() < 1e-12
        assert m.volume_preserving
        assert max(abs(v) for v in m.provenance["flux_periods"]) < 1e-6
    comm = map_commutator(phi, psi)
    assert c0_distance(comm, TorusMap.identity(mesh)) > 1e-3


def test_supported_pair_region_too_small(mesh):
    with pytest.raises(ValueError):
        supported_commutator_pair(Region.ball((0.5, 0.5), 0.02), mesh)


def test_collapse_identity_trivial_pair(mesh):
    U = Region.rectangle((0.0, 0.0), (0.25, 1.0))
    f = catalog.translation(mesh, 0.5, 0.0)
    ident = TorusMap.identity(mesh)
    resid = commutator_collapse_check(f, ident, ident, U)
    assert resid < 1e-12


def test_collapse_identity_strip(mesh):
    U = Region.rectangle((0.0, 0.0), (0.25, 1.0))
    f = catalog.translation(mesh, 0.5, 0.0)
    phi, psi = supported_commutator_pair(U, mesh)
    assert commutator_collapse_check(f, phi, psi, U) <= 1e-3


def test_collapse_requires_displacement(mesh):
    U = Region.rectangle((0.0, 0.0), (0.25, 1.0))
    phi, psi = supported_commutator_pair(U, mesh)
    with pytest.raises(ValueError):
        commutator_collapse_check(TorusMap.identity(mesh), phi, psi, U)


def test_energy_chain():
    # the bump supports need the production resolution to keep the
    # commutator's pull-back periods below the isotopy gate
    fine = GridMesh(N=128)
    fine_sampler = UnitSphereSampler(fine, max_mode=4, count=24, seed=5)
    U = Region.rectangle((0.0, 0.0), (0.25, 1.0))
    f = catalog.translation(fine, 0.5, 0.0)
    rep = energy_chain_check(U, f, fine_sampler)
    assert rep.chain_ok
    assert rep.lower_bound > 0
    assert rep.collapse_residual <= 1e-3
    assert rep.lower_bound <= psi_norm(f, fine_sampler).norm_lower_bound


# -- rigidity -------------------------------------------------------------------

def test_rigidity_convergent(mesh, sampler):
    target = catalog.twist(mesh, 0.05, 0.04)
    seq = [compose(target, catalog.perturbation_map(mesh, 0.002 / i))
           for i in range(1, 6)]
    rep = rigidity_limit_check(seq, target, sampler)
    assert rep.passed
    assert rep.norm_premises[-1] < rep.norm_premises[0]
    assert rep.distances[-1] < rep.distances[0]


def test_rigidity_constant_sequence(mesh, sampler):
    target = catalog.twist(mesh, 0.05, 0.04)
    rep = rigidity_limit_check([target] * 3, target, sampler)
    assert max(rep.distances) == 0.0
    assert max(rep.norm_premises) == 0.0


def test_rigidity_divergent_floor(mesh, sampler):
    target = catalog.twist(mesh, 0.05, 0.04)
    other = compose(catalog.translation(mesh, 0.3, 0.0), target)
    seq = [compose(other, catalog.perturbation_map(mesh, 0.002 / i))
           for i in range(1, 6)]
    rep = rigidity_limit_check(seq, target, sampler)
    assert not rep.pattern_violated
    assert min(rep.norm_premises) > 0.01
    assert rep.final_distance > 0.05
