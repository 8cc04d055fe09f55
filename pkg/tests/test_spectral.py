import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dynbiharm.assembly import Discretization
from dynbiharm.geometry import DomainConfig
from dynbiharm.spectral import (
    SPECTRUM_HEADER,
    InvariantViolation,
    apply_projection_P,
    eigenfunction_smoothness_report,
    global_spectrum,
    kernel_vector_error,
    mode_eigenvector_state,
    ProjectionP,
    projection_constant,
    solve_mode_eigs,
    write_spectrum_csv,
)

# five smallest eigenvalues per mode on the reference annulus (R0=1, R1=2,
# d=delta=kappa=1), cross-checked against the finite-difference oracle
FROZEN = {
    0: [0.0, 0.964490463, 2.98875664, 108.303051, 1591.65019],
    1: [0.219639184, 1.71700267, 3.30580296, 119.958983, 1633.16313],
    2: [1.57125978, 5.65369596, 17.0291573, 159.28185, 1761.41188],
    3: [5.900239, 17.6365631, 81.9918579, 239.760083, 1987.75884],
}


@pytest.mark.parametrize("m", sorted(FROZEN))
def test_frozen_mode_eigenvalues(ref_dec, m):
    got = ref_dec.values[m][:5]
    want = np.array(FROZEN[m])
    if m == 0:
        assert abs(got[0]) < 1e-12
        got, want = got[1:], want[1:]
    assert np.allclose(got, want, rtol=2e-8)


def test_reference_gap(ref_dec):
    assert ref_dec.gap == pytest.approx(0.21963918400947852, rel=1e-12)
    assert ref_dec.entries[1].m == 1 and ref_dec.entries[1].multiplicity == 2
    assert ref_dec.entries[2].lam == ref_dec.entries[1].lam


def test_kernel_is_constants(ref_dec):
    assert ref_dec.kernel_count() == 1
    first = ref_dec.entries[0]
    assert (first.n, first.m, first.branch, first.multiplicity) == (1, 0, "cos", 1)
    assert abs(first.lam) < 1e-8 * ref_dec.gap
    assert kernel_vector_error(ref_dec) < 1e-8


def test_vectors_are_mass_orthonormal(small_dec):
    for sys, lam, vecs in zip(small_dec.disc.systems, small_dec.values, small_dec.vectors):
        assert np.allclose(vecs.T @ sys.M @ vecs, np.eye(vecs.shape[1]), atol=1e-9)
        resid = sys.K @ vecs - sys.M @ vecs * lam
        scale = np.abs(lam).max() * np.abs(sys.M).max()
        assert np.abs(resid).max() < 1e-8 * scale


def test_entries_sorted_with_multiplicities(small_dec):
    lam = small_dec.eigenvalues
    assert np.all(np.diff(lam) >= 0)
    n_dof = small_dec.disc.n_dof
    assert lam.size == n_dof * (1 + 2 * small_dec.config.m_max)
    for e in small_dec.entries:
        assert e.multiplicity == (1 if e.m == 0 else 2)
        assert e.lam == small_dec.values[e.m][e.index]


def test_partial_spectrum_and_bounds(small_disc):
    dec = global_spectrum(small_disc, k_per_mode=4)
    assert dec.k_per_mode == 4 and not dec.complete
    with pytest.raises(ValueError, match=r"k_per_mode = 35 exceeds n_dof = 34"):
        global_spectrum(small_disc, k_per_mode=35)
    with pytest.raises(ValueError):
        global_spectrum(small_disc, k_per_mode=1)


def test_eigenvalues_agree_with_dense_solver(small_disc):
    import scipy.linalg as sla

    for sys in small_disc.systems:
        lam, _ = solve_mode_eigs(sys)
        ref = sla.eigh(sys.K, sys.M, eigvals_only=True)
        top = ref.max()
        assert np.allclose(lam, ref, atol=1e-9 * top, rtol=1e-8)


def test_near_decoupled_config_keeps_single_kernel():
    cfg = DomainConfig(1.0, 2.0, 1.0, 1.0, 1e9, n_elem=32, m_max=3)
    dec = global_spectrum(cfg)
    assert dec.kernel_count() == 1
    assert dec.gap == pytest.approx(1e-9, rel=1e-3)
    assert kernel_vector_error(dec) < 1e-8


def test_double_kernel_raises():
    # at this kappa the coupling rounds away and the bulk and both circles carry separate constants
    disc = Discretization(DomainConfig(1.0, 2.0, 1.0, 1.0, 1e300, n_elem=8, m_max=1))
    with pytest.raises(InvariantViolation):
        global_spectrum(disc)


def test_scaling_d_delta_doubles_spectrum(small_config):
    a = global_spectrum(small_config).eigenvalues
    b = global_spectrum(small_config.replace(d=2.0, delta=2.0)).eigenvalues
    nz = a > 1e-8
    assert np.allclose(b[nz], 2 * a[nz], rtol=1e-10)


def test_projection_onto_constants(small_dec):
    disc = small_dec.disc
    rng = np.random.default_rng(5)
    u = disc.zeros()
    u.coeffs[:] = rng.standard_normal(u.coeffs.shape)
    u.coeffs[0, 1] = 0.0
    p = apply_projection_P(disc, u)
    assert np.allclose(apply_projection_P(disc, p).coeffs, p.coeffs)
    rest = u.with_coeffs(u.coeffs - p.coeffs)
    assert abs(disc.m_inner(rest, disc.ones())) < 1e-10 * disc.m_norm(u) * disc.m_norm(disc.ones())
    assert projection_constant(disc, u) == pytest.approx(disc.mu_mass(u) / disc.mu_total(), rel=1e-12)


def test_projection_type_is_self_adjoint(small_dec):
    disc = small_dec.disc
    P = ProjectionP(disc)
    rng = np.random.default_rng(9)
    u, v = disc.zeros(), disc.zeros()
    u.coeffs[:] = rng.standard_normal(u.coeffs.shape)
    v.coeffs[:] = rng.standard_normal(v.coeffs.shape)
    assert np.allclose(P(disc.ones()).coeffs, disc.ones().coeffs, atol=1e-12)
    assert P.mu_total == pytest.approx(disc.mu_total())
    assert P.constant(u) == pytest.approx(projection_constant(disc, u))
    lhs, rhs = disc.m_inner(P(u), v), disc.m_inner(u, P(v))
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_modal_roundtrip_is_parseval(seed):
    dec = _small()
    disc = dec.disc
    rng = np.random.default_rng(seed)
    u = disc.zeros()
    u.coeffs[:] = rng.standard_normal(u.coeffs.shape)
    u.coeffs[0, 1] = 0.0
    a = dec.coefficients(u)
    assert np.sum(a * a) == pytest.approx(disc.m_norm(u) ** 2, rel=1e-10)
    assert np.allclose(dec.synthesize(a).coeffs, u.coeffs, atol=1e-9)


_CACHE = {}


def _small():
    if "dec" not in _CACHE:
        _CACHE["dec"] = global_spectrum(DomainConfig(1.0, 2.0, 1.0, 0.5, 2.0, n_elem=12, m_max=3))
    return _CACHE["dec"]


def test_eigenvector_state_is_eigenfunction(small_dec):
    from dynbiharm.assembly import form_energy

    entry = small_dec.entries[5]
    u = mode_eigenvector_state(small_dec, entry)
    assert small_dec.disc.m_norm(u) == pytest.approx(1.0, rel=1e-12)
    assert form_energy(small_dec.disc, u) == pytest.approx(entry.lam, rel=1e-10)


def test_smoothness_report_fourth_order():
    base = DomainConfig(1.0, 2.0, 1.0, 1.0, 1.0, n_elem=8, m_max=2)
    decs = [global_spectrum(base.replace(n_elem=n)) for n in (8, 16, 32)]
    rows = eigenfunction_smoothness_report(decs, count=4)
    assert rows[0].exact
    gap_row = rows[1]
    assert gap_row.monotone and gap_row.orders[0] == pytest.approx(4.0, abs=0.3)
    with pytest.raises(ValueError):
        eigenfunction_smoothness_report(decs[:2])


def test_spectrum_csv(tmp_path, small_dec):
    path = tmp_path / "s.csv"
    write_spectrum_csv(path, small_dec)
    rows = list(csv.reader(path.open()))
    assert tuple(rows[0]) == SPECTRUM_HEADER
    assert rows[1][0] == "1" and rows[1][2:] == ["0", "cos", "1"]
    assert abs(float(rows[1][1])) < 1e-12
    assert len(rows) - 1 == len(small_dec.entries)
