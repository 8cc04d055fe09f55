import numpy as np
import pytest

from dynbiharm.geometry import DomainConfig
from dynbiharm.oracle import (
    annulus_neumann_wavenumbers,
    decoupled_spectrum,
    fd_mode_eigs,
    fd_neumann_laplacian_eigs,
    oracle_mode_eigs,
    richardson,
)
from dynbiharm.spectral import global_spectrum

from test_spectral import FROZEN


@pytest.mark.parametrize("m", [0, 1, 3])
def test_fd_laplacian_matches_bessel_roots(m):
    k = annulus_neumann_wavenumbers(1.0, 2.0, m, 3)
    coarse = fd_neumann_laplacian_eigs(1.0, 2.0, m, 1024, 4)
    fine = fd_neumann_laplacian_eigs(1.0, 2.0, m, 2048, 4)
    fd = richardson(coarse, fine)
    fd = fd[fd > 1e-8][:3]
    assert np.allclose(fd, k**2, rtol=1e-6)


def test_bessel_root_m1_known_value():
    # first Neumann wavenumber of mode 1 on 1 < r < 2 (mpmath root of the cross product)
    assert annulus_neumann_wavenumbers(1.0, 2.0, 1, 1)[0] == pytest.approx(0.6773360, rel=1e-6)


@pytest.mark.parametrize("m", sorted(FROZEN))
def test_oracle_reproduces_frozen_values(m):
    cfg = DomainConfig(1.0, 2.0, 1.0, 1.0, 1.0, m_max=3)
    got = oracle_mode_eigs(cfg, m, k=5)
    want = np.array(FROZEN[m])
    if m == 0:
        assert abs(got[0]) < 1e-8
        got, want = got[1:], want[1:]
    assert np.allclose(got, want, rtol=1e-6)


def test_oracle_converges_second_order():
    cfg = DomainConfig(1.0, 2.0, 1.0, 1.0, 1.0, m_max=2)
    e = [abs(fd_mode_eigs(cfg, 2, n, 1)[0] - FROZEN[2][0]) for n in (256, 512, 1024)]
    rates = np.log2([e[0] / e[1], e[1] / e[2]])
    assert np.all(np.abs(rates - 2.0) < 0.2)


@pytest.mark.parametrize("m", [0, 1, 2])
def test_decoupled_limit(m):
    cfg = DomainConfig(1.0, 2.0, 1.0, 1.0, 1e9, n_elem=64, m_max=2)
    dec = global_spectrum(cfg)
    closed = decoupled_spectrum(cfg, m, 5)
    galerkin = dec.values[m][:5]
    big = closed > 1e-6
    assert np.allclose(galerkin[big], closed[big], rtol=1e-6)
    assert np.all(np.abs(galerkin[~big]) < 1e-7)


def test_decoupled_surface_eigenvalues_are_symbols():
    # delta m^4 / R^4 on each circle: 0.5 * 16 / 1 and 0.5 * 16 / 16
    cfg = DomainConfig(1.0, 2.0, 3.0, 0.5, 1e12)
    vals = decoupled_spectrum(cfg, 2, 4)
    assert np.any(np.isclose(vals, 8.0)) and np.any(np.isclose(vals, 0.5))
