import pytest

from dynbiharm.assembly import Discretization
from dynbiharm.geometry import DomainConfig
from dynbiharm.spectral import global_spectrum

REFERENCE = DomainConfig(R0=1.0, R1=2.0, d=1.0, delta=1.0, kappa=1.0, n_elem=128, m_max=16)
SMALL = DomainConfig(R0=1.0, R1=2.0, d=1.0, delta=1.0, kappa=1.0, n_elem=16, m_max=4)

REFERENCE_TEXT = """\
# reference annulus
R0 = 1
R1 = 2
d = 1
delta = 1
kappa = 1
n_elem = 128
m_max = 16
"""

SMALL_TEXT = """\
R0 = 1
R1 = 2
d = 1
delta = 1
kappa = 1
n_elem = 16
m_max = 4
"""


@pytest.fixture(scope="session")
def ref_config():
    return REFERENCE


@pytest.fixture(scope="session")
def ref_dec():
    return global_spectrum(REFERENCE)


@pytest.fixture(scope="session")
def small_config():
    return SMALL


@pytest.fixture(scope="session")
def small_disc():
    return Discretization(SMALL)


@pytest.fixture(scope="session")
def small_dec(small_disc):
    return global_spectrum(small_disc)


@pytest.fixture
def small_cfg_file(tmp_path):
    path = tmp_path / "small.cfg"
    path.write_text(SMALL_TEXT)
    return path


@pytest.fixture
def ref_cfg_file(tmp_path):
    path = tmp_path / "ref.cfg"
    path.write_text(REFERENCE_TEXT)
    return path
