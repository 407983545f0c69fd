import numpy as np
import pytest

from bdspec import (
    make_context,
    make_quartic_spec,
    quartic_rates,
    stieltjes_dn_rates,
)

# Frozen reference values (50-digit mpmath computations, see decision notes).
K0_REF = 1.31102877714605990523242
K_HALF_REF = 1.85407467730137191843385
GAMMA_1P6_REF = 0.89351534928769026144
ALPHA_QUARTIC_REF = -8.2887663268797183585
SUM_INV_MUPI_REF = 0.12064521553190498147


@pytest.fixture(scope="session")
def dn_half():
    return stieltjes_dn_rates(0.5)


@pytest.fixture(scope="session")
def ctx_half():
    return make_context(0.5)


@pytest.fixture(scope="session")
def quartic0():
    return quartic_rates(0.0, 0.0)


@pytest.fixture(scope="session")
def qspec():
    return make_quartic_spec()


@pytest.fixture()
def rng():
    return np.random.default_rng(20250810)
