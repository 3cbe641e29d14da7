import numpy as np
import pytest

import petgov


def haar_rotation(rng):
    """Uniformly distributed rotation (QR of a Gaussian matrix, sign-fixed)."""
    A = rng.standard_normal((3, 3))
    Q, R = np.linalg.qr(A)
    Q = Q @ np.diag(np.sign(np.diag(R)))
    if np.linalg.det(Q) < 0.0:
        Q[:, [0, 1]] = Q[:, [1, 0]]
    return Q


def random_rotvec(rng, max_angle=np.pi * 0.95):
    axis = rng.standard_normal(3)
    axis /= np.linalg.norm(axis)
    return rng.uniform(0.0, max_angle) * axis


@pytest.fixture(scope="session")
def nominal_cfg():
    return petgov.load_paper_scenario()


@pytest.fixture(scope="session")
def nominal_gamma_d(nominal_cfg):
    cfg = nominal_cfg
    return petgov.gamma_d_offline(cfg.inertia, cfg.gains, cfg.spec.tau_max)


@pytest.fixture(scope="session")
def nominal_run(nominal_cfg, nominal_gamma_d):
    """One full nominal simulation shared across tests."""
    return petgov.simulate(nominal_cfg, gamma_d=nominal_gamma_d)


@pytest.fixture(scope="session")
def halved_run(nominal_cfg, nominal_gamma_d):
    """Nominal scenario re-integrated at half the step size."""
    cfg = nominal_cfg.replaced(h=nominal_cfg.h / 2.0)
    return petgov.simulate(cfg, gamma_d=nominal_gamma_d)
