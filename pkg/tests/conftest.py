import numpy as np
import pytest

from uavslice.channel import ChannelField
from uavslice.scenario import SystemParams, generate_scenario


@pytest.fixture
def params():
    return SystemParams()


@pytest.fixture
def small(params):
    """Three content, two sensing, two MEC users; three UAVs; four contents."""
    sc = generate_scenario(params, (3, 2, 2, 3, 4), 11)
    return sc, ChannelField.for_scenario(sc)


def rng(seed=0):
    return np.random.default_rng(seed)


def random_channels(g, n, params, d_range=(60.0, 500.0)):
    """Rician channel rows for ``n`` users at random distances from one UAV."""
    A = params.antennas_per_uav
    d = g.uniform(*d_range, n)
    cos_phi = g.uniform(-1, 1, n)
    los = np.exp(-1j * np.pi * np.outer(cos_phi, np.arange(A)))
    nlos = (g.standard_normal((n, A)) + 1j * g.standard_normal((n, A))) / np.sqrt(2)
    F = params.rician_factor
    amp = np.sqrt(params.pathloss_ref * d ** -params.pathloss_exp)
    return amp[:, None] * (np.sqrt(F / (F + 1)) * los + np.sqrt(1 / (F + 1)) * nlos)


def make_scenario(params, content_xy=(), sensing_xy=(), mec_xy=(), demand=None, storage=None,
                  required_info=0.0, n_uavs=None, dock=(0.0, 0.0, 0.0), seed=0):
    """Hand-built scenario; defaults to one content stored on every UAV."""
    from uavslice.scenario import Role, Scenario, Uav, User
    xy = [(Role.CONTENT, p) for p in content_xy] + [(Role.SENSING, p) for p in sensing_xy] + \
         [(Role.MEC, p) for p in mec_xy]
    users = tuple(User(i, r, (float(p[0]), float(p[1]))) for i, (r, p) in enumerate(xy))
    if storage is None:
        storage = np.ones((1, n_uavs or 1), dtype=bool)
    storage = np.asarray(storage, dtype=bool)
    if demand is None:
        demand = np.zeros((len(content_xy), storage.shape[0]), dtype=bool)
        demand[:, 0] = True
    uavs = tuple(Uav(k, tuple(dock)) for k in range(storage.shape[1]))
    return Scenario(params, users, uavs, demand, storage, seed, required_info=required_info)
