import math
from pathlib import Path

import numpy as np
import pytest

from decotime import load_model, validate_model
from decotime.model import CONSTANTS

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"

# Benchmark register constants (see configs/paper_benchmark.cfg): the
# dipole matches gamma_se = 1e8 1/s through the free-space relation, the
# trap gives eta = 0.01 at nu = 2 pi MHz, and the cavity volume gives
# g_b = 2 pi * 50 MHz.
OMEGA0 = 1.0e15
GAMMA = 1.0e8
OMEGA_C = 1.0e17
DIPOLE = 1.5398522907664796e-28
MASS = 9.337376934887198e-25
V0 = 3.6862486596477177e-11
KB_CAV = 3335640.9519815203
MODE_VOLUME_PAPER = 1.2864813514215145e-13     # g_b = 2 pi * 5e7
MODE_VOLUME_1E8 = 1.2697062007909162e-12       # g_b = 1e8 exactly
NU_TRAP = 2 * math.pi * 1.0e6


def benchmark_config(n=4, spacing=1e-6, gamma=GAMMA, mode_volume=MODE_VOLUME_PAPER,
                     extra=""):
    return f"""
[qubits]
omega0 = {OMEGA0!r}
gamma_se = {gamma!r}
mass = {MASS!r}
dipole_d10 = [{DIPOLE!r}, 0.0, 0.0]

[geometry]
chain_count = {n}
chain_spacing = {spacing!r}
chain_axis = [1, 0, 0]

[cavity]
omega_b = 1.0e15
mode_volume = {mode_volume!r}
wavevector = [0.0, 0.0, {KB_CAV!r}]
polarization = [1.0, 0.0, 0.0]

[se_bath]
cutoff_omega_c = {OMEGA_C!r}
temperature = 0.0

[vibrations]
topology = independent
v0 = {V0!r}
{extra}
"""


@pytest.fixture(scope="session")
def benchmark_vm():
    """The paper benchmark: 4 qubits, 1 um apart, g_b = 2 pi * 50 MHz."""
    return validate_model(load_model(benchmark_config()))


@pytest.fixture(scope="session")
def no_se_vm():
    """High-Q variant: gamma = 0, g_b = 1e8 so that eta g_b = 1e6 exactly."""
    return validate_model(load_model(
        benchmark_config(n=4, gamma=0.0, mode_volume=MODE_VOLUME_1E8)))


@pytest.fixture()
def rng():
    return np.random.default_rng(20260810)


def random_sparse_state(rng, n, nnz=None):
    from decotime.states import QubitRegisterState
    dim = 1 << n
    nnz = nnz or min(dim, int(rng.integers(1, 6)))
    idx = rng.choice(dim, size=nnz, replace=False)
    amps = rng.normal(size=nnz) + 1j * rng.normal(size=nnz)
    amps /= np.linalg.norm(amps)
    return QubitRegisterState.sparse({int(i): a for i, a in zip(idx, amps)}, n)
