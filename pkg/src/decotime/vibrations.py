"""Centre-of-mass vibrational normal modes.

The 3N coordinates are ordered site-major: row 3*i + a holds site i, axis
a (a = 0, 1, 2 for x, y, z).  Solving V S = m nu^2 S gives the mode
frequencies and the real orthogonal transform S whose columns are modes,
ordered by ascending frequency with the first significant component of
each column made positive so results are deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import NumericsError
from .model import ValidatedModel

_SYM_TOL = 1e-12
_EIG_RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class CouplingMatrix:
    matrix: np.ndarray     # (3N, 3N), J/m^2, symmetric
    mass: float            # kg

    @property
    def n_sites(self):
        return self.matrix.shape[0] // 3


@dataclass(frozen=True)
class NormalModes:
    frequencies: np.ndarray          # nu_K ascending, rad/s
    transform: np.ndarray            # S[3i+a, K], orthogonal
    zero_point_lengths: np.ndarray   # sqrt(hbar / 2 m nu_K), m
    mass: float

    @property
    def n_modes(self):
        return self.frequencies.size

    @property
    def n_sites(self):
        return self.frequencies.size // 3

    def site_block(self, site):
        """Rows of S belonging to one site, shape (3, 3N)."""
        return self.transform[3 * site: 3 * site + 3, :]

    def to_dict(self):
        return {"frequencies": self.frequencies.tolist(),
                "transform": self.transform.tolist(),
                "zero_point_lengths": self.zero_point_lengths.tolist(),
                "mass": self.mass}


def build_coupling_matrix(vm: ValidatedModel, topology=None) -> CouplingMatrix:
    """Assemble the 3N x 3N trap coupling matrix for the configured topology.

    ``topology`` overrides the model's own setting (useful in tests).  The
    custom form reads a whitespace-separated dense matrix whose first line
    is the dimension 3N; it must be symmetric to 1e-12 relative.
    """
    vib = topology if topology is not None else vm.vib
    n = vm.n_qubits
    dim = 3 * n
    mass = vm.qubits.mass

    if vib.kind == "frozen":
        raise ValueError("the frozen topology has no vibrational modes")

    if vib.kind == "independent":
        matrix = vib.v0 * np.eye(dim)
    elif vib.kind == "chain1d":
        matrix = vib.v0 * np.eye(dim)
        for i in range(n - 1):
            matrix[3 * i, 3 * (i + 1)] = vib.c_nn
            matrix[3 * (i + 1), 3 * i] = vib.c_nn
    elif vib.kind == "custom":
        if not vib.matrix_file:
            raise ValueError("custom topology needs matrix_file")
        matrix = load_coupling_file(vib.matrix_file, dim)
    else:
        raise ValueError(f"unsupported topology {vib.kind!r}")

    scale = np.max(np.abs(matrix)) or 1.0
    if np.max(np.abs(matrix - matrix.T)) > _SYM_TOL * scale:
        raise ValueError("coupling matrix is not symmetric")
    return CouplingMatrix(matrix=matrix, mass=mass)


def load_coupling_file(path, expected_dim=None):
    """Dense text format: one-line header '3N', then the matrix rows."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 1:
            raise ValueError(f"{path}: expected a single dimension on the first line")
        dim = int(header[0])
        data = np.loadtxt(fh)
    matrix = np.asarray(data, dtype=float).reshape(dim, dim)
    if expected_dim is not None and dim != expected_dim:
        raise ValueError(f"{path}: matrix is {dim}x{dim}, model needs {expected_dim}x{expected_dim}")
    return matrix


def solve_normal_modes(cm: CouplingMatrix) -> NormalModes:
    """Eigendecompose the trap matrix into frequencies and mode vectors.

    Raises :class:`NumericsError` when any eigenvalue is non-positive
    (an unstable trap) or the eigen-residual exceeds tolerance.
    """
    from .model import CONSTANTS

    lam, vecs = scipy.linalg.eigh(cm.matrix)
    if lam[0] <= 0.0:
        raise NumericsError(
            f"trap matrix is not positive definite: smallest eigenvalue {lam[0]:.6e}")

    # deterministic sign: first component above threshold made positive
    for k in range(vecs.shape[1]):
        col = vecs[:, k]
        idx = np.argmax(np.abs(col) > 1e-8)
        if col[idx] < 0:
            vecs[:, k] = -col

    nu = np.sqrt(lam / cm.mass)
    scale = np.linalg.norm(cm.matrix, 2)
    residual = np.linalg.norm(cm.matrix @ vecs - vecs * lam[None, :], axis=0)
    if np.any(residual > _EIG_RESIDUAL_TOL * scale):
        raise NumericsError(f"eigen-residual {residual.max():.3e} exceeds tolerance")

    zpl = np.sqrt(CONSTANTS.hbar / (2.0 * cm.mass * nu))
    return NormalModes(frequencies=nu, transform=vecs, zero_point_lengths=zpl,
                       mass=cm.mass)


def normal_modes_for(vm: ValidatedModel, topology=None) -> NormalModes:
    return solve_normal_modes(build_coupling_matrix(vm, topology))


def lamb_dicke_coefficients(nm: NormalModes, wavevector, site) -> np.ndarray:
    """Geometric Lamb-Dicke factor c_K = sqrt(hbar/2m nu_K) (k . S_iK).

    This is the per-mode factor entering every recoil coupling; summing
    c_K^2 over the modes of an independent trap gives eta^2.
    """
    if not 0 <= site < nm.n_sites:
        raise IndexError(f"site {site} out of range for N = {nm.n_sites}")
    k = np.asarray(wavevector, dtype=float)
    return nm.zero_point_lengths * (k @ nm.site_block(site))


def lamb_dicke_matrix(nm: NormalModes, wavevector) -> np.ndarray:
    """c[K, i] for all sites at once, shape (3N, N)."""
    k = np.asarray(wavevector, dtype=float)
    n = nm.n_sites
    out = np.empty((nm.n_modes, n))
    for i in range(n):
        out[:, i] = nm.zero_point_lengths * (k @ nm.site_block(i))
    return out


def mean_inverse_frequency(nm: NormalModes, strategy="mean-inverse") -> float:
    """Average of 1/nu_K used when collective sums replace the per-mode factor.

    ``mean-inverse`` (default) averages 1/nu_K directly; ``inverse-mean``
    returns 1/mean(nu_K).
    """
    if strategy == "mean-inverse":
        return float(np.mean(1.0 / nm.frequencies))
    if strategy == "inverse-mean":
        return float(1.0 / np.mean(nm.frequencies))
    raise ValueError(f"unknown averaging strategy {strategy!r}")


def chain_band_frequencies(n, v0, c_nn, mass):
    """Analytic open-chain x-band: nu_n^2 = (v0 + 2 c cos(n pi / (N+1))) / m."""
    modes = np.arange(1, n + 1)
    return np.sqrt((v0 + 2.0 * c_nn * np.cos(modes * np.pi / (n + 1))) / mass)
