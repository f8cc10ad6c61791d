"""Physical parameters of the qubit-register model and derived quantities.

Everything is SI: frequencies in rad/s, lengths in m, times in s.  A model
is assembled either directly from the dataclasses below or from a config
document (see :mod:`decotime.config`), then passed through
:func:`validate_model` once; downstream code only accepts the resulting
:class:`ValidatedModel`.  Instances are treated as immutable after
validation.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ModelValidationError, RequiresNormalModesError


@dataclass(frozen=True)
class PhysicalConstants:
    """CODATA values, fixed; never user-supplied."""

    hbar: float = 1.054571817e-34     # J s
    kB: float = 1.380649e-23          # J / K
    eps0: float = 8.8541878128e-12    # F / m
    c: float = 299792458.0            # m / s


CONSTANTS = PhysicalConstants()

ATOMIC_MASS = 1.66053906660e-27  # kg, default qubit mass (1 u)


@dataclass(frozen=True)
class QubitParams:
    omega0: float                     # transition frequency, rad/s
    gamma_se: float = 0.0             # spontaneous-emission rate, 1/s
    mass: float = ATOMIC_MASS         # kg
    dipole_d10: tuple = (0.0, 0.0, 0.0)   # C m
    m00: tuple = (0.0, 0.0, 0.0)      # magnetic dipole (state 0), J/T
    m11: tuple = (0.0, 0.0, 0.0)      # magnetic dipole (state 1), J/T

    @property
    def dipole_magnitude(self):
        return float(np.linalg.norm(self.dipole_d10))


@dataclass(frozen=True)
class Geometry:
    """Qubit equilibrium positions.

    Either explicit ``positions`` (an (N, 3) array) or a regular chain given
    by ``spacing``/``axis``/``origin``.  The chain form is never
    materialised, so sweeps over macroscopic N stay O(1) in memory.
    """

    count: int
    positions_array: np.ndarray | None = None
    spacing: float | None = None
    axis: tuple = (1.0, 0.0, 0.0)
    origin: tuple = (0.0, 0.0, 0.0)

    _MATERIALISE_LIMIT = 1_000_000

    @classmethod
    def from_positions(cls, positions):
        arr = np.atleast_2d(np.asarray(positions, dtype=float))
        if arr.shape[1] != 3:
            raise ValueError(f"positions must be (N, 3), got {arr.shape}")
        return cls(count=arr.shape[0], positions_array=arr)

    @classmethod
    def chain(cls, count, spacing, axis=(1.0, 0.0, 0.0), origin=(0.0, 0.0, 0.0)):
        axis = np.asarray(axis, dtype=float)
        norm = np.linalg.norm(axis)
        if norm == 0.0:
            raise ValueError("chain axis must be a nonzero vector")
        return cls(count=int(count), spacing=float(spacing),
                   axis=tuple(axis / norm), origin=tuple(float(x) for x in origin))

    @property
    def is_chain(self):
        return self.positions_array is None

    def position(self, i):
        if self.positions_array is not None:
            return self.positions_array[i]
        return np.asarray(self.origin) + i * self.spacing * np.asarray(self.axis)

    def positions(self):
        if self.positions_array is not None:
            return self.positions_array
        if self.count > self._MATERIALISE_LIMIT:
            raise ValueError(f"refusing to materialise {self.count} chain positions")
        idx = np.arange(self.count)[:, None]
        return np.asarray(self.origin) + idx * self.spacing * np.asarray(self.axis)

    def separation(self, i, j):
        """|r_i - r_j| in metres."""
        if self.is_chain:
            return abs(i - j) * self.spacing
        return float(np.linalg.norm(self.position(i) - self.position(j)))

    def separation_vector(self, i, j):
        return self.position(i) - self.position(j)


@dataclass(frozen=True)
class CavityParams:
    omega_b: float                    # rad/s
    mode_volume: float                # m^3
    wavevector: tuple = None          # 1/m; default along z with |k| = omega_b/c
    polarization: tuple = (1.0, 0.0, 0.0)

    def __post_init__(self):
        if self.wavevector is None:
            object.__setattr__(self, "wavevector",
                               (0.0, 0.0, self.omega_b / CONSTANTS.c))

    @property
    def k_vector(self):
        return np.asarray(self.wavevector, dtype=float)

    @property
    def e_vector(self):
        return np.asarray(self.polarization, dtype=float)


@dataclass(frozen=True)
class SEBathParams:
    cutoff_omega_c: float             # rad/s
    temperature: float = 0.0          # K
    bandwidth_delta_k: float = None   # 1/m
    mean_kbar: float = None           # 1/m

    def __post_init__(self):
        # Gaussian-model defaults used only by the regime classifier
        if self.bandwidth_delta_k is None:
            object.__setattr__(self, "bandwidth_delta_k",
                               self.cutoff_omega_c / CONSTANTS.c)


SPECTRAL_PROFILE_KINDS = ("zero", "flat", "ohmic")


@dataclass(frozen=True)
class SpectralProfile:
    """Quasi-mode coupling profile |f(xi)|^2 = amplitude^2 * shape(xi/xi_c).

    ``flat`` is constant, ``ohmic`` rises linearly with frequency.  The
    exponential cutoff exp(-xi/xi_c) is always applied on top.
    """

    kind: str = "zero"
    amplitude: float = 0.0            # rad/s

    def __post_init__(self):
        if self.kind not in SPECTRAL_PROFILE_KINDS:
            raise ValueError(f"unknown spectral profile kind {self.kind!r}")

    @property
    def is_zero(self):
        return self.kind == "zero" or self.amplitude == 0.0

    def squared(self, xi, xi_c):
        """|f(xi)|^2 without the cutoff factor."""
        if self.is_zero:
            return np.zeros_like(np.asarray(xi, dtype=float))
        if self.kind == "flat":
            return np.full_like(np.asarray(xi, dtype=float), self.amplitude ** 2)
        return self.amplitude ** 2 * np.asarray(xi, dtype=float) / xi_c


@dataclass(frozen=True)
class CavityDecayParams:
    u_profile: SpectralProfile = field(default_factory=SpectralProfile)
    w_profile: SpectralProfile = field(default_factory=SpectralProfile)
    cutoff_xi_c: float = 0.0          # rad/s
    mode_density: float = 0.0         # states per rad/s


@dataclass(frozen=True)
class GatingSnapshot:
    """t = 0 snapshot of the coherent gating fields.

    Only the instantaneous complex values enter the decoherence variance, so
    pulse shapes are out of scope.  The per-mode Lamb-Dicke couplings of the
    classical EM field (theta) and of the magnetic field (m) are resolved
    against the normal modes at term-assembly time from the per-site
    amplitudes below, unless explicit per-site-per-mode arrays are given.
    """

    omega_rabi: tuple = ()            # complex, rad/s, per site
    delta_shift: tuple = ()           # rad/s, per site ((Delta_i1 - Delta_i0))
    classical_amp: tuple = ()         # complex, rad/s, per site
    classical_wavevector: tuple = (0.0, 0.0, 0.0)   # 1/m
    magnetic_grad0: tuple = ()        # per site 3-vectors, rad/s per m
    magnetic_grad1: tuple = ()
    theta_lambdicke: np.ndarray | None = None   # explicit (N, 3N), rad/s
    m_lambdicke: np.ndarray | None = None       # explicit (2, N, 3N), rad/s

    @classmethod
    def disabled(cls, n=None):
        # empty per-site lists mean "all zero" at any register size
        return cls()

    def resized(self, n):
        """Validate per-site list lengths; empty lists stand for all-zero."""
        for name in ("omega_rabi", "delta_shift", "classical_amp",
                     "magnetic_grad0", "magnetic_grad1"):
            vals = getattr(self, name)
            if len(vals) not in (0, n):
                raise ValueError(f"gating list {name} has length {len(vals)}, N = {n}")
        for name in ("theta_lambdicke", "m_lambdicke"):
            arr = getattr(self, name)
            if arr is not None and np.shape(arr)[-2] != n:
                raise ValueError(f"gating array {name} has shape {np.shape(arr)}, N = {n}")
        return self

    def site_values(self, name, n, zero):
        vals = getattr(self, name)
        if len(vals) == 0:
            return (zero,) * n
        return tuple(vals)

    @property
    def is_disabled(self):
        if self.theta_lambdicke is not None and np.any(self.theta_lambdicke):
            return False
        if self.m_lambdicke is not None and np.any(self.m_lambdicke):
            return False
        return not (np.any(np.asarray(self.omega_rabi))
                    or np.any(np.asarray(self.delta_shift))
                    or np.any(np.asarray(self.classical_amp))
                    or np.any(np.asarray(self.magnetic_grad0))
                    or np.any(np.asarray(self.magnetic_grad1)))


VIB_TOPOLOGIES = ("independent", "chain1d", "custom", "frozen")


@dataclass(frozen=True)
class VibTopology:
    """Trap topology of the centre-of-mass vibrational problem.

    ``independent``: every qubit in its own isotropic trap of stiffness v0.
    ``chain1d``: nearest-neighbour coupling c_nn on the x-axis blocks.
    ``custom``: dense matrix from ``matrix_file``.
    ``frozen``: qubits pinned; all Lamb-Dicke couplings vanish.
    """

    kind: str = "independent"
    v0: float = 0.0                   # J / m^2
    c_nn: float = 0.0                 # J / m^2
    matrix_file: str | None = None

    def __post_init__(self):
        if self.kind not in VIB_TOPOLOGIES:
            raise ValueError(f"unknown vibrational topology {self.kind!r}")


@dataclass(frozen=True)
class Model:
    qubits: QubitParams
    geometry: Geometry
    cavity: CavityParams | None
    se_bath: SEBathParams
    cavity_decay: CavityDecayParams
    gating: GatingSnapshot
    vib: VibTopology
    constants: PhysicalConstants = CONSTANTS

    @property
    def n_qubits(self):
        return self.geometry.count

    def to_dict(self):
        """JSON-ready provenance record of every resolved parameter."""
        def cpx(z):
            z = complex(z)
            return [z.real, z.imag]

        d = {
            "constants": {"hbar": self.constants.hbar, "kB": self.constants.kB,
                          "eps0": self.constants.eps0, "c": self.constants.c},
            "qubits": {
                "omega0": self.qubits.omega0, "gamma_se": self.qubits.gamma_se,
                "mass": self.qubits.mass,
                "dipole_d10": list(self.qubits.dipole_d10),
                "m00": list(self.qubits.m00), "m11": list(self.qubits.m11),
            },
            "geometry": {
                "count": self.geometry.count,
                "positions": (None if self.geometry.is_chain
                              else self.geometry.positions_array.tolist()),
                "spacing": self.geometry.spacing,
                "axis": list(self.geometry.axis) if self.geometry.is_chain else None,
                "origin": list(self.geometry.origin) if self.geometry.is_chain else None,
            },
            "cavity": None if self.cavity is None else {
                "omega_b": self.cavity.omega_b,
                "mode_volume": self.cavity.mode_volume,
                "wavevector": list(self.cavity.wavevector),
                "polarization": list(self.cavity.polarization),
            },
            "se_bath": {
                "cutoff_omega_c": self.se_bath.cutoff_omega_c,
                "temperature": self.se_bath.temperature,
                "bandwidth_delta_k": self.se_bath.bandwidth_delta_k,
                "mean_kbar": self.se_bath.mean_kbar,
            },
            "cavity_decay": {
                "u_profile": self.cavity_decay.u_profile.kind,
                "u_amplitude": self.cavity_decay.u_profile.amplitude,
                "w_profile": self.cavity_decay.w_profile.kind,
                "w_amplitude": self.cavity_decay.w_profile.amplitude,
                "cutoff_xi_c": self.cavity_decay.cutoff_xi_c,
                "mode_density": self.cavity_decay.mode_density,
            },
            "gating": {
                "omega_rabi": [cpx(z) for z in self.gating.omega_rabi],
                "delta_shift": list(self.gating.delta_shift),
                "classical_amp": [cpx(z) for z in self.gating.classical_amp],
                "classical_wavevector": list(self.gating.classical_wavevector),
                "magnetic_grad0": [list(v) for v in self.gating.magnetic_grad0],
                "magnetic_grad1": [list(v) for v in self.gating.magnetic_grad1],
            },
            "vibrations": {"topology": self.vib.kind, "v0": self.vib.v0,
                           "c_nn": self.vib.c_nn, "matrix_file": self.vib.matrix_file},
        }
        return d

    def to_json(self, indent=None):
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)


@dataclass(frozen=True)
class ValidatedModel:
    """A :class:`Model` whose invariants have been checked.

    Field access is forwarded, so ``vm.qubits`` etc. work directly.
    """

    model: Model
    warnings: tuple = ()

    def __getattr__(self, name):
        return getattr(self.model, name)


_ORTHO_TOL = 1e-10


def validate_model(model: Model) -> ValidatedModel:
    """Check every cross-field invariant; collect all failures before raising.

    Pure sign/shape errors raise :class:`ModelValidationError` listing each
    violation.  Soft issues (Gamma vs dipole inconsistency) are returned as
    warnings on the :class:`ValidatedModel` and also emitted via
    :mod:`warnings`.
    """
    problems = []
    warns = []
    q, g = model.qubits, model.geometry

    if q.omega0 <= 0:
        problems.append(f"omega0 must be > 0, got {q.omega0}")
    if q.gamma_se < 0:
        problems.append(f"gamma_se must be >= 0, got {q.gamma_se}")
    if q.mass <= 0:
        problems.append(f"mass must be > 0, got {q.mass}")

    if g.count < 1:
        problems.append(f"qubit count must be >= 1, got {g.count}")
    if g.is_chain:
        if g.count > 1 and (g.spacing is None or g.spacing <= 0):
            problems.append(f"chain spacing must be > 0, got {g.spacing}")
    else:
        pos = g.positions_array
        # all pairwise separations strictly positive
        for i in range(g.count):
            for j in range(i + 1, g.count):
                if np.linalg.norm(pos[i] - pos[j]) == 0.0:
                    problems.append(f"positions of qubits {i} and {j} coincide")

    if model.cavity is not None:
        cav = model.cavity
        if cav.omega_b <= 0:
            problems.append(f"omega_b must be > 0, got {cav.omega_b}")
        if cav.mode_volume <= 0:
            problems.append(f"mode_volume must be > 0, got {cav.mode_volume}")
        e, k = cav.e_vector, cav.k_vector
        if abs(np.linalg.norm(e) - 1.0) > _ORTHO_TOL:
            problems.append(f"polarization must be a unit vector, |e_b| = {np.linalg.norm(e)}")
        knorm = np.linalg.norm(k)
        if knorm == 0.0:
            problems.append("cavity wavevector must be nonzero")
        elif abs(np.dot(e, k)) / knorm > _ORTHO_TOL:
            problems.append(
                f"polarization not transverse: |e_b . k_b|/|k_b| = {abs(np.dot(e, k)) / knorm:.3e}")

    se = model.se_bath
    if se.cutoff_omega_c <= 0:
        problems.append(f"cutoff_omega_c must be > 0, got {se.cutoff_omega_c}")
    if se.temperature < 0:
        problems.append(f"temperature must be >= 0, got {se.temperature}")

    cd = model.cavity_decay
    if not (cd.u_profile.is_zero and cd.w_profile.is_zero):
        if cd.cutoff_xi_c <= 0:
            problems.append(f"cutoff_xi_c must be > 0 when decay profiles are set, got {cd.cutoff_xi_c}")
        if cd.mode_density <= 0:
            problems.append(f"mode_density must be > 0 when decay profiles are set, got {cd.mode_density}")

    vib = model.vib
    if vib.kind in ("independent", "chain1d") and vib.v0 <= 0:
        problems.append(f"trap stiffness v0 must be > 0, got {vib.v0}")
    if vib.kind == "chain1d" and vib.v0 <= 2 * abs(vib.c_nn):
        problems.append(
            f"chain1d stability requires v0 > 2|c_nn|, got v0 = {vib.v0}, c_nn = {vib.c_nn}")

    try:
        model.gating.resized(g.count)
    except ValueError as exc:
        problems.append(str(exc))

    # Gamma and dipole may both be supplied; check them against the
    # free-space relation Gamma = w0^3 d^2 / (3 pi eps0 hbar c^3) to 5%.
    if q.gamma_se > 0 and q.dipole_magnitude > 0 and q.omega0 > 0:
        k = model.constants
        gamma_d = q.omega0 ** 3 * q.dipole_magnitude ** 2 / (3 * math.pi * k.eps0 * k.hbar * k.c ** 3)
        if abs(gamma_d / q.gamma_se - 1.0) > 0.05:
            warns.append(
                f"gamma_se = {q.gamma_se:.4e} differs from the free-space value "
                f"{gamma_d:.4e} implied by |d10| by more than 5%")

    if problems:
        raise ModelValidationError(problems)
    for w in warns:
        warnings.warn(w, stacklevel=2)
    return ValidatedModel(model=model, warnings=tuple(warns))


@dataclass(frozen=True)
class DerivedParams:
    g_b: float                        # cavity vacuum Rabi frequency, rad/s
    eta: np.ndarray                   # Lamb-Dicke parameter, per site
    se_sum_prefactor: float           # Gamma w_c (w_c/w0)^3, 1/s^2

    @property
    def eta_uniform(self):
        return float(self.eta[0]) if self.eta.size else 0.0


def dipole_from_gamma(gamma_se, omega0, constants=CONSTANTS):
    """|d10| consistent with a given free-space SE rate."""
    k = constants
    return math.sqrt(3 * math.pi * k.eps0 * k.hbar * k.c ** 3 * gamma_se / omega0 ** 3)


def independent_trap_frequency(vm) -> float:
    """nu = sqrt(V/m) for the independent topology."""
    return math.sqrt(vm.vib.v0 / vm.qubits.mass)


def derived_quantities(vm: ValidatedModel, mean_inverse_nu: float | None = None) -> DerivedParams:
    """Cavity vacuum Rabi frequency, Lamb-Dicke parameter and SE prefactor.

    ``mean_inverse_nu`` is the average of 1/nu_K over the solved normal
    modes; for the independent and frozen topologies it is known without an
    eigensolve and may be omitted.  Raises
    :class:`RequiresNormalModesError` otherwise.
    """
    k = vm.constants
    q = vm.qubits

    g_b = 0.0
    if vm.cavity is not None:
        g_b = math.sqrt(vm.cavity.omega_b / (2 * k.eps0 * k.hbar * vm.cavity.mode_volume)) \
            * q.dipole_magnitude

    if vm.vib.kind == "frozen":
        eta = np.zeros(vm.n_qubits)
    else:
        if mean_inverse_nu is None:
            if vm.vib.kind == "independent":
                mean_inverse_nu = 1.0 / independent_trap_frequency(vm)
            else:
                raise RequiresNormalModesError(
                    "eta needs the vibrational spectrum: solve the normal modes and "
                    "pass mean_inverse_nu for the chain1d/custom topologies")
        kb = 0.0 if vm.cavity is None else float(np.linalg.norm(vm.cavity.k_vector))
        eta_val = kb * math.sqrt(k.hbar * mean_inverse_nu / (2 * q.mass))
        # broadcast view: per-site indexable at any N without O(N) memory
        eta = np.broadcast_to(eta_val, (vm.n_qubits,))
        if eta_val > 0.3:
            warnings.warn(f"eta = {eta_val:.3f} > 0.3: Lamb-Dicke regime violated",
                          stacklevel=2)

    prefactor = q.gamma_se * vm.se_bath.cutoff_omega_c \
        * (vm.se_bath.cutoff_omega_c / q.omega0) ** 3
    return DerivedParams(g_b=g_b, eta=eta, se_sum_prefactor=prefactor)
