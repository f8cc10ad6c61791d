"""The decoherence timescale tau_2.

The short-time fidelity of the register follows
F(t) = 1 - t/tau_1 - t^2/(2 tau_2^2) + ..., with tau_1 identically zero
for thermal baths.  The quantity computed here is

    1/(2 tau_2^2) = <<Delta V(0)^2>> / hbar^2,

the variance of the interaction operator taken first over the pure
qubit + ancilla state and then over the thermal baths.  Writing
V = Sum_a S_a B_a (system operator times bath operator), the variance is

    Sum_ab [<S_a S_b> - <S_a><S_b>] <B_a B_b>,

where the bath second moments follow from Wick's theorem on the Gaussian
thermal states: photon pairings carry (n+1) / n factors, vibrational
displacement pairings carry (2 N_K + 1), and the bilinear recoil-photon
operators factorise across the independent baths.  The engine reduces
every family pair to site-indexed block matrices and contracts them with
the state moments.  The published special cases are provided as closed
forms that consume the same mode sums, so engine and formula agree to
rounding; structured states keep those forms O(1) in the register size.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from . import modesums
from .errors import (NumericsError, RequiresNormalModesError,
                     StateClassMismatchError)
from .model import GatingSnapshot, Geometry, ValidatedModel, derived_quantities, validate_model
from .states import CavityState, QubitRegisterState, cavity_moments
from .vibrations import NormalModes, lamb_dicke_matrix, mean_inverse_frequency

# Fixed label order: bath-coupled families, their nonvanishing cross
# blocks, then the coherent gating terms (always zero contribution).
BATH_LABELS = ("SE-dipole", "cavity-decay-u", "cavity-decay-w",
               "LD-SE", "LD-cavity", "LD-classical", "LD-magnetic")
CROSS_LABELS = ("cavity-decay-u*cavity-decay-w", "LD-cavity*LD-classical",
                "LD-cavity*LD-magnetic", "LD-classical*LD-magnetic")
GATING_LABELS = ("gating-rabi", "gating-zeeman")
ALL_LABELS = BATH_LABELS + CROSS_LABELS + GATING_LABELS

STATE_CLASSES = ("se_stationary", "correlated_vacuum", "uncorrelated_vacuum",
                 "hadamard", "ghz", "no_se")

_CLASS_ALIASES = {
    "sestationary": "se_stationary", "se": "se_stationary",
    "correlatedvacuum": "correlated_vacuum", "vacuum": "correlated_vacuum",
    "uncorrelatedvacuum": "uncorrelated_vacuum",
    "nose": "no_se",
}

_MATRIX_STATE_LIMIT = 4000   # dense N x N moment matrices refused above this


def _canonical_class(name):
    key = str(name).lower().replace("_", "").replace("-", "")
    key = _CLASS_ALIASES.get(key, str(name).lower())
    if key not in STATE_CLASSES:
        raise ValueError(f"unknown state class {name!r}; choose from {STATE_CLASSES}")
    return key


# -- interaction term list ---------------------------------------------------

@dataclass(frozen=True)
class DiscreteSEMode:
    omega: float                    # rad/s
    g: np.ndarray                   # (N,) complex couplings
    occupation: float | None = None  # explicit n; None means thermal at T


@dataclass(frozen=True)
class DiscreteDecayMode:
    xi: float
    u: complex = 0j
    w: complex = 0j
    occupation: float | None = None


@dataclass(frozen=True)
class VibCouplings:
    """Per-mode couplings of every Lamb-Dicke family, shape (K, N)."""
    frequencies: np.ndarray                 # (K,)
    p: np.ndarray                           # complex, LD-cavity
    theta: np.ndarray                       # real, LD-classical (2 Re Theta)
    mu: np.ndarray                          # real, magnetic identity part
    dm: np.ndarray                          # real, magnetic sigma_Z part
    occupations: np.ndarray | None = None   # explicit N_K; None -> thermal

    @classmethod
    def zeros(cls, frequencies, n):
        k = len(frequencies)
        z = np.zeros((k, n))
        return cls(np.asarray(frequencies, float), z.astype(complex), z.copy(),
                   z.copy(), z.copy())

    def weights(self, T):
        """2 N_K + 1 per mode."""
        if self.occupations is not None:
            return 2.0 * np.asarray(self.occupations, float) + 1.0
        if T == 0.0:
            return np.ones_like(self.frequencies)
        return np.array([modesums.coth_weight(nu, T) for nu in self.frequencies])


@dataclass(frozen=True)
class TermList:
    """The interaction operator decomposed into (system, bath) families.

    Every term of the interaction Hamiltonian appears exactly once; the
    gating Rabi / Zeeman snapshot terms are carried along because they
    drive the coherent reference evolution, but being part of the coherent
    Hamiltonian they contribute nothing to the decoherence variance.
    """
    n_sites: int
    vm: ValidatedModel | None = None
    continuum_se: bool = False
    se_modes: tuple = ()
    vib: VibCouplings | None = None
    ldse_recoil: np.ndarray | None = None   # (K, N) real, continuum factorisation
    ldse_n: np.ndarray | None = None        # (M, K, N) complex, discrete
    continuum_decay: bool = False
    decay_modes: tuple = ()
    gating_rabi: np.ndarray | None = None   # (N,) complex
    gating_zeeman: np.ndarray | None = None  # (N,) real

    def labels(self):
        """Present families in the canonical order."""
        present = []
        if self.continuum_se or self.se_modes:
            present.append("SE-dipole")
        if self.continuum_decay:
            if not self.vm.cavity_decay.u_profile.is_zero:
                present.append("cavity-decay-u")
            if not self.vm.cavity_decay.w_profile.is_zero:
                present.append("cavity-decay-w")
        else:
            if any(m.u != 0 for m in self.decay_modes):
                present.append("cavity-decay-u")
            if any(m.w != 0 for m in self.decay_modes):
                present.append("cavity-decay-w")
        if self.ldse_recoil is not None or self.ldse_n is not None:
            present.append("LD-SE")
        if self.vib is not None:
            if np.any(self.vib.p):
                present.append("LD-cavity")
            if np.any(self.vib.theta):
                present.append("LD-classical")
            if np.any(self.vib.mu) or np.any(self.vib.dm):
                present.append("LD-magnetic")
        if self.gating_rabi is not None and np.any(self.gating_rabi):
            present.append("gating-rabi")
        if self.gating_zeeman is not None and np.any(self.gating_zeeman):
            present.append("gating-zeeman")
        return sorted(present, key=ALL_LABELS.index)

    def bath_labels(self):
        return [lab for lab in self.labels() if lab in BATH_LABELS]

    def gating_labels(self):
        return [lab for lab in self.labels() if lab in GATING_LABELS]


def assemble_interaction_terms(vm: ValidatedModel, nm: NormalModes | None = None) -> TermList:
    """Build the complete term list for a validated model.

    Counter-rotating parts are retained throughout (no rotating-wave
    approximation).  Families whose couplings vanish identically are
    dropped.  Raises :class:`RequiresNormalModesError` when a Lamb-Dicke
    coupling is active but ``nm`` is missing.
    """
    n = vm.n_qubits
    gamma = vm.qubits.gamma_se
    has_cavity = vm.cavity is not None
    g_signed = modesums.cavity_coupling_signed(vm)
    gat = vm.gating.resized(n)
    vib_active = vm.vib.kind != "frozen"

    wants_ld = vib_active and (
        (has_cavity and (g_signed != 0.0 or gamma > 0.0))
        or np.any(np.asarray(gat.classical_amp))
        or np.any(np.asarray(gat.magnetic_grad0)) or np.any(np.asarray(gat.magnetic_grad1))
        or gat.theta_lambdicke is not None or gat.m_lambdicke is not None)
    if wants_ld and nm is None:
        raise RequiresNormalModesError(
            "Lamb-Dicke couplings are active: solve the normal modes first")

    vib = None
    ldse_recoil = None
    if wants_ld:
        k_modes = nm.n_modes
        zpl = nm.zero_point_lengths
        p = np.zeros((k_modes, n), dtype=complex)
        theta = np.zeros((k_modes, n))

        if has_cavity and g_signed != 0.0:
            kb = vm.cavity.k_vector
            c_b = lamb_dicke_matrix(nm, kb)
            for i in range(n):
                phase = np.exp(1j * float(kb @ vm.geometry.position(i)))
                p[:, i] = g_signed * c_b[:, i] * phase

        if gat.theta_lambdicke is not None:
            theta[:, :] = 2.0 * np.real(np.asarray(gat.theta_lambdicke)).T
        elif np.any(np.asarray(gat.classical_amp)):
            kc = np.asarray(gat.classical_wavevector, float)
            c_c = lamb_dicke_matrix(nm, kc)
            for i in range(n):
                amp = complex(gat.classical_amp[i]) \
                    * np.exp(1j * float(kc @ vm.geometry.position(i)))
                theta[:, i] = 2.0 * np.real(amp * c_c[:, i])

        if gat.m_lambdicke is not None:
            m0 = np.asarray(gat.m_lambdicke[0]).T
            m1 = np.asarray(gat.m_lambdicke[1]).T
        else:
            m0 = np.zeros((k_modes, n))
            m1 = np.zeros((k_modes, n))
            for i, g0 in enumerate(gat.magnetic_grad0):
                g0 = np.asarray(g0, float)
                if np.any(g0):
                    m0[:, i] = zpl * (g0 @ nm.site_block(i))
            for i, g1 in enumerate(gat.magnetic_grad1):
                g1 = np.asarray(g1, float)
                if np.any(g1):
                    m1[:, i] = zpl * (g1 @ nm.site_block(i))
        mu = 0.5 * (m0 + m1)
        dm = 0.5 * (m1 - m0)

        if gamma > 0.0 and has_cavity:
            ldse_recoil = lamb_dicke_matrix(nm, vm.cavity.k_vector)
            if not np.any(ldse_recoil):
                ldse_recoil = None
        if np.any(p) or np.any(theta) or np.any(mu) or np.any(dm) or ldse_recoil is not None:
            vib = VibCouplings(frequencies=nm.frequencies, p=p, theta=theta, mu=mu, dm=dm)
        else:
            ldse_recoil = None

    decay_on = has_cavity and not (vm.cavity_decay.u_profile.is_zero
                                   and vm.cavity_decay.w_profile.is_zero)
    rabi = np.asarray(gat.omega_rabi, complex)
    zeeman = np.asarray(gat.delta_shift, float)
    return TermList(
        n_sites=n, vm=vm,
        continuum_se=gamma > 0.0,
        vib=vib,
        ldse_recoil=ldse_recoil,
        continuum_decay=decay_on,
        gating_rabi=rabi if np.any(rabi) else None,
        gating_zeeman=zeeman if np.any(zeeman) else None,
    )


def discrete_term_list(n_sites, se_modes=(), vib: VibCouplings | None = None,
                       ldse_n=None, decay_modes=(), gating_rabi=None,
                       gating_zeeman=None) -> TermList:
    """Term list over explicitly enumerated modes (the oracle's language)."""
    if ldse_n is not None:
        ldse_n = np.asarray(ldse_n, complex)
        if vib is None or not se_modes:
            raise ValueError("ldse couplings need both SE modes and vibrational modes")
        expect = (len(se_modes), len(vib.frequencies), n_sites)
        if ldse_n.shape != expect:
            raise ValueError(f"ldse coupling array must be {expect}, got {ldse_n.shape}")
        if not np.any(ldse_n):
            ldse_n = None
    return TermList(n_sites=n_sites, se_modes=tuple(se_modes), vib=vib,
                    ldse_n=ldse_n, decay_modes=tuple(decay_modes),
                    gating_rabi=gating_rabi, gating_zeeman=gating_zeeman)


# -- bath block matrices -----------------------------------------------------

@dataclass(frozen=True)
class BathBlocks:
    """Site-indexed second moments of the bath operators at temperature T."""
    n: int
    d_se: np.ndarray | None = None       # SE-dipole pair sums
    n_ldse: np.ndarray | None = None     # recoil-SE pair sums
    p_herm: np.ndarray | None = None     # Sum_K p^i p^j* (2N+1)
    p_anom: np.ndarray | None = None     # Sum_K p^i p^j  (2N+1)
    t_cls: np.ndarray | None = None
    z_mag: np.ndarray | None = None
    c_ptheta: np.ndarray | None = None
    c_pm: np.ndarray | None = None
    c_tm: np.ndarray | None = None
    lu_plus: float = 0.0
    lu_minus: float = 0.0
    lw_plus: float = 0.0
    lw_minus: float = 0.0
    luw: complex = 0j
    has_u: bool = False
    has_w: bool = False


def _continuum_se_matrix(vm, T, method="quadrature"):
    n = vm.n_qubits
    if n > _MATRIX_STATE_LIMIT:
        raise ValueError(f"explicit SE pair sums refused for N = {n}; use a closed form")
    diag = modesums.se_diagonal_sum(vm, T, method).value
    mat = np.zeros((n, n))
    np.fill_diagonal(mat, diag)
    cache = {}
    for i in range(n):
        for j in range(i + 1, n):
            x = vm.se_bath.cutoff_omega_c * vm.geometry.separation(i, j) / vm.constants.c
            u = modesums._pair_angle_factor(vm, i, j)
            key = (round(math.log(max(x, 1e-300)), 10), round(u, 12))
            if key not in cache:
                cache[key] = modesums.se_cross_sum_scaled(vm, x, u, T, method).value
            mat[i, j] = mat[j, i] = cache[key]
    return mat


def _discrete_se_matrix(modes, n, T):
    mat = np.zeros((n, n), dtype=complex)
    for mode in modes:
        occ = mode.occupation if mode.occupation is not None \
            else modesums.thermal_occupation(mode.omega, T)
        g = np.asarray(mode.g, complex)
        mat += (occ + 1.0) * np.outer(g, np.conj(g)) + occ * np.outer(np.conj(g), g)
    return mat


def build_blocks(terms: TermList, T=0.0, method="quadrature") -> BathBlocks:
    """Reduce the term list to block matrices at temperature T."""
    n = terms.n_sites
    kw = {}

    if terms.continuum_se:
        kw["d_se"] = _continuum_se_matrix(terms.vm, T, method)
    elif terms.se_modes:
        kw["d_se"] = _discrete_se_matrix(terms.se_modes, n, T)

    if terms.vib is not None:
        w = terms.vib.weights(T)
        p, th, dm = terms.vib.p, terms.vib.theta, terms.vib.dm
        if np.any(p):
            kw["p_herm"] = np.einsum("ki,kj->ij", p * w[:, None], np.conj(p))
            kw["p_anom"] = np.einsum("ki,kj->ij", p * w[:, None], p)
        if np.any(th):
            kw["t_cls"] = np.einsum("ki,kj->ij", th * w[:, None], th)
        if np.any(dm):
            kw["z_mag"] = np.einsum("ki,kj->ij", dm * w[:, None], dm)
        if np.any(p) and np.any(th):
            kw["c_ptheta"] = np.einsum("ki,kj->ij", p * w[:, None], th)
        if np.any(p) and np.any(dm):
            kw["c_pm"] = np.einsum("ki,kj->ij", p * w[:, None], dm)
        if np.any(th) and np.any(dm):
            kw["c_tm"] = np.einsum("ki,kj->ij", th * w[:, None], dm)

    if terms.ldse_recoil is not None:
        w = terms.vib.weights(T)
        c = terms.ldse_recoil
        lam = np.einsum("ki,kj->ij", c * w[:, None], c)
        kw["n_ldse"] = lam * kw["d_se"]
    elif terms.ldse_n is not None:
        nph = np.array([m.occupation if m.occupation is not None
                        else modesums.thermal_occupation(m.omega, T)
                        for m in terms.se_modes])
        wv = terms.vib.weights(T)
        nc = terms.ldse_n
        wplus = (nph + 1.0)[:, None, None] * wv[None, :, None]
        wmin = nph[:, None, None] * wv[None, :, None]
        kw["n_ldse"] = (np.einsum("mki,mkj->ij", nc * wplus, np.conj(nc))
                        + np.einsum("mki,mkj->ij", np.conj(nc) * wmin, nc))

    if terms.continuum_decay:
        sums = modesums.decay_pair_sums(terms.vm, T)
        kw.update(lu_plus=sums.lu_plus, lu_minus=sums.lu_minus,
                  lw_plus=sums.lw_plus, lw_minus=sums.lw_minus, luw=sums.luw,
                  has_u=not terms.vm.cavity_decay.u_profile.is_zero,
                  has_w=not terms.vm.cavity_decay.w_profile.is_zero)
    elif terms.decay_modes:
        lu_p = lu_m = lw_p = lw_m = 0.0
        luw = 0j
        has_u = has_w = False
        for mode in terms.decay_modes:
            occ = mode.occupation if mode.occupation is not None \
                else modesums.thermal_occupation(mode.xi, T)
            if mode.u != 0:
                has_u = True
                lu_p += abs(mode.u) ** 2 * (occ + 1.0)
                lu_m += abs(mode.u) ** 2 * occ
            if mode.w != 0:
                has_w = True
                lw_p += abs(mode.w) ** 2 * (occ + 1.0)
                lw_m += abs(mode.w) ** 2 * occ
            luw += mode.u * mode.w * (2.0 * occ + 1.0)
        kw.update(lu_plus=lu_p, lu_minus=lu_m, lw_plus=lw_p, lw_minus=lw_m,
                  luw=luw, has_u=has_u, has_w=has_w)

    return BathBlocks(n=n, **kw)


# -- the variance engine -----------------------------------------------------

def _split_sum(weight, block):
    """(diagonal, off-diagonal) parts of Sum_ij weight_ij block_ij, real."""
    prod = np.real(weight * block)
    diag = float(np.trace(prod))
    return diag, float(np.sum(prod)) - diag


def variance_contributions(state: QubitRegisterState, cavity: CavityState,
                           blocks: BathBlocks):
    """Per-label contributions to 1/(2 tau_2^2), split same-site/cross-site.

    Returns ``{label: (diag, cross)}`` in 1/s^2.  Site-less terms (cavity
    decay) count as diagonal.  Mixed X-Z products on the same site enter
    only through the anticommutator, which vanishes, so sigma_Y never
    appears.
    """
    x, z, xx, zz, xz = state.moment_matrices()
    cm = cavity_moments(cavity)
    cxx = xx - np.outer(x, x)
    czz = zz - np.outer(z, z)
    cxz = xz - np.outer(x, z)    # diagonal is the symmetrised value -x_i z_i
    beta = cm.b
    out = {}

    if blocks.d_se is not None:
        out["SE-dipole"] = _split_sum(cxx, blocks.d_se)
    if blocks.n_ldse is not None:
        out["LD-SE"] = _split_sum(cxx, blocks.n_ldse)

    if blocks.p_herm is not None:
        xout = np.outer(x, x)
        combined = ((cm.n_plus + cm.n) * np.real(blocks.p_herm * xx)
                    - 2.0 * abs(beta) ** 2 * np.real(blocks.p_herm * xout)
                    + 2.0 * np.real(blocks.p_anom * xx * cm.b2
                                    - blocks.p_anom * xout * beta ** 2))
        diag = float(np.trace(combined))
        out["LD-cavity"] = (diag, float(np.sum(combined)) - diag)

    if blocks.t_cls is not None:
        out["LD-classical"] = _split_sum(cxx, blocks.t_cls)
    if blocks.z_mag is not None:
        out["LD-magnetic"] = _split_sum(czz, blocks.z_mag)

    if blocks.c_ptheta is not None:
        out["LD-cavity*LD-classical"] = _split_sum(cxx, 4.0 * np.real(beta * blocks.c_ptheta))
    if blocks.c_pm is not None:
        out["LD-cavity*LD-magnetic"] = _split_sum(cxz, 4.0 * np.real(beta * blocks.c_pm))
    if blocks.c_tm is not None:
        out["LD-classical*LD-magnetic"] = _split_sum(cxz, 2.0 * blocks.c_tm)

    var_n = cm.n - abs(beta) ** 2
    var_np = cm.n_plus - abs(beta) ** 2
    if blocks.has_u:
        out["cavity-decay-u"] = (blocks.lu_plus * var_n + blocks.lu_minus * var_np, 0.0)
    if blocks.has_w:
        out["cavity-decay-w"] = (blocks.lw_minus * var_n + blocks.lw_plus * var_np, 0.0)
    if blocks.has_u and blocks.has_w:
        cross = 2.0 * np.real(blocks.luw * (cm.bdag2 - cm.bdag ** 2))
        out["cavity-decay-u*cavity-decay-w"] = (float(cross), 0.0)
    return out


@dataclass(frozen=True)
class DecoherenceReport:
    """tau_2 with its mechanism breakdown.

    ``inv_half_tau2_sq`` (the squared rate 1/(2 tau_2^2)) is the primary
    quantity; storing it avoids under/overflow near tau_2 = 1e-26 s.
    ``tau1`` is identically zero for thermal baths and recorded as such.
    """
    tau2: float
    inv_half_tau2_sq: float
    breakdown: dict
    cross_site_fraction: float
    cross_site_by_label: dict
    state_class: str
    tau1: float = 0.0
    approx_inv_half_tau2_sq: float | None = None

    def to_dict(self):
        order = lambda d: {k: d[k] for k in sorted(d, key=ALL_LABELS.index)}
        return {
            "tau2_s": None if math.isinf(self.tau2) else self.tau2,
            "tau1_s": self.tau1,
            "inv_half_tau2_sq": self.inv_half_tau2_sq,
            "breakdown": order(self.breakdown),
            "cross_site_fraction": self.cross_site_fraction,
            "cross_site_by_label": order(self.cross_site_by_label),
            "state_class": self.state_class,
            "approx_inv_half_tau2_sq": self.approx_inv_half_tau2_sq,
        }

    def to_json(self, indent=2):
        return json.dumps(self.to_dict(), indent=indent)


def _report_from_contributions(contribs, state_class, ensure_labels=(), approx=None):
    breakdown = {}
    diag_total = 0.0
    cross_total = 0.0
    cross_by_label = {}
    for label, (diag, cross) in contribs.items():
        breakdown[label] = diag + cross
        diag_total += diag
        cross_total += cross
        denom = abs(diag) + abs(cross)
        cross_by_label[label] = abs(cross) / denom if denom > 0 else 0.0
    for label in ensure_labels:
        # present families whose contribution vanished identically, plus the
        # coherent gating terms, are reported as exact zeros
        breakdown.setdefault(label, 0.0)
        cross_by_label.setdefault(label, 0.0)

    total = diag_total + cross_total
    scale = sum(abs(v) for v in breakdown.values())
    if total < 0:
        if scale > 0 and total < -1e-9 * scale:
            raise NumericsError(f"variance came out negative: {total:.6e} (scale {scale:.3e})")
        total = 0.0
    tau2 = math.inf if total == 0.0 else 1.0 / math.sqrt(2.0 * total)
    frac = abs(cross_total) / scale if scale > 0 else 0.0
    return DecoherenceReport(
        tau2=tau2, inv_half_tau2_sq=total, breakdown=breakdown,
        cross_site_fraction=frac, cross_site_by_label=cross_by_label,
        state_class=state_class, approx_inv_half_tau2_sq=approx)


def tau2_general(state: QubitRegisterState, cavity: CavityState,
                 terms: TermList, T=0.0, method="quadrature") -> DecoherenceReport:
    """Evaluate 1/(2 tau_2^2) for an arbitrary pure state over all terms.

    ``T`` applies to every thermal bath; per-mode occupation overrides in
    the term list take precedence.  Only thermal (Gaussian) baths are
    supported, which is also what forces tau_1 = 0.
    """
    if state.n_qubits != terms.n_sites:
        raise ValueError(f"state has {state.n_qubits} qubits, terms expect {terms.n_sites}")
    if T < 0:
        raise ValueError("temperature must be >= 0")
    blocks = build_blocks(terms, T, method)
    contribs = variance_contributions(state, cavity, blocks)
    return _report_from_contributions(contribs, "general", terms.labels())


def fidelity_short_time(report: DecoherenceReport, t) -> float:
    """F(t) = 1 - t^2 / (2 tau_2^2); exactly 1 at t = 0 and for tau_2 = inf."""
    if t < 0:
        raise ValueError("t must be >= 0")
    loss = t * t * report.inv_half_tau2_sq
    if loss > 0.1:
        warnings.warn(f"1 - F = {loss:.3g} > 0.1: the short-time expansion is "
                      "untrustworthy here", stacklevel=2)
    return 1.0 - loss


def classify_decoherence(vm: ValidatedModel, pair, r_hi=10.0, r_lo=0.1) -> str:
    """Independent / collective / intermediate regime of one qubit pair.

    Uses the Gaussian-model criteria on the bandwidth Delta_k and mean
    k-bar of the SE coupling spectrum: Delta_k d >> 1 decoheres
    independently, Delta_k d << 1 together with kbar d << 1 collectively.
    """
    i, j = pair
    d = vm.geometry.separation(i, j)
    dk = vm.se_bath.bandwidth_delta_k
    kbar = vm.se_bath.mean_kbar
    if dk is None or kbar is None:
        raise ValueError("bandwidth_delta_k and mean_kbar must be configured")
    if dk * d > r_hi:
        return "independent"
    if dk * d < r_lo and kbar * d < r_lo:
        return "collective"
    return "intermediate"


# -- published closed forms --------------------------------------------------

def _k_diag_and_total(vm, nm, T=0.0):
    """(Sum_i K_ii, Sum_ij K_ij) without materialising when independent."""
    n = vm.n_qubits
    if vm.cavity is None or vm.vib.kind == "frozen":
        return 0.0, 0.0
    if nm is None:
        k_ii = complex(modesums.lamb_dicke_cavity_sum(vm, None, 0, 0)).real
        if T > 0.0:
            from .model import independent_trap_frequency
            k_ii *= modesums.coth_weight(independent_trap_frequency(vm), T)
        return n * k_ii, n * k_ii       # off-diagonal K vanishes
    kmat = _k_matrix(vm, nm, T)
    return float(np.real(np.trace(kmat))), float(np.real(np.sum(kmat)))


def _k_matrix(vm, nm, T=0.0):
    """K_ij = Sum_K p^i p^j* (2 N_K + 1) from explicit modes."""
    n = vm.n_qubits
    g_signed = modesums.cavity_coupling_signed(vm)
    kb = vm.cavity.k_vector
    c = lamb_dicke_matrix(nm, kb)
    w = np.ones(nm.n_modes) if T == 0.0 else \
        np.array([modesums.coth_weight(nu, T) for nu in nm.frequencies])
    phases = np.array([np.exp(1j * float(kb @ vm.geometry.position(i))) for i in range(n)])
    base = np.einsum("ki,kj->ij", c * w[:, None], c)
    return g_signed ** 2 * base * np.outer(phases, np.conj(phases))


def _ldse_matrix(vm, nm, method):
    n = vm.n_qubits
    mat = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            mat[i, j] = mat[j, i] = modesums.lamb_dicke_se_sum(vm, nm, i, j, 0.0, method=method)
    return mat


def _state_moments_guarded(state):
    if state.n_qubits > _MATRIX_STATE_LIMIT:
        raise ValueError(f"dense moment matrices refused for N = {state.n_qubits}; "
                         "use the hadamard/ghz/no_se structured classes")
    return state.moment_matrices()


def _require_vacuum(cavity, name):
    if cavity is not None and not (cavity.kind == "vacuum"
                                   or (cavity.kind == "fock" and cavity.n == 0)):
        raise StateClassMismatchError(f"the {name} closed form assumes the vacuum ancilla")


def _require_t0(T):
    if T != 0.0:
        raise StateClassMismatchError("the published vacuum-case formulas hold at T = 0")


def tau2_closed_form(state_class, state: QubitRegisterState, vm: ValidatedModel,
                     nm: NormalModes | None = None, T=0.0,
                     cavity: CavityState | None = None,
                     method="quadrature") -> DecoherenceReport:
    """Evaluate one of the published special-case formulas.

    Classes: ``se_stationary`` (any pure state, finite T, SE coupling
    only), ``correlated_vacuum`` / ``uncorrelated_vacuum`` (T = 0, vacuum
    ancilla, no gating), ``hadamard``, ``ghz`` (N >= 3) and ``no_se``.
    For the Hadamard/GHZ/no-SE classes the N eta^2 g_b^2 approximation is
    recorded alongside the exact mode-sum value.  ``nm = None`` selects
    the independent-topology closed forms, which stay O(1) in N.
    """
    cls = _canonical_class(state_class)
    n = vm.n_qubits
    if state.n_qubits != n:
        raise StateClassMismatchError(f"state has N = {state.n_qubits}, model has {n}")
    if nm is None and vm.vib.kind not in ("independent", "frozen"):
        raise RequiresNormalModesError(
            f"the {vm.vib.kind} topology needs solved normal modes")
    contribs = {}
    approx = None
    d0 = None
    if vm.qubits.gamma_se > 0.0 and cls != "no_se":
        d0 = modesums.se_diagonal_sum(vm, 0.0 if cls != "se_stationary" else T, method).value

    has_w = not vm.cavity_decay.w_profile.is_zero
    el = modesums.cavity_decay_sum(vm, method).value if has_w else 0.0

    if cls == "se_stationary":
        contribs["SE-dipole"] = _cxx_contraction(vm, state, T, method)
        return _report_from_contributions(contribs, cls)

    if cls == "hadamard":
        if state.tag != "hadamard":
            raise StateClassMismatchError("the hadamard class needs the Hadamard state")
        _require_vacuum(cavity, cls)
        _require_t0(T)
        k_diag, k_total = _k_diag_and_total(vm, nm)
        if vm.qubits.gamma_se > 0.0:
            contribs["SE-dipole"] = (0.0, 0.0)   # <Delta X_i Delta X_j> = 0 exactly
        contribs["LD-cavity"] = (k_diag, k_total - k_diag)
        if has_w:
            contribs["cavity-decay-w"] = (el, 0.0)
        dp = derived_quantities(vm, _mean_inv_nu(nm))
        approx = n * dp.eta_uniform ** 2 * dp.g_b ** 2 + el
        return _report_from_contributions(contribs, cls, approx=approx)

    if cls == "ghz":
        if state.tag != "ghz":
            raise StateClassMismatchError("the ghz class needs the GHZ state")
        if n < 3:
            raise StateClassMismatchError(
                "the published GHZ formula drops <X_i X_j> cross terms, which only "
                "vanish for N >= 3; use tau2_general for N = 2")
        _require_vacuum(cavity, cls)
        _require_t0(T)
        contribs["SE-dipole"] = (n * d0, 0.0) if d0 else (0.0, 0.0)
        if d0 and vm.cavity is not None and vm.vib.kind != "frozen":
            contribs["LD-SE"] = (_ldse_diag_sum(vm, nm, method), 0.0)
        k_diag, _ = _k_diag_and_total(vm, nm)
        contribs["LD-cavity"] = (k_diag, 0.0)
        if has_w:
            contribs["cavity-decay-w"] = (el, 0.0)
        dp = derived_quantities(vm, _mean_inv_nu(nm))
        approx = (n * (d0 or 0.0) * (1.0 + dp.eta_uniform ** 2)
                  + n * dp.eta_uniform ** 2 * dp.g_b ** 2 + el)
        return _report_from_contributions(contribs, cls, approx=approx)

    if cls in ("correlated_vacuum", "uncorrelated_vacuum"):
        _require_vacuum(cavity, cls)
        _require_t0(T)
        if cls == "uncorrelated_vacuum" and not state.is_uncorrelated(1e-10):
            raise StateClassMismatchError(
                "state fails <X_i X_j> = <X_i><X_j>; use the correlated_vacuum class")
        if d0:
            contribs["SE-dipole"] = _cxx_contraction(vm, state, 0.0, method)
            if vm.cavity is not None and vm.vib.kind != "frozen":
                contribs["LD-SE"] = _cxx_contraction(
                    vm, state, 0.0, method,
                    matrix_fn=lambda: _ldse_matrix(vm, nm, method),
                    diag_sum_fn=lambda: _ldse_diag_sum(vm, nm, method))
        if vm.cavity is not None and vm.vib.kind != "frozen":
            contribs["LD-cavity"] = _xx_k_contraction(vm, state, nm)
        if has_w:
            contribs["cavity-decay-w"] = (el, 0.0)
        return _report_from_contributions(contribs, cls)

    # no_se: high-Q cavity, every SE contribution deleted
    _require_vacuum(cavity, cls)
    _require_t0(T)
    contribs["LD-cavity"] = _xx_k_contraction(vm, state, nm)
    if has_w:
        contribs["cavity-decay-w"] = (el, 0.0)
    dp = derived_quantities(vm, _mean_inv_nu(nm))
    approx = n * dp.eta_uniform ** 2 * dp.g_b ** 2 + el
    return _report_from_contributions(contribs, "no_se", approx=approx)


def _ldse_diag_sum(vm, nm, method):
    """Sum_i of the recoil-SE diagonal; per-site for inhomogeneous traps."""
    if nm is None:
        return vm.n_qubits * modesums.lamb_dicke_se_sum(vm, None, 0, 0, 0.0, method=method)
    return sum(modesums.lamb_dicke_se_sum(vm, nm, i, i, 0.0, method=method)
               for i in range(vm.n_qubits))


def _cxx_contraction(vm, state, T, method, matrix_fn=None, diag_sum_fn=None):
    """Sum_ij <Delta X_i Delta X_j> M_ij with structured shortcuts.

    ``M`` defaults to the SE pair-sum matrix.  Hadamard states contract to
    exactly zero; all-zero and GHZ (N >= 3) states reach only the diagonal.
    """
    n = vm.n_qubits
    if state.tag == "hadamard":
        return (0.0, 0.0)
    if state.tag == "allzero" or (state.tag == "ghz" and n >= 3):
        diag = diag_sum_fn() if diag_sum_fn is not None \
            else n * modesums.se_diagonal_sum(vm, T, method).value
        return (diag, 0.0)
    x, _, xx, _, _ = _state_moments_guarded(state)
    mat = matrix_fn() if matrix_fn is not None else _continuum_se_matrix(vm, T, method)
    return _split_sum(xx - np.outer(x, x), mat)


def _xx_k_contraction(vm, state, nm):
    """Sum_ij <X_i X_j> K_ij; diagonal K makes this N K_00 for any state."""
    n = vm.n_qubits
    if nm is None:
        k_diag, _ = _k_diag_and_total(vm, None)
        return (k_diag, 0.0)
    if state.tag == "hadamard":
        k_diag, k_total = _k_diag_and_total(vm, nm)
        return (k_diag, k_total - k_diag)
    if state.tag == "ghz" and n >= 3:
        k_diag, _ = _k_diag_and_total(vm, nm)
        return (k_diag, 0.0)
    _, _, xx, _, _ = _state_moments_guarded(state)
    return _split_sum(xx, _k_matrix(vm, nm))


def _mean_inv_nu(nm):
    return mean_inverse_frequency(nm) if nm is not None else None


# -- scaling sweeps ----------------------------------------------------------

@dataclass(frozen=True)
class SweepResult:
    state_class: str
    rows: tuple                 # dicts: N, tau2_s, inv_half_tau2_sq, breakdown
    slope: float
    intercept: float

    def to_csv(self):
        labels = sorted({k for row in self.rows for k in row["breakdown"]},
                        key=ALL_LABELS.index)
        lines = ["N,tau2_s,inv_half_tau2_sq," + ",".join(labels)]
        for row in self.rows:
            cells = [str(row["N"]), f"{row['tau2_s']:.17g}",
                     f"{row['inv_half_tau2_sq']:.17g}"]
            cells += [f"{row['breakdown'].get(lab, 0.0):.17g}" for lab in labels]
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"


_SWEEP_STATES = {"hadamard": "hadamard", "ghz": "ghz", "no_se": "hadamard",
                 "se_stationary": "ghz", "correlated_vacuum": "ghz",
                 "uncorrelated_vacuum": "hadamard"}


def scaling_sweep(vm: ValidatedModel, state_class, n_list, T=0.0,
                  coupling_scale=None, method="quadrature") -> SweepResult:
    """tau_2 over a list of register sizes, with the fitted log-log slope.

    The model's geometry is re-instantiated per N as a chain with the
    configured spacing; structured states keep every point O(1).
    ``coupling_scale(N)`` multiplies every coupling amplitude, which lets
    a test inject 1/sqrt(N) couplings and verify the slope collapses to 0.
    """
    n_list = [int(nn) for nn in n_list]
    if len(n_list) < 3 or any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("n_list needs at least 3 strictly increasing sizes")
    cls = _canonical_class(state_class)
    if cls == "ghz" and min(n_list) < 3:
        raise ValueError("GHZ sweeps need N >= 3")
    spacing = vm.geometry.spacing if vm.geometry.is_chain else 1e-6
    if vm.vib.kind not in ("independent", "frozen") and max(n_list) > 2000:
        raise ValueError("sweeps beyond N = 2000 need the independent topology")

    rows = []
    for nn in n_list:
        geom = Geometry.chain(nn, spacing, axis=(1.0, 0.0, 0.0))
        vm_n = validate_model(replace(vm.model, geometry=geom,
                                      gating=GatingSnapshot.disabled(nn)))
        state = QubitRegisterState.structured(_SWEEP_STATES[cls], nn)
        report = tau2_closed_form(cls, state, vm_n, nm=None, T=T, method=method)
        ihs = report.inv_half_tau2_sq
        breakdown = dict(report.breakdown)
        if coupling_scale is not None:
            factor = float(coupling_scale(nn)) ** 2
            ihs *= factor
            breakdown = {k: v * factor for k, v in breakdown.items()}
        tau2 = math.inf if ihs == 0.0 else 1.0 / math.sqrt(2.0 * ihs)
        rows.append({"N": nn, "tau2_s": tau2, "inv_half_tau2_sq": ihs,
                     "breakdown": breakdown})

    logn = np.log([row["N"] for row in rows])
    logt = np.log([row["tau2_s"] for row in rows])
    slope, intercept = np.polyfit(logn, logt, 1)
    return SweepResult(state_class=cls, rows=tuple(rows),
                       slope=float(slope), intercept=float(intercept))
