"""Pure qubit-register states and the cavity ancilla state.

Structured states (Hadamard, GHZ, all-zero, W, per-site product) carry
closed-form expectation rules valid for any register size, so sweeps over
macroscopic N never touch 2^N amplitudes.  Sparse states store a map from
basis index to complex amplitude; basis-index bit i set means qubit i is in
|1>.  Only sigma_X and sigma_Z expectations are exposed: the interaction
operator couples through those two axes exclusively, and sigma_Y is
deliberately not implemented.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

STRUCTURED_TAGS = ("hadamard", "ghz", "allzero", "w")

_NORM_TOL = 1e-12       # accepted silently
_RENORM_TOL = 1e-6      # renormalised silently below this, error above


class QubitRegisterState:
    """Pure state of N qubits; structured tag or sparse amplitude map."""

    def __init__(self, n_qubits, tag=None, amplitudes=None, bloch=None):
        if n_qubits < 1:
            raise ValueError(f"n_qubits must be >= 1, got {n_qubits}")
        self.n_qubits = int(n_qubits)
        self.tag = tag
        self.amplitudes = amplitudes
        self.bloch = bloch

    # -- constructors --------------------------------------------------

    @classmethod
    def structured(cls, tag, n_qubits):
        tag = tag.lower()
        if tag not in STRUCTURED_TAGS:
            raise ValueError(f"unknown structured tag {tag!r}")
        if tag == "w" and n_qubits < 2:
            raise ValueError("the W state needs at least 2 qubits")
        return cls(n_qubits, tag=tag)

    @classmethod
    def product(cls, site_amplitudes):
        """Product state from per-site (c0, c1) pairs; normalised per site."""
        amps = np.asarray(site_amplitudes, dtype=complex)
        if amps.ndim != 2 or amps.shape[1] != 2:
            raise ValueError(f"expected (N, 2) per-site amplitudes, got {amps.shape}")
        norms = np.linalg.norm(amps, axis=1)
        if np.any(norms == 0.0):
            raise ValueError("a per-site amplitude pair is the zero vector")
        return cls(amps.shape[0], tag="product", bloch=amps / norms[:, None])

    @classmethod
    def sparse(cls, amplitudes, n_qubits):
        dim = 1 << n_qubits
        clean = {}
        for idx, amp in amplitudes.items():
            idx = int(idx)
            if not 0 <= idx < dim:
                raise IndexError(f"basis index {idx} out of range for N = {n_qubits}")
            if amp != 0:
                clean[idx] = complex(amp)
        norm2 = sum(abs(a) ** 2 for a in clean.values())
        if norm2 == 0.0:
            raise ValueError("sparse state has zero norm")
        if abs(norm2 - 1.0) > _RENORM_TOL:
            raise ValueError(f"sparse state norm deviates too far from 1: sum|c|^2 = {norm2}")
        if abs(norm2 - 1.0) > _NORM_TOL:
            root = np.sqrt(norm2)
            clean = {k: v / root for k, v in clean.items()}
        return cls(n_qubits, tag="sparse", amplitudes=clean)

    @classmethod
    def from_amplitude_file(cls, path, n_qubits):
        """Two-column text: basis index and complex amplitude as ``re,im``."""
        amps = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                try:
                    idx_str, amp_str = line.split()
                    re, im = amp_str.split(",")
                    amps[int(idx_str)] = complex(float(re), float(im))
                except ValueError as exc:
                    raise ValueError(f"{path}:{lineno}: expected 'index re,im', got {line!r}") from exc
        return cls.sparse(amps, n_qubits)

    # -- representation changes ----------------------------------------

    def to_sparse(self):
        """Materialise a structured state; guarded against large N."""
        if self.tag == "sparse":
            return self
        n = self.n_qubits
        if self.tag in ("hadamard", "product") and n > 24:
            raise ValueError(f"refusing to materialise 2^{n} amplitudes")
        if self.tag == "hadamard":
            amp = 2.0 ** (-n / 2.0)
            amps = {i: amp for i in range(1 << n)}
        elif self.tag == "ghz":
            amps = {0: 1 / np.sqrt(2), (1 << n) - 1: 1 / np.sqrt(2)}
        elif self.tag == "allzero":
            amps = {0: 1.0}
        elif self.tag == "w":
            amps = {1 << i: 1 / np.sqrt(n) for i in range(n)}
        else:  # product
            amps = {}
            for idx in range(1 << n):
                val = 1.0 + 0j
                for site in range(n):
                    val *= self.bloch[site, (idx >> site) & 1]
                if val != 0:
                    amps[idx] = val
        return QubitRegisterState.sparse(amps, n)

    # -- single-site expectations ---------------------------------------

    def expect_pauli(self, site, axis):
        """<sigma_axis^site>, axis in {X, Z}."""
        self._check_site(site)
        axis = _check_axis(axis)
        n = self.n_qubits
        if self.tag == "hadamard":
            return 1.0 if axis == "X" else 0.0
        if self.tag == "allzero":
            return 0.0 if axis == "X" else -1.0
        if self.tag == "ghz":
            # X flips one qubit into the orthogonal branch (any N >= 2);
            # Z branches have equal weight.  N = 1 GHZ is (|0>+|1>)/sqrt2.
            if n == 1:
                return 1.0 if axis == "X" else 0.0
            return 0.0
        if self.tag == "w":
            return 0.0 if axis == "X" else 2.0 / n - 1.0
        if self.tag == "product":
            c0, c1 = self.bloch[site]
            if axis == "X":
                return float(2 * np.real(np.conj(c0) * c1))
            return float(abs(c1) ** 2 - abs(c0) ** 2)
        return self._sparse_expectation(((site, axis),))

    def expect_pauli_pair(self, i, j, axis_a, axis_b):
        """<sigma_a^i sigma_b^j> for i != j.

        Same-site products are rejected: sigma_X^2 = 1 makes them trivial
        and callers must use that identity instead.
        """
        if i == j:
            raise ValueError("same-site pair requested: use the sigma^2 = 1 identity")
        self._check_site(i)
        self._check_site(j)
        axis_a = _check_axis(axis_a)
        axis_b = _check_axis(axis_b)
        n = self.n_qubits
        if self.tag == "hadamard":
            return 1.0 if (axis_a, axis_b) == ("X", "X") else 0.0
        if self.tag == "allzero":
            return 1.0 if (axis_a, axis_b) == ("Z", "Z") else 0.0
        if self.tag == "ghz":
            if (axis_a, axis_b) == ("Z", "Z"):
                return 1.0     # both branches are eigenstates with eigenvalue +1
            if (axis_a, axis_b) == ("X", "X"):
                return 1.0 if n == 2 else 0.0
            return 0.0
        if self.tag == "w":
            if (axis_a, axis_b) == ("X", "X"):
                return 2.0 / n
            if (axis_a, axis_b) == ("Z", "Z"):
                return 1.0 - 4.0 / n
            return 0.0
        if self.tag == "product":
            return self.expect_pauli(i, axis_a) * self.expect_pauli(j, axis_b)
        return self._sparse_expectation(((i, axis_a), (j, axis_b)))

    def _sparse_expectation(self, ops):
        """<prod of single-site Paulis> over the sparse amplitude map.

        Each op is (site, axis).  sigma_X flips the ket bit, sigma_Z
        multiplies by -/+1 for bit 0/1.
        """
        flip_mask = 0
        z_sites = []
        for site, axis in ops:
            if axis == "X":
                flip_mask ^= 1 << site
            else:
                z_sites.append(site)
        total = 0.0 + 0j
        for idx, amp in self.amplitudes.items():
            sign = 1.0
            for site in z_sites:
                sign = -sign if not (idx >> site) & 1 else sign
            partner = self.amplitudes.get(idx ^ flip_mask)
            if partner is not None:
                total += np.conj(partner) * sign * amp
        return float(np.real(total))

    # -- aggregate moments ----------------------------------------------

    def moment_matrices(self):
        """All one- and two-site X/Z moments as dense arrays.

        Returns ``(x, z, xx, zz, xz)`` where ``xx[i, j] = <X_i X_j>`` with
        the i = j entries set to 1, likewise ``zz``, and
        ``xz[i, j] = <X_i Z_j>`` with the diagonal set to 0, which is the
        symmetrised on-site value ( {sigma_X, sigma_Z} = 0 ).
        """
        n = self.n_qubits
        x = np.array([self.expect_pauli(i, "X") for i in range(n)])
        z = np.array([self.expect_pauli(i, "Z") for i in range(n)])

        if self.tag in ("hadamard", "allzero", "product"):
            xx = np.outer(x, x)
            zz = np.outer(z, z)
            xz = np.outer(x, z)
        elif self.tag == "ghz":
            xx = np.ones((n, n)) if n <= 2 else np.zeros((n, n))
            zz = np.ones((n, n))
            xz = np.zeros((n, n))
        elif self.tag == "w":
            xx = np.full((n, n), 2.0 / n)
            zz = np.full((n, n), 1.0 - 4.0 / n)
            xz = np.zeros((n, n))
        else:
            xx = np.empty((n, n))
            zz = np.empty((n, n))
            xz = np.zeros((n, n))
            for i in range(n):
                for j in range(n):
                    if i == j:
                        continue
                    xx[i, j] = self._sparse_expectation(((i, "X"), (j, "X")))
                    zz[i, j] = self._sparse_expectation(((i, "Z"), (j, "Z")))
                    xz[i, j] = self._sparse_expectation(((i, "X"), (j, "Z")))
        np.fill_diagonal(xx, 1.0)
        np.fill_diagonal(zz, 1.0)
        np.fill_diagonal(xz, 0.0)
        return x, z, xx, zz, xz

    def is_uncorrelated(self, tol):
        """True iff <X_i X_j> factorises into <X_i><X_j> for all pairs.

        Structured states are decided analytically; sparse states are
        checked exhaustively, with a cost guard at N = 20.
        """
        if tol <= 0:
            raise ValueError("tol must be positive")
        n = self.n_qubits
        if self.tag in ("hadamard", "allzero", "product"):
            return True
        if self.tag == "ghz":
            return n != 2   # X correlations vanish identically for N >= 3
        if self.tag == "w":
            return n > 2.0 / tol   # <XX> - <X><X> = 2/N
        if n > 20:
            raise ValueError("uncorrelatedness check refused for sparse N > 20; "
                             "sample pairs explicitly instead")
        x = [self.expect_pauli(i, "X") for i in range(n)]
        for i in range(n):
            for j in range(i + 1, n):
                if abs(self._sparse_expectation(((i, "X"), (j, "X"))) - x[i] * x[j]) > tol:
                    return False
        return True

    def dense_vector(self):
        """Full 2^N state vector (small N only)."""
        sp = self.to_sparse()
        vec = np.zeros(1 << self.n_qubits, dtype=complex)
        for idx, amp in sp.amplitudes.items():
            vec[idx] = amp
        return vec

    def _check_site(self, site):
        if not 0 <= site < self.n_qubits:
            raise IndexError(f"site {site} out of range for N = {self.n_qubits}")

    def __repr__(self):
        return f"QubitRegisterState(N={self.n_qubits}, tag={self.tag!r})"


def _check_axis(axis):
    axis = str(axis).upper()
    if axis not in ("X", "Z"):
        raise ValueError(f"axis must be X or Z, got {axis!r} (sigma_Y is not used)")
    return axis


def build_state(spec, n_qubits) -> QubitRegisterState:
    """Build a register state from a descriptor.

    ``spec`` may be a structured tag ("hadamard", "ghz", "allzero", "w"), a
    mapping {basis index: amplitude} for a sparse state, an (N, 2) array of
    per-site amplitudes for a product state, or an existing state.
    """
    if isinstance(spec, QubitRegisterState):
        if spec.n_qubits != n_qubits:
            raise ValueError(f"state has N = {spec.n_qubits}, expected {n_qubits}")
        return spec
    if isinstance(spec, str):
        return QubitRegisterState.structured(spec, n_qubits)
    if isinstance(spec, dict):
        return QubitRegisterState.sparse(spec, n_qubits)
    arr = np.asarray(spec, dtype=complex)
    if arr.ndim == 2 and arr.shape == (n_qubits, 2):
        return QubitRegisterState.product(arr)
    if arr.ndim == 1 and arr.size == (1 << n_qubits):
        return QubitRegisterState.sparse(
            {i: a for i, a in enumerate(arr) if a != 0}, n_qubits)
    raise ValueError(f"cannot interpret state descriptor of type {type(spec)!r}")


# -- cavity ancilla ------------------------------------------------------

@dataclass(frozen=True)
class CavityState:
    kind: str = "vacuum"              # vacuum | fock | coherent
    n: int = 0
    alpha: complex = 0j

    def __post_init__(self):
        if self.kind not in ("vacuum", "fock", "coherent"):
            raise ValueError(f"unknown cavity state kind {self.kind!r}")
        if self.n < 0:
            raise ValueError(f"Fock occupation must be >= 0, got {self.n}")

    @classmethod
    def vacuum(cls):
        return cls("vacuum")

    @classmethod
    def fock(cls, n):
        return cls("vacuum") if n == 0 else cls("fock", n=int(n))

    @classmethod
    def coherent(cls, alpha):
        return cls("coherent", alpha=complex(alpha))


@dataclass(frozen=True)
class CavityMoments:
    b: complex
    bdag: complex
    n: float          # <b† b>
    n_plus: float     # <b b†> = n + 1
    b2: complex
    bdag2: complex


def cavity_moments(cs: CavityState) -> CavityMoments:
    """Exact first and second moments of the ancilla mode."""
    if cs.kind == "coherent":
        a = cs.alpha
        return CavityMoments(b=a, bdag=np.conj(a), n=abs(a) ** 2,
                             n_plus=abs(a) ** 2 + 1.0, b2=a * a, bdag2=np.conj(a) ** 2)
    n = 0 if cs.kind == "vacuum" else cs.n
    return CavityMoments(b=0j, bdag=0j, n=float(n), n_plus=float(n) + 1.0,
                         b2=0j, bdag2=0j)
