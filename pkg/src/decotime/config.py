"""Config document parsing for :class:`decotime.model.Model`.

Grammar (documented in full in the README):

* lines are ``key = value`` pairs grouped under ``[section]`` headers;
* ``#`` starts a comment, blank lines are ignored;
* values are Python literals: numbers (``1.0e15``), complex (``1e6+0j``),
  vectors (``[0, 0, 1]``) and nested arrays (``[[0,0,0],[1e-6,0,0]]``);
  anything that does not parse as a literal is kept as a bare string
  (profile kinds, topology names, file paths);
* unknown sections or keys are errors, missing optional ones get defaults.

The environment variable ``DECOTIME_CONFIG`` names the default config path
for the command-line tool.
"""

from __future__ import annotations

import ast
import os

import numpy as np

from .errors import ConfigError
from .model import (
    ATOMIC_MASS,
    CONSTANTS,
    CavityDecayParams,
    CavityParams,
    GatingSnapshot,
    Geometry,
    Model,
    QubitParams,
    SEBathParams,
    SpectralProfile,
    VibTopology,
)

ENV_CONFIG_VAR = "DECOTIME_CONFIG"

_KNOWN_KEYS = {
    "qubits": {"omega0", "gamma_se", "mass", "dipole_d10", "m00", "m11"},
    "geometry": {"positions", "chain_count", "chain_spacing", "chain_axis", "chain_origin"},
    "cavity": {"enabled", "omega_b", "mode_volume", "wavevector", "polarization"},
    "se_bath": {"cutoff_omega_c", "temperature", "bandwidth_delta_k", "mean_kbar"},
    "cavity_decay": {"u_profile", "u_amplitude", "w_profile", "w_amplitude",
                     "cutoff_xi_c", "mode_density"},
    "vibrations": {"topology", "v0", "c_nn", "matrix_file"},
    "gating": {"omega_rabi", "delta_shift", "classical_amp", "classical_wavevector",
               "magnetic_grad0", "magnetic_grad1"},
}


def parse_sections(text):
    """Split a config document into ``{section: {key: value}}``."""
    sections = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError("unterminated section header", line=lineno)
            name = line[1:-1].strip().lower()
            if name not in _KNOWN_KEYS:
                raise ConfigError(f"unknown section [{name}]", line=lineno)
            current = sections.setdefault(name, {})
            continue
        if current is None:
            raise ConfigError("key outside of any [section]", line=lineno)
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", line=lineno)
        key, _, value = line.partition("=")
        key = key.strip().lower()
        section_name = next(n for n, d in sections.items() if d is current)
        if key not in _KNOWN_KEYS[section_name]:
            raise ConfigError(f"unknown key {key!r}", section=section_name, line=lineno)
        try:
            parsed = ast.literal_eval(value.strip())
        except (ValueError, SyntaxError):
            parsed = value.strip()
        current[key] = parsed
    return sections


def _require(section, sections, key):
    try:
        return sections[section][key]
    except KeyError:
        raise ConfigError("required key missing", section=section, key=key) from None


def _number(section, key, value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a real number, got {value!r}", section=section, key=key)
    return float(value)


def _vec3(section, key, value):
    arr = np.asarray(value, dtype=float)
    if arr.shape != (3,):
        raise ConfigError(f"expected a 3-vector, got {value!r}", section=section, key=key)
    return tuple(arr)


def load_model(config_text: str) -> Model:
    """Build a :class:`Model` from a config document.

    Optional sections get defaults: gating all-zero, temperature 0, SE
    cutoff 100*omega0, cavity resonant with omega0, independent traps at
    nu = 2 pi MHz.  Negative physical quantities are rejected here with the
    offending key named; cross-field consistency is left to
    :func:`decotime.model.validate_model`.
    """
    sections = parse_sections(config_text)

    qs = sections.get("qubits", {})
    omega0 = _number("qubits", "omega0", _require("qubits", sections, "omega0"))
    for key in ("gamma_se", "mass"):
        if key in qs and _number("qubits", key, qs[key]) < 0:
            raise ConfigError(f"{key} must not be negative", section="qubits", key=key)
    qubits = QubitParams(
        omega0=omega0,
        gamma_se=_number("qubits", "gamma_se", qs.get("gamma_se", 0.0)),
        mass=_number("qubits", "mass", qs.get("mass", ATOMIC_MASS)),
        dipole_d10=_vec3("qubits", "dipole_d10", qs.get("dipole_d10", (0.0, 0.0, 0.0))),
        m00=_vec3("qubits", "m00", qs.get("m00", (0.0, 0.0, 0.0))),
        m11=_vec3("qubits", "m11", qs.get("m11", (0.0, 0.0, 0.0))),
    )

    gs = sections.get("geometry", {})
    if "positions" in gs:
        if any(k in gs for k in ("chain_count", "chain_spacing")):
            raise ConfigError("give either positions or chain_*, not both",
                              section="geometry", key="positions")
        geometry = Geometry.from_positions(gs["positions"])
    elif "chain_count" in gs:
        geometry = Geometry.chain(
            int(gs["chain_count"]),
            _number("geometry", "chain_spacing", _require("geometry", sections, "chain_spacing")),
            axis=gs.get("chain_axis", (1.0, 0.0, 0.0)),
            origin=gs.get("chain_origin", (0.0, 0.0, 0.0)),
        )
    else:
        geometry = Geometry.from_positions([[0.0, 0.0, 0.0]])

    cs = sections.get("cavity", {})
    if cs.get("enabled", True) in (False, "false", "no", "off"):
        cavity = None
    else:
        omega_b = _number("cavity", "omega_b", cs.get("omega_b", omega0))
        cavity = CavityParams(
            omega_b=omega_b,
            mode_volume=_number("cavity", "mode_volume", cs.get("mode_volume", 1.0e-15)),
            wavevector=(_vec3("cavity", "wavevector", cs["wavevector"])
                        if "wavevector" in cs else None),
            polarization=_vec3("cavity", "polarization", cs.get("polarization", (1.0, 0.0, 0.0))),
        )

    ss = sections.get("se_bath", {})
    temperature = _number("se_bath", "temperature", ss.get("temperature", 0.0))
    if temperature < 0:
        raise ConfigError("temperature must not be negative",
                          section="se_bath", key="temperature")
    cutoff = _number("se_bath", "cutoff_omega_c", ss.get("cutoff_omega_c", 100.0 * omega0))
    se_bath = SEBathParams(
        cutoff_omega_c=cutoff,
        temperature=temperature,
        bandwidth_delta_k=(_number("se_bath", "bandwidth_delta_k", ss["bandwidth_delta_k"])
                           if "bandwidth_delta_k" in ss else None),
        mean_kbar=(_number("se_bath", "mean_kbar", ss["mean_kbar"])
                   if "mean_kbar" in ss else omega0 / CONSTANTS.c),
    )

    ds = sections.get("cavity_decay", {})
    omega_b_ref = omega0 if cavity is None else cavity.omega_b
    cavity_decay = CavityDecayParams(
        u_profile=SpectralProfile(str(ds.get("u_profile", "zero")),
                                  _number("cavity_decay", "u_amplitude", ds.get("u_amplitude", 0.0))),
        w_profile=SpectralProfile(str(ds.get("w_profile", "zero")),
                                  _number("cavity_decay", "w_amplitude", ds.get("w_amplitude", 0.0))),
        cutoff_xi_c=_number("cavity_decay", "cutoff_xi_c", ds.get("cutoff_xi_c", omega_b_ref)),
        mode_density=_number("cavity_decay", "mode_density", ds.get("mode_density", 0.0)),
    )

    vs = sections.get("vibrations", {})
    default_v0 = qubits.mass * (2 * np.pi * 1.0e6) ** 2
    vib = VibTopology(
        kind=str(vs.get("topology", "independent")).lower(),
        v0=_number("vibrations", "v0", vs.get("v0", default_v0)),
        c_nn=_number("vibrations", "c_nn", vs.get("c_nn", 0.0)),
        matrix_file=vs.get("matrix_file"),
    )

    ts = sections.get("gating", {})
    if ts:
        def clist(key):
            vals = ts.get(key, ())
            if np.isscalar(vals):
                vals = (vals,)
            return tuple(complex(v) for v in vals)

        def vlist(key):
            vals = ts.get(key, ())
            return tuple(tuple(float(x) for x in row) for row in vals)

        gating = GatingSnapshot(
            omega_rabi=clist("omega_rabi"),
            delta_shift=tuple(float(v) for v in np.atleast_1d(np.asarray(ts.get("delta_shift", ()), dtype=float))),
            classical_amp=clist("classical_amp"),
            classical_wavevector=_vec3("gating", "classical_wavevector",
                                       ts.get("classical_wavevector", (0.0, 0.0, 0.0))),
            magnetic_grad0=vlist("magnetic_grad0"),
            magnetic_grad1=vlist("magnetic_grad1"),
        )
        try:
            gating.resized(geometry.count)
        except ValueError as exc:
            raise ConfigError(str(exc), section="gating") from exc
    else:
        gating = GatingSnapshot.disabled(geometry.count)

    return Model(qubits=qubits, geometry=geometry, cavity=cavity, se_bath=se_bath,
                 cavity_decay=cavity_decay, gating=gating, vib=vib)


def load_model_file(path: str | None = None) -> Model:
    """Load from ``path``, falling back to the DECOTIME_CONFIG env var."""
    if path is None:
        path = os.environ.get(ENV_CONFIG_VAR)
        if not path:
            raise ConfigError(f"no config path given and {ENV_CONFIG_VAR} is not set")
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc}") from exc
    return load_model(text)


def _fmt(value):
    if isinstance(value, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_fmt(v) for v in value) + "]"
    if isinstance(value, (complex, np.complexfloating)):
        return repr(complex(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def serialize_model(model: Model) -> str:
    """Emit a config document; ``load_model`` of the result is the identity."""
    g = model.geometry
    lines = [
        "[qubits]",
        f"omega0 = {_fmt(model.qubits.omega0)}",
        f"gamma_se = {_fmt(model.qubits.gamma_se)}",
        f"mass = {_fmt(model.qubits.mass)}",
        f"dipole_d10 = {_fmt(model.qubits.dipole_d10)}",
        f"m00 = {_fmt(model.qubits.m00)}",
        f"m11 = {_fmt(model.qubits.m11)}",
        "",
        "[geometry]",
    ]
    if g.is_chain:
        lines += [f"chain_count = {g.count}",
                  f"chain_spacing = {_fmt(g.spacing)}",
                  f"chain_axis = {_fmt(g.axis)}",
                  f"chain_origin = {_fmt(g.origin)}"]
    else:
        lines.append(f"positions = {_fmt([list(p) for p in g.positions_array])}")
    lines += ["", "[cavity]"]
    if model.cavity is None:
        lines.append("enabled = False")
    else:
        lines += [f"omega_b = {_fmt(model.cavity.omega_b)}",
                  f"mode_volume = {_fmt(model.cavity.mode_volume)}",
                  f"wavevector = {_fmt(model.cavity.wavevector)}",
                  f"polarization = {_fmt(model.cavity.polarization)}"]
    se = model.se_bath
    lines += ["", "[se_bath]",
              f"cutoff_omega_c = {_fmt(se.cutoff_omega_c)}",
              f"temperature = {_fmt(se.temperature)}",
              f"bandwidth_delta_k = {_fmt(se.bandwidth_delta_k)}",
              f"mean_kbar = {_fmt(se.mean_kbar)}"]
    cd = model.cavity_decay
    lines += ["", "[cavity_decay]",
              f"u_profile = {cd.u_profile.kind}",
              f"u_amplitude = {_fmt(cd.u_profile.amplitude)}",
              f"w_profile = {cd.w_profile.kind}",
              f"w_amplitude = {_fmt(cd.w_profile.amplitude)}",
              f"cutoff_xi_c = {_fmt(cd.cutoff_xi_c)}",
              f"mode_density = {_fmt(cd.mode_density)}"]
    vib = model.vib
    lines += ["", "[vibrations]", f"topology = {vib.kind}", f"v0 = {_fmt(vib.v0)}",
              f"c_nn = {_fmt(vib.c_nn)}"]
    if vib.matrix_file:
        lines.append(f"matrix_file = {vib.matrix_file}")
    t = model.gating
    lines += ["", "[gating]",
              f"omega_rabi = {_fmt(t.omega_rabi)}",
              f"delta_shift = {_fmt(t.delta_shift)}",
              f"classical_amp = {_fmt(t.classical_amp)}",
              f"classical_wavevector = {_fmt(t.classical_wavevector)}",
              f"magnetic_grad0 = {_fmt(t.magnetic_grad0)}",
              f"magnetic_grad1 = {_fmt(t.magnetic_grad1)}"]
    return "\n".join(lines) + "\n"
