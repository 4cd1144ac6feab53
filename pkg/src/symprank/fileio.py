"""Text formats for states, circuits and heterodyne points.

All floats are written with 17 significant digits, so dump -> load -> dump is
byte-identical. Complex numbers are (re, im) pairs; matrices are row-major.

State file:
    # symprank state
    format_version 1
    n_modes 2
    cutoff 4
    normalized true
    amplitudes 2
    0 1 7.0710678118654757e-01 0.0000000000000000e+00
    ...

Circuit file (gates in application order, one per line, `key values...` pairs):
    # symprank circuit
    format_version 1
    n_modes 2
    gate gaussian modes 0 1 S <(2k)^2 numbers> r <2k numbers>
    gate passive modes 0 1 U <k*k (re, im) pairs>
    gate squeeze mode 0 xi 0.3
    gate displace modes 0 beta <(re, im) pairs>
    gate cubic mode 0 gamma 0.1
    gate create mode 0 power 1
    gate annihilate mode 1 power 2
"""
from __future__ import annotations

import numpy as np

from . import fock as fk
from . import gaussian as gs
from .config import DEFAULT
from .errors import ValidationError
from .simulate import CircuitDesc

FORMAT_VERSION = 1
STATE_MAGIC = "# symprank state"
CIRCUIT_MAGIC = "# symprank circuit"


class ParseError(ValidationError):
    def __init__(self, msg: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line is not None else msg)


def fmt(x: float) -> str:
    return f"{float(x):.16e}"


def _lines(text: str):
    for i, raw in enumerate(text.splitlines(), 1):
        s = raw.strip()
        if s:
            yield i, s


def _header(lines, magic: str) -> dict:
    i, first = next(lines, (1, ""))
    if first != magic:
        raise ParseError(f"expected header {magic!r}", i)
    return {}


def detect_kind(text: str) -> str:
    first = text.lstrip().splitlines()[0].strip() if text.strip() else ""
    if first == STATE_MAGIC:
        return "state"
    if first == CIRCUIT_MAGIC:
        return "circuit"
    raise ParseError("unrecognized file: first line must be a symprank header", 1)


def _kv(line: str, i: int, key: str, conv=int):
    parts = line.split()
    if len(parts) != 2 or parts[0] != key:
        raise ParseError(f"expected '{key} <value>'", i)
    try:
        return conv(parts[1])
    except ValueError as exc:
        raise ParseError(f"bad value for {key}: {parts[1]!r}", i) from exc


# ---------------------------------------------------------------- states

def dump_state(st: fk.FockState, tol: float = 0.0) -> str:
    normalized = abs(st.norm - 1.0) <= DEFAULT.norm
    t = st.basis.tuples
    nz = np.flatnonzero(np.abs(st.vec) > tol)
    out = [STATE_MAGIC, f"format_version {FORMAT_VERSION}", f"n_modes {st.n_modes}",
           f"cutoff {st.cutoff}", f"normalized {'true' if normalized else 'false'}",
           f"amplitudes {len(nz)}"]
    for i in nz:
        a = st.vec[i]
        out.append(" ".join([*(str(int(k)) for k in t[i]), fmt(a.real), fmt(a.imag)]))
    return "\n".join(out) + "\n"


def load_state(text: str, tol_norm: float = DEFAULT.norm) -> fk.FockState:
    it = _lines(text)
    _header(it, STATE_MAGIC)
    try:
        i, l = next(it); v = _kv(l, i, "format_version")
        if v != FORMAT_VERSION:
            raise ParseError(f"unsupported format_version {v}", i)
        i, l = next(it); n = _kv(l, i, "n_modes")
        i, l = next(it); cutoff = _kv(l, i, "cutoff")
        i, l = next(it); flag = _kv(l, i, "normalized", str)
        i, l = next(it); count = _kv(l, i, "amplitudes")
    except StopIteration:
        raise ParseError("truncated state header") from None
    if n < 0 or cutoff < 0 or flag not in ("true", "false"):
        raise ParseError("invalid state header values")
    amps = {}
    for i, l in it:
        parts = l.split()
        if len(parts) != n + 2:
            raise ParseError(f"expected {n} photon numbers and (re, im)", i)
        try:
            k = tuple(int(x) for x in parts[:n])
            a = complex(float(parts[n]), float(parts[n + 1]))
        except ValueError as exc:
            raise ParseError("malformed amplitude row", i) from exc
        if any(x < 0 for x in k) or sum(k) > cutoff:
            raise ParseError(f"tuple {k} outside cutoff {cutoff}", i)
        if k in amps:
            raise ParseError(f"duplicate tuple {k}", i)
        amps[k] = a
    if len(amps) != count:
        raise ParseError(f"header announces {count} amplitudes, found {len(amps)}")
    st = fk.FockState.from_dict(n, cutoff, amps)
    if flag == "true" and abs(st.norm - 1.0) > tol_norm:
        raise ParseError(f"state flagged normalized has norm {st.norm:.12g}")
    return st


# ---------------------------------------------------------------- circuits

def _nums(vals):
    return " ".join(fmt(x) for x in np.ravel(vals))


def _pairs(z):
    z = np.ravel(np.asarray(z, dtype=complex))
    return _nums(np.column_stack([z.real, z.imag]))


def _gate_line(g) -> str:
    if isinstance(g, fk.Gaussian):
        return (f"gate gaussian modes {' '.join(map(str, g.modes))} S {_nums(g.G.S)} r {_nums(g.G.r)}")
    if isinstance(g, fk.Passive):
        return f"gate passive modes {' '.join(map(str, g.modes))} U {_pairs(g.U)}"
    if isinstance(g, fk.Squeeze):
        return f"gate squeeze mode {g.mode} xi {fmt(g.xi)}"
    if isinstance(g, fk.Displace):
        return f"gate displace modes {' '.join(map(str, g.modes))} beta {_pairs(g.beta)}"
    if isinstance(g, fk.Cubic):
        return f"gate cubic mode {g.mode} gamma {fmt(g.gamma)}"
    if isinstance(g, fk.Create):
        return f"gate create mode {g.mode} power {g.power}"
    if isinstance(g, fk.Annihilate):
        return f"gate annihilate mode {g.mode} power {g.power}"
    raise ValidationError(f"gate {g!r} has no file representation")


def dump_circuit(c: CircuitDesc) -> str:
    out = [CIRCUIT_MAGIC, f"format_version {FORMAT_VERSION}", f"n_modes {c.n_modes}"]
    out += [_gate_line(g) for g in c.gates]
    return "\n".join(out) + "\n"


def _fields(tokens, i) -> dict:
    f, key = {}, None
    for tok in tokens:
        if tok[0].isalpha() and tok.lower() not in ("nan", "inf", "infinity"):
            key = tok
            if key in f:
                raise ParseError(f"repeated field {key!r}", i)
            f[key] = []
        elif key is None:
            raise ParseError(f"value {tok!r} before any field name", i)
        else:
            f[key].append(tok)
    return f


def _need(f, key, i, conv=float, count=None):
    if key not in f:
        raise ParseError(f"missing field {key!r}", i)
    try:
        vals = [conv(x) for x in f[key]]
    except ValueError as exc:
        raise ParseError(f"bad number in field {key!r}", i) from exc
    if count is not None and len(vals) != count:
        raise ParseError(f"field {key!r} needs {count} values, got {len(vals)}", i)
    return vals


def _cplx(vals, i, key):
    if len(vals) % 2:
        raise ParseError(f"field {key!r} needs (re, im) pairs", i)
    v = np.asarray(vals, dtype=float)
    return v[0::2] + 1j * v[1::2]


def _parse_gate(tokens, i, n):
    kind, f = tokens[0], _fields(tokens[1:], i)
    allowed = {"gaussian": {"modes", "S", "r"}, "passive": {"modes", "U"}, "squeeze": {"mode", "xi"},
               "displace": {"modes", "beta"}, "cubic": {"mode", "gamma"},
               "create": {"mode", "power"}, "annihilate": {"mode", "power"}}
    if kind not in allowed:
        raise ParseError(f"unknown gate kind {kind!r}", i)
    extra = set(f) - allowed[kind]
    if extra:
        raise ParseError(f"unexpected fields {sorted(extra)} for {kind}", i)
    if "modes" in allowed[kind]:
        modes = tuple(_need(f, "modes", i, int))
        if not modes or len(set(modes)) != len(modes) or min(modes) < 0 or max(modes) >= n:
            raise ParseError(f"invalid modes {modes}", i)
        k = len(modes)
    else:
        mode = _need(f, "mode", i, int, 1)[0]
        if not 0 <= mode < n:
            raise ParseError(f"mode {mode} outside 0..{n - 1}", i)
    try:
        if kind == "gaussian":
            S = np.asarray(_need(f, "S", i, float, 4 * k * k)).reshape(2 * k, 2 * k)
            r = np.asarray(_need(f, "r", i, float, 2 * k))
            return fk.Gaussian(gs.GaussianUnitaryDesc(S, r), modes)
        if kind == "passive":
            U = _cplx(_need(f, "U", i, float, 2 * k * k), i, "U").reshape(k, k)
            if not np.allclose(U.conj().T @ U, np.eye(k), atol=1e-10):
                raise ParseError("U is not unitary", i)
            return fk.Passive(U, modes)
        if kind == "squeeze":
            return fk.Squeeze(_need(f, "xi", i, float, 1)[0], mode)
        if kind == "displace":
            beta = _cplx(_need(f, "beta", i, float, 2 * k), i, "beta")
            return fk.Displace(tuple(beta), modes)
        if kind == "cubic":
            return fk.Cubic(_need(f, "gamma", i, float, 1)[0], mode)
        power = _need(f, "power", i, int, 1)[0]
        if power < 0:
            raise ParseError("power must be non-negative", i)
        return (fk.Create if kind == "create" else fk.Annihilate)(mode, power)
    except ParseError:
        raise
    except ValidationError as exc:
        raise ParseError(str(exc), i) from exc


def load_circuit(text: str) -> CircuitDesc:
    it = _lines(text)
    _header(it, CIRCUIT_MAGIC)
    try:
        i, l = next(it); v = _kv(l, i, "format_version")
        if v != FORMAT_VERSION:
            raise ParseError(f"unsupported format_version {v}", i)
        i, l = next(it); n = _kv(l, i, "n_modes")
    except StopIteration:
        raise ParseError("truncated circuit header") from None
    if n < 1:
        raise ParseError("n_modes must be positive")
    raw = []
    for i, l in it:
        tok = l.split()
        if tok[0] != "gate" or len(tok) < 2:
            raise ParseError("expected 'gate <kind> ...'", i)
        raw.append(_parse_gate(tok[1:], i, n))
    return CircuitDesc(n, tuple(raw))


def gaussian_of_circuit(c: CircuitDesc) -> gs.GaussianUnitaryDesc:
    if c.s:
        raise ValidationError("target file must contain Gaussian gates only")
    layers, _ = c.gaussian_layers()
    return layers[0]


# ---------------------------------------------------------------- heterodyne points

def load_points(text: str, n_modes: int) -> np.ndarray:
    """One point per line: n (re, im) pairs."""
    pts = []
    for i, l in _lines(text):
        if l.startswith("#"):
            continue
        try:
            v = [float(x) for x in l.split()]
        except ValueError as exc:
            raise ParseError("malformed point", i) from exc
        if len(v) != 2 * n_modes:
            raise ParseError(f"expected {2 * n_modes} numbers per point", i)
        pts.append(np.asarray(v[0::2]) + 1j * np.asarray(v[1::2]))
    if not pts:
        raise ParseError("no points given")
    return np.array(pts)
