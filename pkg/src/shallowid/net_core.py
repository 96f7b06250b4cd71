"""Two-layer network representation, evaluation, grouping and JSON round trip.

A network computes  f(x) = sum_k s_k * act(<a_k, x> + b_k) + c  for one of the
activations relu, sigmoid or tanh.  For relu networks the neurons can be
regrouped by the hyperplane <a,x>+b = 0 they bend on: opposite orientations of
the same hyperplane form a pair (K1), lone orientations stay single (K2).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import AdmissibilityError, InputError, ParseError
from .tolerances import DEFAULT_TOL, ToleranceConfig

ACTIVATIONS = ("relu", "sigmoid", "tanh")

# sigma(x) + sigma(-x) for the analytic activations
FLIP_CONSTANT = {"sigmoid": 1.0, "tanh": 0.0}


@dataclass(frozen=True)
class Activation:
    """Activation tag plus its flip constant (unused for relu)."""

    kind: str

    def __post_init__(self) -> None:
        if self.kind not in ACTIVATIONS:
            raise InputError(f"unknown activation {self.kind!r}", kind=self.kind)

    @property
    def c0(self) -> float:
        if self.kind == "relu":
            raise InputError("flip constant is undefined for relu")
        return FLIP_CONSTANT[self.kind]

    def apply(self, z: np.ndarray) -> np.ndarray:
        if self.kind == "relu":
            return np.maximum(z, 0.0)
        if self.kind == "sigmoid":
            # overflow-free logistic: 1/(1+e^-z) = (1 + tanh(z/2)) / 2
            return 0.5 * (1.0 + np.tanh(0.5 * z))
        return np.tanh(z)


def _as_vector(a, name: str, d: int | None = None) -> np.ndarray:
    v = np.asarray(a, dtype=float)
    if v.ndim != 1:
        raise InputError(f"{name} must be a 1-d vector", shape=list(v.shape))
    if d is not None and v.shape[0] != d:
        raise InputError(f"{name} has length {v.shape[0]}, expected {d}")
    v = v.copy()
    v.setflags(write=False)
    return v


@dataclass(frozen=True)
class Neuron:
    a: np.ndarray
    b: float
    s: float


@dataclass(frozen=True)
class ShallowNet:
    """Parameters (a_k, b_k, s_k, c) of a two-layer scalar-output network."""

    activation: Activation
    d: int
    neurons: tuple[Neuron, ...]
    c: float

    def __post_init__(self) -> None:
        if self.d < 1:
            raise InputError("input dimension must be positive", d=self.d)
        for k, n in enumerate(self.neurons):
            if n.a.shape != (self.d,):
                raise InputError(
                    f"neuron {k} direction has length {n.a.shape[0]}, expected {self.d}",
                    neuron=k)

    @property
    def m(self) -> int:
        return len(self.neurons)

    def weight_matrix(self) -> np.ndarray:
        if not self.neurons:
            return np.zeros((0, self.d))
        return np.stack([n.a for n in self.neurons])

    def biases(self) -> np.ndarray:
        return np.array([n.b for n in self.neurons], dtype=float)

    def scales(self) -> np.ndarray:
        return np.array([n.s for n in self.neurons], dtype=float)


def make_net(activation: str, neurons: Iterable[tuple], c: float, d: int | None = None) -> ShallowNet:
    """Build a ShallowNet from (a, b, s) triples, inferring d when possible."""

    rows = [(np.asarray(a, dtype=float), float(b), float(s)) for a, b, s in neurons]
    if d is None:
        if not rows:
            raise InputError("d must be given for a network with no neurons")
        d = rows[0][0].shape[0]
    packed = tuple(Neuron(_as_vector(a, f"neuron {k} direction", d), b, s)
                   for k, (a, b, s) in enumerate(rows))
    return ShallowNet(Activation(activation), int(d), packed, float(c))


def evaluate(net: ShallowNet, x: Sequence[float] | np.ndarray) -> float:
    """Value of the network at a single point."""

    v = np.asarray(x, dtype=float)
    if v.shape != (net.d,):
        raise InputError(f"point has shape {list(v.shape)}, expected ({net.d},)")
    return float(evaluate_many(net, v[None, :])[0])


def evaluate_many(net: ShallowNet, points: np.ndarray) -> np.ndarray:
    """Vectorized evaluation over an (n, d) array of points."""

    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != net.d:
        raise InputError("points must be an (n, d) array", shape=list(pts.shape))
    if net.m == 0:
        return np.full(pts.shape[0], net.c)
    z = pts @ net.weight_matrix().T + net.biases()
    return net.activation.apply(z) @ net.scales() + net.c


# ---------------------------------------------------------------------------
# hyperplanes and the paired/single normal form
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Hyperplane:
    """Zero set of <a,x>+b with unit a and canonical sign."""

    a: np.ndarray
    b: float

    def matches(self, other: "Hyperplane", tol: ToleranceConfig = DEFAULT_TOL) -> bool:
        return (float(np.max(np.abs(self.a - other.a))) <= tol.match_tol
                and abs(self.b - other.b) <= tol.match_tol)

    def signed_distance(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points, dtype=float) @ self.a + self.b


def _first_significant_sign(a: np.ndarray, tol: ToleranceConfig) -> float:
    thresh = tol.zero_tol * max(1.0, float(np.max(np.abs(a))))
    for entry in a:
        if abs(entry) > thresh:
            return 1.0 if entry > 0 else -1.0
    raise InputError("cannot orient the zero vector")


def canonical_hyperplane(a, b: float, tol: ToleranceConfig = DEFAULT_TOL) -> tuple[Hyperplane, float]:
    """Unit-normalized, sign-fixed hyperplane through <a,x>+b=0.

    Returns (hyperplane, orientation) where orientation is +1 when (a, b) is a
    positive multiple of the canonical representative and -1 otherwise.
    """

    v = np.asarray(a, dtype=float)
    norm = float(np.linalg.norm(v))
    if norm <= tol.zero_tol:
        raise InputError("hyperplane direction is numerically zero")
    if abs(norm - 1.0) <= tol.zero_tol:
        # already unit within tolerance: skip the division so that
        # canonicalization is exactly idempotent
        u, beta = v.astype(float), float(b)
    else:
        u, beta = v / norm, float(b) / norm
    sign = _first_significant_sign(u, tol)
    if sign < 0:
        u, beta = -u, -beta
    u = u.copy()
    u.setflags(write=False)
    return Hyperplane(u, beta), sign


@dataclass(frozen=True)
class PairedEntry:
    """Opposite-orientation couple on one hyperplane: s1 multiplies the
    canonical orientation, s2 the reversed one."""

    h: Hyperplane
    s1: float
    s2: float


@dataclass(frozen=True)
class SingleEntry:
    """Lone oriented neuron with unit direction (not sign-canonicalized)."""

    a: np.ndarray
    b: float
    s: float

    def hyperplane(self, tol: ToleranceConfig = DEFAULT_TOL) -> Hyperplane:
        return canonical_hyperplane(self.a, self.b, tol)[0]


@dataclass(frozen=True)
class GroupedReLU:
    """Normal form of a relu network: K1 pairs, K2 singles, constant."""

    K1: tuple[PairedEntry, ...]
    K2: tuple[SingleEntry, ...]
    c: float
    d: int

    @property
    def m(self) -> int:
        return 2 * len(self.K1) + len(self.K2)

    def hyperplanes(self, tol: ToleranceConfig = DEFAULT_TOL) -> list[Hyperplane]:
        return [p.h for p in self.K1] + [e.hyperplane(tol) for e in self.K2]

    def to_net(self) -> ShallowNet:
        neurons = []
        for p in self.K1:
            neurons.append((p.h.a, p.h.b, p.s1))
            neurons.append((-p.h.a, -p.h.b, p.s2))
        for e in self.K2:
            neurons.append((e.a, e.b, e.s))
        return make_net("relu", neurons, self.c, d=self.d)


def admissibility_violations(net: ShallowNet, tol: ToleranceConfig = DEFAULT_TOL) -> list[dict]:
    """Clause (i): every s_k * a_k nonzero.  Clause (ii): no positive-multiple
    duplicate of a ridge (a_k, b_k)."""

    if net.activation.kind != "relu":
        raise InputError("admissibility grouping applies to relu networks only")
    violations: list[dict] = []
    units = []
    for k, n in enumerate(net.neurons):
        norm = float(np.linalg.norm(n.a))
        if abs(n.s) * norm <= tol.zero_tol:
            violations.append({"clause": "i", "neuron": k,
                               "reason": "zero direction" if norm <= tol.zero_tol else "zero scale"})
            units.append(None)
        else:
            units.append((n.a / norm, n.b / norm))
    for k1 in range(net.m):
        for k2 in range(k1 + 1, net.m):
            if units[k1] is None or units[k2] is None:
                continue
            u1, b1 = units[k1]
            u2, b2 = units[k2]
            if (float(np.max(np.abs(u1 - u2))) <= tol.match_tol
                    and abs(b1 - b2) <= tol.match_tol):
                violations.append({"clause": "ii", "neurons": [k1, k2],
                                   "reason": "positive-scale duplicate ridge"})
    return violations


def group(net: ShallowNet, tol: ToleranceConfig = DEFAULT_TOL) -> GroupedReLU:
    """Rewrite an admissible relu network into the paired/single normal form.

    Each neuron is first rescaled to a unit direction (the norm folds into the
    scale, which leaves relu values unchanged), then neurons sharing one
    hyperplane with opposite orientations are paired.
    """

    violations = admissibility_violations(net, tol)
    if violations:
        v = violations[0]
        raise AdmissibilityError(
            f"network is not admissible: clause ({v['clause']}) {v['reason']}",
            violations=violations)

    buckets: list[dict] = []  # {"h": Hyperplane, "plus": s|None, "minus": s|None}
    for n in net.neurons:
        norm = float(np.linalg.norm(n.a))
        h, sign = canonical_hyperplane(n.a, n.b, tol)
        scaled = n.s * norm
        for bucket in buckets:
            if h.matches(bucket["h"], tol):
                break
        else:
            bucket = {"h": h, "plus": None, "minus": None}
            buckets.append(bucket)
        slot = "plus" if sign > 0 else "minus"
        if bucket[slot] is not None:
            # same hyperplane, same orientation: a positive-scale duplicate
            raise AdmissibilityError(
                "network is not admissible: clause (ii) positive-scale duplicate ridge",
                violations=[{"clause": "ii"}])
        bucket[slot] = scaled

    k1 = []
    k2 = []
    for bucket in buckets:
        if bucket["plus"] is not None and bucket["minus"] is not None:
            k1.append(PairedEntry(bucket["h"], bucket["plus"], bucket["minus"]))
        elif bucket["plus"] is not None:
            k2.append(SingleEntry(bucket["h"].a, bucket["h"].b, bucket["plus"]))
        else:
            a = -bucket["h"].a
            a.setflags(write=False)
            k2.append(SingleEntry(a, -bucket["h"].b, bucket["minus"]))
    return GroupedReLU(tuple(k1), tuple(k2), net.c, net.d)


def grouped_from_entries(entries: Iterable[tuple[np.ndarray, float, float]],
                         c: float, d: int,
                         tol: ToleranceConfig = DEFAULT_TOL) -> GroupedReLU:
    """Regroup raw oriented (a, b, coefficient) terms, merging coincident
    hyperplane/orientation slots and dropping coefficients below zero_tol."""

    buckets: list[dict] = []
    for a, b, s in entries:
        h, sign = canonical_hyperplane(a, b, tol)
        for bucket in buckets:
            if h.matches(bucket["h"], tol):
                break
        else:
            bucket = {"h": h, "plus": 0.0, "minus": 0.0}
            buckets.append(bucket)
        bucket["plus" if sign > 0 else "minus"] += s

    k1 = []
    k2 = []
    for bucket in buckets:
        sp = bucket["plus"] if abs(bucket["plus"]) > tol.zero_tol else 0.0
        sm = bucket["minus"] if abs(bucket["minus"]) > tol.zero_tol else 0.0
        if sp and sm:
            k1.append(PairedEntry(bucket["h"], sp, sm))
        elif sp:
            k2.append(SingleEntry(bucket["h"].a, bucket["h"].b, sp))
        elif sm:
            a = -bucket["h"].a
            a.setflags(write=False)
            k2.append(SingleEntry(a, -bucket["h"].b, sm))
    return GroupedReLU(tuple(k1), tuple(k2), float(c), d)


# ---------------------------------------------------------------------------
# JSON round trip
# ---------------------------------------------------------------------------

def net_to_json_obj(net: ShallowNet) -> dict:
    return {
        "activation": net.activation.kind,
        "d": net.d,
        "neurons": [{"a": [float(v) for v in n.a], "b": n.b, "s": n.s}
                    for n in net.neurons],
        "c": net.c,
    }


def _require(obj: dict, key: str, kind, location: str):
    if key not in obj:
        raise ParseError(f"missing field {key!r}", location=location)
    value = obj[key]
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ParseError(f"field {key!r} must be a number", location=f"{location}.{key}")
        if not np.isfinite(value):
            raise ParseError(f"field {key!r} must be finite", location=f"{location}.{key}")
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ParseError(f"field {key!r} must be an integer", location=f"{location}.{key}")
        return value
    if not isinstance(value, kind):
        raise ParseError(f"field {key!r} has the wrong type", location=f"{location}.{key}")
    return value


def net_from_json_obj(obj, location: str = "net") -> ShallowNet:
    if not isinstance(obj, dict):
        raise ParseError("network payload must be an object", location=location)
    kind = _require(obj, "activation", str, location)
    if kind not in ACTIVATIONS:
        raise ParseError(f"unknown activation {kind!r}", location=f"{location}.activation")
    d = _require(obj, "d", int, location)
    if d < 1:
        raise ParseError("d must be a positive integer", location=f"{location}.d")
    raw_neurons = _require(obj, "neurons", list, location)
    c = _require(obj, "c", float, location)
    neurons = []
    for k, entry in enumerate(raw_neurons):
        loc = f"{location}.neurons[{k}]"
        if not isinstance(entry, dict):
            raise ParseError("neuron must be an object", location=loc)
        a = _require(entry, "a", list, loc)
        if len(a) != d:
            raise ParseError(f"direction of neuron {k} has length {len(a)}, expected {d}",
                             location=f"{loc}.a")
        for i, v in enumerate(a):
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not np.isfinite(v):
                raise ParseError("direction entries must be finite numbers",
                                 location=f"{loc}.a[{i}]")
        b = _require(entry, "b", float, loc)
        s = _require(entry, "s", float, loc)
        neurons.append(([float(v) for v in a], b, s))
    return make_net(kind, neurons, c, d=d)


def serialize(net: ShallowNet) -> bytes:
    """UTF-8 JSON with shortest round-trip float representation."""

    return (json.dumps(net_to_json_obj(net), sort_keys=True,
                       separators=(",", ":"), allow_nan=False) + "\n").encode("utf-8")


def deserialize(data: bytes | str) -> ShallowNet:
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", location=f"offset {exc.pos}") from exc
    return net_from_json_obj(obj)
