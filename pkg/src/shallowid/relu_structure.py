"""Reducibility decision, constructive reduction and equivalence certificates
for relu networks.

Everything here works on the paired/single normal form produced by
``net_core.group``.  The driving identity is relu(t) = t + relu(-t): flipping
the orientation of a neuron trades it for the opposite orientation plus a
linear term, and a network is reducible exactly when the linear terms freed by
some combination of flips can be absorbed with fewer neurons than they cost.

Decision layout (K1 = opposite-orientation pairs, K2 = lone orientations):

* a pair whose scales cancel (s1 + s2 = 0) is itself a linear function; the
  cancellation pre-pass handles every network containing one,
* with no cancelling pair:  #K1 >= 3 is always reducible;  #K1 = 1 is
  reducible iff some flip pattern zeroes the freed linear direction;
  #K1 = 2 is reducible iff the freed direction is parallel to one of the
  network's own hyperplane normals (absorbable at the cost of one neuron);
  #K1 = 0 is irreducible.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import HypothesisError, InputError, InvariantError
from .net_core import (GroupedReLU, ShallowNet, evaluate_many, group,
                       grouped_from_entries, admissibility_violations,
                       canonical_hyperplane)
from .tolerances import DEFAULT_TOL, ToleranceConfig

_PROBE_SEED = 0x5eed
_PROBE_POINTS = 200


@dataclass(frozen=True)
class AdmissibilityReport:
    admissible: bool
    violations: tuple[dict, ...]

    def __bool__(self) -> bool:
        return self.admissible


def check_admissible(net: ShallowNet, tol: ToleranceConfig = DEFAULT_TOL) -> AdmissibilityReport:
    """True iff no neuron is zero and no ridge duplicates another with a
    positive factor; the report names every violated clause."""

    if net.activation.kind != "relu":
        raise InputError("check_admissible expects a relu network")
    violations = admissibility_violations(net, tol)
    return AdmissibilityReport(not violations, tuple(violations))


@dataclass(frozen=True)
class ReductionWitness:
    """Recipe for one strict neuron-count reduction.

    epsilon assigns a flip sign to every K1 pair; k2_prime lists the K2
    entries to flip; k0 (a global index, K1 entries first) with coefficient c0
    names the hyperplane that absorbs the freed linear term when it is not
    zero.  i_index is the pair-slot picked by each flip sign.
    """

    case: str  # "K1_eq_1" | "K1_eq_2" | "K1_ge_3" | "cancellation"
    epsilon: tuple[int, ...]
    k2_prime: frozenset[int]
    k0: int | None = None
    c0: float | None = None

    @property
    def i_index(self) -> tuple[int, ...]:
        return tuple(1 if e == 1 else 2 for e in self.epsilon)


def _cancelling_pairs(g: GroupedReLU, tol: ToleranceConfig) -> list[int]:
    return [i for i, p in enumerate(g.K1) if abs(p.s1 + p.s2) <= tol.zero_tol]


def _coefficient_scale(g: GroupedReLU) -> float:
    total = sum(abs(p.s1) + abs(p.s2) for p in g.K1) + sum(abs(e.s) for e in g.K2)
    return 1.0 + total


def _direction_of(g: GroupedReLU, k0: int) -> tuple[np.ndarray, float]:
    """Stored (direction, bias) of the global entry index k0 (K1 first)."""

    if k0 < len(g.K1):
        pair = g.K1[k0]
        return pair.h.a, pair.h.b
    entry = g.K2[k0 - len(g.K1)]
    return entry.a, entry.b


def _freed_linear(g: GroupedReLU, epsilon: tuple[int, ...],
                  k2_prime: frozenset[int]) -> np.ndarray:
    """Direction of the linear term freed by the given flip pattern."""

    w = np.zeros(g.d)
    for i, pair in enumerate(g.K1):
        e = epsilon[i]
        si = pair.s1 if e == 1 else pair.s2
        w += si * e * pair.h.a
    for j in k2_prime:
        w += g.K2[j].s * g.K2[j].a
    return w


def _subsets(n: int):
    for size in range(n + 1):
        for combo in itertools.combinations(range(n), size):
            yield frozenset(combo)


def test_reducible(g: GroupedReLU, tol: ToleranceConfig = DEFAULT_TOL) -> ReductionWitness | None:
    """Return a reduction witness when the neuron count can be lowered.

    Search order: cancellation pre-pass, then #K1 >= 3, #K1 = 1, #K1 = 2.
    A cancelling pair yields a witness only when removing it actually wins:
    a network that is exactly one cancelling pair plus lone neurons needs the
    freed linear term absorbed somewhere, just like the #K1 = 2 clause.
    """

    zero = tol.zero_tol * _coefficient_scale(g)
    cancelling = _cancelling_pairs(g, tol)
    n_pairs = len(g.K1)
    all_plus = tuple(1 for _ in range(n_pairs))

    if cancelling:
        live_pairs = n_pairs - len(cancelling)
        if 2 * len(cancelling) + live_pairs >= 3:
            return ReductionWitness("cancellation", all_plus, frozenset())
        # exactly one cancelling pair and nothing else in K1: removing it
        # frees a linear term that must be absorbed for a strict win
        for k2p in _subsets(len(g.K2)):
            w = _freed_linear(g, all_plus, k2p)
            if float(np.linalg.norm(w)) <= zero:
                return ReductionWitness("cancellation", all_plus, k2p)
            for j, entry in enumerate(g.K2):
                c0 = -float(w @ entry.a) / float(entry.a @ entry.a)
                if float(np.linalg.norm(w + c0 * entry.a)) <= zero:
                    return ReductionWitness("cancellation", all_plus, k2p,
                                            k0=n_pairs + j, c0=c0)
        return None

    if n_pairs >= 3:
        return ReductionWitness("K1_ge_3", all_plus, frozenset())

    if n_pairs == 1:
        for eps in ((1,), (-1,)):
            for k2p in _subsets(len(g.K2)):
                w = _freed_linear(g, eps, k2p)
                if float(np.linalg.norm(w)) <= zero:
                    return ReductionWitness("K1_eq_1", eps, k2p)
        return None

    if n_pairs == 2:
        candidates = list(range(n_pairs + len(g.K2)))
        for eps in itertools.product((1, -1), repeat=2):
            for k2p in _subsets(len(g.K2)):
                w = _freed_linear(g, eps, k2p)
                for k0 in candidates:
                    a0, _ = _direction_of(g, k0)
                    c0 = -float(w @ a0) / float(a0 @ a0)
                    if float(np.linalg.norm(w + c0 * a0)) <= zero:
                        return ReductionWitness("K1_eq_2", eps, k2p, k0=k0, c0=c0)
        return None

    return None


def _probe_points(d: int) -> np.ndarray:
    rng = np.random.default_rng(_PROBE_SEED + d)
    return rng.uniform(-2.0, 2.0, size=(_PROBE_POINTS, d))


def reduce_once(g: GroupedReLU, witness: ReductionWitness,
                tol: ToleranceConfig = DEFAULT_TOL) -> GroupedReLU:
    """Apply one witnessed rewrite; the result has strictly fewer neurons and
    the same values everywhere (checked on a random grid)."""

    if len(witness.epsilon) != len(g.K1) or any(j >= len(g.K2) for j in witness.k2_prime):
        raise InvariantError("stale witness: index structure does not match the network")

    entries: list[tuple[np.ndarray, float, float]] = []
    w = np.zeros(g.d)
    q = 0.0
    for i, pair in enumerate(g.K1):
        e = witness.epsilon[i]
        si = pair.s1 if e == 1 else pair.s2
        coef = pair.s1 + pair.s2
        if abs(coef) > tol.zero_tol:
            entries.append((-e * pair.h.a, -e * pair.h.b, coef))
        w += si * e * pair.h.a
        q += si * e * pair.h.b
    for j, entry in enumerate(g.K2):
        if j in witness.k2_prime:
            entries.append((-entry.a, -entry.b, entry.s))
            w += entry.s * entry.a
            q += entry.s * entry.b
        else:
            entries.append((entry.a, entry.b, entry.s))

    c_new = g.c
    zero = tol.zero_tol * _coefficient_scale(g)
    if float(np.linalg.norm(w)) <= zero:
        c_new += q
    elif witness.k0 is not None:
        if witness.k0 >= len(g.K1) + len(g.K2):
            raise InvariantError("stale witness: absorption index out of range")
        a0, b0 = _direction_of(g, witness.k0)
        c0 = -float(w @ a0) / float(a0 @ a0)
        if float(np.linalg.norm(w + c0 * a0)) > zero:
            raise InvariantError("stale witness: freed direction no longer absorbable")
        entries.append((a0, b0, -c0))
        entries.append((-a0, -b0, c0))
        c_new += q + c0 * b0
    else:
        norm = float(np.linalg.norm(w))
        u = w / norm
        entries.append((u, 0.0, norm))
        entries.append((-u, 0.0, -norm))
        c_new += q

    reduced = grouped_from_entries(entries, c_new, g.d, tol)
    if reduced.m >= g.m:
        raise InvariantError("stale witness: rewrite did not reduce the neuron count",
                             before=g.m, after=reduced.m)
    pts = _probe_points(g.d)
    before = evaluate_many(g.to_net(), pts)
    after = evaluate_many(reduced.to_net(), pts)
    bound = 1e-9 * (1.0 + np.abs(before))
    if np.any(np.abs(after - before) > bound):
        raise InvariantError("stale witness: rewrite changed the function",
                             max_gap=float(np.max(np.abs(after - before))))
    return reduced


def reduce_fully(net: ShallowNet, tol: ToleranceConfig = DEFAULT_TOL) -> ShallowNet:
    """Iterate reduction to a fixpoint; the result is irreducible."""

    g = group(net, tol)
    budget = g.m + 1
    for _ in range(budget + 1):
        witness = test_reducible(g, tol)
        if witness is None:
            return g.to_net()
        g = reduce_once(g, witness, tol)
    raise InvariantError("reduction did not terminate within the neuron budget")


# ---------------------------------------------------------------------------
# equivalence certificates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EquivalenceCertificate:
    """Permutation/sign/scale data witnessing pointwise equality of two nets.

    Neuron k of the first network maps to neuron permutation[k] of the second
    via epsilon[k] * lam[k] * (a_k, b_k) = (a'_pi(k), b'_pi(k)) and
    s_k / lam[k] = s'_pi(k); K collects the sign-flipped indices, whose scaled
    directions must cancel, shifting the constant by constant_shift.
    """

    permutation: tuple[int, ...]
    epsilon: tuple[int, ...]
    lam: tuple[float, ...]
    K: frozenset[int]
    constant_shift: float


def certificate_to_json_obj(cert: EquivalenceCertificate) -> dict:
    return {
        "permutation": list(cert.permutation),
        "epsilon": list(cert.epsilon),
        "lambda": [float(v) for v in cert.lam],
        "K": sorted(cert.K),
        "constant_shift": cert.constant_shift,
    }


def test_equivalent(n1: ShallowNet, n2: ShallowNet,
                    tol: ToleranceConfig = DEFAULT_TOL) -> EquivalenceCertificate | None:
    """Match hyperplanes bijectively and verify the scale and flip conditions.

    Requires both networks to be admissible with mutually distinct
    hyperplanes (no opposite-orientation pairs); a returned certificate
    guarantees the two networks agree at every input.
    """

    for name, net in (("first", n1), ("second", n2)):
        if net.activation.kind != "relu":
            raise InputError(f"{name} network is not relu")
    if n1.d != n2.d:
        raise InputError("networks have different input dimensions", d1=n1.d, d2=n2.d)
    g1 = group(n1, tol)
    g2 = group(n2, tol)
    for name, g in (("first", g1), ("second", g2)):
        if g.K1:
            raise HypothesisError(
                f"{name} network has coincident hyperplanes; the equivalence "
                "characterization does not apply", network=name)

    if n1.m != n2.m:
        return None
    if n1.m == 0:
        if abs(n1.c - n2.c) <= tol.zero_tol * (1.0 + abs(n1.c)):
            return EquivalenceCertificate((), (), (), frozenset(), 0.0)
        return None

    def describe(net: ShallowNet):
        rows = []
        for n in net.neurons:
            norm = float(np.linalg.norm(n.a))
            h, sign = canonical_hyperplane(n.a, n.b, tol)
            rows.append((h, sign, norm, n))
        return rows

    rows1 = describe(n1)
    rows2 = describe(n2)
    unmatched = set(range(n2.m))
    permutation: list[int] = []
    epsilon: list[int] = []
    lam: list[float] = []
    for h1, sign1, norm1, neuron1 in rows1:
        match = None
        for j in unmatched:
            if h1.matches(rows2[j][0], tol):
                match = j
                break
        if match is None:
            return None
        unmatched.discard(match)
        _, sign2, norm2, neuron2 = rows2[match]
        eps = int(sign1 * sign2)
        scale = norm2 / norm1
        if abs(neuron1.s / scale - neuron2.s) > tol.match_tol * (1.0 + abs(neuron2.s)):
            return None
        permutation.append(match)
        epsilon.append(eps)
        lam.append(scale)

    flipped = frozenset(k for k, e in enumerate(epsilon) if e == -1)
    flip_sum = np.zeros(n1.d)
    shift = 0.0
    weight = 1.0
    for k in flipped:
        neuron = n1.neurons[k]
        flip_sum += neuron.s * neuron.a
        shift += neuron.s * neuron.b
        weight += abs(neuron.s) * float(np.linalg.norm(neuron.a))
    if float(np.linalg.norm(flip_sum)) > tol.zero_tol * weight:
        return None
    if abs(n2.c - (n1.c + shift)) > tol.zero_tol * (1.0 + abs(n1.c) + abs(shift)):
        return None
    return EquivalenceCertificate(tuple(permutation), tuple(epsilon),
                                  tuple(lam), flipped, shift)
