"""Shared generators and the brute-force reducibility oracle."""

from __future__ import annotations

import itertools

import numpy as np

from shallowid import (AdmissibilityError, ShallowNet, canonical_hyperplane,
                       evaluate_many, group, make_net)

LATTICE_DIRECTIONS = [(1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, -1.0),
                      (2.0, 1.0), (1.0, 2.0)]
LATTICE_BIASES = [0.0, 0.5, -0.5, 1.0]
LATTICE_SCALES = [1.0, -1.0, 0.5, -0.5, 2.0, -2.0]


def random_irreducible_relu(rng, m, d, sep=5e-2):
    """Random admissible net whose hyperplanes are pairwise separated, which
    makes it irreducible outright."""

    while True:
        neurons, hyperplanes = [], []
        ok = True
        for _ in range(m):
            for _ in range(200):
                a = rng.normal(size=d)
                a /= np.linalg.norm(a)
                a *= rng.uniform(0.6, 1.8)
                b = rng.uniform(-1.0, 1.0)
                s = rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 2.0)
                h, _ = canonical_hyperplane(a, b)
                if all(float(np.max(np.abs(h.a - h2.a))) + abs(h.b - h2.b) > sep
                       for h2 in hyperplanes):
                    hyperplanes.append(h)
                    neurons.append((a, b, s))
                    break
            else:
                ok = False
                break
        if ok:
            return make_net("relu", neurons, rng.uniform(-1.0, 1.0), d=d)


def _lattice_relu(rng, max_m):
    m = int(rng.integers(1, max_m + 1))
    neurons = []
    for _ in range(m):
        if neurons and rng.random() < 0.4:
            a0, b0, s0 = neurons[int(rng.integers(len(neurons)))]
            lam = float(rng.choice([1.0, 0.5, 2.0]))
            if rng.random() < 0.5:
                s = -s0 / lam  # grouped scales cancel exactly
            else:
                s = float(rng.choice(LATTICE_SCALES))
            neurons.append((tuple(-lam * np.asarray(a0)), -lam * b0, s))
        else:
            a = np.asarray(rng.choice(LATTICE_DIRECTIONS)) * rng.choice([1.0, -1.0])
            neurons.append((tuple(a), float(rng.choice(LATTICE_BIASES)),
                            float(rng.choice(LATTICE_SCALES))))
    return make_net("relu", neurons, float(rng.choice(LATTICE_BIASES)), d=2)


def _planted_flip_sum_relu(rng):
    """One opposite-orientation pair plus singles whose last direction zeroes
    the freed linear term for one flip pattern."""

    a1 = rng.normal(size=2)
    a1 /= np.linalg.norm(a1)
    s11 = rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 1.5)
    s12 = rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 1.5)
    b1 = rng.uniform(-1.0, 1.0)
    eps = int(rng.choice([1, -1]))
    residual = (s11 if eps == 1 else s12) * eps * a1
    neurons = [(a1, b1, s11), (-a1, -b1, s12)]
    for _ in range(int(rng.integers(0, 2))):
        a = rng.normal(size=2)
        a /= np.linalg.norm(a)
        s = rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 1.5)
        residual = residual + s * a
        neurons.append((a, rng.uniform(-1.0, 1.0), s))
    norm = float(np.linalg.norm(residual))
    neurons.append((-residual / norm, rng.uniform(-1.0, 1.0), norm))
    return make_net("relu", neurons, rng.uniform(-1.0, 1.0), d=2)


def _parallel_pairs_relu(rng):
    """Two opposite-orientation pairs on parallel hyperplanes; the freed
    linear term is always parallel to their common direction."""

    a = rng.normal(size=2)
    a /= np.linalg.norm(a)
    b1 = rng.uniform(-1.0, 1.0)
    b2 = b1 + rng.choice([-1.0, 1.0]) * rng.uniform(0.3, 1.0)
    scales = rng.choice([-1.0, 1.0], size=4) * rng.uniform(0.5, 1.5, size=4)
    neurons = [(a, b1, scales[0]), (-a, -b1, scales[1]),
               (a, b2, scales[2]), (-a, -b2, scales[3])]
    return make_net("relu", neurons, rng.uniform(-1.0, 1.0), d=2)


def random_structured_relu(rng, max_m=4):
    """Admissible d=2 net from a mix of lattice draws (duplicated hyperplanes
    and exact cancellations) and planted reducible structures, so both
    outcomes of the reducibility decision occur often."""

    while True:
        roll = rng.random()
        if roll < 0.6:
            net = _lattice_relu(rng, max_m)
        elif roll < 0.85:
            net = _planted_flip_sum_relu(rng)
        else:
            net = _parallel_pairs_relu(rng)
        try:
            group(net)
        except AdmissibilityError:
            continue
        return net


def random_analytic_net(rng, m, d, kind="sigmoid", sep=5e-2):
    """Random admissible sigmoid/tanh net with sign-separated ridges."""

    while True:
        rows = []
        ok = True
        for _ in range(m):
            for _ in range(200):
                a = rng.uniform(-2.0, 2.0, size=d)
                if np.max(np.abs(a)) < 0.2:
                    continue
                b = rng.uniform(-2.0, 2.0)
                s = rng.choice([-1.0, 1.0]) * rng.uniform(0.3, 2.0)
                distinct = all(
                    min(float(np.max(np.abs(a - sg * np.asarray(a2)))) + abs(b - sg * b2)
                        for sg in (1.0, -1.0)) > sep
                    for a2, b2, _ in rows)
                if distinct:
                    rows.append((a, b, s))
                    break
            else:
                ok = False
                break
        if ok:
            return make_net(kind, rows, rng.uniform(-2.0, 2.0), d=d)


def equivalent_analytic_variant(rng, net):
    """Permute the neurons and flip a random subset of signs, adjusting the
    constant by the flip identity; the result is pointwise equal."""

    c0 = net.activation.c0
    order = rng.permutation(net.m)
    rows = []
    c = net.c
    for k in order:
        n = net.neurons[int(k)]
        if rng.random() < 0.5:
            rows.append((-n.a, -n.b, -n.s))
            c += n.s * c0
        else:
            rows.append((n.a, n.b, n.s))
    return make_net(net.activation.kind, rows, c, d=net.d)


def dense_grid(d, span=3.0, target=2500):
    side = max(2, int(round(target ** (1.0 / d))))
    axes = [np.linspace(-span, span, side)] * d
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def rel_max_dev(net_a, net_b, points):
    va = evaluate_many(net_a, points)
    vb = evaluate_many(net_b, points)
    return float(np.max(np.abs(va - vb) / (1.0 + np.abs(va))))


# ---------------------------------------------------------------------------
# brute-force reducibility oracle
# ---------------------------------------------------------------------------

def _merge_oriented(entries):
    """Merge coincident (direction, bias) terms after unit normalization;
    opposite orientations stay separate neurons."""

    merged = []
    for a, b, s in entries:
        a = np.asarray(a, dtype=float)
        norm = float(np.linalg.norm(a))
        u, beta, sc = a / norm, b / norm, s * norm
        for row in merged:
            if float(np.max(np.abs(u - row[0]))) <= 1e-9 and abs(beta - row[1]) <= 1e-9:
                row[2] += sc
                break
        else:
            merged.append([u, beta, sc])
    return [(u, beta, sc) for u, beta, sc in merged if abs(sc) > 1e-11]


def _collapse_for_oracle(g, eps, flips):
    entries = []
    w = np.zeros(g.d)
    q = 0.0
    for i, pair in enumerate(g.K1):
        e = eps[i]
        si = pair.s1 if e == 1 else pair.s2
        entries.append((-e * pair.h.a, -e * pair.h.b, pair.s1 + pair.s2))
        w += si * e * pair.h.a
        q += si * e * pair.h.b
    for j, single in enumerate(g.K2):
        if j in flips:
            entries.append((-single.a, -single.b, single.s))
            w += single.s * single.a
            q += single.s * single.b
        else:
            entries.append((single.a, single.b, single.s))
    return entries, w, q


def oracle_reducible(net: ShallowNet, grid=None) -> bool:
    """Exhaustively apply every flip-pattern rewrite and every absorption of
    the freed linear term, then accept any candidate that has fewer neurons
    and matches the original on a dense grid."""

    g = group(net)
    if grid is None:
        grid = dense_grid(g.d)
    base = evaluate_many(net, grid)
    tol_vec = 1e-9 * (1.0 + np.abs(base))

    def matches(candidate_entries, c):
        neurons = [(u, beta, sc) for u, beta, sc in candidate_entries]
        if len(neurons) >= net.m:
            return False
        cand = make_net("relu", neurons, c, d=g.d)
        return bool(np.all(np.abs(evaluate_many(cand, grid) - base) <= tol_vec))

    for eps in itertools.product((1, -1), repeat=len(g.K1)):
        for size in range(len(g.K2) + 1):
            for combo in itertools.combinations(range(len(g.K2)), size):
                flips = frozenset(combo)
                entries, w, q = _collapse_for_oracle(g, eps, flips)
                # drop the linear term into the constant
                if matches(_merge_oriented(entries), g.c + q):
                    return True
                # absorb it at one of the surviving hyperplanes
                for a0, b0, _ in entries:
                    a0 = np.asarray(a0, dtype=float)
                    c0 = -float(w @ a0) / float(a0 @ a0)
                    extra = [(a0, b0, -c0), (-a0, -b0, c0)]
                    if matches(_merge_oriented(entries + extra), g.c + q + c0 * b0):
                        return True
                # spend a fresh cancelling pair on it
                norm = float(np.linalg.norm(w))
                if norm > 1e-14:
                    u = w / norm
                    extra = [(u, 0.0, norm), (-u, 0.0, -norm)]
                    if matches(_merge_oriented(entries + extra), g.c + q):
                        return True
    return False


# ---------------------------------------------------------------------------
# constructed reducible instances, one per decision branch
# ---------------------------------------------------------------------------

def clause_k1_ge_3_instance():
    pairs = [((1.0, 0.0), 0.1, 1.0, 0.5), ((0.0, 1.0), -0.2, 0.7, 0.9),
             ((1.0, 1.0), 0.3, 1.2, -0.4)]
    neurons = []
    for a, b, s1, s2 in pairs:
        a = np.asarray(a)
        neurons.append((a, b, s1))
        neurons.append((-a, -b, s2))
    return make_net("relu", neurons, 0.3, d=2)


def clause_i_instance():
    a1 = np.array([1.0, 0.0])
    a2 = np.array([0.0, 1.0])
    s11, s12, s2 = 1.0, 0.6, 0.8
    residual = s11 * a1 + s2 * a2
    s3 = float(np.linalg.norm(residual))
    a3 = -residual / s3
    neurons = [(a1, 0.3, s11), (-a1, -0.3, s12), (a2, -0.2, s2), (a3, 0.4, s3)]
    return make_net("relu", neurons, -0.1, d=2)


def clause_ii_instance():
    a1 = np.array([1.0, 0.0])
    a2 = np.array([0.0, 1.0])
    s11, s12 = 1.0, 0.5
    s21, s22 = 0.8, 0.7
    residual = s11 * a1 + s21 * a2           # flip signs +1, +1, empty flip set
    a3 = residual / float(np.linalg.norm(residual))
    neurons = [(a1, 0.3, s11), (-a1, -0.3, s12),
               (a2, -0.2, s21), (-a2, 0.2, s22),
               (a3, 0.9, 0.6)]
    return make_net("relu", neurons, 0.2, d=2)


def cancelling_pairs_instance():
    a1 = np.array([1.0, 0.2])
    a2 = np.array([0.3, 1.0])
    neurons = [(a1, 0.0, 1.0), (-a1, 0.0, -1.0), (a2, 0.0, 1.0), (-a2, 0.0, -1.0)]
    return make_net("relu", neurons, 0.0, d=2)
