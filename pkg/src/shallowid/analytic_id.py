"""Identification machinery for sigmoid/tanh networks: canonical equivalence,
full spark frames, the universal sample plan, and the exponential-sum oracle.

For these activations sigma(x) + sigma(-x) is the constant c0 (1 for sigmoid,
0 for tanh), so flipping a neuron's sign is the only parameter ambiguity and a
sorted sign-normalized form decides equivalence outright.  The sample plan
scales a full spark frame by a batch of distinct scalars; restricted to any
ray it yields enough zeros of a difference of networks to force all its
exponential-sum coefficients, and hence the difference itself, to vanish.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import (AdmissibilityError, InputError, InvariantError,
                     ParseError, SizeError, ToleranceError)
from .net_core import Neuron, ShallowNet, evaluate_many, make_net
from .numerics import rank
from .relu_structure import AdmissibilityReport
from .tolerances import DEFAULT_TOL, ToleranceConfig

logger = logging.getLogger(__name__)

_EXPANSION_CAP = 20
_DEFAULT_PLAN_CAP = 1_000_000
_FULL_SPARK_EXHAUSTIVE_LIMIT = 12
_FULL_SPARK_SAMPLES = 200


def _require_analytic(net: ShallowNet) -> None:
    if net.activation.kind == "relu":
        raise InputError("this operation applies to sigmoid/tanh networks; "
                         "use the relu-specific routines instead")


def analytic_violations(net: ShallowNet, tol: ToleranceConfig) -> list[dict]:
    violations: list[dict] = []
    for k, n in enumerate(net.neurons):
        if abs(n.s) * float(np.linalg.norm(n.a)) <= tol.zero_tol:
            violations.append({"clause": "i", "neuron": k, "reason": "zero neuron"})
    for k1 in range(net.m):
        for k2 in range(k1 + 1, net.m):
            n1, n2 = net.neurons[k1], net.neurons[k2]
            for sign in (1.0, -1.0):
                if (float(np.max(np.abs(n1.a - sign * n2.a))) <= tol.match_tol
                        and abs(n1.b - sign * n2.b) <= tol.match_tol):
                    violations.append({"clause": "ii", "neurons": [k1, k2],
                                       "reason": "sign-duplicate ridge"})
    return violations


def check_admissible_analytic(net: ShallowNet,
                              tol: ToleranceConfig = DEFAULT_TOL) -> AdmissibilityReport:
    """True iff no neuron vanishes and no ridge equals plus/minus another;
    for sigmoid and tanh this is exactly irreducibility."""

    _require_analytic(net)
    violations = analytic_violations(net, tol)
    return AdmissibilityReport(not violations, tuple(violations))


@dataclass(frozen=True)
class AnalyticCanonicalForm:
    """Sign-normalized, sorted parameters; equal forms mean equal networks."""

    activation: str
    d: int
    neurons: tuple[Neuron, ...]
    c: float

    def to_net(self) -> ShallowNet:
        return make_net(self.activation, [(n.a, n.b, n.s) for n in self.neurons],
                        self.c, d=self.d)


def _first_significant_negative(a: np.ndarray, tol: ToleranceConfig) -> bool:
    thresh = tol.zero_tol * max(1.0, float(np.max(np.abs(a))))
    for entry in a:
        if abs(entry) > thresh:
            return entry < 0
    raise InputError("cannot orient a zero direction")


def canonicalize_analytic(net: ShallowNet,
                          tol: ToleranceConfig = DEFAULT_TOL) -> AnalyticCanonicalForm:
    """Flip neurons whose direction starts negative (absorbing s*c0 into the
    constant), then sort; evaluation is unchanged pointwise."""

    _require_analytic(net)
    violations = analytic_violations(net, tol)
    if violations:
        raise AdmissibilityError("network is not admissible", violations=violations)
    c0 = net.activation.c0
    c = net.c
    rows = []
    for n in net.neurons:
        if _first_significant_negative(n.a, tol):
            rows.append((-n.a, -n.b, -n.s))
            c += n.s * c0
        else:
            rows.append((n.a, n.b, n.s))
    rows.sort(key=lambda r: (tuple(r[0]), r[1], r[2]))
    neurons = tuple(Neuron(np.array(a, dtype=float), float(b), float(s))
                    for a, b, s in rows)
    return AnalyticCanonicalForm(net.activation.kind, net.d, neurons, float(c))


def test_equivalent_analytic(n1: ShallowNet, n2: ShallowNet,
                             tol: ToleranceConfig = DEFAULT_TOL) -> bool:
    """Field-by-field match of the two canonical forms within match_tol."""

    if n1.activation.kind != n2.activation.kind:
        raise InputError("networks use different activations",
                         first=n1.activation.kind, second=n2.activation.kind)
    if n1.d != n2.d:
        raise InputError("networks have different input dimensions")
    f1 = canonicalize_analytic(n1, tol)
    f2 = canonicalize_analytic(n2, tol)
    if len(f1.neurons) != len(f2.neurons):
        return False
    if abs(f1.c - f2.c) > tol.match_tol * (1.0 + abs(f1.c)):
        return False
    unmatched = list(range(len(f2.neurons)))
    for n in f1.neurons:
        hit = None
        for j in unmatched:
            other = f2.neurons[j]
            if (float(np.max(np.abs(n.a - other.a))) <= tol.match_tol
                    and abs(n.b - other.b) <= tol.match_tol
                    and abs(n.s - other.s) <= tol.match_tol * (1.0 + abs(n.s))):
                hit = j
                break
        if hit is None:
            return False
        unmatched.remove(hit)
    return True


# ---------------------------------------------------------------------------
# full spark frames and the universal plan
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FullSparkFrame:
    """N vectors of which every d-subset is a basis."""

    vectors: np.ndarray
    nodes: tuple[float, ...] | None = None

    @property
    def size(self) -> int:
        return int(self.vectors.shape[0])

    @property
    def d(self) -> int:
        return int(self.vectors.shape[1])


def check_full_spark(frame: FullSparkFrame, tol: ToleranceConfig = DEFAULT_TOL,
                     seed: int = 0) -> int:
    """Verify the every-d-subset rank condition; exhaustive up to
    C(N, d) subsets for N <= 12, seeded sampling above.  Returns the number of
    subsets checked and raises when one fails."""

    n, d = frame.size, frame.d
    if n <= _FULL_SPARK_EXHAUSTIVE_LIMIT:
        subsets = itertools.combinations(range(n), d)
        checked = 0
        for combo in subsets:
            checked += 1
            if rank(frame.vectors[list(combo)], tol) != d:
                raise InvariantError("frame subset is rank deficient",
                                     subset=list(combo))
        logger.debug("full spark check: %d subsets exhaustively verified", checked)
        return checked
    rng = np.random.default_rng(seed)
    checked = 0
    for _ in range(_FULL_SPARK_SAMPLES):
        combo = sorted(rng.choice(n, size=d, replace=False))
        checked += 1
        if rank(frame.vectors[combo], tol) != d:
            raise InvariantError("frame subset is rank deficient", subset=combo)
    logger.info("full spark check: sampled %d of %d subsets", checked, comb(n, d))
    return checked


def vandermonde_frame(d: int, n: int,
                      tol: ToleranceConfig = DEFAULT_TOL) -> FullSparkFrame:
    """Moment vectors (1, t, ..., t^(d-1)) at distinct equispaced nodes in
    [-1, 1]; distinct nodes make every d-subset a nonsingular Vandermonde
    system."""

    if d < 1:
        raise InputError("dimension must be positive", d=d)
    if n < d:
        raise InputError("frame size must be at least the dimension", n=n, d=d)
    nodes = np.linspace(-1.0, 1.0, n)
    vectors = np.vander(nodes, N=d, increasing=True)
    frame = FullSparkFrame(vectors, tuple(float(t) for t in nodes))
    check_full_spark(frame, tol)
    return frame


def separating_direction(frame: FullSparkFrame, vectors,
                         tol: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
    """First frame vector whose inner products with the given vectors are
    pairwise distinct; guaranteed to exist once the frame has at least
    C(M, 2)*(d-1)+1 members."""

    vecs = np.asarray(vectors, dtype=float)
    if vecs.ndim != 2 or vecs.shape[1] != frame.d:
        raise InputError("vectors must be an (M, d) array", shape=list(vecs.shape))
    m = vecs.shape[0]
    if m == 0:
        raise InputError("need at least one vector to separate")
    for i in range(m):
        for j in range(i + 1, m):
            if float(np.max(np.abs(vecs[i] - vecs[j]))) <= tol.match_tol:
                raise InputError("vectors must be pairwise distinct", pair=[i, j])
    needed = comb(m, 2) * (frame.d - 1) + 1
    if frame.size < needed:
        raise InputError("frame is too small for this family",
                         size=frame.size, needed=needed)
    for v in frame.vectors:
        inner = vecs @ v
        gaps = np.abs(inner[:, None] - inner[None, :])
        np.fill_diagonal(gaps, np.inf)
        if float(np.min(gaps)) > tol.zero_tol:
            out = np.array(v, dtype=float)
            out.setflags(write=False)
            return out
    raise ToleranceError("no frame vector separates the family; inputs are "
                         "nearly duplicated")


@dataclass(frozen=True)
class AnalyticSamplePlan:
    """Scaled-frame point grid x[i, j] = scalar_i * frame_j."""

    m: int
    d: int
    frame: FullSparkFrame
    scalars: tuple[float, ...]
    points: np.ndarray

    @property
    def size(self) -> int:
        return int(self.points.shape[0])


def build_analytic_plan(m: int, d: int, cap: int = _DEFAULT_PLAN_CAP,
                        tol: ToleranceConfig = DEFAULT_TOL) -> AnalyticSamplePlan:
    """Universal plan for m-neuron sigmoid/tanh networks: a Vandermonde full
    spark frame of size C(4m, 2)*(d-1)+1 scaled by 2^(2m) distinct scalars."""

    if m < 1 or d < 1:
        raise InputError("need m >= 1 and d >= 1", m=m, d=d)
    n = comb(4 * m, 2) * (d - 1) + 1
    count = n * (1 << (2 * m))
    if count > cap:
        raise SizeError(f"plan would hold {count} points, above the cap {cap}",
                        points=count, cap=cap)
    frame = vandermonde_frame(d, n, tol)
    scalars = np.linspace(-2.0, 2.0, 1 << (2 * m))
    points = (scalars[:, None, None] * frame.vectors[None, :, :]).reshape(count, d)
    return AnalyticSamplePlan(m, d, frame, tuple(float(z) for z in scalars), points)


@dataclass(frozen=True)
class IdentificationReport:
    max_gap: float
    equal_on_plan: bool
    equivalent: bool
    warning: str | None


def verify_identification(n1: ShallowNet, n2: ShallowNet, plan: AnalyticSamplePlan,
                          tol: ToleranceConfig = DEFAULT_TOL) -> IdentificationReport:
    """Compare two networks on the plan and against the canonical-form
    decision.  Agreement on the plan without equivalence is reported as a
    numerical-saturation warning, never as a certificate."""

    _require_analytic(n1)
    _require_analytic(n2)
    for name, net in (("first", n1), ("second", n2)):
        report = check_admissible_analytic(net, tol)
        if not report:
            raise AdmissibilityError(f"{name} network is not admissible",
                                     violations=list(report.violations))
    if n1.m != plan.m or n2.m != plan.m:
        raise InputError("plan was built for a different neuron count",
                         plan_m=plan.m, m1=n1.m, m2=n2.m)
    if n1.d != plan.d or n2.d != plan.d:
        raise InputError("plan was built for a different dimension",
                         plan_d=plan.d, d1=n1.d, d2=n2.d)
    gaps = np.abs(evaluate_many(n1, plan.points) - evaluate_many(n2, plan.points))
    max_gap = float(np.max(gaps))
    equal_on_plan = max_gap <= tol.residual_tol
    equivalent = test_equivalent_analytic(n1, n2, tol)
    warning = None
    if equal_on_plan and not equivalent:
        warning = ("networks agree on the plan but their canonical forms "
                   "differ; float saturation can hide a genuine gap")
    return IdentificationReport(max_gap, equal_on_plan, equivalent, warning)


def report_to_json_obj(report: IdentificationReport) -> dict:
    return {"max_gap": report.max_gap, "equal_on_plan": report.equal_on_plan,
            "equivalent": report.equivalent, "warning": report.warning}


# ---------------------------------------------------------------------------
# exponential-sum expansion of a one-dimensional sigmoid network
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExpSumExpansion:
    """Coefficients c over the subset-sum exponent set of the directions:
    clearing the sigmoid denominators of f(x) = sum s_k/(1+e^-(a_k x+b_k))+s0
    leaves sum_alpha c_alpha * e^(-alpha x)."""

    exponents: tuple[float, ...]
    coefficients: tuple[float, ...]

    @property
    def terms(self) -> dict[float, float]:
        return dict(zip(self.exponents, self.coefficients))

    def evaluate(self, x) -> np.ndarray:
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        alphas = np.asarray(self.exponents)
        coeffs = np.asarray(self.coefficients)
        return np.exp(-np.outer(xs, alphas)) @ coeffs


def cleared_form_value(a, b, s, s0: float, x) -> np.ndarray:
    """f(x) times the product of all sigmoid denominators (1 + e^-(a x + b))."""

    xs = np.atleast_1d(np.asarray(x, dtype=float))
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    s = np.asarray(s, dtype=float)
    z = np.outer(xs, a) + b
    f = (1.0 / (1.0 + np.exp(-z))) @ s + s0
    return f * np.prod(1.0 + np.exp(-z), axis=1)


def exp_sum_expansion(a, b, s, s0: float,
                      tol: ToleranceConfig = DEFAULT_TOL) -> ExpSumExpansion:
    """Exponents are the 2^n subset sums of the directions (merged within
    match_tol); each coefficient sums, over the subsets hitting that exponent,
    the unused scales times the product of e^(-b) over the subset."""

    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    s = np.asarray(s, dtype=float)
    n = a.shape[0]
    if not (a.shape == b.shape == s.shape) or a.ndim != 1:
        raise InputError("a, b, s must be equal-length vectors")
    if n > _EXPANSION_CAP:
        raise SizeError(f"subset enumeration is capped at n <= {_EXPANSION_CAP}", n=n)
    if np.any(np.abs(a) <= tol.zero_tol):
        raise InputError("all direction coefficients must be nonzero")
    for i in range(n):
        for j in range(i + 1, n):
            for sign in (1.0, -1.0):
                if (abs(a[i] - sign * a[j]) <= tol.match_tol
                        and abs(b[i] - sign * b[j]) <= tol.match_tol):
                    raise InputError("ridge pairs must be distinct and non-opposite",
                                     pair=[i, j])

    total = float(np.sum(s)) + float(s0)
    ebs = np.exp(-b)
    raw: list[tuple[float, float]] = []
    for mask in range(1 << n):
        alpha = 0.0
        prod = 1.0
        used = 0.0
        for k in range(n):
            if mask >> k & 1:
                alpha += float(a[k])
                prod *= float(ebs[k])
                used += float(s[k])
        raw.append((alpha, (total - used) * prod))

    raw.sort(key=lambda pair: pair[0])
    exponents: list[float] = []
    coefficients: list[float] = []
    for alpha, coeff in raw:
        if exponents and alpha - exponents[-1] <= tol.match_tol:
            coefficients[-1] += coeff
        else:
            exponents.append(alpha)
            coefficients.append(coeff)
    return ExpSumExpansion(tuple(exponents), tuple(coefficients))


def sigmoid_form(net: ShallowNet) -> ShallowNet:
    """Equivalent sigmoid-activation network: tanh(u) = 2*sigmoid(2u) - 1."""

    _require_analytic(net)
    if net.activation.kind == "sigmoid":
        return net
    neurons = [(2.0 * n.a, 2.0 * n.b, 2.0 * n.s) for n in net.neurons]
    shift = sum(n.s for n in net.neurons)
    return make_net("sigmoid", neurons, net.c - shift, d=net.d)


# ---------------------------------------------------------------------------
# plan file round trip
# ---------------------------------------------------------------------------

def analytic_plan_to_json_obj(plan: AnalyticSamplePlan) -> dict:
    return {"m": plan.m, "d": plan.d,
            "nodes": [float(t) for t in (plan.frame.nodes or ())],
            "scalars": [float(z) for z in plan.scalars]}


def analytic_plan_from_json_obj(obj, tol: ToleranceConfig = DEFAULT_TOL) -> AnalyticSamplePlan:
    if not isinstance(obj, dict):
        raise ParseError("analytic plan payload must be an object", location="plan")
    for key in ("m", "d", "nodes", "scalars"):
        if key not in obj:
            raise ParseError(f"missing field {key!r}", location="plan")
    m, d = obj["m"], obj["d"]
    if not isinstance(m, int) or not isinstance(d, int) or m < 1 or d < 1:
        raise ParseError("m and d must be positive integers", location="plan")
    nodes = np.asarray(obj["nodes"], dtype=float)
    scalars = obj["scalars"]
    if nodes.ndim != 1 or nodes.size < d:
        raise ParseError("nodes must list at least d numbers", location="plan.nodes")
    if len(set(float(t) for t in nodes)) != nodes.size:
        raise ParseError("nodes must be pairwise distinct", location="plan.nodes")
    if not isinstance(scalars, list) or len(scalars) != (1 << (2 * m)):
        raise ParseError("scalars must list 2^(2m) numbers", location="plan.scalars")
    if len(set(float(z) for z in scalars)) != len(scalars):
        raise ParseError("scalars must be pairwise distinct", location="plan.scalars")
    vectors = np.vander(nodes, N=d, increasing=True)
    frame = FullSparkFrame(vectors, tuple(float(t) for t in nodes))
    check_full_spark(frame, tol)
    z = np.asarray([float(v) for v in scalars])
    points = (z[:, None, None] * vectors[None, :, :]).reshape(z.size * nodes.size, d)
    return AnalyticSamplePlan(m, d, frame, tuple(float(v) for v in z), points)
