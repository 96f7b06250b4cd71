"""Feasible line collections, the (2m+2)*m*d sample plan, and exact recovery
of a relu network from labeled samples.

A relu network restricted to a line is piecewise linear in the line parameter
with one breakpoint per hyperplane crossed.  Two samples per affine piece pin
the function on the whole line; the crossings of enough well-spread lines pin
the hyperplanes; a final least-squares solve pins scales and constant.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import (ConstructionError, InputError, ParseError,
                     ReconstructionError, RecoveryError, SizeError)
from .net_core import (GroupedReLU, Hyperplane, ShallowNet, evaluate_many,
                       make_net)
from .numerics import affine_fit, rank, solve_least_squares
from .errors import DegenerateFitError
from .tolerances import DEFAULT_TOL, ToleranceConfig

# quantitative margins for the randomized constructions; the theory only needs
# the corresponding quantities to be nonzero, which holds for almost all draws,
# but float-exact recovery needs room between them and the match tolerances
_MIN_DIRECTION_NORM = 0.5
_MIN_TRANSVERSALITY = 1e-2   # |<a, v>| / |v| at every line/hyperplane pairing
_MIN_PARAM_GAP = 1e-2        # separation of crossing parameters on one line
_MIN_POINT_SEP = 1e-3        # separation of crossing points across lines
_MIN_SPREAD_DET = 1e-6       # normalized determinant of in-plane point subsets
_RETRY_BUDGET = 1000         # per failure site
_TOTAL_DRAW_CAP = 50_000
_CANDIDATE_BUDGET = 200_000
_ORIENTATION_CAP = 20


@dataclass(frozen=True)
class Line:
    """Base point u and direction v of {u + t*v : t real}."""

    u: np.ndarray
    v: np.ndarray

    def points_at(self, params) -> np.ndarray:
        t = np.asarray(params, dtype=float)
        return self.u[None, :] + t[:, None] * self.v[None, :]


@dataclass(frozen=True)
class FeasibleLineSet:
    """m*d lines with per-line sorted crossing parameters and the hyperplane
    index each crossing belongs to.  The crossing bookkeeping is derived data
    and absent (None) for line sets loaded back from a plan file."""

    lines: tuple[Line, ...]
    crossing_params: tuple[tuple[float, ...], ...] | None
    assignment: tuple[tuple[int, ...], ...] | None


@dataclass(frozen=True)
class SamplePlan:
    line_set: FeasibleLineSet
    params: tuple[tuple[float, ...], ...]
    points: np.ndarray

    @property
    def lines(self) -> tuple[Line, ...]:
        return self.line_set.lines


@dataclass(frozen=True)
class LabeledSamples:
    plan: SamplePlan
    values: np.ndarray

    def __post_init__(self) -> None:
        if self.values.shape[0] != self.plan.points.shape[0]:
            raise InputError("value count must equal plan point count",
                             values=int(self.values.shape[0]),
                             points=int(self.plan.points.shape[0]))


def _distinct_hyperplanes(g: GroupedReLU, tol: ToleranceConfig) -> list[Hyperplane]:
    if g.K1:
        raise InputError(
            "sampling requires a network whose hyperplanes are mutually "
            "distinct (no opposite-orientation pairs)")
    return [e.hyperplane(tol) for e in g.K2]


def _line_crossings(line: Line, hyperplanes: list[Hyperplane],
                    tol: ToleranceConfig) -> np.ndarray | None:
    """Crossing parameters of one line with every hyperplane, or None when the
    line fails the transversality / separation margins."""

    vnorm = float(np.linalg.norm(line.v))
    if vnorm < _MIN_DIRECTION_NORM:
        return None
    params = np.empty(len(hyperplanes))
    for k, h in enumerate(hyperplanes):
        denom = float(h.a @ line.v)
        if abs(denom) < _MIN_TRANSVERSALITY * vnorm:
            return None
        params[k] = -(float(h.a @ line.u) + h.b) / denom
    order = np.argsort(params)
    gaps = np.diff(params[order])
    if gaps.size and float(np.min(gaps)) < _MIN_PARAM_GAP:
        return None
    return params


def _subset_spread_violation(points: np.ndarray, normal: np.ndarray, d: int) -> int | None:
    """Every d-subset of in-plane points must affinely span the hyperplane;
    returns the index of a point in an offending subset, or None."""

    count = points.shape[0]
    if count < d or d == 1:
        return None
    basis = np.linalg.svd(normal[None, :])[2][1:]  # orthonormal complement
    coords = points @ basis.T
    combos = np.array(list(itertools.combinations(range(count), d)))
    sub = coords[combos]                       # (C, d, d-1)
    diffs = sub[:, 1:, :] - sub[:, :1, :]      # (C, d-1, d-1)
    norms = np.linalg.norm(diffs, axis=2, keepdims=True)
    flat_min = int(np.argmin(norms))
    if float(norms.flat[flat_min]) < _MIN_POINT_SEP:
        return int(combos[np.unravel_index(flat_min, norms.shape)[0], 0])
    dets = np.abs(np.linalg.det(diffs / norms))
    worst = int(np.argmin(dets))
    if float(dets[worst]) < _MIN_SPREAD_DET:
        return int(combos[worst, 0])
    return None


def build_feasible_lines(g: GroupedReLU, seed: int,
                         tol: ToleranceConfig = DEFAULT_TOL) -> FeasibleLineSet:
    """Draw m*d random lines and verify the three feasibility conditions:
    full-rank directions, mutually distinct crossings, and in-plane spread of
    every d crossings sharing a hyperplane.  Failing lines are resampled."""

    hyperplanes = _distinct_hyperplanes(g, tol)
    m = len(hyperplanes)
    d = g.d
    if m < 1:
        raise InputError("need at least one neuron to build lines", m=m)
    if d < 2:
        raise InputError("line sampling needs input dimension >= 2", d=d)

    rng = np.random.default_rng(seed)
    n_lines = m * d
    lines: list[Line] = [None] * n_lines  # type: ignore[list-item]
    params: list[np.ndarray] = [None] * n_lines  # type: ignore[list-item]
    draws = 0

    def draw(j: int) -> None:
        nonlocal draws
        for _ in range(_RETRY_BUDGET):
            draws += 1
            if draws > _TOTAL_DRAW_CAP:
                break
            u = rng.uniform(-1.0, 1.0, size=d)
            v = rng.uniform(-1.0, 1.0, size=d)
            cand = Line(u, v)
            w = _line_crossings(cand, hyperplanes, tol)
            if w is not None:
                lines[j] = cand
                params[j] = w
                return
        raise ConstructionError(
            "line construction exhausted its retry budget; tolerances or the "
            "network geometry are pathological", draws=draws)

    for j in range(n_lines):
        draw(j)

    for _ in range(_RETRY_BUDGET):
        # (i) directions span the whole space
        if rank(np.stack([ln.v for ln in lines]), tol) != d:
            draw(0)
            continue
        crossings = np.stack([ln.points_at(w) for ln, w in zip(lines, params)])
        flat = crossings.reshape(n_lines * m, d)
        # (ii) crossing points mutually distinct
        diff = flat[:, None, :] - flat[None, :, :]
        dist = np.linalg.norm(diff, axis=2)
        np.fill_diagonal(dist, np.inf)
        bad = np.unravel_index(int(np.argmin(dist)), dist.shape)
        if float(dist[bad]) < _MIN_POINT_SEP:
            draw(bad[0] // m)
            continue
        # (iii) any d crossings inside one hyperplane affinely span it
        offender = None
        for k, h in enumerate(hyperplanes):
            culprit = _subset_spread_violation(crossings[:, k, :], h.a, d)
            if culprit is not None:
                offender = culprit
                break
        if offender is not None:
            draw(offender)
            continue
        break
    else:
        raise ConstructionError(
            "feasibility conditions could not be met within the retry budget",
            draws=draws)

    sorted_params = []
    assignment = []
    for w in params:
        order = np.argsort(w)
        sorted_params.append(tuple(float(t) for t in w[order]))
        assignment.append(tuple(int(k) for k in order))
    return FeasibleLineSet(tuple(lines), tuple(sorted_params), tuple(assignment))


def _point_line_distances(points: np.ndarray, line: Line) -> np.ndarray:
    v = line.v / np.linalg.norm(line.v)
    rel = points - line.u[None, :]
    along = rel @ v
    perp = rel - along[:, None] * v[None, :]
    return np.linalg.norm(perp, axis=1)


def _collinearity_ok(points: np.ndarray, lines: tuple[Line, ...],
                     tol: ToleranceConfig) -> bool:
    """Condition: every collinear point triple lies on one of the plan lines.

    Pairs living together on a plan line are exempt (their triples sit on
    that line); every other pair must have no third point near its spanned
    line.  Point-to-line distances come from the Gram identity
    dist^2 = |r - p|^2 - <r - p, u>^2, so no (pairs, points, d) tensor is
    ever materialized.
    """

    n = points.shape[0]
    scale = 1.0 + float(np.max(np.abs(points)))
    ctol = tol.match_tol * scale
    member = np.stack([_point_line_distances(points, ln) <= ctol for ln in lines],
                      axis=1)
    idx_i, idx_k = np.triu_indices(n, k=1)
    shared = np.any(member[idx_i] & member[idx_k], axis=1)
    check_i, check_k = idx_i[~shared], idx_k[~shared]
    sq_norms = np.einsum("nd,nd->n", points, points)
    for start in range(0, check_i.size, 8192):
        ii = check_i[start:start + 8192]
        kk = check_k[start:start + 8192]
        anchors = points[ii]                                  # (B, d)
        unit = points[kk] - anchors
        unit /= np.linalg.norm(unit, axis=1, keepdims=True)
        cross = points @ anchors.T                            # (n, B)
        dist2 = (sq_norms[:, None] - 2.0 * cross
                 + np.einsum("bd,bd->b", anchors, anchors)[None, :])
        along = points @ unit.T - np.einsum("bd,bd->b", anchors, unit)[None, :]
        perp2 = np.maximum(dist2 - along * along, 0.0)
        close = perp2 <= ctol * ctol
        if np.any(np.sum(close, axis=0) >= 3):
            return False
    return True


def build_sample_plan(g: GroupedReLU, ls: FeasibleLineSet, seed: int,
                      tol: ToleranceConfig = DEFAULT_TOL) -> SamplePlan:
    """Place two jittered samples per affine piece of every line, re-rolling
    the jitter until no accidental cross-line collinear triples remain."""

    if ls.crossing_params is None:
        raise InputError("line set lacks crossing data; rebuild it for this network")
    hyperplanes = _distinct_hyperplanes(g, tol)
    m = len(hyperplanes)
    if len(ls.lines) != m * g.d:
        raise InputError("line set does not match the network",
                         lines=len(ls.lines), expected=m * g.d)

    rng = np.random.default_rng(seed)
    for _ in range(_RETRY_BUDGET):
        all_params: list[tuple[float, ...]] = []
        blocks = []
        for j, line in enumerate(ls.lines):
            w = np.asarray(ls.crossing_params[j])
            ts = []
            # unbounded first piece: offsets 2 and 1 below the first crossing
            ts.append(w[0] - 2.0 + rng.uniform(-0.25, 0.25))
            ts.append(w[0] - 1.0 + rng.uniform(-0.25, 0.25))
            for k in range(m - 1):
                lo, hi = w[k], w[k + 1]
                span = hi - lo
                ts.append(lo + span / 3.0 + rng.uniform(-0.1, 0.1) * span)
                ts.append(lo + 2.0 * span / 3.0 + rng.uniform(-0.1, 0.1) * span)
            ts.append(w[-1] + 1.0 + rng.uniform(-0.25, 0.25))
            ts.append(w[-1] + 2.0 + rng.uniform(-0.25, 0.25))
            ts = sorted(ts)
            all_params.append(tuple(float(t) for t in ts))
            blocks.append(line.points_at(ts))
        points = np.concatenate(blocks, axis=0)
        if _collinearity_ok(points, ls.lines, tol):
            return SamplePlan(ls, tuple(all_params), points)
    raise ConstructionError("could not avoid accidental collinear triples",
                            retries=_RETRY_BUDGET)


def sample_values(net: ShallowNet, plan: SamplePlan) -> LabeledSamples:
    """Evaluate a network on every plan point."""

    return LabeledSamples(plan, evaluate_many(net, plan.points))


# ---------------------------------------------------------------------------
# recovery
# ---------------------------------------------------------------------------

def extract_breakpoints(line: Line, params, values,
                        tol: ToleranceConfig = DEFAULT_TOL
                        ) -> tuple[list[float], list[tuple[float, float]]]:
    """Fit consecutive sample pairs to affine pieces in the line parameter and
    intersect neighbouring pieces.

    Pieces whose slopes agree within tolerance are merged, so fewer
    breakpoints than hyperplanes is an ordinary outcome, not an error.
    Returns (breakpoints, merged (slope, intercept) pieces).
    """

    t = np.asarray(params, dtype=float)
    y = np.asarray(values, dtype=float)
    if t.ndim != 1 or t.shape != y.shape:
        raise InputError("params and values must be equal-length vectors")
    if t.size < 4 or t.size % 2 != 0:
        raise InputError("expected an even number (>= 4) of samples, two per piece",
                         count=int(t.size))
    if np.any(np.diff(t) <= 0):
        raise InputError("params must be strictly increasing")

    slopes = (y[1::2] - y[0::2]) / (t[1::2] - t[0::2])
    merge_tol = 10.0 * tol.residual_tol * (1.0 + float(np.max(np.abs(slopes))))

    groups: list[list[int]] = [[0]]
    for i in range(1, slopes.size):
        if abs(slopes[i] - slopes[groups[-1][-1]]) <= merge_tol:
            groups[-1].append(i)
        else:
            groups.append([i])

    pieces: list[tuple[float, float]] = []
    for grp in groups:
        sel = np.concatenate([[2 * i, 2 * i + 1] for i in grp])
        p, q = np.polyfit(t[sel], y[sel], 1)
        pieces.append((float(p), float(q)))

    breakpoints = []
    for (p1, q1), (p2, q2) in zip(pieces, pieces[1:]):
        breakpoints.append((q1 - q2) / (p2 - p1))
    return breakpoints, pieces


def recover_hyperplanes(crossings_by_line, tol: ToleranceConfig = DEFAULT_TOL
                        ) -> list[Hyperplane]:
    """Fit candidate hyperplanes through d crossings from d distinct lines and
    keep those containing exactly one crossing of every line.

    Each kept candidate is refitted on all of its matched crossings before the
    final containment test, which makes the fit insensitive to how well spread
    the d seed points happened to be.
    """

    groups = [np.asarray(grp, dtype=float) for grp in crossings_by_line]
    if not groups:
        raise InputError("no crossing points supplied")
    n_lines = len(groups)
    m = groups[0].shape[0]
    d = groups[0].shape[1]
    for j, grp in enumerate(groups):
        if grp.shape != (m, d):
            raise InputError(f"line {j} contributes {grp.shape[0]} crossings, expected {m}")
    if n_lines != m * d:
        raise InputError("line count must be m*d", lines=n_lines, m=m, d=d)

    scale = 1.0 + max(float(np.max(np.abs(grp))) for grp in groups)
    keep_tol = tol.match_tol * scale
    found: list[Hyperplane] = []
    fits = 0
    for line_combo in itertools.combinations(range(n_lines), d):
        for choice in itertools.product(range(m), repeat=d):
            fits += 1
            if fits > _CANDIDATE_BUDGET:
                raise RecoveryError("candidate budget exhausted before finding "
                                    "all hyperplanes", found=len(found), expected=m)
            seed_pts = np.stack([groups[j][i] for j, i in zip(line_combo, choice)])
            try:
                rough = affine_fit(seed_pts, tol).hyperplane
            except DegenerateFitError:
                continue
            matched = np.stack([grp[np.argmin(np.abs(grp @ rough.a + rough.b))]
                                for grp in groups])
            try:
                refit = affine_fit(matched, tol).hyperplane
            except DegenerateFitError:
                continue
            ok = True
            for grp in groups:
                dists = np.abs(grp @ refit.a + refit.b)
                if np.sum(dists <= keep_tol) != 1:
                    ok = False
                    break
            if not ok:
                continue
            if any(refit.matches(h, tol) for h in found):
                continue
            found.append(refit)
            if len(found) == m:
                ordered = sorted(found, key=lambda h: (tuple(h.a), h.b))
                return ordered
    raise RecoveryError("hyperplane recovery found the wrong candidate count",
                        found=len(found), expected=m)


def reconstruct(data: LabeledSamples, tol: ToleranceConfig = DEFAULT_TOL) -> ShallowNet:
    """Rebuild a network from plan samples: breakpoints per line, hyperplanes
    from the crossings, then one least-squares solve per orientation sign
    pattern until the samples are reproduced within tolerance."""

    plan = data.plan
    lines = plan.lines
    if not lines:
        raise ReconstructionError("plan carries no lines")
    values = np.asarray(data.values, dtype=float)
    d = lines[0].u.shape[0]
    counts = {len(p) for p in plan.params}
    if len(counts) != 1:
        raise ReconstructionError("plan lines carry differing sample counts")
    per_line = counts.pop()
    if per_line < 4 or per_line % 2 != 0:
        raise ReconstructionError("plan does not have two samples per piece",
                                  per_line=per_line)
    m_plan = per_line // 2 - 1

    offsets = np.cumsum([0] + [per_line] * len(lines))
    breakpoints_by_line = []
    for j, line in enumerate(lines):
        bps, _ = extract_breakpoints(line, plan.params[j],
                                     values[offsets[j]:offsets[j + 1]], tol)
        breakpoints_by_line.append(bps)

    m = max(len(b) for b in breakpoints_by_line)
    value_scale = 1.0 + float(np.max(np.abs(values)))

    if m == 0:
        design = np.concatenate([plan.points, np.ones((plan.points.shape[0], 1))], axis=1)
        sol, _ = solve_least_squares(design, values, tol)
        gradient, const = sol[:-1], float(sol[-1])
        residual = float(np.max(np.abs(design @ sol - values)))
        if residual > tol.residual_tol * value_scale:
            raise ReconstructionError("no breakpoints found but data is not affine",
                                      residual=residual)
        if float(np.linalg.norm(gradient)) > tol.match_tol * value_scale:
            raise ReconstructionError(
                "data is affine but not constant; it cannot come from a plan "
                "built for an irreducible network")
        return make_net("relu", [], const, d=d)

    if m != m_plan:
        raise ReconstructionError(
            "detected breakpoint count disagrees with the plan structure",
            detected=m, plan=m_plan)
    if len(lines) != m * d:
        raise ReconstructionError("plan line count disagrees with detected m",
                                  lines=len(lines), m=m, d=d)
    short = [j for j, b in enumerate(breakpoints_by_line) if len(b) != m]
    if short:
        raise ReconstructionError(
            "some lines show fewer breakpoints than the detected neuron count",
            lines=short, detected=m)
    if m > _ORIENTATION_CAP:
        raise SizeError(f"orientation search is capped at m <= {_ORIENTATION_CAP}", m=m)

    crossings_by_line = [line.points_at(bps)
                         for line, bps in zip(lines, breakpoints_by_line)]
    hyperplanes = recover_hyperplanes(crossings_by_line, tol)

    margins = np.stack([plan.points @ h.a + h.b for h in hyperplanes], axis=1)
    ones = np.ones((plan.points.shape[0], 1))
    for eps in itertools.product((1.0, -1.0), repeat=m):
        sign = np.asarray(eps)
        design = np.concatenate([np.maximum(margins * sign[None, :], 0.0), ones],
                                axis=1)
        sol, _ = solve_least_squares(design, values, tol)
        residual = float(np.max(np.abs(design @ sol - values)))
        if residual <= tol.residual_tol * value_scale:
            neurons = [(eps[k] * hyperplanes[k].a, eps[k] * hyperplanes[k].b,
                        float(sol[k])) for k in range(m)]
            return make_net("relu", neurons, float(sol[-1]), d=d)
    raise ReconstructionError(
        "no orientation assignment reproduces the samples; data is "
        "inconsistent with the model class or m was misdetected")


# ---------------------------------------------------------------------------
# plan / sample files
# ---------------------------------------------------------------------------

def plan_to_json_obj(plan: SamplePlan) -> dict:
    return {
        "lines": [{"u": [float(x) for x in ln.u], "v": [float(x) for x in ln.v]}
                  for ln in plan.lines],
        "params": [[float(t) for t in row] for row in plan.params],
    }


def _vector_field(obj: dict, key: str, location: str) -> np.ndarray:
    if key not in obj or not isinstance(obj[key], list):
        raise ParseError(f"missing or invalid field {key!r}", location=location)
    for i, v in enumerate(obj[key]):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not np.isfinite(v):
            raise ParseError("entries must be finite numbers",
                             location=f"{location}.{key}[{i}]")
    return np.asarray([float(v) for v in obj[key]])


def plan_from_json_obj(obj) -> SamplePlan:
    if not isinstance(obj, dict) or "lines" not in obj or "params" not in obj:
        raise ParseError("plan payload must carry 'lines' and 'params'", location="plan")
    raw_lines = obj["lines"]
    raw_params = obj["params"]
    if not isinstance(raw_lines, list) or not isinstance(raw_params, list) \
            or len(raw_lines) != len(raw_params) or not raw_lines:
        raise ParseError("'lines' and 'params' must be equal-length nonempty lists",
                         location="plan")
    lines = []
    params = []
    blocks = []
    for j, entry in enumerate(raw_lines):
        loc = f"plan.lines[{j}]"
        if not isinstance(entry, dict):
            raise ParseError("line must be an object", location=loc)
        u = _vector_field(entry, "u", loc)
        v = _vector_field(entry, "v", loc)
        if u.shape != v.shape:
            raise ParseError("u and v must have equal length", location=loc)
        line = Line(u, v)
        row = raw_params[j]
        if not isinstance(row, list) or len(row) < 4:
            raise ParseError("params row must list at least four values",
                             location=f"plan.params[{j}]")
        ts = [float(t) for t in row]
        lines.append(line)
        params.append(tuple(ts))
        blocks.append(line.points_at(ts))
    line_set = FeasibleLineSet(tuple(lines), None, None)
    return SamplePlan(line_set, tuple(params), np.concatenate(blocks, axis=0))


def samples_to_json_obj(samples: LabeledSamples, plan_ref: str) -> dict:
    return {
        "plan_ref": plan_ref,
        "points": [[float(x) for x in row] for row in samples.plan.points],
        "values": [float(v) for v in samples.values],
    }


def samples_from_json_obj(obj, plan: SamplePlan,
                          tol: ToleranceConfig = DEFAULT_TOL) -> LabeledSamples:
    if not isinstance(obj, dict) or "values" not in obj or "points" not in obj:
        raise ParseError("samples payload must carry 'points' and 'values'",
                         location="samples")
    values = np.asarray(obj["values"], dtype=float)
    points = np.asarray(obj["points"], dtype=float)
    if points.shape != plan.points.shape:
        raise ParseError("sample points do not match the referenced plan",
                         location="samples.points")
    scale = 1.0 + float(np.max(np.abs(plan.points)))
    if float(np.max(np.abs(points - plan.points))) > tol.match_tol * scale:
        raise ParseError("sample points disagree with the referenced plan",
                         location="samples.points")
    if values.ndim != 1 or values.shape[0] != points.shape[0]:
        raise ParseError("values must list one number per point",
                         location="samples.values")
    return LabeledSamples(plan, values)
