import itertools

import numpy as np
import pytest

import shallowid as si
from shallowid import (InputError, Line, LabeledSamples, build_feasible_lines,
                       build_sample_plan, extract_breakpoints, group, make_net,
                       reconstruct, recover_hyperplanes, sample_values)
from shallowid.relu_sampling import (plan_from_json_obj, plan_to_json_obj,
                                     samples_from_json_obj, samples_to_json_obj)

from helpers import random_irreducible_relu


def cross_net():
    return make_net("relu", [((1.0, 1.0), 0.0, 1.0), ((1.0, -1.0), 0.0, 1.0)], 0.0)


def exhaustive_collinear_triples_ok(points, lines, tol=1e-8):
    """Independent O(n^3) check of the plan collinearity condition."""

    n = points.shape[0]
    scale = 1.0 + float(np.max(np.abs(points)))
    for i, j, k in itertools.combinations(range(n), 3):
        p, q, r = points[i], points[j], points[k]
        dv = q - p
        dv = dv / np.linalg.norm(dv)
        perp = (r - p) - float((r - p) @ dv) * dv
        if float(np.linalg.norm(perp)) > tol * scale:
            continue  # not collinear
        on_plan_line = False
        for line in lines:
            v = line.v / np.linalg.norm(line.v)
            ok = True
            for x in (p, q, r):
                rel = x - line.u
                if float(np.linalg.norm(rel - float(rel @ v) * v)) > tol * scale:
                    ok = False
                    break
            if ok:
                on_plan_line = True
                break
        if not on_plan_line:
            return False
    return True


def test_feasible_lines_cardinality_and_crossings():
    g = group(cross_net())
    ls = build_feasible_lines(g, seed=0)
    assert len(ls.lines) == 2 * 2
    assert all(len(w) == 2 for w in ls.crossing_params)
    assert all(sorted(w) == list(w) for w in ls.crossing_params)


def test_feasible_line_directions_have_full_rank():
    rng = np.random.default_rng(1)
    net = random_irreducible_relu(rng, 3, 3)
    ls = build_feasible_lines(group(net), seed=5)
    assert si.rank(np.stack([ln.v for ln in ls.lines])) == 3


def test_feasible_lines_reject_paired_networks():
    a = np.array([1.0, 0.0])
    paired = make_net("relu", [(a, 0.0, 1.0), (-a, 0.0, 2.0)], 0.0)
    with pytest.raises(InputError):
        build_feasible_lines(group(paired), seed=0)


def test_plan_point_counts():
    g = group(cross_net())
    ls = build_feasible_lines(g, seed=0)
    plan = build_sample_plan(g, ls, seed=0)
    assert plan.points.shape == (24, 2)  # (2*2+2)*2*2
    assert all(len(p) == 6 for p in plan.params)


def test_plan_two_params_per_interval():
    g = group(cross_net())
    ls = build_feasible_lines(g, seed=3)
    plan = build_sample_plan(g, ls, seed=3)
    for ts, w in zip(plan.params, ls.crossing_params):
        edges = [-np.inf] + list(w) + [np.inf]
        for k in range(len(edges) - 1):
            inside = [t for t in ts if edges[k] < t < edges[k + 1]]
            assert len(inside) == 2


def test_plan_collinear_triples_all_on_plan_lines():
    g = group(cross_net())
    ls = build_feasible_lines(g, seed=0)
    plan = build_sample_plan(g, ls, seed=0)
    assert exhaustive_collinear_triples_ok(plan.points, plan.lines)


def test_extract_breakpoints_single_relu_on_line():
    bps, pieces = extract_breakpoints(
        Line(np.zeros(2), np.ones(2)), [-2.0, -1.0, 1.0, 2.0], [0.0, 0.0, 1.0, 2.0])
    assert bps == pytest.approx([0.0])
    assert pieces[0][0] == pytest.approx(0.0)
    assert pieces[1][0] == pytest.approx(1.0)


def test_extract_breakpoints_constant_data():
    bps, pieces = extract_breakpoints(
        Line(np.zeros(2), np.ones(2)), [0.0, 1.0, 2.0, 3.0], [4.0, 4.0, 4.0, 4.0])
    assert bps == [] and len(pieces) == 1


def test_extract_breakpoints_matches_known_crossings():
    net = cross_net()
    g = group(net)
    ls = build_feasible_lines(g, seed=2)
    plan = build_sample_plan(g, ls, seed=2)
    data = sample_values(net, plan)
    for j, line in enumerate(plan.lines):
        values = data.values[6 * j:6 * (j + 1)]
        bps, _ = extract_breakpoints(line, plan.params[j], values)
        assert np.allclose(sorted(bps), ls.crossing_params[j], atol=1e-9)


def test_extract_breakpoints_rejects_unsorted():
    with pytest.raises(InputError):
        extract_breakpoints(Line(np.zeros(2), np.ones(2)),
                            [1.0, 0.0, 2.0, 3.0], [0.0] * 4)


def test_recover_hyperplanes_cross_net_exact():
    g = group(cross_net())
    ls = build_feasible_lines(g, seed=0)
    crossings = [line.points_at(w) for line, w in zip(ls.lines, ls.crossing_params)]
    recovered = recover_hyperplanes(crossings)
    root2 = np.sqrt(2.0)
    expected = sorted([((1 / root2, -1 / root2), 0.0), ((1 / root2, 1 / root2), 0.0)])
    got = sorted((tuple(h.a), h.b) for h in recovered)
    for (ea, eb), (ga, gb) in zip(expected, got):
        assert np.max(np.abs(np.asarray(ea) - np.asarray(ga))) < 1e-9
        assert abs(eb - gb) < 1e-9


def test_recover_hyperplanes_round_trip():
    rng = np.random.default_rng(8)
    net = random_irreducible_relu(rng, 3, 2)
    g = group(net)
    truth = sorted(g.hyperplanes(), key=lambda h: (tuple(h.a), h.b))
    ls = build_feasible_lines(g, seed=11)
    crossings = [line.points_at(w) for line, w in zip(ls.lines, ls.crossing_params)]
    recovered = recover_hyperplanes(crossings)
    assert len(recovered) == 3
    for h_true, h_rec in zip(truth, recovered):
        assert np.max(np.abs(h_true.a - h_rec.a)) < 1e-8
        assert abs(h_true.b - h_rec.b) < 1e-8


def test_recover_hyperplanes_invariant_under_line_permutation():
    rng = np.random.default_rng(9)
    net = random_irreducible_relu(rng, 2, 2)
    g = group(net)
    ls = build_feasible_lines(g, seed=4)
    crossings = [line.points_at(w) for line, w in zip(ls.lines, ls.crossing_params)]
    first = recover_hyperplanes(crossings)
    second = recover_hyperplanes(crossings[::-1])
    for h1, h2 in zip(first, second):
        assert h1.matches(h2)


def test_reconstruct_round_trip_cross_net():
    net = cross_net()
    g = group(net)
    ls = build_feasible_lines(g, seed=0)
    plan = build_sample_plan(g, ls, seed=0)
    rec = reconstruct(sample_values(net, plan))
    assert si.test_equivalent(net, rec) is not None


def test_reconstruct_constant_data():
    net = cross_net()
    g = group(net)
    ls = build_feasible_lines(g, seed=1)
    plan = build_sample_plan(g, ls, seed=1)
    values = np.full(plan.points.shape[0], 3.25)
    rec = reconstruct(LabeledSamples(plan, values))
    assert rec.m == 0 and rec.c == pytest.approx(3.25)


def test_reconstruct_flipped_three_neuron_class():
    root2 = np.sqrt(2.0)
    a = [np.array([1.0, 0.0]), np.array([0.0, 1.0]), np.array([1.0, 1.0]) / root2]
    s = [1.0, 1.0, -root2]
    net = make_net("relu", [(-a[k], 0.0, s[k]) for k in range(3)], 0.0)
    g = group(net)
    ls = build_feasible_lines(g, seed=6)
    plan = build_sample_plan(g, ls, seed=6)
    rec = reconstruct(sample_values(net, plan))
    assert si.test_equivalent(net, rec) is not None


def test_plan_json_round_trip():
    g = group(cross_net())
    ls = build_feasible_lines(g, seed=0)
    plan = build_sample_plan(g, ls, seed=0)
    loaded = plan_from_json_obj(plan_to_json_obj(plan))
    assert np.max(np.abs(loaded.points - plan.points)) == 0.0
    data = sample_values(cross_net(), plan)
    obj = samples_to_json_obj(data, "plan.json")
    restored = samples_from_json_obj(obj, loaded)
    rec = reconstruct(restored)
    assert si.test_equivalent(cross_net(), rec) is not None


def test_reconstruct_rejects_corrupted_values():
    net = cross_net()
    g = group(net)
    ls = build_feasible_lines(g, seed=7)
    plan = build_sample_plan(g, ls, seed=7)
    values = si.evaluate_many(net, plan.points)
    values = values + np.sin(np.arange(values.size))  # not piecewise linear on lines
    with pytest.raises(si.ToolkitError):
        reconstruct(LabeledSamples(plan, values))


def test_recover_hyperplanes_rejects_scattered_points():
    rng = np.random.default_rng(23)
    scattered = [rng.uniform(-1, 1, size=(2, 2)) for _ in range(4)]
    with pytest.raises(si.RecoveryError):
        recover_hyperplanes(scattered)
