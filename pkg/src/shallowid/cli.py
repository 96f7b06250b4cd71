"""Command-line surface: JSON files in, JSON files out, deterministic given
the seed.  Exit codes: 0 success, 2 domain error, 3 parse error.

Note the reducibility/equivalence searches enumerate subsets of the lone-
orientation neurons and sign patterns, so they are exponential in the neuron
count; the toolkit targets desk-scale networks (m up to roughly 12).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile

import numpy as np

from . import analytic_id, net_core, relu_adversary, relu_sampling, relu_structure
from .errors import InputError, ParseError, ToolkitError
from .tolerances import DEFAULT_TOL, ToleranceConfig


def _write_atomic(path: str, obj) -> None:
    payload = (json.dumps(obj, sort_keys=True, separators=(",", ":"),
                          allow_nan=False) + "\n").encode("utf-8")
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".json")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read_json(path: str):
    try:
        with open(path, "rb") as handle:
            text = handle.read().decode("utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}", location=path) from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON in {path}: {exc.msg}",
                         location=f"{path}:offset {exc.pos}") from exc


def _read_net(path: str) -> net_core.ShallowNet:
    return net_core.net_from_json_obj(_read_json(path), location=path)


def _tol_from_args(args) -> ToleranceConfig:
    return ToleranceConfig(
        rank_tol=args.tol_rank if args.tol_rank is not None else DEFAULT_TOL.rank_tol,
        match_tol=args.tol_match if args.tol_match is not None else DEFAULT_TOL.match_tol,
        residual_tol=(args.tol_residual if args.tol_residual is not None
                      else DEFAULT_TOL.residual_tol),
        zero_tol=DEFAULT_TOL.zero_tol,
    )


def _load_plan(args) -> relu_sampling.SamplePlan:
    if args.plan:
        return relu_sampling.plan_from_json_obj(_read_json(args.plan))
    data_obj = _read_json(args.data)
    ref = data_obj.get("plan_ref") if isinstance(data_obj, dict) else None
    if not isinstance(ref, str):
        raise ParseError("samples file has no usable plan_ref; pass --plan",
                         location=f"{args.data}.plan_ref")
    candidates = [ref, os.path.join(os.path.dirname(os.path.abspath(args.data)), ref)]
    for candidate in candidates:
        if os.path.exists(candidate):
            return relu_sampling.plan_from_json_obj(_read_json(candidate))
    raise ParseError(f"referenced plan {ref!r} not found; pass --plan",
                     location=f"{args.data}.plan_ref")


def _cmd_check(args, tol) -> int:
    net = _read_net(args.net)
    if net.activation.kind == "relu":
        report = relu_structure.check_admissible(net, tol)
        if not report:
            # dropping a zero neuron or merging a duplicate ridge reduces m
            print(f"reducible ({net.m} neurons, not admissible: "
                  f"{report.violations[0]['reason']})")
            return 0
        witness = relu_structure.test_reducible(net_core.group(net, tol), tol)
        if witness is None:
            print(f"irreducible ({net.m} neurons)")
        else:
            print(f"reducible ({net.m} neurons, witness case {witness.case})")
    else:
        report = analytic_id.check_admissible_analytic(net, tol)
        if report:
            print(f"irreducible ({net.m} neurons)")
        else:
            print(f"reducible ({net.m} neurons): {report.violations[0]['reason']}")
    return 0


def _cmd_reduce(args, tol) -> int:
    net = _read_net(args.net)
    if net.activation.kind != "relu":
        raise InputError("reduce applies to relu networks")
    reduced = relu_structure.reduce_fully(net, tol)
    _write_atomic(args.out, net_core.net_to_json_obj(reduced))
    print(f"reduced {net.m} -> {reduced.m} neurons; wrote {args.out}")
    return 0


def _cmd_equiv(args, tol) -> int:
    n1 = _read_net(args.net1)
    n2 = _read_net(args.net2)
    if n1.activation.kind != n2.activation.kind:
        raise InputError("networks use different activations")
    if n1.activation.kind == "relu":
        cert = relu_structure.test_equivalent(n1, n2, tol)
        if cert is None:
            print("equivalent: no")
        else:
            print("equivalent: yes")
            if args.cert:
                _write_atomic(args.cert, relu_structure.certificate_to_json_obj(cert))
                print(f"certificate written to {args.cert}")
    else:
        same = analytic_id.test_equivalent_analytic(n1, n2, tol)
        print(f"equivalent: {'yes' if same else 'no'}")
    return 0


def _cmd_plan_relu(args, tol) -> int:
    net = _read_net(args.net)
    if net.activation.kind != "relu":
        raise InputError("plan-relu applies to relu networks")
    g = net_core.group(net, tol)
    if relu_structure.test_reducible(g, tol) is not None:
        raise InputError("network is reducible; reduce it before planning")
    lines = relu_sampling.build_feasible_lines(g, args.seed, tol)
    plan = relu_sampling.build_sample_plan(g, lines, args.seed, tol)
    _write_atomic(args.out, relu_sampling.plan_to_json_obj(plan))
    print(f"plan with {len(plan.lines)} lines and {plan.points.shape[0]} points; "
          f"wrote {args.out}")
    return 0


def _cmd_sample(args, tol) -> int:
    net = _read_net(args.net)
    plan = relu_sampling.plan_from_json_obj(_read_json(args.plan))
    samples = relu_sampling.sample_values(net, plan)
    _write_atomic(args.out, relu_sampling.samples_to_json_obj(samples, args.plan))
    print(f"sampled {samples.values.shape[0]} values; wrote {args.out}")
    return 0


def _cmd_reconstruct(args, tol) -> int:
    plan = _load_plan(args)
    samples = relu_sampling.samples_from_json_obj(_read_json(args.data), plan, tol)
    net = relu_sampling.reconstruct(samples, tol)
    _write_atomic(args.out, net_core.net_to_json_obj(net))
    print(f"reconstructed a {net.m}-neuron network; wrote {args.out}")
    if args.against:
        original = _read_net(args.against)
        cert = relu_structure.test_equivalent(original, net, tol)
        print(f"equivalence certificate: {'found' if cert else 'none'}")
    return 0


def _cmd_adversary(args, tol) -> int:
    obj = _read_json(args.points)
    if not isinstance(obj, dict) or "points" not in obj:
        raise ParseError("points file must carry a 'points' array",
                         location=args.points)
    pts = np.asarray(obj["points"], dtype=float)
    pair = relu_adversary.build_pair(pts, args.m, args.seed, tol)
    _write_atomic(args.out, relu_adversary.pair_to_json_obj(pair))
    agree = float(np.max(np.abs(net_core.evaluate_many(pair.net1, pts)
                                - net_core.evaluate_many(pair.net2, pts))))
    gap = abs(net_core.evaluate(pair.net1, pair.witness)
              - net_core.evaluate(pair.net2, pair.witness))
    print(f"agreement gap on the {pts.shape[0]} given points: {agree:.3e}")
    print(f"witness gap: {gap:.3e}; wrote {args.out}")
    return 0


def _cmd_plan_analytic(args, tol) -> int:
    plan = analytic_id.build_analytic_plan(args.m, args.d, cap=args.cap, tol=tol)
    _write_atomic(args.out, analytic_id.analytic_plan_to_json_obj(plan))
    print(f"plan with {plan.size} points ({plan.frame.size} frame vectors x "
          f"{len(plan.scalars)} scalars); wrote {args.out}")
    return 0


def _cmd_verify_analytic(args, tol) -> int:
    n1 = _read_net(args.net1)
    n2 = _read_net(args.net2)
    plan = analytic_id.analytic_plan_from_json_obj(_read_json(args.plan), tol)
    report = analytic_id.verify_identification(n1, n2, plan, tol)
    _write_atomic(args.out, analytic_id.report_to_json_obj(report))
    print(f"max gap on plan: {report.max_gap:.3e}; equal_on_plan="
          f"{report.equal_on_plan}; equivalent={report.equivalent}")
    if report.warning:
        print(f"warning: {report.warning}")
    return 0


def _cmd_expsum(args, tol) -> int:
    net = _read_net(args.net)
    if net.activation.kind == "relu":
        raise InputError("expsum applies to sigmoid/tanh networks")
    if net.d != 1:
        raise InputError("expsum applies to one-dimensional networks", d=net.d)
    net = analytic_id.sigmoid_form(net)
    a = [float(n.a[0]) for n in net.neurons]
    b = [float(n.b) for n in net.neurons]
    s = [float(n.s) for n in net.neurons]
    expansion = analytic_id.exp_sum_expansion(a, b, s, net.c, tol)
    _write_atomic(args.out, {"exponents": list(expansion.exponents),
                             "coefficients": list(expansion.coefficients)})
    xs = np.linspace(-1.0, 1.0, 101)
    lhs = analytic_id.cleared_form_value(a, b, s, net.c, xs)
    rhs = expansion.evaluate(xs)
    residual = float(np.max(np.abs(lhs - rhs) / (1.0 + np.abs(lhs))))
    print(f"{len(expansion.exponents)} exponents; identity residual "
          f"{residual:.3e}; wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    shared.add_argument("--tol-rank", type=float, default=argparse.SUPPRESS)
    shared.add_argument("--tol-match", type=float, default=argparse.SUPPRESS)
    shared.add_argument("--tol-residual", type=float, default=argparse.SUPPRESS)
    shared.add_argument("--cap", type=int, default=argparse.SUPPRESS,
                        help="analytic plan size cap")

    parser = argparse.ArgumentParser(
        prog="shallowid",
        parents=[shared],
        description=("Decide irreducibility and equivalence of two-layer "
                     "networks, build sampling plans, reconstruct relu "
                     "networks from samples, and construct point-set "
                     "adversaries.  Searches are exponential in the neuron "
                     "count; intended for desk-scale networks."))
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str):
        return sub.add_parser(name, help=help_text, parents=[shared])

    p = add("check", "report (ir)reducibility of a network")
    p.add_argument("--net", required=True)
    p.set_defaults(func=_cmd_check)

    p = add("reduce", "reduce a relu network to a fixpoint")
    p.add_argument("--net", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_reduce)

    p = add("equiv", "test equivalence of two networks")
    p.add_argument("--net1", required=True)
    p.add_argument("--net2", required=True)
    p.add_argument("--cert", default=None, help="write the certificate here")
    p.set_defaults(func=_cmd_equiv)

    p = add("plan-relu", "build a sampling plan for a relu network")
    p.add_argument("--net", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_plan_relu)

    p = add("sample", "evaluate a network on a plan")
    p.add_argument("--net", required=True)
    p.add_argument("--plan", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sample)

    p = add("reconstruct", "rebuild a relu network from samples")
    p.add_argument("--data", required=True)
    p.add_argument("--plan", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--against", default=None,
                   help="also test equivalence against this network")
    p.set_defaults(func=_cmd_reconstruct)

    p = add("adversary", "build an agreeing non-equivalent pair")
    p.add_argument("--points", required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_adversary)

    p = add("plan-analytic", "build the universal analytic plan")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_plan_analytic)

    p = add("verify-analytic", "compare two analytic networks on a plan")
    p.add_argument("--net1", required=True)
    p.add_argument("--net2", required=True)
    p.add_argument("--plan", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_verify_analytic)

    p = add("expsum", "exponential-sum expansion of a 1-d analytic net")
    p.add_argument("--net", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_expsum)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    # the global flags are SUPPRESS-defaulted so that either position
    # (before or after the subcommand) wins; fill the gaps here
    for name, default in (("seed", 0), ("tol_rank", None), ("tol_match", None),
                          ("tol_residual", None), ("cap", 1_000_000)):
        if not hasattr(args, name):
            setattr(args, name, default)
    tol = _tol_from_args(args)
    try:
        return args.func(args, tol)
    except ParseError as exc:
        print(json.dumps(exc.to_json_obj(), sort_keys=True), file=sys.stderr)
        return 3
    except ToolkitError as exc:
        print(json.dumps(exc.to_json_obj(), sort_keys=True), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
