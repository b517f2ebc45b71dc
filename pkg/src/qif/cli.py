"""The ``qif`` command-line tool."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .collateral import (
    Correlation,
    ccap_ratio,
    check_collateral_bound,
    collateral_leakage,
    maximizing_gain_report,
)
from .dsl import compile_source, parse
from .dsl import demos
from .dsl.syntax import to_jsonable as ast_jsonable
from .errors import CapExceeded, QifError
from .hmm import DEFAULT_MAX_COLUMNS, HmmSteps, denote, effective_channel_steps
from .measures import (
    GainFunction,
    gid,
    hyper_vulnerability,
    leakage,
    min_capacity_ratio,
    shannon_hyper,
)
from .prob import Dist, Hyper, encode_label, fmt_bits, lg, project_hyper, rational_str
from .refine import VIEWS, bayes_refutation, refine_hmm, refine_structural

EXIT_OK, EXIT_ERROR, EXIT_CAP = 0, 1, 3


# -- helpers --------------------------------------------------------------


def _read(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _compile(path: str, args) -> HmmSteps:
    return compile_source(_read(path), max_states=args.max_states, unroll_override=args.unroll_override)


def _prior(spec: str, states: tuple) -> Dist:
    if spec == "uniform":
        return Dist.uniform(states)
    prior = Dist.from_jsonable(json.loads(_read(spec)))
    if prior.domain != states:
        raise QifError("prior domain does not match the program's state space")
    return prior


def _gain(spec: str, domain: tuple) -> GainFunction:
    if spec == "gid":
        return gid(domain)
    g = GainFunction.from_jsonable(json.loads(_read(spec)))
    if g.domain != domain:
        raise QifError("gain function domain does not match")
    return g


def _bits(ratio) -> dict:
    return {"ratio": rational_str(ratio), "bits": fmt_bits(lg(ratio))}


def _label(v) -> str:
    v = encode_label(v)
    return v if isinstance(v, str) else json.dumps(v, separators=(",", ":"))


def _hyper_text(h: Hyper) -> list[str]:
    lines = []
    for p, d in h:
        inner = ", ".join(f"{_label(v)}@{rational_str(q)}" for v, q in zip(d.domain, d.probs) if q)
        lines.append(f"  {rational_str(p)}: [{inner}]")
    return lines


def _flatten(obj, prefix="") -> list[str]:
    lines = []
    if isinstance(obj, dict):
        for k, v in obj.items():
            key = f"{prefix}.{k}" if prefix else k
            if isinstance(v, dict):
                lines.extend(_flatten(v, key))
            else:
                lines.append(f"{key}: {json.dumps(v) if isinstance(v, (list, bool)) else v}")
    return lines


def _emit(args, obj, text_lines: list[str] | None = None):
    if args.format == "json":
        print(json.dumps(obj, indent=2))
    else:
        for line in text_lines if text_lines is not None else _flatten(obj):
            print(line)


# -- commands -------------------------------------------------------------


def cmd_parse(args) -> int:
    program = parse(_read(args.file))
    out = ast_jsonable(program)
    _emit(args, out, [json.dumps(out, indent=2)])
    return EXIT_OK


def cmd_compile(args) -> int:
    steps = _compile(args.file, args)
    out = steps.to_jsonable()
    if args.format == "json":
        print(json.dumps(out, indent=2))
    else:
        print(f"{len(steps)} steps over {len(steps.states)} states")
        for i, s in enumerate(steps):
            print(f"  step {i + 1}: channel {len(s.channel.rows)}x{len(s.channel.cols)}, markov {len(s.markov.rows)}x{len(s.markov.cols)}")
    return EXIT_OK


def cmd_hyper(args) -> int:
    steps = _compile(args.file, args)
    prior = _prior(args.prior, steps.states)
    h = denote(steps.to_hmm(max_columns=args.max_columns), prior)
    if args.project:
        h = project_hyper(h, args.project)
    out = h.to_jsonable()
    _emit(args, out, [f"hyper with {len(h)} inners (outer: inner)"] + _hyper_text(h))
    return EXIT_OK


def cmd_leakage(args) -> int:
    steps = _compile(args.file, args)
    prior = _prior(args.prior, steps.states)
    g = _gain(args.gain, steps.states)
    report = leakage(g, prior, effective_channel_steps(steps.steps, max_columns=args.max_columns))
    _emit(args, report.to_jsonable())
    return EXIT_OK


def cmd_capacity(args) -> int:
    steps = _compile(args.file, args)
    ratio = min_capacity_ratio(effective_channel_steps(steps.steps, max_columns=args.max_columns))
    _emit(args, {"capacity": _bits(ratio)})
    return EXIT_OK


def cmd_ccap(args) -> int:
    steps = _compile(args.file, args)
    bound = ccap_ratio(steps)
    exact = min_capacity_ratio(effective_channel_steps(steps.steps, max_columns=args.max_columns))
    _emit(args, {"ccap": _bits(bound), "exactCapacity": _bits(exact)})
    return EXIT_OK


def _correlation(spec: str, states: tuple, prior: Dist, seed: int) -> Correlation:
    if spec == "identity":
        return Correlation.identity(prior)
    if spec == "independent":
        return Correlation.independent(Dist.uniform(states), prior)
    if spec == "random":
        return Correlation.random(states, states, seed)
    corr = Correlation.from_jsonable(json.loads(_read(spec)))
    if corr.x_domain != states:
        raise QifError("correlation X domain does not match the program's state space")
    return corr


def cmd_collateral(args) -> int:
    steps = _compile(args.file, args)
    prior = _prior(args.prior, steps.states)
    corr = _correlation(args.correlation, steps.states, prior, args.seed)
    chan = effective_channel_steps(steps.steps, max_columns=args.max_columns)
    g = _gain(args.gain, corr.z_domain)
    out = {
        "leakage": collateral_leakage(g, corr, chan).to_jsonable(),
        "maximizingGains": maximizing_gain_report(corr, chan).to_jsonable(),
        "capacityBound": check_collateral_bound(corr, chan).to_jsonable(),
    }
    _emit(args, out)
    return EXIT_OK


def cmd_refine(args) -> int:
    p, q = _compile(args.p, args), _compile(args.q, args)
    if p.states != q.states:
        raise QifError("the two programs have different state spaces")
    prior = _prior(args.prior, p.states)
    hp, hq = p.to_hmm(max_columns=args.max_columns), q.to_hmm(max_columns=args.max_columns)
    verdict = refine_structural(hp, hq) if args.structural else refine_hmm(hp, hq, prior, view=args.view)
    out = {"verdict": verdict.to_jsonable()}
    if args.bayes_refute:
        out["bayesRefutation"] = bayes_refutation(p, q, prior).to_jsonable()
    lines = [f"verdict: {verdict.reason}"]
    if verdict.note:
        lines.append(f"note: {verdict.note}")
    if verdict.vulnerabilities:
        v1, v2 = verdict.vulnerabilities
        lines.append(f"counterexample vulnerabilities: {rational_str(v1)} < {rational_str(v2)}")
    if args.bayes_refute:
        r = out["bayesRefutation"]
        if r["refuted"]:
            b1, b2 = r["bayesVulnerability"]
            lines.append(f"REFINEMENT DENIED: collateral Bayes vulnerability {b1} < {b2}")
        else:
            lines.append("no Bayes refutation: the effective channels refine")
    _emit(args, out, lines)
    return EXIT_OK


def _bits_range(text: str) -> list[int]:
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(text)]


def cmd_demo(args) -> int:
    out_dir = Path(args.out) if args.out else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)
    if args.name == "passwords":
        return _demo_passwords(args, out_dir)
    if args.name == "bitflip":
        if out_dir:
            (out_dir / "bit_flip.qif").write_text(demos.bit_flip(), encoding="utf-8")
        steps = compile_source(demos.bit_flip())
        exact = min_capacity_ratio(effective_channel_steps(steps.steps))
        _emit(args, {"ccap": _bits(ccap_ratio(steps)), "exactCapacity": _bits(exact)})
        return EXIT_OK
    bits = _bits_range(args.bits)
    rows = []
    for spec in args.divisors:
        ds = sorted({int(d) for d in spec.split(",")})
        caps = []
        for b in bits:
            src = demos.expmod(b, ds)
            if out_dir:
                (out_dir / f"expmod_{b}_{''.join(map(str, ds))}.qif").write_text(src, encoding="utf-8")
            steps = compile_source(src, max_states=args.max_states)
            caps.append(min_capacity_ratio(effective_channel_steps(steps.steps, max_columns=args.max_columns)))
        rows.append((ds, caps))
    out = {
        "bits": bits,
        "rows": [{"divisors": ds, "capacity": [_bits(c) for c in caps]} for ds, caps in rows],
    }
    header = "divisors  " + "".join(f"{b:>8}" for b in bits)
    lines = [header] + [
        f"{'{' + ','.join(map(str, ds)) + '}':<10}" + "".join(f"{lg(c):>8.2f}" for c in caps) for ds, caps in rows
    ]
    _emit(args, out, lines)
    return EXIT_OK


def _demo_passwords(args, out_dir) -> int:
    out, lines = {}, []
    for name, src in demos.passwords().items():
        if out_dir:
            (out_dir / f"{name}.qif").write_text(src, encoding="utf-8")
        steps = compile_source(src)
        prior = Dist.uniform(steps.states)
        joint = denote(steps.to_hmm(), prior)
        initial = project_hyper(joint, "initial")
        bayes = hyper_vulnerability(gid(initial.domain), initial)
        out[name] = {
            "source": src,
            "hyper": joint.to_jsonable(),
            "initialHyper": initial.to_jsonable(),
            "bayesVulnerability": rational_str(bayes),
            "shannon": fmt_bits(shannon_hyper(initial)),
        }
        lines += [f"== {name}", src.rstrip(), "hyper over (initial, final):"] + _hyper_text(joint)
        lines += ["initial-state hyper:"] + _hyper_text(initial)
        lines += [f"Bayes vulnerability: {rational_str(bayes)}", f"Shannon entropy: {fmt_bits(shannon_hyper(initial))}", ""]
    _emit(args, out, lines)
    return EXIT_OK


# -- argument parsing -----------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "json"), default="text", help="output format")
    common.add_argument("--max-states", type=_positive, default=10**5, help="cap on the state-space size")
    common.add_argument("--max-columns", type=_positive, default=DEFAULT_MAX_COLUMNS, help="cap on observation columns")
    common.add_argument("--unroll-override", type=int, default=None, help="replace every loop's unroll bound")
    common.add_argument("--seed", type=int, default=0, help="seed for random fixtures")

    parser = argparse.ArgumentParser(prog="qif", description="Exact quantitative information-flow analysis.")
    parser.add_argument("--version", action="version", version=f"qif {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", parents=[common], help="parse a program and dump its syntax tree")
    p.add_argument("file")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("compile", parents=[common], help="compile a program to HMM steps")
    p.add_argument("file")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("hyper", parents=[common], help="hyper over (initial, final) states")
    p.add_argument("file")
    p.add_argument("--prior", default="uniform", help="'uniform' or a distribution JSON file")
    p.add_argument("--project", choices=("initial", "final"), default=None)
    p.set_defaults(func=cmd_hyper)

    p = sub.add_parser("leakage", parents=[common], help="g-leakage about the initial state")
    p.add_argument("file")
    p.add_argument("--prior", default="uniform")
    p.add_argument("--gain", default="gid", help="'gid' or a gain-function JSON file")
    p.set_defaults(func=cmd_leakage)

    p = sub.add_parser("capacity", parents=[common], help="capacity over all priors and gains")
    p.add_argument("file")
    p.set_defaults(func=cmd_capacity)

    p = sub.add_parser("ccap", parents=[common], help="linear-cost collateral capacity bound")
    p.add_argument("file")
    p.set_defaults(func=cmd_ccap)

    p = sub.add_parser("collateral", parents=[common], help="leakage about a correlated secret Z")
    p.add_argument("file")
    p.add_argument("--correlation", default="identity", help="'identity', 'independent', 'random' or a JSON file")
    p.add_argument("--prior", default="uniform", help="X prior used by identity and independent correlations")
    p.add_argument("--gain", default="gid", help="gain on Z: 'gid' or a JSON file")
    p.set_defaults(func=cmd_collateral)

    p = sub.add_parser("refine", parents=[common], help="check that Q is at least as secure as P")
    p.add_argument("p")
    p.add_argument("q")
    p.add_argument("--prior", default="uniform")
    p.add_argument("--view", choices=VIEWS, default="initial", help="compare on pairs or on one side")
    p.add_argument("--structural", action="store_true", help="look for an all-prior observation post-processing")
    p.add_argument("--bayes-refute", action="store_true", help="try to deny refinement via collateral Bayes vulnerability")
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("demo", parents=[common], help="bundled examples")
    p.add_argument("name", choices=("expmod", "passwords", "bitflip"))
    p.add_argument("--bits", default="4..8", help="a bit width or a range like 4..8")
    p.add_argument("--divisors", nargs="+", default=["2", "2,3", "2,3,5"], help="divisor sets such as 2,3,5")
    p.add_argument("--out", default=None, help="directory to write the generated programs to")
    p.set_defaults(func=cmd_demo)
    return parser


def _positive(text: str) -> int:
    value = int(text)
    if value <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CapExceeded as exc:
        print(f"qif: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (QifError, OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"qif: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
