"""Command-line entry point: ``stochsub {gen,run,exact,bound,gap,verify}``.

Exit codes: 0 success, 1 usage or invalid input, 2 I/O failure,
3 verification failure, 4 enumeration cap exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import io as instance_io
from .bounds import LP_CAP, verify_gap_chain
from .errors import EnumerationTooLargeError, StochSubError
from .evaluate import DEFAULT_CAP
from .experiments import (
    MATROID_KINDS,
    OBJECTIVE_KINDS,
    POLICIES,
    TightExampleSpec,
    compare_policies,
    gap_experiment,
    gen_random_instance,
    replicate_realizations,
)
from .matroid import Matroid, UniformMatroid, matroid_from_json
from .oracles import ExactOracle
from .policies import (
    evaluate_adaptive_exact,
    greedy_nonadaptive,
    optimal_adaptive_exact,
    optimal_nonadaptive_exact,
    run_myopic_adaptive,
)
from .verify import run_suite

EXIT_USAGE, EXIT_IO, EXIT_VERIFY, EXIT_CAP = 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _shared(p: argparse.ArgumentParser) -> None:
    p.add_argument("--instance", help="instance JSON file")
    p.add_argument("--matroid", help="matroid as inline JSON, a JSON file, or uniform:K (overrides the file's block)")
    p.add_argument("--policy", default="myopic", help=f"comma-separated subset of {','.join(POLICIES)}")
    p.add_argument("--seed", type=_seed, default=0, help="root seed; every random stream derives from it (default 0)")
    p.add_argument("--replicates", type=int, default=100)
    p.add_argument("--samples", type=int, default=200, help="Monte Carlo samples per estimate")
    p.add_argument("--steps", type=int, default=100, help="continuous greedy steps T")
    p.add_argument("--out", help="output file (default: standard output)")
    p.add_argument("--cap-scenarios", type=int, default=None, help="enumeration cap override")
    p.add_argument("--config", help="JSON file of flag defaults; explicit flags win")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="stochsub", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("gen", help="write a generated instance file")
    gen.add_argument("family", choices=("random", "tight"))
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--support", type=int, default=2)
    gen.add_argument("--objective", choices=OBJECTIVE_KINDS, default="coverage")
    gen.add_argument("--matroid-kind", choices=MATROID_KINDS, default="uniform")
    gen.add_argument("--rank", type=int, default=None)
    gen.add_argument("--copies", type=int, default=None, help="tight: copies per collection (default n^2)")
    gen.add_argument("--budget", type=int, default=None, help="tight: cardinality budget (default n^2)")
    _shared(gen)

    for name, text in (
        ("run", "Monte Carlo comparison of policies (CSV)"),
        ("exact", "exact optimal and myopic values (JSON)"),
        ("bound", "adaptivity-gap bound certificate (JSON)"),
    ):
        p = sub.add_parser(name, help=text)
        _shared(p)
        if name == "run":
            p.add_argument("--trace", help="write myopic traces as JSON lines to this file")

    gap = sub.add_parser("gap", help="tight-example adaptivity gap experiment (CSV)")
    gap.add_argument("--n", default="10,30,100", help="comma-separated n values")
    _shared(gap)

    ver = sub.add_parser("verify", help="exhaustive small-instance property suite (JSON)")
    ver.add_argument("--suite", choices=("small",), default="small")
    ver.add_argument("--count", type=int, default=500)
    _shared(ver)
    return parser


def _parse(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            defaults = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except OSError as exc:
            raise OSError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise UsageError(f"config is not valid JSON: {exc}") from None
        if not isinstance(defaults, dict):
            raise UsageError("config must be a JSON object")
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        unknown = set(defaults) - known
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        sub.set_defaults(**{k.replace("-", "_"): v for k, v in defaults.items()})
        args = parser.parse_args(argv)
    return args


def _load_matroid(spec: str, n: int) -> Matroid:
    if spec.startswith("uniform:"):
        return UniformMatroid(n, int(spec.split(":", 1)[1]))
    text = spec if spec.lstrip().startswith("{") else Path(spec).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"matroid spec is not valid JSON: {exc}") from None
    return matroid_from_json(data, n)


def _problem(args):
    if not args.instance:
        raise UsageError("--instance is required")
    instance, matroid = instance_io.load(args.instance)
    if args.matroid:
        matroid = _load_matroid(args.matroid, instance.n)
    if matroid is None:
        raise UsageError("no matroid: add a 'matroid' block to the instance or pass --matroid")
    return instance, matroid


def _emit(args, text: str) -> None:
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def cmd_gen(args) -> int:
    if args.family == "tight":
        spec = TightExampleSpec(args.n, args.copies, args.budget)
        instance, matroid = spec.materialize()
    else:
        instance, matroid = gen_random_instance(
            args.n, args.support, args.objective, args.matroid_kind, seed=args.seed, rank=args.rank, small=False
        )
    _emit(args, instance_io.dumps(instance, matroid))
    return 0


def cmd_run(args) -> int:
    instance, matroid = _problem(args)
    policies = [p.strip() for p in args.policy.split(",") if p.strip()]
    cap = args.cap_scenarios or DEFAULT_CAP
    report = compare_policies(instance, matroid, policies, args.replicates, args.seed, args.steps, args.samples, cap)
    if args.trace:
        lines = []
        for r, z in enumerate(replicate_realizations(instance, args.seed, args.replicates)):
            trace = run_myopic_adaptive(instance, matroid, realization=z)
            lines.append(trace.to_jsonl(replicate=r))
        Path(args.trace).write_text("".join(lines), encoding="utf-8", newline="\n")
    _emit(args, report.to_csv())
    return 0


def cmd_exact(args) -> int:
    instance, matroid = _problem(args)
    cap = args.cap_scenarios or DEFAULT_CAP
    oracle = ExactOracle(instance, cap)
    A, _ = optimal_adaptive_exact(instance, matroid, cap=cap)
    N, best = optimal_nonadaptive_exact(instance, matroid, oracle=oracle, cap=cap)
    greedy = greedy_nonadaptive(instance, matroid, oracle=oracle)
    out = {
        "opt_adaptive": A,
        "opt_nonadaptive": N,
        "opt_nonadaptive_set": sorted(best),
        "myopic": evaluate_adaptive_exact(instance, matroid, cap=cap),
        "greedy_set": sorted(greedy),
        "greedy": oracle.value(greedy),
        "gap": A / N if N > 0 else None,
    }
    _emit(args, _json(out))
    return 0


def cmd_bound(args) -> int:
    instance, matroid = _problem(args)
    cert = verify_gap_chain(instance, matroid, cap=args.cap_scenarios or LP_CAP)
    _emit(args, _json(cert.to_dict()))
    if not cert.ok:
        print(f"bound chain violated: {cert.violations()}", file=sys.stderr)
        return EXIT_VERIFY
    return 0


def cmd_gap(args) -> int:
    try:
        ns = [int(v) for v in args.n.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"--n must be comma-separated integers, got {args.n!r}") from None
    _emit(args, gap_experiment(ns, args.replicates, args.seed).to_csv())
    return 0


def cmd_verify(args) -> int:
    result = run_suite(args.count, args.seed)
    _emit(args, _json(result.to_dict()))
    if not result.ok:
        for v in result.violations:
            print(f"violation: {v}", file=sys.stderr)
        return EXIT_VERIFY
    return 0


COMMANDS = {"gen": cmd_gen, "run": cmd_run, "exact": cmd_exact, "bound": cmd_bound, "gap": cmd_gap, "verify": cmd_verify}


def main(argv=None) -> int:
    try:
        try:
            args = _parse(argv)
        except SystemExit as exc:  # argparse: --help or a usage error
            return int(exc.code or 0)
        config = {k: v for k, v in sorted(vars(args).items())}
        print(json.dumps({"config": config}, sort_keys=True), file=sys.stderr)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"stochsub: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except EnumerationTooLargeError as exc:
        print(f"stochsub: {exc}", file=sys.stderr)
        return EXIT_CAP
    except OSError as exc:
        print(f"stochsub: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except StochSubError as exc:
        print(f"stochsub: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main_exit() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
