"""Command-line front end.

    levy-pricer validate SPEC [--theorem T]
    levy-pricer price    SPEC [--theorem T] [--tol X | --orders N1,N2,N3] [--mode M] [--put]
    levy-pricer mc       SPEC [--samples N] [--seed S] [--estimator E] [--counts n1,n2,n3]
    levy-pricer compare  SPEC [price and mc options]

Every command prints one JSON document
{command, spec_digest, spec, config, result, diagnostics, schema_version}.
SPEC may also be a document printed by an earlier run; its embedded spec
is used.  Exit codes: 0 success, 1 I/O or parse error, 2 validation
failure, 3 numerical failure, 4 bracket violation in compare.
"""

import argparse
import json
import math
import sys

import numpy as np

from .bounds import BoundMode, auto_orders, bracket_price, make_pricer, put_bounds
from .errors import (BudgetExceededError, CombinatorialBlowupError, ConvergenceError,
                     UnsupportedDependenceError, ValidationError)
from .mc_oracle import ESTIMATORS, MIN_SAMPLES, estimate_price
from .model import SpecFormatError, TheoremId, expected_s3s2, select_theorem, spec_from_json, \
    validate_model

SCHEMA_VERSION = 1
EXIT_OK, EXIT_IO, EXIT_INVALID, EXIT_NUMERIC, EXIT_BRACKET = 0, 1, 2, 3, 4
VERDICT = "MC CI ⊆ bracket ± 3σ"


class CliError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _triple(text):
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected three comma-separated integers")
    try:
        values = tuple(int(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError("expected three comma-separated integers") from None
    if min(values) < 0:
        raise argparse.ArgumentTypeError("orders must be >= 0")
    return values


def _positive(text):
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError("expected a positive number")
    return value


def build_parser():
    parser = argparse.ArgumentParser(prog="levy-pricer", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("spec", help="JSON spec document")
    common.add_argument("--theorem", default="auto", help="closed-form case (1-8, 4s) or auto")
    common.add_argument("--out", help="also write the output document here")
    pricing = argparse.ArgumentParser(add_help=False)
    pricing.add_argument("--tol", type=_positive, default=1e-8,
                         help="bracket width target when --orders is not given")
    pricing.add_argument("--orders", type=_triple, help="truncation orders N1,N2,N3")
    pricing.add_argument("--mode", choices=[m.value for m in BoundMode],
                         default=BoundMode.CONSERVATIVE.value)
    pricing.add_argument("--put", action="store_true", help="also bracket the put-side digital")
    mc = argparse.ArgumentParser(add_help=False)
    mc.add_argument("--samples", type=int, default=1_000_000)
    mc.add_argument("--seed", type=int, default=0)
    mc.add_argument("--estimator", choices=ESTIMATORS, default="conditional")
    mc.add_argument("--antithetic", action="store_true")
    mc.add_argument("--counts", type=_triple, help="condition on jump counts n1,n2,n3")
    sub.add_parser("validate", parents=[common], help="check a spec")
    sub.add_parser("price", parents=[common, pricing], help="closed-form price bracket")
    sub.add_parser("mc", parents=[common, mc], help="Monte Carlo estimate")
    sub.add_parser("compare", parents=[common, pricing, mc], help="bracket and Monte Carlo")
    return parser


def load_spec(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise CliError(EXIT_IO, f"{path}: {exc.strerror or exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CliError(EXIT_IO, f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if isinstance(doc, dict) and "schema_version" in doc and "spec" in doc:
        doc = doc["spec"]
    try:
        return spec_from_json(doc)
    except SpecFormatError as exc:
        raise CliError(EXIT_IO, f"{path}: {exc}") from None
    except ValueError as exc:
        raise CliError(EXIT_IO, f"{path}: {exc}") from None


def _theorem(spec, name):
    if name == "auto":
        try:
            return select_theorem(spec)
        except UnsupportedDependenceError as exc:
            raise CliError(EXIT_INVALID, str(exc)) from None
    try:
        return TheoremId(name)
    except ValueError:
        raise CliError(EXIT_IO, f"unknown theorem {name!r}") from None


def _price(spec, args, diagnostics):
    theorem = _theorem(spec, args.theorem)
    report = validate_model(spec, theorem)
    diagnostics["validation"] = report.to_json()
    if not report.ok:
        raise CliError(EXIT_INVALID, "validation failed: " + ", ".join(c.name for c in report.failures))
    pricer = make_pricer(theorem, spec, validate=False)
    if args.orders is not None:
        bounds = bracket_price(spec, theorem, args.orders, args.mode, pricer=pricer)
    else:
        bounds = auto_orders(spec, theorem, args.tol, pricer=pricer)
        if BoundMode(args.mode) != BoundMode.CONSERVATIVE:
            bounds = bracket_price(spec, theorem, bounds.orders, args.mode, pricer=pricer)
    diagnostics["warnings"] = list(report.warnings) + pricer.warnings
    result = {"theorem": theorem.value, "bounds": bounds.to_json()}
    if args.put:
        lo, hi = put_bounds(spec, bounds, expected_s3s2(spec))
        result["put"] = {"lower": lo, "upper": hi}
    return result, bounds


def _mc(spec, args, diagnostics):
    if args.samples < MIN_SAMPLES:
        raise CliError(EXIT_INVALID, f"--samples must be >= {MIN_SAMPLES}")
    report = validate_model(spec)
    diagnostics.setdefault("validation", report.to_json())
    if not report.ok:
        raise CliError(EXIT_INVALID, "validation failed: " + ", ".join(c.name for c in report.failures))
    try:
        select_theorem(spec)
    except UnsupportedDependenceError:
        diagnostics["closed_form"] = "no closed form; Monte Carlo only"
    est = estimate_price(spec, args.samples, args.seed, condition_counts=args.counts,
                         estimator=args.estimator, antithetic=args.antithetic)
    return est


def run(args):
    """Execute one command; returns (exit code, output document)."""
    diagnostics = {}
    doc = {"command": args.command, "spec_digest": None, "spec": None,
           "config": {k: v for k, v in vars(args).items() if k not in ("spec", "out")},
           "result": None, "diagnostics": diagnostics, "schema_version": SCHEMA_VERSION}
    code = EXIT_OK
    try:
        spec = load_spec(args.spec)
        doc["spec_digest"] = spec.digest()
        doc["spec"] = spec.to_json()
        if args.command == "validate":
            theorem = None if args.theorem == "auto" else _theorem(spec, args.theorem)
            if theorem is None:
                try:
                    theorem = select_theorem(spec)
                except UnsupportedDependenceError as exc:
                    diagnostics["closed_form"] = str(exc)
            report = validate_model(spec, theorem)
            doc["result"] = report.to_json()
            code = EXIT_OK if report.ok else EXIT_INVALID
        elif args.command == "price":
            doc["result"], _ = _price(spec, args, diagnostics)
        elif args.command == "mc":
            doc["result"] = _mc(spec, args, diagnostics).to_json()
        else:
            if args.counts is not None:
                raise CliError(EXIT_INVALID, "compare prices the full option; --counts is not allowed")
            priced, bounds = _price(spec, args, diagnostics)
            est = _mc(spec, args, diagnostics)
            ok = est.ci99_7[1] >= bounds.lower and est.ci99_7[0] <= bounds.upper
            priced["mc"] = est.to_json()
            priced["verdict"] = f"{VERDICT}: {'PASS' if ok else 'FAIL'}"
            doc["result"] = priced
            code = EXIT_OK if ok else EXIT_BRACKET
    except CliError as exc:
        diagnostics["error"] = str(exc)
        code = exc.code
    except ValidationError as exc:
        diagnostics["error"] = str(exc)
        code = EXIT_INVALID
    except (ConvergenceError, BudgetExceededError, CombinatorialBlowupError, ArithmeticError,
            ValueError) as exc:
        diagnostics["error"] = f"{type(exc).__name__}: {exc}"
        code = EXIT_NUMERIC
    return code, doc


def _json_safe(obj):
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def main(argv=None):
    args = build_parser().parse_args(argv)
    code, doc = run(args)
    text = json.dumps(_json_safe(doc), indent=2, ensure_ascii=False)
    print(text)
    if "error" in doc["diagnostics"]:
        print(f"levy-pricer: {doc['diagnostics']['error']}", file=sys.stderr)
    if args.out:
        try:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(text + "\n")
        except OSError as exc:
            print(f"levy-pricer: {args.out}: {exc.strerror or exc}", file=sys.stderr)
            return EXIT_IO
    return code


if __name__ == "__main__":
    sys.exit(main())
