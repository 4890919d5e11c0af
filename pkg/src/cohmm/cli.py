"""Command-line interface.

Exit codes: 0 equivalent / ok, 1 not equivalent, 2 invalid input,
3 internal error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .equivalence import METHODS, check_continuous, reduce_model
from .hmm import InvalidModelError, functional_decomposition, require_valid, validate
from .modelfile import BUNDLED, ModelFileError, dumps, finite_as_continuous, load, load_bundled
from .parser import ParseError
from .profiles import format_profile, format_rational
from .sim import SamplingError, sample_traces

EXIT_OK = 0
EXIT_NOT_EQUIVALENT = 1
EXIT_INVALID = 2
EXIT_INTERNAL = 3

SEED_ENV = "COHMM_SEED"


class UsageError(Exception):
    pass


def _load(name: str):
    """A model path, or the name of a bundled model."""
    path = Path(name)
    if not path.exists() and name in BUNDLED:
        return load_bundled(name)
    if not path.exists():
        raise UsageError(f"{name}: no such file (bundled models: {', '.join(BUNDLED)})")
    return load(path)


def _dist(model, name):
    try:
        return model.distribution(name)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None


def cmd_validate(args, out) -> int:
    model = _load(args.model)
    diags = validate(model.hmm, lint=not args.no_lint)
    for d in diags:
        print(d, file=out)
    errors = sum(d.level == "error" for d in diags)
    if errors:
        return EXIT_INVALID
    print(f"ok: {model.hmm.size} states, {len(model.hmm.profiles())} distinct profiles", file=out)
    return EXIT_OK


def cmd_check(args, out) -> int:
    model = _load(args.model)
    pi1, pi2 = _dist(model, args.dist1), _dist(model, args.dist2)
    v = check_continuous(model.hmm, pi1, pi2, fast_path=not args.no_fast_path, method=args.method)
    if args.json:
        print(json.dumps(v.to_json(), sort_keys=True), file=out)
    elif v.equivalent:
        print(f"equivalent (method {v.method}, basis dimension {v.basis_dimension})", file=out)
    else:
        word = " ".join(v.word) or "(empty word)"
        print(f"not equivalent (method {v.method}, basis dimension {v.basis_dimension})", file=out)
        print(f"witness: {word}", file=out)
        print(f"value: {format_rational(v.value)}", file=out)
        for letter in dict.fromkeys(v.word):
            print(f"  {letter} = {format_profile(v.letters[letter])}", file=out)
    return EXIT_OK if v.equivalent else EXIT_NOT_EQUIVALENT


def cmd_reduce(args, out) -> int:
    model = _load(args.model)
    f, used, letters = reduce_model(model.hmm, args.method)
    print(f"# method: {used}", file=out)
    for a, prof in letters.items():
        print(f"# {a} = {format_profile(prof)}", file=out)
    out.write(dumps(finite_as_continuous(f), model.distributions))
    return EXIT_OK


def cmd_decompose(args, out) -> int:
    model = _load(args.model)
    require_valid(model.hmm)
    fd = functional_decomposition(model.hmm)
    names = [f"b{k + 1}" for k in range(fd.d)]
    if args.json:
        doc = {
            "basis": {n: format_profile(p) for n, p in zip(names, fd.basis_profiles)},
            "coefficients": [
                {"profile": format_profile(p), "coordinates": [format_rational(c) for c in row]}
                for p, row in zip(fd.source_profiles, fd.coefficients)
            ],
            "matrices": {n: [[format_rational(x) for x in r] for r in m.rows] for n, m in zip(names, fd.matrices)},
            "states": [str(q) for q in fd.states],
        }
        print(json.dumps(doc, sort_keys=True), file=out)
        return EXIT_OK
    print("basis:", file=out)
    for n, p in zip(names, fd.basis_profiles):
        print(f"  {n} = {format_profile(p)}", file=out)
    print("coefficients:", file=out)
    width = max(len(format_profile(p)) for p in fd.source_profiles)
    print("  " + " " * width + "  " + "  ".join(f"{n:>6}" for n in names), file=out)
    for p, row in zip(fd.source_profiles, fd.coefficients):
        cells = "  ".join(f"{format_rational(c):>6}" for c in row)
        print(f"  {format_profile(p):<{width}}  {cells}", file=out)
    for n, m in zip(names, fd.matrices):
        print(f"P[{n}]:", file=out)
        for r in m.rows:
            print("  " + "  ".join(f"{format_rational(x):>6}" for x in r), file=out)
    return EXIT_OK


def cmd_sample(args, out) -> int:
    model = _load(args.model)
    pi = _dist(model, args.dist)
    seed = args.seed
    if seed is None:
        seed = int(os.environ.get(SEED_ENV, "0"))
    batch = sample_traces(model.hmm, pi, args.n, args.count, seed, workers=args.workers)
    for t in range(len(batch)):
        obs = [str(o) if isinstance(o, str) else f"{o:.17g}" for o in batch.trace(t)]
        print(" ".join(obs), file=out)
    return EXIT_OK


def cmd_models(args, out) -> int:
    for name in BUNDLED:
        print(name, file=out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cohmm", description="Trace equivalence for continuous-observation HMMs.")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="check a model file")
    v.add_argument("model")
    v.add_argument("--no-lint", action="store_true", help="skip the numeric non-negativity lint")
    v.set_defaults(func=cmd_validate)

    c = sub.add_parser("check", help="decide equivalence of two distributions")
    c.add_argument("model")
    c.add_argument("dist1", help="distribution name or state name")
    c.add_argument("dist2")
    c.add_argument("--no-fast-path", action="store_true", help="skip the labelling shortcut")
    c.add_argument("--method", choices=METHODS, default="auto")
    c.add_argument("--json", action="store_true")
    c.set_defaults(func=cmd_check)

    r = sub.add_parser("reduce", help="print the finite reduction as a model file")
    r.add_argument("model")
    r.add_argument("--method", choices=METHODS, default="auto")
    r.set_defaults(func=cmd_reduce)

    d = sub.add_parser("decompose", help="print the independent functional decomposition")
    d.add_argument("model")
    d.add_argument("--json", action="store_true")
    d.set_defaults(func=cmd_decompose)

    s = sub.add_parser("sample", help="draw traces")
    s.add_argument("model")
    s.add_argument("dist")
    s.add_argument("--n", type=int, default=10, help="trace length")
    s.add_argument("--count", type=int, default=1)
    s.add_argument("--seed", type=int, default=None, help=f"RNG seed (default ${SEED_ENV} or 0)")
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_sample)

    m = sub.add_parser("models", help="list bundled models")
    m.set_defaults(func=cmd_models)
    return p


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    try:
        return args.func(args, out)
    except (ModelFileError, ParseError, UsageError, InvalidModelError, SamplingError) as exc:
        print(f"error: {exc}", file=err)
        return EXIT_INVALID
    except ValueError as exc:
        # contract violations such as a forced method that does not apply
        print(f"error: {exc}", file=err)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=err)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
