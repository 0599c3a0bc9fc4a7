"""Command-line entry point: ``bunchlab <command> [options]``.

Exit codes: 0 success (or no violation), 10 violation found, 2 I/O error,
3 invalid input, 4 size cap exceeded. Output mode numbers given with
``--subset`` are 1-based.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .conjectures import (
    VIOLATION_RTOL,
    check_m1,
    check_m2,
    correlation_matrix,
    random_violation_search,
)
from .distinguishability import (
    InternalStateFamily,
    bunching_probability,
    epsilon_scan,
    optimal_directions,
    worker_count,
)
from .errors import BunchlabError, SizeError, ValidationError
from .interferometry import (
    Interferometer,
    clements_decompose,
    clements_reconstruct,
    drury_gram,
    drury_matrix,
    drury_setup,
    extend_counterexample,
    h_matrix,
    unitarity_error,
)
from .io import atomic_write_text, dumps, read_matrix, read_vector, scan_to_csv, write_json, write_matrix
from .matcore import random_unitary
from .oracle import fock_bunching_oracle

log = logging.getLogger("bunchlab")

EXIT_OK = 0
EXIT_IO = 2
EXIT_INVALID = 3
EXIT_SIZE = 4
EXIT_VIOLATION = 10

ORACLE_TOL = 1e-9
CLEMENTS_TOL = 1e-9
EXTEND_TOL = 1e-10


def _parse_subset(text: str | None) -> list[int] | None:
    if text is None:
        return None
    try:
        labels = [int(tok) for tok in text.replace(" ", "").split(",") if tok]
    except ValueError as exc:
        raise ValidationError(f"--subset must be comma-separated integers, got {text!r}") from exc
    if not labels or min(labels) < 1:
        raise ValidationError("--subset mode numbers start at 1")
    return [k - 1 for k in labels]


def _emit(obj, output: str | None) -> None:
    text = dumps(obj)
    if output:
        atomic_write_text(output, text)
    else:
        sys.stdout.write(text)


def _tol(args, default: float) -> float:
    return default if args.tol is None else args.tol


def cmd_drury(args) -> int:
    out = Path(args.output or "drury_out")
    setup, alpha = drury_setup(args.seed)
    dirs = optimal_directions(setup.H)
    meta = {"seed": args.seed, "alpha": alpha}
    write_matrix(out / "drury_M.json", drury_matrix(), meta)
    write_matrix(out / "drury_A.json", drury_gram(), meta)
    write_matrix(out / "drury_U.json", setup.interferometer.U, meta)
    write_matrix(out / "drury_H.json", setup.H, meta)
    write_matrix(out / "drury_F.json", dirs.F, meta)
    write_matrix(out / "v_max.json", dirs.v_max, meta)
    summary = {
        "ratio": dirs.lambda_max / dirs.perm_h,
        "perm_H": dirs.perm_h,
        "lambda_max": dirs.lambda_max,
        "lambda_min": dirs.lambda_min,
        "predicted_ratio_coefficient": dirs.lambda_max / dirs.perm_h - 1.0,
        "alpha": alpha,
        "n": setup.n,
        "modes": setup.m,
        "subset": [k + 1 for k in setup.subset],
        "seed": args.seed,
        "tolerances": {"violation_rtol": VIOLATION_RTOL, "unitary_atol": 1e-9},
    }
    write_json(out / "summary.json", summary)
    print(f"ratio lambda_max(F)/perm(H) = {summary['ratio']:.6f}; perm(H) = {dirs.perm_h:.6e}")
    return EXIT_OK


def _scan_inputs(args):
    if args.drury:
        setup, _ = drury_setup(args.seed)
        h = setup.H
    elif args.input:
        h = read_matrix(args.input[0])
    else:
        raise ValidationError("scan needs --input H.json or --drury")
    n = h.shape[0]
    if args.direction == "custom":
        if not args.vector:
            raise ValidationError("--direction custom needs --vector")
        v = read_vector(args.vector)
        v = v / np.linalg.norm(v)
    else:
        dirs = optimal_directions(h)
        v = dirs.v_max if args.direction == "max" else dirs.v_min
    delta = read_matrix(args.delta) if args.delta else np.ones((n, n), dtype=np.complex128)
    return h, v, delta


def cmd_scan(args) -> int:
    if args.epsilon_min > args.epsilon_max:
        raise ValidationError("--epsilon-min must not exceed --epsilon-max")
    if args.steps < 1:
        raise ValidationError("--steps must be at least 1")
    h, v, delta = _scan_inputs(args)
    if args.steps == 1:
        grid = np.array([args.epsilon_min])
    else:
        grid = np.linspace(args.epsilon_min, args.epsilon_max, args.steps)
    scan = epsilon_scan(h, v, delta, grid, workers=worker_count())
    meta = {"seed": args.seed, "direction": args.direction, "source": "drury" if args.drury else "input"}
    text = scan_to_csv(scan, meta)
    if args.output:
        atomic_write_text(args.output, text)
        log.info("peak ratio %.6f at epsilon %.3f", scan.ratio.max(), scan.argmax_epsilon)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_check_m1(args) -> int:
    if not args.input:
        raise ValidationError("check-m1 needs --input A.json [B.json]")
    a = read_matrix(args.input[0])
    if len(args.input) > 1:
        b = read_matrix(args.input[1])
    elif args.theorem1_epsilon is not None:
        v = check_m2(a).witness["v_max"]
        b = correlation_matrix(v, args.theorem1_epsilon)
    else:
        raise ValidationError("check-m1 needs a second matrix or --theorem1-epsilon")
    verdict = check_m1(a, b, _tol(args, VIOLATION_RTOL))
    _emit(verdict.to_dict(), args.output)
    return EXIT_VIOLATION if verdict.violated else EXIT_OK


def cmd_check_m2(args) -> int:
    if not args.input:
        raise ValidationError("check-m2 needs --input A.json")
    verdict = check_m2(read_matrix(args.input[0]), _tol(args, VIOLATION_RTOL))
    _emit(verdict.to_dict(), args.output)
    return EXIT_VIOLATION if verdict.violated else EXIT_OK


def _oracle_instance(args):
    if args.preset:
        coupler = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
        states = [[1, 0], [1, 0]] if args.preset == "hom" else [[1, 0], [0, 1]]
        return coupler, [0], InternalStateFamily(states)
    if args.random:
        rng = np.random.default_rng(args.seed)
        n = args.n
        m = args.modes or n + 1
        if n > 4 or m > 6:
            raise SizeError("oracle comparison supports n <= 4 photons and m <= 6 modes")
        u = random_unitary(m, rng)
        subset = _parse_subset(args.subset) or list(range(max(1, m // 2)))
        vecs = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        vecs /= np.linalg.norm(vecs, axis=1, keepdims=True)
        return u, subset, InternalStateFamily(vecs)
    if args.input and args.states:
        u = read_matrix(args.input[0])
        subset = _parse_subset(args.subset)
        if subset is None:
            raise ValidationError("--subset is required with --input")
        return u, subset, InternalStateFamily(read_matrix(args.states))
    raise ValidationError("oracle-compare needs --preset, --random or --input U.json --states S.json")


def cmd_oracle_compare(args) -> int:
    u, subset, states = _oracle_instance(args)
    oracle = fock_bunching_oracle(u, subset, states)
    formula = bunching_probability(h_matrix(u, subset, states.n).H, states.gram())
    diff = abs(oracle - formula)
    report = {
        "oracle": oracle,
        "permanent_formula": formula,
        "abs_difference": diff,
        "n": states.n,
        "modes": int(np.asarray(u).shape[0]),
        "subset": [k + 1 for k in subset],
        "seed": args.seed,
    }
    _emit(report, args.output)
    return EXIT_OK if diff <= _tol(args, ORACLE_TOL) else 1


def cmd_clements(args) -> int:
    if args.drury:
        u = drury_setup(args.seed)[0].interferometer.U
    elif args.random:
        u = random_unitary(args.random, np.random.default_rng(args.seed))
    elif args.input:
        u = read_matrix(args.input[0])
    else:
        raise ValidationError("clements needs --input U.json, --drury or --random M")
    mesh = clements_decompose(Interferometer(u, atol=1e-8))
    rebuilt = clements_reconstruct(mesh).U
    err = float(np.max(np.abs(rebuilt - u)))
    report = {
        "m": mesh.m,
        "elements": [{"modes": [e.mode + 1, e.mode + 2], "theta": e.theta, "phi": e.phi} for e in mesh.elements],
        "output_phases": [float(p) for p in mesh.output_phases],
        "element_count": len(mesh.elements),
        "non_identity_count": mesh.non_identity_count(),
        "round_trip_error": err,
        "seed": args.seed,
    }
    _emit(report, args.output)
    print(f"round-trip error {err:.3e}; {len(mesh.elements)} elements", file=sys.stderr)
    return EXIT_OK if err <= _tol(args, CLEMENTS_TOL) else 1


def cmd_extend(args) -> int:
    if args.drury:
        base, _ = drury_setup(args.seed)
    elif args.input:
        subset = _parse_subset(args.subset)
        if subset is None or args.n is None:
            raise ValidationError("extend with --input needs --subset and --n")
        base = h_matrix(Interferometer(read_matrix(args.input[0])), subset, args.n)
    else:
        raise ValidationError("extend needs --input U.json or --drury")
    k = len(base.subset)
    m2 = args.modes or k
    if args.identity:
        u2 = np.eye(m2, dtype=np.complex128)
    else:
        u2 = random_unitary(m2, np.random.default_rng(args.seed))
    ext = extend_counterexample(base, u2)
    h_err = float(np.max(np.abs(ext.H - base.H)))
    report = {
        "base_subset": [s + 1 for s in base.subset],
        "composite_subset": [s + 1 for s in ext.subset],
        "composite_modes": ext.m,
        "n": ext.n,
        "h_max_difference": h_err,
        "unitarity_error": unitarity_error(ext.interferometer.U),
        "seed": args.seed,
    }
    if args.scan:
        dirs = optimal_directions(base.H)
        r_base = epsilon_scan(base.H, dirs.v_max).ratio
        r_ext = epsilon_scan(ext.H, dirs.v_max).ratio
        report["scan_max_ratio_difference"] = float(np.max(np.abs(r_base - r_ext)))
    if args.output:
        out = Path(args.output)
        write_matrix(out / "composite_U.json", ext.interferometer.U, {"seed": args.seed})
        write_json(out / "extend_report.json", report)
    else:
        sys.stdout.write(dumps(report))
    return EXIT_OK if h_err <= _tol(args, EXTEND_TOL) else 1


def cmd_search(args) -> int:
    inject = [drury_gram()] if args.inject_drury else []
    verdicts = random_violation_search(
        args.n, args.trials, args.seed, inject=inject, workers=worker_count()
    )
    tol = _tol(args, VIOLATION_RTOL)
    violated = [v for v in verdicts if v.ratio > 1 + tol]
    report = {
        "n": args.n,
        "trials": args.trials,
        "seed": args.seed,
        "violations": len(violated),
        "max_ratio": verdicts[0].ratio if verdicts else None,
        "verdicts": [v.to_dict() for v in verdicts[: args.top]],
    }
    _emit(report, args.output)
    return EXIT_VIOLATION if violated else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bunchlab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--input", nargs="+", help="input matrix file(s)")
        sp.add_argument("--output", help="output file or directory")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--tol", type=float, default=None, help="override the pass/violation tolerance")
        return sp

    sp = common(sub.add_parser("drury", help="build the 8-photon counterexample and write its matrices"))
    sp.set_defaults(func=cmd_drury)

    sp = common(sub.add_parser("scan", help="violation ratio and indistinguishability versus epsilon"))
    sp.add_argument("--drury", action="store_true")
    sp.add_argument("--epsilon-min", type=float, default=0.0)
    sp.add_argument("--epsilon-max", type=float, default=2.5)
    sp.add_argument("--steps", type=int, default=51, help="number of grid points")
    sp.add_argument("--direction", choices=("max", "min", "custom"), default="max")
    sp.add_argument("--vector", help="weight vector file for --direction custom")
    sp.add_argument("--delta", help="perturbation Gram matrix file (default all ones)")
    sp.set_defaults(func=cmd_scan)

    sp = common(sub.add_parser("check-m1", help="perm(A*B) <= perm(A) prod B_ii"))
    sp.add_argument("--theorem1-epsilon", type=float, help="use B(eps) built from the top F eigenvector of A")
    sp.set_defaults(func=cmd_check_m1)

    sp = common(sub.add_parser("check-m2", help="largest eigenvalue of F equals perm(A)"))
    sp.set_defaults(func=cmd_check_m2)

    sp = common(sub.add_parser("oracle-compare", help="Fock-space oracle versus permanent formula"))
    sp.add_argument("--preset", choices=("hom", "hom-dist"))
    sp.add_argument("--random", action="store_true")
    sp.add_argument("--n", type=int, default=3)
    sp.add_argument("--modes", type=int)
    sp.add_argument("--subset")
    sp.add_argument("--states", help="internal states file (one row per photon)")
    sp.set_defaults(func=cmd_oracle_compare)

    sp = common(sub.add_parser("clements", help="decompose a unitary into a coupler mesh"))
    sp.add_argument("--drury", action="store_true")
    sp.add_argument("--random", type=int, metavar="M", help="seeded random M x M unitary")
    sp.set_defaults(func=cmd_clements)

    sp = common(sub.add_parser("extend", help="embed a setup so the detected subset has >= n modes"))
    sp.add_argument("--drury", action="store_true")
    sp.add_argument("--subset")
    sp.add_argument("--n", type=int)
    sp.add_argument("--modes", type=int, help="mode count of the second stage")
    sp.add_argument("--identity", action="store_true", help="use an identity second stage")
    sp.add_argument("--scan", action="store_true", help="also compare violation-ratio scans")
    sp.set_defaults(func=cmd_extend)

    sp = common(sub.add_parser("search", help="seeded random search for F-eigenvalue violations"))
    sp.add_argument("--n", type=int, default=4)
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--inject-drury", action="store_true")
    sp.add_argument("--top", type=int, default=10)
    sp.set_defaults(func=cmd_search)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except SizeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SIZE
    except (ValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except BunchlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
