"""Command-line driver: ``qcl {check,normalize,run,denote,verify} FILE``.

Exit status is 0 on success, 1 when the program has diagnostics and 2 when
an internal invariant breaks.
"""
from __future__ import annotations

import argparse
import json
import os
import re
import sys
import time
import warnings
from importlib import resources
from pathlib import Path

import numpy as np

from . import settings
from .config_eval import initial_config, run, wf_config
from .errors import InternalError, QclError, TruncationWarning
from .main_core import BOp, show_type, typecheck_main
from .mixed_denot import check_adequacy, check_soundness, interp_main_judgement
from .pure_check import typecheck_term, typecheck_unitary
from .pure_core import default_metas
from .pure_denot import TruncationConfig, interp_term, interp_unitary, is_isometry, is_unitary
from .pure_eval import normalize
from .syntax import (
    abbreviations, parse, parse_main_term, parse_pure_term, parse_unitary, show_main, show_value,
)

JSON_VERSION = 1


class Failed(Exception):
    """Raised after diagnostics have been printed."""


def read_source(path):
    p = Path(path)
    if not p.exists():
        bundled = resources.files("qcl") / "programs" / p.name
        if bundled.is_file():
            return bundled.read_text()
    try:
        return p.read_text()
    except OSError as e:
        raise QclError(f"cannot read {path}: {e.strerror}", "unreadable-file")


def diagnostic(path, err, span=None):
    span = err.span or span
    where = f"{path}:{span.line}:{span.col}" if span else str(path)
    return f"{where}: error[{err.code}]: {err.message}"


def load(path):
    src = read_source(path)
    try:
        return parse(src)
    except QclError as e:
        print(diagnostic(path, e), file=sys.stderr)
        raise Failed from e


def trunc_config(args):
    return TruncationConfig(qnat_dim=args.trunc, strict=args.strict)


# ---------------------------------------------------------------- check


def show_unitary_type(ut):
    dom, cod = show_type_pure(ut.domain, False), show_type_pure(ut.codomain, False)
    # name unification variables 'a, 'b, ... in order of appearance
    metas = {}
    pattern = re.compile(r"\?\d+")
    for m in pattern.findall(dom + " " + cod):
        metas.setdefault(m, "'" + chr(ord("a") + len(metas) % 26))
    dom, cod = (pattern.sub(lambda x: metas[x.group()], s) for s in (dom, cod))
    return f"U({dom}, {cod})"


def show_type_pure(q, default=True):
    s = show_type(BOp(default_metas(q) if default else q))
    return s[2:-1] if s.startswith("B(") else s


def cmd_check(args):
    prog = load(args.file)
    bad = 0
    for n, d in enumerate(prog.decls):
        label = d.name or f"run#{sum(1 for e in prog.decls[:n] if e.kind == 'run') + 1}"
        try:
            if d.kind == "unitary":
                ty = show_unitary_type(typecheck_unitary(d.value))
            elif d.kind == "pure":
                ty = show_type_pure(typecheck_term([], d.value))
            else:
                t = typecheck_main([], d.value)
                if d.annotation is not None:
                    from .unify import Unifier

                    if not Unifier().unify(t, d.annotation):
                        raise QclError(
                            f"declared {show_type(d.annotation)} but found {show_type(t)}",
                            "annotation-mismatch",
                        )
                ty = show_type(t)
        except QclError as e:
            print(diagnostic(args.file, e, d.span), file=sys.stderr)
            bad += 1
            continue
        print(f"{label} : {ty}")
    if bad:
        raise Failed


# ---------------------------------------------------------------- normalize


def cmd_normalize(args):
    prog = load(args.file)
    if args.expr is not None:
        targets = [("-e", parse_pure_term(args.expr, prog))]
    else:
        targets = [(name, t) for name, t in prog.named("pure").items()]
    for name, t in targets:
        nv = normalize(t)
        text = show_value(nv.entries)
        print(text if args.expr is not None else f"{name} = {text}")


# ---------------------------------------------------------------- run


def leaf_json(p, c):
    return {
        "probability": p,
        "term": show_main(c.term),
        "wires": [show_type_pure(q) for q in c.wires],
        "linking": {n: s for n, s in c.linking},
        "state": [
            {"amplitude": [a.real, a.imag], "basis": show_value([(1, b)]).split("*", 1)[1]}
            for a, b in c.state_term().entries
        ],
    }


def leaf_text(p, c):
    state = show_value(c.state_term().entries) if c.wires else "*"
    links = ", ".join(f"{n}={s}" for n, s in c.linking)
    out = f"p={p:.6g}  {show_main(c.term)}  state: {state}"
    return out + (f"  blocks: {links}" if links else "")


def cmd_run(args):
    prog = load(args.file)
    runs = prog.runs()
    if not runs:
        raise QclError("program has no run declaration", "no-entry")
    names = abbreviations(prog)
    results = []
    for d in runs:
        typecheck_main([], d.value)
        trace = []

        def on_step(cur, branches, trace=trace):
            trace.append(
                {
                    "term": show_main(cur.term, names),
                    "branches": [
                        {"probability": p, "term": show_main(n.term, names)} for p, n in branches
                    ],
                }
            )

        start = time.perf_counter()
        dist = run(
            initial_config(d.value),
            mode=args.mode,
            seed=args.seed,
            max_steps=args.max_steps,
            debug=args.debug,
            merge=not args.no_merge,
            on_step=on_step if args.trace else None,
        )
        elapsed = time.perf_counter() - start
        results.append((d, dist, trace, elapsed))
    if args.format == "json":
        out = {
            "version": JSON_VERSION,
            "mode": args.mode,
            "runs": [
                {
                    "line": d.span.line if d.span else None,
                    "steps": dist.steps,
                    "seconds": elapsed,
                    "path_probability": dist.path_probability,
                    "leaves": [leaf_json(p, c) for p, c in dist.branches],
                    **({"trace": trace} if args.trace else {}),
                }
                for d, dist, trace, elapsed in results
            ],
        }
        print(json.dumps(out, indent=2))
        return
    for d, dist, trace, _ in results:
        line = d.span.line if d.span else "?"
        print(f"run at line {line}: {len(dist)} leaves after {dist.steps} steps")
        for step in trace:
            print(f"  step {step['term']}")
            for b in step["branches"]:
                print(f"    -> p={b['probability']:.6g} {b['term']}")
        for p, c in dist.branches:
            print("  " + leaf_text(p, c))
        if dist.path_probability is not None:
            print(f"  path probability {dist.path_probability:.6g}")


# ---------------------------------------------------------------- denote


def matrix_json(m):
    m = np.asarray(m)
    return {"shape": list(m.shape), "re": m.real.tolist(), "im": m.imag.tolist()}


def cmd_denote(args):
    prog = load(args.file)
    cfg = trunc_config(args)
    if args.unitary:
        u = parse_unitary(args.expr, prog)
        m = interp_unitary(u, cfg)
        out = {"kind": "unitary", "unitary": bool(is_unitary(m)), **matrix_json(m)}
    elif args.main:
        m = parse_main_term(args.expr, prog)
        sop = interp_main_judgement([], m, cfg)
        out = {
            "kind": "superoperator",
            "source_blocks": list(sop.source.blocks),
            "target_blocks": list(sop.target.blocks),
            "unital": bool(sop.is_unital()),
            **matrix_json(sop.matrix),
        }
    else:
        t = parse_pure_term(args.expr, prog)
        m = interp_term([], t, cfg)
        out = {"kind": "state", "isometry": bool(is_isometry(m)), **matrix_json(m[:, 0])}
    print(json.dumps({"version": JSON_VERSION, "qnat_dim": cfg.qnat_dim, **out}))


# ---------------------------------------------------------------- verify


def cmd_verify(args):
    prog = load(args.file)
    cfg = trunc_config(args)
    failures = 0

    def report(name, ok, detail=""):
        nonlocal failures
        failures += not ok
        print(f"{'PASS' if ok else 'FAIL'}  {name}{'  ' + detail if detail else ''}")

    for name, u in prog.named("unitary").items():
        try:
            m = interp_unitary(u, cfg)
            dev = float(np.abs(m.conj().T @ m - np.eye(m.shape[1])).max())
            report(f"unitary {name}", is_unitary(m), f"max deviation {dev:.2e}")
        except QclError as e:
            report(f"unitary {name}", False, str(e))
    for name, t in prog.named("pure").items():
        try:
            report(f"isometry {name}", is_isometry(interp_term([], t, cfg)))
        except QclError as e:
            report(f"isometry {name}", False, str(e))
    for d in prog.runs():
        where = f"run at line {d.span.line}" if d.span else "run"
        c = initial_config(d.value)
        try:
            wf = wf_config(c)
            report(f"{where}: well-formed", bool(wf), wf.message or "")
            dist = run(c, debug=True, merge=False)
            report(
                f"{where}: progress and subject reduction",
                abs(dist.total() - 1) <= settings.eps(),
                f"{dist.steps} steps, total probability {dist.total():.12f}",
            )
        except QclError as e:
            report(f"{where}: evaluation", False, str(e))
            continue
        try:
            ok, worst = check_soundness(c, cfg)
            report(f"{where}: soundness", ok, f"max deviation {worst:.2e}")
            adq = check_adequacy(c, cfg)
            report(f"{where}: adequacy", adq.ok, f"max deviation {adq.deviation:.2e}")
        except QclError as e:
            report(f"{where}: denotation", False, f"skipped: {e}")
    if failures:
        raise Failed


# ---------------------------------------------------------------- entry


def build_parser():
    ap = argparse.ArgumentParser(prog="qcl", description=__doc__.splitlines()[0])
    ap.add_argument("--tolerance", type=float, default=None, help="numeric tolerance (default 1e-9)")
    ap.add_argument("--strict", action="store_true", help="treat truncation warnings as errors")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="type-check every declaration")
    p.add_argument("file")
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("normalize", help="normal form of a pure term")
    p.add_argument("file")
    p.add_argument("-e", "--expr", help="pure term to normalize (default: every pure declaration)")
    p.set_defaults(fn=cmd_normalize)

    p = sub.add_parser("run", help="evaluate the run declarations")
    p.add_argument("file")
    p.add_argument("--mode", choices=["exhaustive", "sample"], default="exhaustive")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--max-steps", type=int, default=10**6)
    p.add_argument("--trace", action="store_true")
    p.add_argument("--format", choices=["json", "text"], default="json")
    p.add_argument("--debug", action="store_true", help="re-check well-formedness after every step")
    p.add_argument("--no-merge", action="store_true", help="keep equal leaves apart")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("denote", help="matrix semantics as JSON")
    p.add_argument("file")
    p.add_argument("-e", "--expr", required=True)
    p.add_argument("--trunc", type=int, default=settings.DEFAULT_QNAT_DIM)
    kind = p.add_mutually_exclusive_group()
    kind.add_argument("--unitary", action="store_true", help="EXPR is a unitary")
    kind.add_argument("--main", action="store_true", help="EXPR is a closed main term")
    p.set_defaults(fn=cmd_denote)

    p = sub.add_parser("verify", help="numeric soundness and adequacy report")
    p.add_argument("file")
    p.add_argument("--trunc", type=int, default=settings.DEFAULT_QNAT_DIM)
    p.set_defaults(fn=cmd_verify)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.tolerance is not None:
        settings.set_tolerance(args.tolerance)
    with warnings.catch_warnings():
        warnings.simplefilter("always", TruncationWarning)
        warnings.formatwarning = lambda msg, cat, *a, **k: f"warning: {msg}\n"
        try:
            args.fn(args)
        except BrokenPipeError:
            # output piped into something like head; not an error
            sys.stdout = open(os.devnull, "w")
            return 0
        except Failed:
            return 1
        except QclError as e:
            print(diagnostic(args.file, e), file=sys.stderr)
            return 1
        except InternalError as e:
            print(f"{args.file}: internal error: {e}", file=sys.stderr)
            return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
