"""Command-line front end: ``limitgroups <subcommand> ...``.

Exit codes: 0 success, 1 verified negative answer, 2 malformed input.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import clg as clg_mod
from . import laminations as lam
from .gad import GadError, inner, parse_gad
from .homs import (
    Presentation,
    RelatorError,
    format_hom,
    injective_on,
    nontrivial_on,
    parse_hom,
    parse_presentation,
    stable_kernel_window,
)
from .representations import embed_clg, numeric_solve, schottky_pair, so3_pair
from .shortening import ShorteningProblem, edge_twists, shorten
from .words import Word, parse_word

SUBCOMMANDS = ("discriminate", "shorten", "embed", "lam-validate", "check", "criterion", "stable")


class InputError(Exception):
    """Malformed input; reported with exit code 2."""


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def read_words(text: str, p: Presentation) -> list[Word]:
    """One word per line; ``#`` starts a comment."""
    out = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            out.append(p.word(line))
    return out


def _load_clg(path: str):
    try:
        return clg_mod.parse_clg_file(path)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc


def cmd_discriminate(args) -> int:
    c = _load_clg(args.clg)
    X = read_words(_read(args.elements), c.presentation)
    report = clg_mod.validate_clg(c, args.radius)
    if not report.ok:
        sys.stderr.write("\n".join(report.lines()) + "\n")
        return 1
    try:
        h, trace = clg_mod.discriminate(c, X, args.mode, args.max_doublings)
    except clg_mod.DiscriminationError as exc:
        sys.stderr.write(f"discrimination failed: {exc}\n")
        return 1
    ok = injective_on(h, X) if args.mode == clg_mod.INJECTIVE else nontrivial_on(h, X)
    lines = [format_hom(h).rstrip("\n")]
    lines += [f"# {s.line()}" for s in trace]
    lines.append(f"# {'pass' if ok else 'FAIL'} {args.mode} on {len(X)} elements")
    _write(args.out, "\n".join(lines) + "\n")
    return 0 if ok else 1


def cmd_shorten(args) -> int:
    g = parse_gad(_read(args.gad))
    f = parse_hom(_read(args.hom), g.presentation)
    gens = edge_twists(g)
    if args.inner:
        gens += [inner(g, Word.gen(i, g.rank)) for i in range(1, g.rank + 1)]
    res = shorten(ShorteningProblem(f, gens, not args.no_conj), certify_radius=args.radius)
    lines = [format_hom(res.f_short).rstrip("\n")]
    lines += [f"# {m}" for m in res.lines()]
    lines.append(f"# certified local minimum within radius {res.certified_radius} of {len(gens)} generators")
    _write(args.out, "\n".join(lines) + "\n")
    return 0


def _fmt_frac(x) -> str:
    return f"{x.numerator}/{x.denominator}" if x.denominator != 1 else str(x.numerator)


def cmd_embed(args) -> int:
    if args.numeric:
        if not args.presentation:
            raise InputError("--numeric needs --presentation")
        p = parse_presentation(_read(args.presentation))
        targets = read_words(_read(args.elements), p) if args.elements else []
        rep = numeric_solve(p, targets, args.attempts, args.tol, args.seed)
        labels = [p.fmt(t) for t in targets]
        _write(args.out, "\n".join(rep.lines(p.generators, labels)) + "\n")
        return 0 if rep.success else 1
    if args.certify:
        if args.target == "sl2":
            *_, cert = schottky_pair(args.depth)
        else:
            *_, cert = so3_pair(args.depth)
        _write(args.out, cert.line() + "\n")
        return 0 if cert.ok else 1
    if not args.clg or not args.elements:
        raise InputError("embed needs --clg and --elements (or --numeric / --certify)")
    c = _load_clg(args.clg)
    X = read_words(_read(args.elements), c.presentation)
    try:
        rep = embed_clg(c, X, args.target, args.max_doublings)
    except clg_mod.DiscriminationError as exc:
        sys.stderr.write(f"discrimination failed: {exc}\n")
        return 1
    lines = []
    for name, m in zip(c.presentation.generators, rep.matrices):
        rows = m.rows() if args.target == "sl2" else m.rows
        lines.append(f"matrix {name} " + " ".join(_fmt_frac(x) for r in rows for x in r))
    lines += [f"# {l}" for l in rep.lines()]
    _write(args.out, "\n".join(lines) + "\n")
    return 0 if rep.ok else 1


def cmd_lam_validate(args) -> int:
    k = lam.parse_complex(_read(args.complex))
    w = lam.parse_weights(_read(args.weights), floating=args.floating)
    ok = lam.validate(k, w)
    print(f"valid {'true' if ok else 'false'}")
    return 0 if ok else 1


def cmd_check(args) -> int:
    c = _load_clg(args.clg)
    report = clg_mod.validate_clg(c, args.radius)
    print("\n".join(report.lines()))
    return 0 if report.ok else 1


def cmd_criterion(args) -> int:
    names = tuple(args.gens.split(","))
    z = parse_word(args.z, names)
    a = [parse_word(t.strip() or "1", names) for t in args.a.split("|")]
    exps = [int(e) for e in args.exp.split(",")]
    if len(exps) == 1:
        exps = exps * (len(a) - 1)
    inst = clg_mod.CriterionInstance(z, a, exps)
    ok = clg_mod.criterion_nontrivial(inst)
    bound = clg_mod.sufficient_exponent(z, a)
    print(f"nontrivial {'true' if ok else 'false'} bound {bound}")
    return 0 if ok else 1


def cmd_stable(args) -> int:
    p = parse_presentation(_read(args.presentation))
    fs = [parse_hom(_read(h), p) for h in args.homs]
    X = read_words(_read(args.elements), p)
    print("# verdicts are heuristic: they describe the finite window only")
    for r in stable_kernel_window(fs, X):
        pattern = "".join("1" if t else "." for t in r.trivial)
        print(f"{p.fmt(r.element)}\t{pattern}\t{r.verdict}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="limitgroups", description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0, help="seed for randomized procedures")
    ap.add_argument("--jobs", type=int, default=1, help="worker cap (work runs in one process)")
    sub = ap.add_subparsers(dest="command", required=True)

    d = sub.add_parser("discriminate", help="find a hom to a free group separating elements")
    d.add_argument("--clg", required=True)
    d.add_argument("--elements", required=True)
    d.add_argument("--mode", choices=[clg_mod.NONTRIVIAL, clg_mod.INJECTIVE], default=clg_mod.INJECTIVE)
    d.add_argument("--out")
    d.add_argument("--radius", type=int, default=2)
    d.add_argument("--max-doublings", type=int, default=12)
    d.set_defaults(func=cmd_discriminate)

    s = sub.add_parser("shorten", help="shorten a hom by Dehn twists and conjugation")
    s.add_argument("--gad", required=True)
    s.add_argument("--hom", required=True)
    s.add_argument("--radius", type=int, default=1)
    s.add_argument("--inner", action="store_true", help="also offer inner automorphisms by generators")
    s.add_argument("--no-conj", action="store_true")
    s.add_argument("--out")
    s.set_defaults(func=cmd_shorten)

    e = sub.add_parser("embed", help="matrix images, exact or numerical")
    e.add_argument("--clg")
    e.add_argument("--elements")
    e.add_argument("--target", choices=["sl2", "so3"], default="sl2")
    e.add_argument("--depth", type=int, default=8)
    e.add_argument("--certify", action="store_true", help="only run the freeness certificate")
    e.add_argument("--numeric", action="store_true")
    e.add_argument("--presentation")
    e.add_argument("--tol", type=float, default=1e-9)
    e.add_argument("--attempts", type=int, default=50)
    e.add_argument("--max-doublings", type=int, default=12)
    e.add_argument("--out")
    e.set_defaults(func=cmd_embed)

    lv = sub.add_parser("lam-validate", help="check triangle inequalities of edge weights")
    lv.add_argument("--complex", required=True)
    lv.add_argument("--weights", required=True)
    lv.add_argument("--floating", action="store_true")
    lv.set_defaults(func=cmd_lam_validate)

    c = sub.add_parser("check", help="validate a CLG description")
    c.add_argument("--clg", required=True)
    c.add_argument("--radius", type=int, default=2)
    c.set_defaults(func=cmd_check)

    cr = sub.add_parser("criterion", help="evaluate a free group criterion instance")
    cr.add_argument("--z", required=True)
    cr.add_argument("--a", required=True, help="words a_0..a_n separated by |")
    cr.add_argument("--exp", required=True, help="one exponent, or a comma list")
    cr.add_argument("--gens", default="a,b")
    cr.set_defaults(func=cmd_criterion)

    st = sub.add_parser("stable", help="windowed triviality patterns over a hom sequence")
    st.add_argument("--presentation", required=True)
    st.add_argument("--homs", nargs="+", required=True)
    st.add_argument("--elements", required=True)
    st.set_defaults(func=cmd_stable)
    return ap


def run(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    if args.jobs < 1:
        sys.stderr.write("--jobs must be positive\n")
        return 2
    try:
        return args.func(args)
    except (InputError, ValueError, GadError, clg_mod.ClgError, lam.LaminationError, RelatorError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
