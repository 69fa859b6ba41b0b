"""Constructible limit groups and discriminating homomorphisms.

A constructible limit group is free, a free product of such groups, or
the fundamental group of a graph of groups together with a map ``rho`` to
a group of lower level.  :func:`discriminate` produces a homomorphism to
the free group of rank 2 that is nontrivial (or injective) on a finite set.
It works by recursion on level and on the number of edges: remove an edge,
solve the smaller problem for the syllables of the input, then twist along
the removed edge by a large power of an edge element.  Every answer is
checked by direct reduction before it is returned.
"""
from __future__ import annotations

import itertools
import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

from . import intlinalg as la
from . import surfaces
from .gad import (
    QH,
    Abelian,
    Gad,
    GadError,
    parse_gad,
    peripheral_vectors,
)
from .homs import (
    Hom,
    Presentation,
    abelian_discriminator,
    canonical_vectors,
    embed_free_into_rank2,
    free_presentation,
    pairwise_quotients,
    parse_hom_images,
    substitute,
)
from .words import (
    Word,
    ball,
    commutator,
    commutes,
    cyclic_reduce,
    inverse,
    multiply,
    primitive_root,
    product,
)


class DiscriminationError(RuntimeError):
    """No discriminating map could be produced (a hypothesis failed)."""


class ClgError(ValueError):
    """Malformed constructible limit group data."""


# -- structure -----------------------------------------------------------

@dataclass(frozen=True)
class Free:
    rank: int
    names: tuple[str, ...] | None = None

    @property
    def level(self) -> int:
        return 0

    @property
    def presentation(self) -> Presentation:
        return free_presentation(self.rank, self.names)


@dataclass(frozen=True)
class FreeProduct:
    parts: tuple

    @property
    def level(self) -> int:
        return max((p.level for p in self.parts), default=0)

    @property
    def presentation(self) -> Presentation:
        gens: list[str] = []
        rels: list[Word] = []
        for p in self.parts:
            q = p.presentation
            off = len(gens)
            gens += q.generators
            rels += [(off, r) for r in q.relators]
        n = len(gens)
        shifted = [
            Word(tuple((abs(c) + off) * (1 if c > 0 else -1) for c in r.letters), n) for off, r in rels
        ]
        return Presentation(tuple(gens), tuple(shifted))

    def factor_ranges(self) -> list[range]:
        out, off = [], 0
        for p in self.parts:
            k = p.presentation.rank
            out.append(range(off + 1, off + k + 1))
            off += k
        return out


@dataclass(frozen=True)
class Indecomposable:
    gad: Gad
    lower: "Clg"
    rho: tuple[Word, ...]

    def __post_init__(self):
        object.__setattr__(self, "rho", tuple(self.rho))
        lp = self.lower.presentation
        if len(self.rho) != self.gad.rank:
            raise ClgError(f"rho gives {len(self.rho)} images for {self.gad.rank} generators")
        for w in self.rho:
            if w.rank != lp.rank:
                raise ClgError("rho image is not a word over the lower group's generators")

    @property
    def level(self) -> int:
        return self.lower.level + 1

    @property
    def presentation(self) -> Presentation:
        return self.gad.presentation

    def rho_of(self, w: Word) -> Word:
        return substitute(self.rho, w, self.lower.presentation.rank)


Clg = Union[Free, FreeProduct, Indecomposable]


# -- word problem ----------------------------------------------------------

def canonical(c: Clg, w: Word) -> Word:
    """A representative of ``w`` that is equal for equal elements."""
    if isinstance(c, Free):
        return w
    if isinstance(c, Indecomposable):
        return c.gad.reduce_word(w)
    ranges = c.factor_ranges()
    n = w.rank

    def factor(x):
        return next(i for i, r in enumerate(ranges) if abs(x) in r)

    def to_local(i, letters):
        off = ranges[i].start - 1
        return Word(tuple((abs(x) - off) * (1 if x > 0 else -1) for x in letters), len(ranges[i]))

    def to_global(i, word):
        off = ranges[i].start - 1
        return [(abs(x) + off) * (1 if x > 0 else -1) for x in word.letters]

    stack: list[tuple[int, Word]] = []
    for x in w.letters:
        i = factor(x)
        piece = to_local(i, [x])
        if stack and stack[-1][0] == i:
            merged = canonical(c.parts[i], multiply(stack[-1][1], piece))
            stack.pop()
            if merged:
                stack.append((i, merged))
        else:
            stack.append((i, canonical(c.parts[i], piece)))
    letters: list[int] = []
    for i, word in stack:
        letters += to_global(i, word)
    return Word(tuple(letters), n)


def is_trivial(c: Clg, w: Word) -> bool:
    if isinstance(c, Free):
        return not w
    if isinstance(c, Indecomposable):
        return c.gad.is_trivial(w)
    return not canonical(c, w)


# -- validation ------------------------------------------------------------

@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    approximate: bool = False
    detail: str = ""


@dataclass
class ValidationReport:
    checks: list[Check] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name, passed, approximate=False, detail=""):
        self.checks.append(Check(name, bool(passed), approximate, detail))

    def lines(self) -> list[str]:
        out = []
        for c in self.checks:
            status = "pass" if c.passed else "FAIL"
            flag = " (approximate)" if c.approximate else ""
            extra = f": {c.detail}" if c.detail else ""
            out.append(f"{status} {c.name}{flag}{extra}")
        return out


def _common_root(words: Sequence[Word]) -> tuple[Word | None, list[int] | None]:
    """Express commuting free-group words as powers of one root."""
    nz = [w for w in words if w]
    if not nz:
        return None, [0] * len(words)
    root, _ = primitive_root(nz[0])
    exps = []
    for w in words:
        if not w:
            exps.append(0)
            continue
        r, e = primitive_root(w)
        if r == root:
            exps.append(e)
        elif r == inverse(root):
            exps.append(-e)
        else:
            return None, None
    return root, exps


def _abelian_vertex_check(c: Indecomposable, vi: int, report: ValidationReport, radius: int) -> None:
    g = c.gad
    v = g.vertices[vi]
    n = len(v.generators)
    imgs = [c.rho_of(g.lift(vi, Word.gen(i, n))) for i in range(1, n + 1)]
    per = peripheral_vectors(g, vi)
    name = f"vertex {v.id}: rho injective on peripheral closure"
    if isinstance(c.lower, Free):
        root, m = _common_root(imgs)
        if m is None:
            report.add(name, False, detail="abelian vertex has non-commuting images")
            return
        basis, r = la.saturation_basis(per, n) if per else (la.identity(n), 0)
        sat = basis[:r]
        # v -> root^(m.v) on the saturation: injective iff rank <= 1 and m nonzero there
        vals = [sum(a * b for a, b in zip(m, s)) for s in sat]
        ok = r <= 1 and all(vals)
        report.add(name, ok, detail=f"peripheral rank {r}")
        return
    basis, r = la.saturation_basis(per, n) if per else (la.identity(n), 0)
    sat = basis[:r]
    ok = True
    for coeffs in canonical_vectors(r, radius) if r else ():
        vec = [sum(cf * s[j] for cf, s in zip(coeffs, sat)) for j in range(n)]
        w = g.lift(vi, g.engines[vi].to_local(tuple(vec)))
        if is_trivial(c.lower, c.rho_of(w)):
            ok = False
            break
    report.add(name, ok, approximate=True)


def validate_clg(c: Clg, radius: int = 2) -> ValidationReport:
    if radius < 1:
        raise ValueError("radius must be at least 1")
    report = ValidationReport()
    _validate(c, radius, report, "")
    return report


def _validate(c: Clg, radius: int, report: ValidationReport, prefix: str) -> None:
    if isinstance(c, Free):
        report.add(f"{prefix}free group of rank {c.rank}", c.rank >= 0)
        return
    if isinstance(c, FreeProduct):
        names = c.presentation.generators  # raises on clashes
        report.add(f"{prefix}free product of {len(c.parts)} factors", len(names) >= 0)
        for i, p in enumerate(c.parts):
            _validate(p, radius, report, f"{prefix}factor {i}: ")
        return
    _validate(c.lower, radius, report, f"{prefix}lower: ")
    g = c.gad
    p = g.presentation
    bad = [r for r in p.relators if not is_trivial(c.lower, c.rho_of(r))]
    report.add(f"{prefix}rho kills relators", not bad, detail=", ".join(p.fmt(r) for r in bad[:3]))
    for vi, v in enumerate(g.vertices):
        n = len(v.generators)
        gens = [g.lift(vi, Word.gen(i, n)) for i in range(1, n + 1)]
        if isinstance(v.kind, Abelian):
            _abelian_vertex_check(c, vi, report, radius)
        elif isinstance(v.kind, QH):
            imgs = [c.rho_of(x) for x in gens]
            pair = next(
                ((i, j) for i, j in itertools.combinations(range(n), 2)
                 if not is_trivial(c.lower, commutator(imgs[i], imgs[j]))),
                None,
            )
            report.add(
                f"{prefix}vertex {v.id}: non-abelian image", pair is not None,
                detail="" if pair is None else f"{v.generators[pair[0]]},{v.generators[pair[1]]}",
            )
        else:
            seen: dict[Word, Word] = {}
            ok = True
            for w in ball(n, radius):
                img = canonical(c.lower, c.rho_of(g.lift(vi, w)))
                if img in seen:
                    ok = False
                    break
                seen[img] = w
            report.add(f"{prefix}vertex {v.id}: rho injective on ball of radius {radius}", ok, approximate=True)
    for ei, e in enumerate(g.edges):
        words = [g.edge_word(ei, 1, j) for j in range(e.rank)]
        imgs = [c.rho_of(w) for w in words]
        if e.rank == 1:
            ok = not is_trivial(c.lower, imgs[0])
            report.add(f"{prefix}edge {e.id}: rho injective on edge group", ok)
        elif isinstance(c.lower, Free):
            root, m = _common_root(imgs)
            report.add(f"{prefix}edge {e.id}: rho injective on edge group", False,
                       detail="rank >= 2 edge group cannot embed in a free group")
        else:
            ok = all(
                not is_trivial(c.lower, product([w ** k for w, k in zip(imgs, cf)], imgs[0].rank))
                for cf in canonical_vectors(e.rank, radius)
            )
            report.add(f"{prefix}edge {e.id}: rho injective on edge group", ok, approximate=True)


# -- the free group criterion ------------------------------------------------

@dataclass(frozen=True)
class CriterionInstance:
    """``g = a_0 z^{i_1} a_1 ... z^{i_n} a_n`` with each middle a_k not commuting with z."""

    z: Word
    a: tuple[Word, ...]
    exponents: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(self.a))
        object.__setattr__(self, "exponents", tuple(self.exponents))
        if not self.z:
            raise ValueError("z must be nontrivial")
        n = len(self.exponents)
        if n < 1:
            raise ValueError("need at least one exponent")
        if len(self.a) != n + 1:
            raise ValueError(f"need {n + 1} words a_0..a_n, got {len(self.a)}")
        if any(i == 0 for i in self.exponents):
            raise ValueError("exponents must be nonzero")
        for k in range(1, n):
            if commutes(self.a[k], self.z):
                raise ValueError(f"a_{k} commutes with z")

    def element(self) -> Word:
        parts = [self.a[0]]
        for i, ak in zip(self.exponents, self.a[1:]):
            parts += [self.z ** i, ak]
        return product(parts, self.z.rank)


def sufficient_exponent(z: Word, a: Sequence[Word]) -> int:
    """Smallest ``N`` with ``N |r| >= |a_{k-1}| + |a_k| + |core z|`` for all ``k``,
    where ``r`` is the primitive root of the cyclic core of ``z``."""
    if not z:
        raise ValueError("z must be nontrivial")
    core = cyclic_reduce(z)[1]
    root, _ = primitive_root(core)
    bound = max((len(x) + len(y) + len(core) for x, y in zip(a, a[1:])), default=len(core))
    return max(1, -(-bound // len(root)))


class CriterionViolation(AssertionError):
    pass


def criterion_nontrivial(inst: CriterionInstance) -> bool:
    g = inst.element()
    result = bool(g)
    if not result and min(abs(i) for i in inst.exponents) >= sufficient_exponent(inst.z, inst.a):
        raise CriterionViolation(f"trivial product with exponents at the bound: {inst}")
    return result


# -- surfaces ----------------------------------------------------------------

def _classes(imgs: Sequence[Word]) -> list[list[int]]:
    """Partition indices by commutation of their (nontrivial) images."""
    classes: list[list[int]] = []
    for i, w in enumerate(imgs):
        for cl in classes:
            if commutes(imgs[cl[0]], w):
                cl.append(i)
                break
        else:
            classes.append([i])
    return classes


def choose_surface_curve(qh: QH, rho_images: Sequence[Word]) -> tuple[Word, dict]:
    """A curve on the surface along which to cut, following the case analysis
    for punctured spheres, non-orientable surfaces and positive genus."""
    n = len(qh.generators)
    imgs = list(rho_images)
    if len(imgs) != n:
        raise ValueError("one image per surface generator required")
    if all(commutes(x, y) for x, y in itertools.combinations(imgs, 2)):
        raise DiscriminationError("surface image is abelian")
    bidx = [qh.boundary_index(j) - 1 for j in range(1, qh.boundary + 1)]
    if any(not imgs[i] for i in bidx):
        raise DiscriminationError("a boundary component has trivial image")
    gen = lambda i: Word.gen(i + 1, n)
    if qh.orientable and qh.genus > 0:
        if imgs[0]:
            return gen(0), {"case": "positive genus", "witness": imgs[0]}
        zeta = multiply(gen(0), gen(bidx[0]))
        return zeta, {"case": "positive genus", "witness": multiply(imgs[0], imgs[bidx[0]])}
    # punctured sphere, or non-orientable treated as one with crosscaps as punctures
    items: list[Word] = []
    item_imgs: list[Word] = []
    replaced = []
    if not qh.orientable:
        for i in range(qh.genus):
            if imgs[i]:
                items.append(gen(i))
                item_imgs.append(imgs[i])
            else:
                items.append(multiply(gen(bidx[0]), gen(i)))
                item_imgs.append(multiply(imgs[bidx[0]], imgs[i]))
                replaced.append(qh.generators[i])
    items += [gen(i) for i in bidx]
    item_imgs += [imgs[i] for i in bidx]
    classes = _classes(item_imgs)
    if len(classes) < 2:
        raise DiscriminationError("all punctures have commuting images")
    order = list(range(len(items)))
    pair = None
    for i, j in itertools.combinations(order, 2):
        if commutes(item_imgs[i], item_imgs[j]):
            continue
        rest = [k for k in order if k not in (i, j)]
        if len(rest) < 2 or any(not commutes(item_imgs[k], item_imgs[l]) for k, l in itertools.combinations(rest, 2)):
            pair = (i, j)
            break
    if pair is None:
        pair = next((i, j) for i, j in itertools.combinations(order, 2) if not commutes(item_imgs[i], item_imgs[j]))
    i, j = pair
    zeta = multiply(items[i], items[j])
    cert = {
        "case": "punctured sphere" if qh.orientable else "non-orientable",
        "classes": classes,
        "pair": pair,
        "replaced": replaced,
        "witness": commutator(item_imgs[i], item_imgs[j]),
    }
    return zeta, cert


# -- discrimination ----------------------------------------------------------

NONTRIVIAL = "nontrivial"
INJECTIVE = "injective"


@dataclass(frozen=True)
class DiscriminationStep:
    target: str
    zeta: str
    k: int
    recursed: int
    certified: bool = True

    def line(self) -> str:
        return f"step {self.target} zeta={self.zeta} k={self.k}"


def _check_rho(c: Clg) -> None:
    if isinstance(c, FreeProduct):
        for part in c.parts:
            _check_rho(part)
    elif isinstance(c, Indecomposable):
        for r in c.presentation.relators:
            if not is_trivial(c.lower, c.rho_of(r)):
                raise DiscriminationError(f"rho does not kill relator {c.presentation.fmt(r)}")
        _check_rho(c.lower)


def _target_hom(p: Presentation, images: Sequence[Word]) -> Hom:
    return Hom(p, 2, tuple(images))


def discriminate(c: Clg, X: Iterable[Word], mode: str = NONTRIVIAL, max_doublings: int = 12):
    """A homomorphism ``h`` to ``F(x1, x2)`` with ``1 not in h(X)`` (mode
    ``nontrivial``) or ``h`` injective on ``X`` (mode ``injective``), and the
    list of discrimination steps taken."""
    X = list(dict.fromkeys(X))
    p = c.presentation
    _check_rho(c)
    for x in X:
        if x.rank != p.rank:
            raise ValueError("element is not a word over the group's generators")
        if is_trivial(c, x):
            raise DiscriminationError(f"{p.fmt(x)} is trivial in the group")
    if mode == INJECTIVE:
        qs = pairwise_quotients(X)
        for (x, y), q in zip(itertools.combinations(X, 2), qs):
            if is_trivial(c, q):
                raise DiscriminationError(f"{p.fmt(x)} and {p.fmt(y)} are equal in the group")
        Y = X + qs
    elif mode == NONTRIVIAL:
        Y = X
    else:
        raise ValueError(f"unknown mode {mode!r}")
    trace: list[DiscriminationStep] = []
    h = _disc(c, Y, trace, max_doublings)
    bad = [y for y in Y if not h(y)]
    if bad:
        raise DiscriminationError(f"verification failed on {p.fmt(bad[0])}")
    return h, trace


def _disc(c: Clg, Y: list[Word], trace, max_doublings) -> Hom:
    p = c.presentation
    if isinstance(c, Free):
        if c.rank <= 2:
            return _target_hom(p, [Word.gen(i, 2) for i in range(1, c.rank + 1)])
        return Hom(p, 2, embed_free_into_rank2(c.rank).images)
    if isinstance(c, FreeProduct):
        return _disc_product(c, Y, trace, max_doublings)
    return _disc_indec(c, Y, trace, max_doublings)


def _disc_product(c: FreeProduct, Y, trace, max_doublings) -> Hom:
    ranges = c.factor_ranges()
    m = len(c.parts)
    pieces: list[list[Word]] = [[] for _ in range(m)]
    for y in Y:
        y = canonical(c, y)
        cur, letters = None, []
        for x in y.letters + (0,):
            i = next((k for k, r in enumerate(ranges) if abs(x) in r), None) if x else None
            if i != cur and cur is not None and letters:
                off = ranges[cur].start - 1
                pieces[cur].append(Word(tuple((abs(a) - off) * (1 if a > 0 else -1) for a in letters), len(ranges[cur])))
                letters = []
            cur = i
            if x:
                letters.append(x)
    emb = embed_free_into_rank2(2 * m)
    images: list[Word] = []
    for i, part in enumerate(c.parts):
        hi = _disc(part, list(dict.fromkeys(pieces[i])), trace, max_doublings)
        rename = [Word.gen(2 * i + 1, 2 * m), Word.gen(2 * i + 2, 2 * m)]
        for w in hi.images:
            images.append(emb(substitute(rename, w, 2 * m)))
    return _target_hom(c.presentation, images)


class _Solver:
    def __init__(self, c: Indecomposable, trace, max_doublings):
        self.c = c
        self.g = c.gad
        self.trace = trace
        self.max_doublings = max_doublings
        self.n = self.g.rank

    def ident(self) -> list[Word]:
        return [Word.gen(i, self.n) for i in range(1, self.n + 1)]

    def apply(self, images, w: Word) -> Word:
        return substitute(images, w, self.n)

    # splitting relative to the active edges -------------------------------
    def split(self, active, ei, w):
        """Syllables (side, word) and crossing signs of ``w`` along edge ``ei``."""
        g = self.g
        pf = g.path_form(w, active)
        tree = g.edges[ei].tree
        side2 = (
            g.component(g.vindex[g.edges[ei].v2], active - {ei}) if tree else set()
        )
        side = lambda v: 2 if v in side2 else 1
        syls, signs, chunk = [], [], []
        cur_side = side(pf.verts[0])
        for i in range(len(pf.elems)):
            chunk.append(pf.slot_word(i))
            if i < len(pf.travs):
                e, s = pf.travs[i]
                if e == ei:
                    syls.append((cur_side, product(chunk, self.n)))
                    signs.append(s)
                    chunk = []
                    cur_side = side(pf.verts[i + 1])
                else:
                    chunk.append(pf.trav_word(i))
        syls.append((cur_side, product(chunk, self.n)))
        return syls, signs

    # main recursion -------------------------------------------------------
    def solve(self, active: frozenset[int], Y: list[Word]):
        g = self.g
        Y = [y for y in dict.fromkeys(Y) if not g.is_trivial(y, active)]
        if not active:
            return self.base_case(Y)
        nontree = [e for e in sorted(active) if not g.edges[e].tree]
        ei = nontree[-1] if nontree else sorted(active)[-1]
        e = g.edges[ei]
        tree = e.tree
        z1, z2 = g.edge_word(ei, 1), g.edge_word(ei, 2)
        here = g.component(g.vindex[e.v1], active)
        split = {}
        Yp: list[Word] = [z1, z2]
        for y in Y:
            if self.home(y, active) in here:
                split[y] = self.split(active, ei, y)
            else:
                Yp.append(y)  # another component: untouched by this edge
        for y, (syls, signs) in split.items():
            for idx, (side, s) in enumerate(syls):
                if not s:
                    continue
                Yp.append(s)
                if tree:
                    Yp.append(commutator(z1 if side == 1 else z2, s))
                else:
                    before = signs[idx - 1] if idx > 0 else 0
                    after = signs[idx] if idx < len(signs) else 0
                    if (before, after) == (1, -1):
                        Yp.append(commutator(z1, s))
                    elif (before, after) == (-1, 1):
                        Yp.append(commutator(z2, s))
        sub = active - {ei}
        beta, conj, f = self.solve(sub, Yp)
        # extend the solution of the smaller problem across the edge
        g1 = conj.get((ei, 1), Word.identity(self.n))
        g2 = conj.get((ei, 2), Word.identity(self.n))
        ext = list(beta)
        conj = dict(conj)
        if tree:
            comp2 = g.component(g.vindex[e.v2], sub)
            cc = multiply(g1, inverse(g2))
            for i, sl in enumerate(g.slots):
                if sl.kind == "v" and sl.index in comp2:
                    ext[i] = product([cc, beta[i], inverse(cc)], self.n)
            for key in self.pending(active):
                if self._end_vertex(key) in comp2:
                    conj[key] = multiply(cc, conj.get(key, Word.identity(self.n)))
        else:
            t = g.stable_gen[ei]
            ext[t - 1] = product([g2, Word.gen(t, self.n), inverse(g1)], self.n)
        F = lambda w: f(self.c.rho_of(self.apply(ext, w)))
        N = self.bound(split, tree, z1, ext, F, ei)
        k = N
        for _ in range(self.max_doublings + 1):
            twist = self.twist_images(ei, k, sub)
            images = [self.apply(ext, w) for w in twist]
            if all(f(self.c.rho_of(self.apply(images, y))) for y in Y):
                new_conj = dict(conj)
                if tree:
                    zk = self.apply(ext, z2 ** k)
                    comp2 = g.component(g.vindex[e.v2], sub)
                    for key in self.pending(active):
                        if self._end_vertex(key) in comp2:
                            new_conj[key] = multiply(zk, conj.get(key, Word.identity(self.n)))
                self.trace.append(DiscriminationStep(f"edge={e.id}", g.fmt(z1), k, len(Yp)))
                return images, new_conj, f
            k *= 2
        raise DiscriminationError(f"no twist exponent up to {k // 2} works for edge {e.id}")

    def pending(self, active):
        """Edge ends removed at outer levels of the recursion."""
        return [(e, end) for e in range(len(self.g.edges)) if e not in active for end in (1, 2)]

    def home(self, y: Word, active) -> int:
        return self.g.path_form(y, active).base

    def _end_vertex(self, key) -> int:
        ei, end = key
        e = self.g.edges[ei]
        return self.g.vindex[e.v1 if end == 1 else e.v2]

    def twist_images(self, ei, k, sub) -> list[Word]:
        g = self.g
        e = g.edges[ei]
        imgs = self.ident()
        if e.tree:
            z = g.edge_word(ei, 2) ** k
            comp2 = g.component(g.vindex[e.v2], sub)
            for i, sl in enumerate(g.slots):
                if sl.kind == "v" and sl.index in comp2:
                    imgs[i] = product([z, imgs[i], inverse(z)], self.n)
        else:
            t = g.stable_gen[ei]
            imgs[t - 1] = multiply(Word.gen(t, self.n), g.edge_word(ei, 1) ** k)
        return imgs

    def bound(self, split, tree, z1, ext, F, ei) -> int:
        """The exponent bound from the criterion over all certified instances."""
        Z = F(z1)
        if not Z:
            raise DiscriminationError("edge element maps trivially")
        N = 1
        T = None if tree else F(Word.gen(self.g.stable_gen[ei], self.n))
        for syls, signs in split.values():
            if not signs:
                continue
            a: list[Word] = []
            exps: list[int] = []
            if tree:
                if syls[0][0] == 2:
                    a.append(Word.identity(2))
                    exps.append(1)
                for idx, (side, s) in enumerate(syls):
                    a.append(F(s))
                    if idx < len(signs):
                        exps.append(1 if syls[idx + 1][0] == 2 else -1)
                if syls[-1][0] == 2:
                    exps.append(-1)
                    a.append(Word.identity(2))
            else:
                for idx, (_, s) in enumerate(syls):
                    left = inverse(T) if idx > 0 and signs[idx - 1] == -1 else Word.identity(2)
                    right = T if idx < len(signs) and signs[idx] == 1 else Word.identity(2)
                    a.append(product([left, F(s), right], 2))
                exps = list(signs)
            try:
                CriterionInstance(Z, tuple(a), tuple(exps))
            except ValueError:
                continue
            N = max(N, sufficient_exponent(Z, a))
        return N

    # vertices -------------------------------------------------------------
    def base_case(self, Y):
        g = self.g
        images = self.ident()
        by_vertex: dict[int, list[Word]] = {}
        for y in Y:
            vi = g.vertex_of_word(y)
            if vi is None:
                raise DiscriminationError("element not in a vertex group at the base of the recursion")
            by_vertex.setdefault(vi, []).append(y)
        for vi, ys in by_vertex.items():
            kind = g.vertices[vi].kind
            if isinstance(kind, Abelian):
                self.abelian_vertex(vi, ys, images)
            elif isinstance(kind, QH) and len(kind.generators) > 3:
                raise DiscriminationError(
                    f"QH vertex {g.vertices[vi].id}: cutting surfaces of Euler characteristic below -1 is not supported"
                )
        lower_Y = [self.c.rho_of(self.apply(images, y)) for y in Y]
        for y, w in zip(Y, lower_Y):
            if is_trivial(self.c.lower, w):
                raise DiscriminationError(f"rho kills {g.fmt(y)}; rho is not injective where required")
        f = _disc(self.c.lower, lower_Y, self.trace, self.max_doublings)
        return images, {}, f

    def abelian_vertex(self, vi, ys, images, max_norm: int = 6) -> None:
        g = self.g
        v = g.vertices[vi]
        n = len(v.generators)
        eng = g.engines[vi]
        vecs = [eng.from_local(g.local_word(vi, y)) for y in ys]
        per = peripheral_vectors(g, vi)
        U, r = la.saturation_basis(per, n)
        V = la.inverse_unimodular(U)
        lower = self.c.lower
        gen_img = [self.c.rho_of(g.lift(vi, Word.gen(i, n))) for i in range(1, n + 1)]

        def rho_vec(vec):
            return product([w ** e for w, e in zip(gen_img, vec)], gen_img[0].rank)

        free_dims = n - r
        for K in itertools.chain([(0,) * (free_dims * r)], canonical_vectors(free_dims * r, max_norm)):
            T = la.identity(n)
            for j in range(free_dims):
                for i in range(r):
                    T[r + j][i] = K[j * r + i]
            M = la.matmul(la.matmul(V, T), U)
            if all(not is_trivial(lower, rho_vec(la.vecmat(x, M))) for x in vecs):
                if any(K):
                    self.trace.append(DiscriminationStep(f"vertex={v.id}", "transvection", 0, len(ys)))
                for i in range(n):
                    images[g.offset[vi] + i] = g.lift(vi, eng.to_local(tuple(M[i])))
                return
            if free_dims * r == 0:
                break
        raise DiscriminationError(f"no peripheral-fixing automorphism of vertex {v.id} found")


def _nonabelian_in(lower: Clg, imgs: Sequence[Word]) -> bool:
    return any(
        not is_trivial(lower, commutator(x, y)) for x, y in itertools.combinations(imgs, 2)
    )


def _cut_candidates(c: Indecomposable, vi: int):
    g = c.gad
    k = g.vertices[vi].kind
    n = len(k.generators)
    rho = lambda i: c.rho_of(g.lift(vi, Word.gen(i, n)))
    if k.orientable and k.genus > 0:
        if not is_trivial(c.lower, rho(1)):
            yield lambda: surfaces.cut_handle(g, vi)
        if not is_trivial(c.lower, rho(2)):
            yield lambda: surfaces.cut_handle(g, vi, along_b=True)
    for rot, p in surfaces.separating_cuts(k):
        yield lambda rot=rot, p=p: surfaces.cut_separating(g, vi, rot, p)


def _check_iso(old: Gad, new: Gad, phi: list[Word], psi: list[Word]) -> None:
    for r in old.presentation.relators:
        if not new.is_trivial(substitute(phi, r, new.rank)):
            raise DiscriminationError("surface cut does not preserve a relator")
    for r in new.presentation.relators:
        if not old.is_trivial(substitute(psi, r, old.rank)):
            raise DiscriminationError("surface cut does not preserve a relator")
    for i in range(old.rank):
        if not old.equal(substitute(psi, phi[i], old.rank), Word.gen(i + 1, old.rank)):
            raise DiscriminationError("surface cut maps are not inverse")
    for i in range(new.rank):
        if not new.equal(substitute(phi, psi[i], new.rank), Word.gen(i + 1, new.rank)):
            raise DiscriminationError("surface cut maps are not inverse")


def refine_surfaces(c: Indecomposable, trace=None) -> tuple[Indecomposable, list[Word]]:
    """Cut QH vertices of Euler characteristic below -1 until all have rank 2.

    Returns the refined structure and the images of the original generators
    in it (an isomorphism, verified).
    """
    phi_total = [Word.gen(i, c.gad.rank) for i in range(1, c.gad.rank + 1)]
    while True:
        g = c.gad
        vi = next(
            (i for i, v in enumerate(g.vertices)
             if isinstance(v.kind, QH) and len(v.generators) > 3),
            None,
        )
        if vi is None:
            return c, phi_total
        chosen = None
        for make in _cut_candidates(c, vi):
            try:
                cut = make()
            except GadError:
                continue
            new = cut.gad
            psi = surfaces.word_map(new, g, cut.psi)
            rho_new = tuple(c.rho_of(w) for w in psi)
            cand = Indecomposable(new, c.lower, rho_new)
            ei = new.eindex[f"{cut.vertex}.cut"]
            if is_trivial(c.lower, cand.rho_of(new.edge_word(ei, 1))):
                continue
            ok = True
            for pj, v in enumerate(new.vertices):
                if v.id.startswith(cut.vertex + ".") and isinstance(v.kind, QH):
                    m = len(v.generators)
                    imgs = [cand.rho_of(new.lift(pj, Word.gen(i, m))) for i in range(1, m + 1)]
                    if not _nonabelian_in(c.lower, imgs):
                        ok = False
            if ok:
                chosen = (cut, cand, psi)
                break
        if chosen is None:
            raise DiscriminationError(f"no admissible curve found on surface vertex {g.vertices[vi].id}")
        cut, cand, psi = chosen
        phi = surfaces.word_map(g, cut.gad, cut.phi)
        _check_iso(g, cut.gad, phi, psi)
        if trace is not None:
            trace.append(DiscriminationStep(f"cut={cut.vertex}", cut.curve, 0, 0))
        phi_total = [substitute(phi, w, cut.gad.rank) for w in phi_total]
        c = cand


def _disc_indec(c: Indecomposable, Y, trace, max_doublings) -> Hom:
    g = c.gad
    if any(isinstance(v.kind, QH) and len(v.generators) > 3 for v in g.vertices):
        fine, phi = refine_surfaces(c, trace)
        h = _disc_indec(fine, [substitute(phi, y, fine.gad.rank) for y in Y], trace, max_doublings)
        return _target_hom(c.presentation, [h(w) for w in phi])
    if len(g.vertices) == 1 and not g.edges and isinstance(g.vertices[0].kind, Abelian):
        # the group is free abelian: map it to a cyclic subgroup directly
        eng = g.engines[0]
        vecs = [eng.from_local(y) for y in Y]
        n = g.rank
        z, _ = abelian_discriminator(vecs, n)
        trace.append(DiscriminationStep("vertex=" + g.vertices[0].id, "abelian", 0, len(Y)))
        return _target_hom(c.presentation, [Word.gen(1, 2) ** zi for zi in z])
    solver = _Solver(c, trace, max_doublings)
    images, _, f = solver.solve(frozenset(range(len(g.edges))), Y)
    return _target_hom(c.presentation, [f(c.rho_of(w)) for w in images])


# -- file format ---------------------------------------------------------------

def parse_clg_file(path: str) -> Clg:
    with open(path) as fh:
        return parse_clg(fh.read(), os.path.dirname(os.path.abspath(path)))


def parse_clg(text: str, base_dir: str = ".") -> Clg:
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if len(lines) != 1 or not lines[0].startswith("clg "):
        raise ClgError("a clg file holds exactly one 'clg ...' line")
    kv = {}
    for tok in lines[0].split()[1:]:
        if "=" not in tok:
            raise ClgError(f"expected key=value, got {tok!r}")
        k, v = tok.split("=", 1)
        kv[k] = v
    form = kv.get("form")
    path = lambda name: os.path.join(base_dir, name)
    if form == "free":
        names = tuple(x for x in kv.get("gens", "").split(",") if x) or None
        rank = int(kv.get("rank", len(names) if names else 0))
        if names is not None and len(names) != rank:
            raise ClgError("gens disagrees with rank")
        c: Clg = Free(rank, names)
    elif form == "product":
        c = FreeProduct(tuple(parse_clg_file(path(p)) for p in kv["parts"].split(",")))
    elif form == "indec":
        with open(path(kv["gad"])) as fh:
            g = parse_gad(fh.read())
        lower = parse_clg_file(path(kv["lower"]))
        with open(path(kv["rho"])) as fh:
            _, names, images = parse_hom_images(fh.read(), g.names)
        lp = lower.presentation
        if tuple(names) != lp.generators:
            raise ClgError("rho target generators differ from the lower group's generators")
        c = Indecomposable(g, lower, tuple(images))
    else:
        raise ClgError(f"unknown form {form!r}")
    if "level" in kv and int(kv["level"]) != c.level:
        raise ClgError(f"declared level {kv['level']} but the structure has level {c.level}")
    return c
