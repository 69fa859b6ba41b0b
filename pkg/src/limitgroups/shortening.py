"""Greedy shortening of homomorphisms to a free group.

A homomorphism is shortened by precomposing with modular automorphisms and
postcomposing with inner automorphisms of the target.  Descent is greedy;
local minimality is certified by enumerating a ball in the modular group.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .gad import (
    DehnTwist,
    Gad,
    GeneralizedDehnTwist,
    Inner,
    ModAut,
    Splitting,
    apply_aut,
    dehn_twist,
)
from .homs import Hom, hom_length
from .words import (
    Word,
    conjugate,
    format_word,
    inverse,
    multiply,
    primitive_root,
    translation_length,
)


def _key(f: Hom) -> tuple[int, int]:
    lens = [len(w) for w in f.images]
    return (max(lens, default=0), sum(lens))


def _conj_hom(f: Hom, u: Word) -> Hom:
    # g -> u^-1 f(g) u
    imgs = tuple(conjugate(w, inverse(u)) for w in f.images)
    return Hom(f.domain, f.target_rank, imgs, f.target_names)


def optimal_conjugator(f: Hom) -> tuple[Hom, Word]:
    """Greedy single-letter conjugation; returns the result and the total conjugator.

    Image lengths are convex along the Cayley tree of the target, so the
    greedy walk ends at a global minimum of the maximal image length.
    """
    n = f.target_rank
    u = Word.identity(n)
    cur = f
    letters = [Word((s * i,), n) for i in range(1, n + 1) for s in (1, -1)]
    while True:
        best = None
        for x in letters:
            cand = _conj_hom(cur, x)
            if _key(cand) < _key(cur) and (best is None or cand.key() < best[0].key()):
                best = (cand, x)
        if best is None:
            return cur, u
        cur, x = best
        u = multiply(u, x)


def optimal_conjugation(f: Hom) -> Hom:
    return optimal_conjugator(f)[0]


@dataclass(frozen=True)
class Move:
    kind: str  # "aut" or "conj"
    index: int = -1  # generator index for "aut"
    exponent: int = 1
    word: Word | None = None  # conjugator for "conj"


@dataclass(frozen=True)
class ShorteningProblem:
    f: Hom
    mod_generators: tuple[ModAut, ...]
    conjugation: bool = True

    def __post_init__(self):
        object.__setattr__(self, "mod_generators", tuple(self.mod_generators))
        for a in self.mod_generators:
            if a.domain.generators != self.f.domain.generators:
                raise ValueError("modular generator acts on a different group")


@dataclass(frozen=True)
class ShorteningResult:
    f_short: Hom
    applied: tuple[Move, ...]
    certified_radius: int
    problem: ShorteningProblem = field(repr=False)

    def lines(self) -> list[str]:
        return [move_line(m, self.problem) for m in self.applied]


def _step(f: Hom, a: ModAut, exp: int, conj: bool) -> tuple[Hom, Word | None]:
    g = apply_aut(a if exp > 0 else a.inverse(), f)
    if conj:
        return optimal_conjugator(g)
    return g, None


def shorten(p: ShorteningProblem, certify_radius: int = 1) -> ShorteningResult:
    """Descend until no single generator move (then conjugation) helps."""
    moves: list[Move] = []
    cur = p.f
    if p.conjugation:
        cur, u = optimal_conjugator(cur)
        if u:
            moves.append(Move("conj", word=u))
    while True:
        best = None
        for i, a in enumerate(p.mod_generators):
            for exp in (1, -1):
                cand, u = _step(cur, a, exp, p.conjugation)
                if _key(cand) < _key(cur) and (best is None or cand.key() < best[0].key()):
                    best = (cand, i, exp, u)
        if best is None:
            break
        cur, i, exp, u = best
        moves.append(Move("aut", i, exp))
        if u is not None and u:
            moves.append(Move("conj", word=u))
    radius = 0
    if certify_radius > 0 and certify_local_min(cur, p.mod_generators, certify_radius, p.conjugation):
        radius = certify_radius
    return ShorteningResult(cur, tuple(moves), radius, p)


def replay(p: ShorteningProblem, moves: Iterable[Move]) -> Hom:
    f = p.f
    for m in moves:
        if m.kind == "conj":
            f = _conj_hom(f, m.word)
        else:
            a = p.mod_generators[m.index]
            f = apply_aut(a if m.exponent > 0 else a.inverse(), f)
    return f


def certify_local_min(f: Hom, mod_generators: Sequence[ModAut], radius: int, conjugation: bool = True) -> bool:
    """No product of 1..``radius`` generator moves, then conjugation, beats ``f``."""
    if radius <= 0:
        return True
    target = _key(f)
    seen = {f.images}
    frontier = deque([(f, 0)])
    while frontier:
        g, d = frontier.popleft()
        if d == radius:
            continue
        for a in mod_generators:
            for exp in (1, -1):
                h = apply_aut(a if exp > 0 else a.inverse(), g)
                if h.images in seen:
                    continue
                seen.add(h.images)
                best = optimal_conjugation(h) if conjugation else h
                if _key(best) < target:
                    return False
                frontier.append((h, d + 1))
    return True


def rescaled_length_table(fs: Sequence[Hom], elements: Sequence[Word]) -> list[list[Fraction | None]]:
    """Rows ``translation_length(f(g)) / hom_length(f)``; ``None`` where ``f`` is trivial."""
    if not fs:
        raise ValueError("empty sequence of homomorphisms")
    table = []
    for f in fs:
        L = hom_length(f)
        table.append([Fraction(translation_length(f(g)), L) if L else None for g in elements])
    return table


def edge_twists(g: Gad) -> list[ModAut]:
    """One Dehn twist per edge, by the primitive root of the first edge element.

    For an HNN edge this twists the stable letter; for a separating edge it
    conjugates the second side.
    """
    out = []
    for e in g.edges:
        s = Splitting(g, e.id)
        ws = s.edge_words(1)
        if not ws:
            continue
        z, _ = primitive_root(ws[0])
        out.append(dehn_twist(s, z))
    return out


def move_line(m: Move, p: ShorteningProblem) -> str:
    names = p.f.names
    if m.kind == "conj":
        return f"move conj {format_word(m.word, names)}"
    a = p.mod_generators[m.index]
    dom = a.domain.generators
    t = a.tag
    if isinstance(t, DehnTwist):
        return f"move twist {t.edge} {format_word(t.z, dom)} {m.exponent}"
    if isinstance(t, Inner):
        return f"move inner {format_word(t.conjugator, dom)} {m.exponent}"
    if isinstance(t, GeneralizedDehnTwist):
        rows = ";".join(",".join(map(str, r)) for r in t.matrix)
        return f"move gtwist {t.vertex} {rows} {m.exponent}"
    return f"move aut {m.index} {m.exponent}"
