"""Graphs of groups with abelian edge groups.

Vertex groups are free (rigid), free abelian, or quadratically hanging
(the fundamental group of a surface with nonempty boundary, presented by
its standard one-relator presentation).  Each supports exactly what the
Bass-Serre normal form needs: multiplication, an identity test, and
membership with coordinates in the images of incident edge groups.

Elements of the fundamental group are words over the global generators:
all vertex generators in vertex order, then one stable letter for every
edge outside the spanning tree.
"""
from __future__ import annotations

import shlex
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence, Union

from . import intlinalg as la
from .homs import Hom, Presentation, substitute
from .stallings import FoldedGraph
from .words import (
    Word,
    commutator,
    format_word,
    inverse,
    multiply,
    parse_word,
    primitive_root,
    product,
)


class GadError(ValueError):
    """Malformed or unsupported graph of groups."""


class AutError(ValueError):
    """A proposed automorphism fails its verification."""


# -- vertex data ---------------------------------------------------------

@dataclass(frozen=True)
class Rigid:
    generators: tuple[str, ...]
    relators: tuple[str, ...] = ()


@dataclass(frozen=True)
class Abelian:
    generators: tuple[str, ...]
    peripheral: tuple[tuple[int, ...], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "peripheral", tuple(tuple(p) for p in self.peripheral))
        for p in self.peripheral:
            if len(p) != len(self.generators):
                raise GadError(f"peripheral vector {p} has wrong length")
            if not any(p):
                raise GadError("peripheral vectors must be nonzero")


@dataclass(frozen=True)
class QH:
    generators: tuple[str, ...]
    genus: int
    orientable: bool
    boundary: int

    def __post_init__(self):
        per = 2 if self.orientable else 1
        if len(self.generators) != per * self.genus + self.boundary:
            raise GadError("QH generator count does not match genus and boundary")
        if self.boundary < 1:
            raise GadError("QH vertices need at least one boundary component")
        if self.euler_characteristic > -1:
            raise GadError(f"QH vertex has Euler characteristic {self.euler_characteristic} > -1")

    @property
    def euler_characteristic(self) -> int:
        if self.orientable:
            return 2 - 2 * self.genus - self.boundary
        return 2 - self.genus - self.boundary

    def relator(self) -> Word:
        n = len(self.generators)
        parts: list[Word] = []
        if self.orientable:
            for i in range(self.genus):
                parts.append(commutator(Word.gen(2 * i + 1, n), Word.gen(2 * i + 2, n)))
            first_d = 2 * self.genus
        else:
            for i in range(self.genus):
                parts.append(Word.gen(i + 1, n) ** 2)
            first_d = self.genus
        parts += [Word.gen(first_d + j + 1, n) for j in range(self.boundary)]
        return product(parts, n)

    def boundary_index(self, j: int) -> int:
        """Local (1-based) generator index of boundary ``d_j`` (``j`` 1-based)."""
        per = 2 if self.orientable else 1
        return per * self.genus + j


VertexKind = Union[Rigid, Abelian, QH]


@dataclass(frozen=True)
class Vertex:
    id: str
    kind: VertexKind

    @property
    def generators(self) -> tuple[str, ...]:
        return self.kind.generators

    def relators(self) -> list[Word]:
        n = len(self.generators)
        k = self.kind
        if isinstance(k, Rigid):
            return [r for r in (parse_word(t, k.generators) for t in k.relators) if r]
        if isinstance(k, Abelian):
            return [commutator(Word.gen(i, n), Word.gen(j, n)) for i in range(1, n + 1) for j in range(i + 1, n + 1)]
        return [k.relator()]


@dataclass(frozen=True)
class Edge:
    id: str
    v1: str
    v2: str
    img1: tuple[Word, ...]
    img2: tuple[Word, ...]
    tree: bool
    stable: str | None = None

    @property
    def rank(self) -> int:
        return len(self.img1)


# -- vertex group engines ----------------------------------------------

class _FreeEngine:
    """A free vertex group, possibly a surface group with one boundary eliminated."""

    def __init__(self, nlocal: int, local_images: list[Word], basis_local: list[int]):
        self.nlocal = nlocal
        self.nb = len(basis_local)
        self.local_images = local_images  # local gen -> word over basis
        self.basis_local = basis_local  # basis gen -> local gen index
        self._graphs: dict[Word, FoldedGraph] = {}

    def identity(self) -> Word:
        return Word.identity(self.nb)

    def mul(self, x: Word, y: Word) -> Word:
        return multiply(x, y)

    def is_identity(self, x: Word) -> bool:
        return not x

    def from_local(self, w: Word) -> Word:
        return substitute(self.local_images, w, self.nb)

    def to_local(self, x: Word) -> Word:
        return Word(tuple(self.basis_local[abs(c) - 1] * (1 if c > 0 else -1) for c in x.letters), self.nlocal)

    def check_edge(self, gens: list[Word]) -> None:
        if len(gens) != 1:
            raise GadError("edge groups at free vertices must be cyclic (rank 1)")
        if not gens[0]:
            raise GadError("edge image is trivial")

    def member(self, x: Word, gens: list[Word]) -> tuple[int, ...] | None:
        u = gens[0]
        if not x:
            return (0,)
        g = self._graphs.get(u)
        if g is None:
            g = self._graphs[u] = FoldedGraph([u], self.nb)
        ok, wit = g.read(x)
        if not ok:
            return None
        return (sum(1 if c > 0 else -1 for c in wit.letters),)

    def from_coords(self, c: Sequence[int], gens: list[Word]) -> Word:
        return gens[0] ** c[0]

    def coset(self, x: Word, gens: list[Word]) -> tuple[Word, tuple[int, ...]]:
        """Shortlex-least ``r`` with ``x = r u^m``."""
        u = gens[0]
        # beyond |m| > 2|x| + 1 the length only grows
        bound = 2 * len(x) + 2
        best = None
        for m in range(-bound, bound + 1):
            r = multiply(x, u ** (-m))
            if best is None or r.sort_key() < best[0].sort_key():
                best = (r, m)
        return best[0], (best[1],)

    def maximal_abelian(self, gens: list[Word]) -> bool:
        return primitive_root(gens[0])[1] == 1


class _AbelianEngine:
    def __init__(self, n: int):
        self.n = n
        self._hnf: dict[tuple, list[list[int]]] = {}

    def identity(self) -> tuple[int, ...]:
        return (0,) * self.n

    def mul(self, x, y):
        return tuple(a + b for a, b in zip(x, y))

    def is_identity(self, x) -> bool:
        return not any(x)

    def from_local(self, w: Word) -> tuple[int, ...]:
        v = [0] * self.n
        for c in w.letters:
            v[abs(c) - 1] += 1 if c > 0 else -1
        return tuple(v)

    def to_local(self, x) -> Word:
        letters = []
        for i, e in enumerate(x):
            letters += [(i + 1) * (1 if e > 0 else -1)] * abs(e)
        return Word(tuple(letters), self.n)

    def check_edge(self, gens) -> None:
        if la.rank(gens) != len(gens):
            raise GadError("abelian edge images must be linearly independent")

    def member(self, x, gens):
        return la.solve_combination(gens, x)

    def from_coords(self, c, gens):
        v = [0] * self.n
        for cj, g in zip(c, gens):
            v = [a + cj * b for a, b in zip(v, g)]
        return tuple(v)

    def coset(self, x, gens):
        key = tuple(gens)
        h = self._hnf.get(key)
        if h is None:
            h = self._hnf[key] = la.hnf_rows(gens)
        rep = la.reduce_mod_lattice(x, h)
        c = la.solve_combination(gens, tuple(a - b for a, b in zip(x, rep)))
        return rep, c

    def maximal_abelian(self, gens) -> bool:
        return len(gens) == self.n and abs(la.det(gens)) == 1


def _engine(v: Vertex):
    k = v.kind
    n = len(k.generators)
    if isinstance(k, Rigid):
        if k.relators:
            raise GadError(
                f"rigid vertex {v.id} has relators; membership is only available for free rigid vertices"
            )
        return _FreeEngine(n, [Word.gen(i, n) for i in range(1, n + 1)], list(range(1, n + 1)))
    if isinstance(k, Abelian):
        return _AbelianEngine(n)
    # surface with boundary: solve the relator for the last boundary generator
    last = k.boundary_index(k.boundary)
    basis_local = [i for i in range(1, n + 1) if i != last]
    nb = n - 1
    images: list[Word] = []
    pos = {loc: b + 1 for b, loc in enumerate(basis_local)}
    rel = k.relator()
    before = [c for c in rel.letters[: rel.letters.index(last)]]
    after = [c for c in rel.letters[rel.letters.index(last) + 1 :]]
    # rel = P d Q = 1  =>  d = P^-1 Q^-1
    to_b = lambda cs: Word(tuple(pos[abs(c)] * (1 if c > 0 else -1) for c in cs), nb)
    d_img = multiply(inverse(to_b(before)), inverse(to_b(after)))
    for i in range(1, n + 1):
        images.append(d_img if i == last else Word.gen(pos[i], nb))
    return _FreeEngine(n, images, basis_local)


# -- the graph of groups -------------------------------------------------

@dataclass(frozen=True)
class _Slot:
    kind: str  # "v" or "t"
    index: int  # vertex or edge index
    local: int  # local generator (vertex letters)


class Gad:
    """A validated graph of groups; immutable after construction."""

    def __init__(self, vertices: Sequence[Vertex], edges: Sequence[Edge]):
        self.vertices = tuple(vertices)
        self.edges = tuple(edges)
        if not self.vertices:
            raise GadError("no vertices")
        self.vindex = {v.id: i for i, v in enumerate(self.vertices)}
        if len(self.vindex) != len(self.vertices):
            raise GadError("duplicate vertex ids")
        self.eindex = {e.id: i for i, e in enumerate(self.edges)}
        if len(self.eindex) != len(self.edges):
            raise GadError("duplicate edge ids")
        self.engines = [_engine(v) for v in self.vertices]
        self._build_generators()
        self._check_edges()
        self._check_tree()

    # generators ------------------------------------------------------
    def _build_generators(self) -> None:
        names: list[str] = []
        slots: list[_Slot] = []
        self.offset: list[int] = []
        for i, v in enumerate(self.vertices):
            self.offset.append(len(names))
            for j, g in enumerate(v.generators):
                names.append(g)
                slots.append(_Slot("v", i, j + 1))
        self.stable_gen: dict[int, int] = {}
        for i, e in enumerate(self.edges):
            if not e.tree:
                if not e.stable:
                    raise GadError(f"edge {e.id} is outside the tree but has no stable letter")
                names.append(e.stable)
                slots.append(_Slot("t", i, 0))
                self.stable_gen[i] = len(names)
        if len(set(names)) != len(names):
            raise GadError("generator names must be distinct across vertices and stable letters")
        self.names = tuple(names)
        self.slots = slots
        self.rank = len(names)

    def _check_edges(self) -> None:
        self.eimg: list[tuple[list, list]] = []
        for e in self.edges:
            for vid in (e.v1, e.v2):
                if vid not in self.vindex:
                    raise GadError(f"edge {e.id} refers to unknown vertex {vid}")
            if len(e.img1) != len(e.img2) or not e.img1:
                raise GadError(f"edge {e.id}: image lists must be nonempty and of equal length")
            ends = []
            for vid, imgs in ((e.v1, e.img1), (e.v2, e.img2)):
                vi = self.vindex[vid]
                n = len(self.vertices[vi].generators)
                if any(w.rank != n for w in imgs):
                    raise GadError(f"edge {e.id}: image word rank differs from vertex {vid}")
                eng = self.engines[vi]
                elems = [eng.from_local(w) for w in imgs]
                eng.check_edge(elems)
                ends.append(elems)
            self.eimg.append((ends[0], ends[1]))

    def _check_tree(self) -> None:
        n = len(self.vertices)
        parent = list(range(n))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        self.adj: dict[int, list[tuple[int, int, int]]] = {i: [] for i in range(n)}
        for i, e in enumerate(self.edges):
            if not e.tree:
                continue
            a, b = self.vindex[e.v1], self.vindex[e.v2]
            ra, rb = find(a), find(b)
            if ra == rb:
                raise GadError(f"tree edges contain a cycle (edge {e.id})")
            parent[ra] = rb
            self.adj[a].append((i, +1, b))
            self.adj[b].append((i, -1, a))
        if len({find(i) for i in range(n)}) != 1:
            raise GadError("graph is disconnected (tree edges must span all vertices)")

    # presentation ----------------------------------------------------
    @cached_property
    def presentation(self) -> Presentation:
        return fundamental_presentation(self)

    def word(self, text: str) -> Word:
        return parse_word(text, self.names)

    def fmt(self, w: Word) -> str:
        return format_word(w, self.names)

    def lift(self, vi: int, w: Word) -> Word:
        """A local word at vertex ``vi`` as a word over the global generators."""
        off = self.offset[vi]
        return Word(tuple((abs(c) + off) * (1 if c > 0 else -1) for c in w.letters), self.rank)

    def vertex_of_word(self, w: Word) -> int | None:
        """The vertex whose generators carry every letter of ``w``, if any."""
        vs = set()
        for c in w.letters:
            s = self.slots[abs(c) - 1]
            if s.kind != "v":
                return None
            vs.add(s.index)
        if len(vs) > 1:
            return None
        return vs.pop() if vs else 0

    def local_word(self, vi: int, w: Word) -> Word:
        off = self.offset[vi]
        n = len(self.vertices[vi].generators)
        return Word(tuple((abs(c) - off) * (1 if c > 0 else -1) for c in w.letters), n)

    def edge_word(self, ei: int, end: int, j: int = 0) -> Word:
        """Edge-group generator ``j`` as seen from end 1 or 2, globally."""
        e = self.edges[ei]
        vid, imgs = (e.v1, e.img1) if end == 1 else (e.v2, e.img2)
        return self.lift(self.vindex[vid], imgs[j])

    # traversals ------------------------------------------------------
    def trav_ends(self, ei: int, sign: int) -> tuple[int, int, list, list]:
        """``(from vertex, to vertex, from images, to images)`` of a traversal."""
        e = self.edges[ei]
        a, b = self.vindex[e.v1], self.vindex[e.v2]
        i1, i2 = self.eimg[ei]
        forward = (sign > 0) == e.tree  # tree +1: v1 -> v2; stable letter t: v2 -> v1
        return (a, b, i1, i2) if forward else (b, a, i2, i1)

    def tree_path(self, a: int, b: int, active: frozenset[int] | None = None) -> list[tuple[int, int]]:
        if a == b:
            return []
        prev: dict[int, tuple[int, int, int]] = {a: (-1, 0, -1)}
        queue = [a]
        for u in queue:
            for ei, s, v in self.adj[u]:
                if active is not None and ei not in active:
                    continue
                if v not in prev:
                    prev[v] = (ei, s, u)
                    queue.append(v)
        if b not in prev:
            raise GadError("word leaves its component")
        path = []
        cur = b
        while cur != a:
            ei, s, u = prev[cur]
            path.append((ei, s))
            cur = u
        return path[::-1]

    # normal forms ----------------------------------------------------
    def path_form(self, w: Word, active: Iterable[int] | None = None, canonical: bool = False) -> "PathForm":
        """Reduced Bass-Serre path of ``w`` based at vertex 0 (or the first
        vertex of ``w``'s component when only ``active`` edges are used)."""
        if w.rank != self.rank:
            raise GadError(f"word rank {w.rank} differs from {self.rank} generators")
        act = None if active is None else frozenset(active)
        if act is not None:
            for c in w.letters:
                s = self.slots[abs(c) - 1]
                if s.kind == "t" and s.index not in act:
                    raise GadError(f"stable letter of inactive edge {self.edges[s.index].id}")
        base = self._base(w, act)
        pf = PathForm(self, base, act)
        for c in w.letters:
            s = self.slots[abs(c) - 1]
            sign = 1 if c > 0 else -1
            if s.kind == "v":
                pf.goto(s.index)
                eng = self.engines[s.index]
                pf.elems[-1] = eng.mul(pf.elems[-1], eng.from_local(Word((s.local * sign,), len(self.vertices[s.index].generators))))
            else:
                frm = self.trav_ends(s.index, sign)[0]
                pf.goto(frm)
                pf.push((s.index, sign))
        pf.goto(base)
        if canonical:
            pf.canonicalize()
        return pf

    def _base(self, w: Word, act) -> int:
        if act is None or not w:
            return 0
        c = w.letters[0]
        s = self.slots[abs(c) - 1]
        v = s.index if s.kind == "v" else self.vindex[self.edges[s.index].v1]
        comp = self.component(v, act)
        return min(comp)

    def component(self, v: int, act: frozenset[int] | None) -> set[int]:
        seen = {v}
        queue = [v]
        for u in queue:
            for ei, _, x in self.adj[u]:
                if (act is None or ei in act) and x not in seen:
                    seen.add(x)
                    queue.append(x)
        return seen

    def is_trivial(self, w: Word, active: Iterable[int] | None = None) -> bool:
        return self.path_form(w, active).is_identity()

    def equal(self, u: Word, v: Word) -> bool:
        return self.is_trivial(multiply(u, inverse(v)))

    def reduce_word(self, w: Word, active=None) -> Word:
        """Canonical representative of ``w`` (equal elements give equal words)."""
        return self.path_form(w, active, canonical=True).to_word()


class PathForm:
    """Alternating vertex elements and edge traversals along a reduced path."""

    def __init__(self, gad: Gad, base: int, active):
        self.gad = gad
        self.base = base
        self.active = active
        self.verts = [base]
        self.elems = [gad.engines[base].identity()]
        self.travs: list[tuple[int, int]] = []

    @property
    def current(self) -> int:
        return self.verts[-1]

    def goto(self, v: int) -> None:
        for tr in self.gad.tree_path(self.current, v, self.active):
            self.push(tr)

    def push(self, tr: tuple[int, int]) -> None:
        g = self.gad
        if self.travs and self.travs[-1] == (tr[0], -tr[1]):
            last = self.travs[-1]
            frm, to, fimg, timg = g.trav_ends(*last)
            c = g.engines[to].member(self.elems[-1], timg)
            if c is not None:
                self.travs.pop()
                self.elems.pop()
                self.verts.pop()
                eng = g.engines[frm]
                self.elems[-1] = eng.mul(self.elems[-1], eng.from_coords(c, fimg))
                return
        to = g.trav_ends(*tr)[1]
        self.travs.append(tr)
        self.verts.append(to)
        self.elems.append(g.engines[to].identity())

    def canonicalize(self) -> None:
        g = self.gad
        for i, tr in enumerate(self.travs):
            frm, to, fimg, timg = g.trav_ends(*tr)
            rep, c = g.engines[frm].coset(self.elems[i], fimg)
            self.elems[i] = rep
            eng = g.engines[to]
            self.elems[i + 1] = eng.mul(eng.from_coords(c, timg), self.elems[i + 1])

    def is_identity(self) -> bool:
        return not self.travs and self.gad.engines[self.verts[0]].is_identity(self.elems[0])

    def __len__(self) -> int:
        return len(self.travs)

    def slot_word(self, i: int) -> Word:
        vi = self.verts[i]
        return self.gad.lift(vi, self.gad.engines[vi].to_local(self.elems[i]))

    def trav_word(self, i: int) -> Word:
        ei, s = self.travs[i]
        if self.gad.edges[ei].tree:
            return Word.identity(self.gad.rank)
        return Word.gen(self.gad.stable_gen[ei], self.gad.rank) ** s

    def to_word(self) -> Word:
        parts = []
        for i in range(len(self.elems)):
            parts.append(self.slot_word(i))
            if i < len(self.travs):
                parts.append(self.trav_word(i))
        return product(parts, self.gad.rank)


def fundamental_presentation(g: Gad) -> Presentation:
    n = g.rank
    rels: list[Word] = []
    for vi, v in enumerate(g.vertices):
        rels += [g.lift(vi, r) for r in v.relators()]
    for ei, e in enumerate(g.edges):
        for j in range(e.rank):
            a, b = g.edge_word(ei, 1, j), g.edge_word(ei, 2, j)
            if e.tree:
                r = multiply(a, inverse(b))
            else:
                t = Word.gen(g.stable_gen[ei], n)
                r = product([t, a, inverse(t), inverse(b)], n)
            if r:
                rels.append(r)
    return Presentation(g.names, tuple(rels))


# -- one-edge splittings ---------------------------------------------------

@dataclass(frozen=True)
class Splitting:
    """The splitting of ``gad``'s fundamental group along one edge."""

    gad: Gad
    edge: str

    @property
    def ei(self) -> int:
        return self.gad.eindex[self.edge]

    @property
    def form(self) -> str:
        return "amalgam" if self.gad.edges[self.ei].tree else "hnn"

    @cached_property
    def side2(self) -> frozenset[int]:
        """Vertices on the ``v2`` side of a tree edge (empty for HNN)."""
        g = self.gad
        if self.form == "hnn":
            return frozenset()
        act = frozenset(range(len(g.edges))) - {self.ei}
        return frozenset(g.component(g.vindex[g.edges[self.ei].v2], act))

    def side_of(self, v: int) -> int:
        return 2 if v in self.side2 else 1

    def edge_words(self, end: int) -> list[Word]:
        return [self.gad.edge_word(self.ei, end, j) for j in range(self.gad.edges[self.ei].rank)]

    def maximal_side(self) -> int:
        """Side where the edge image is maximal abelian in the endpoint group (ties: 1)."""
        g = self.gad
        e = g.edges[self.ei]
        for side, vid, imgs in ((1, e.v1, g.eimg[self.ei][0]), (2, e.v2, g.eimg[self.ei][1])):
            if g.engines[g.vindex[vid]].maximal_abelian(imgs):
                return side
        return 1


@dataclass(frozen=True)
class NormalForm:
    """Syllables separated by crossings of the splitting edge.

    ``parts`` alternates ``("syl", side, word)`` and ``("cross", sign, word)``;
    for an amalgam the crossing words are trivial, for an HNN extension they
    are the stable letter to the power ``sign``.  Empty end syllables are
    omitted.
    """

    parts: tuple[tuple[str, int, Word], ...]
    rank: int

    @property
    def syllables(self) -> list[tuple[int, Word]]:
        return [(s, w) for k, s, w in self.parts if k == "syl"]

    @property
    def crossings(self) -> list[int]:
        return [s for k, s, _ in self.parts if k == "cross"]

    def __len__(self) -> int:
        return len(self.crossings)

    def evaluate(self) -> Word:
        return product([w for _, _, w in self.parts], self.rank)


def normal_form(s: Splitting, w: Word) -> NormalForm:
    g = s.gad
    pf = g.path_form(w, canonical=True)
    parts: list[tuple[str, int, Word]] = []
    chunk: list[Word] = []
    side = s.side_of(pf.verts[0])
    for i in range(len(pf.elems)):
        chunk.append(pf.slot_word(i))
        if i < len(pf.travs):
            ei, sign = pf.travs[i]
            if ei == s.ei:
                parts.append(("syl", side, product(chunk, g.rank)))
                parts.append(("cross", sign, pf.trav_word(i)))
                chunk = []
                side = s.side_of(pf.verts[i + 1])
            else:
                chunk.append(pf.trav_word(i))
    parts.append(("syl", side, product(chunk, g.rank)))
    if not parts[-1][2]:
        parts.pop()
    if parts and not parts[0][2]:
        parts.pop(0)
    return NormalForm(tuple(parts), g.rank)


def is_edge_element(s: Splitting, w: Word) -> bool:
    g = s.gad
    pf = g.path_form(w)
    if pf.travs:
        return False
    e = g.edges[s.ei]
    v1 = g.vindex[e.v1]
    if pf.verts[0] == v1:
        return g.engines[v1].member(pf.elems[0], g.eimg[s.ei][0]) is not None
    return False


def syllables_of(s: Splitting, X: Iterable[Word]) -> tuple[set[Word], set[Word]]:
    """Side-1 and side-2 syllables of the normal forms of ``X``.

    For an HNN splitting, ``X_2`` holds the syllables sitting between a
    ``t^-1`` and a ``t`` crossing and ``X_1`` all other syllables.  Edge
    elements go to the side where the edge image is maximal abelian.
    """
    X1: set[Word] = set()
    X2: set[Word] = set()
    hnn = s.form == "hnn"
    for x in X:
        if not x:
            continue
        if is_edge_element(s, x):
            (X1 if hnn or s.maximal_side() == 1 else X2).add(x)
            continue
        nf = normal_form(s, x)
        parts = nf.parts
        for i, (kind, side, w) in enumerate(parts):
            if kind != "syl" or not w:
                continue
            if hnn:
                before = parts[i - 1][1] if i > 0 else 0
                after = parts[i + 1][1] if i + 1 < len(parts) else 0
                (X2 if (before, after) == (-1, 1) else X1).add(w)
            else:
                (X1 if side == 1 else X2).add(w)
    return X1, X2


# -- modular automorphisms ---------------------------------------------

@dataclass(frozen=True)
class DehnTwist:
    edge: str
    z: Word
    side: int


@dataclass(frozen=True)
class GeneralizedDehnTwist:
    vertex: str
    matrix: tuple[tuple[int, ...], ...]


@dataclass(frozen=True)
class Inner:
    conjugator: Word


@dataclass(frozen=True)
class Composite:
    parts: tuple


@dataclass(frozen=True)
class Identity:
    pass


@dataclass(frozen=True)
class ModAut:
    """An automorphism given by generator images, with its inverse."""

    domain: Presentation
    images: tuple[Word, ...]
    inverse_images: tuple[Word, ...]
    tag: object = field(default=Identity())

    def __call__(self, w: Word) -> Word:
        return substitute(self.images, w, self.domain.rank)

    def inverse(self) -> "ModAut":
        return ModAut(self.domain, self.inverse_images, self.images, ("inverse", self.tag))

    def then(self, other: "ModAut") -> "ModAut":
        """``other`` after ``self`` (``other ∘ self``)."""
        return compose(other, self)

    def power(self, k: int) -> "ModAut":
        base = self if k >= 0 else self.inverse()
        out = identity_aut(self.domain)
        for _ in range(abs(k)):
            out = compose(base, out)
        return out


def identity_aut(p: Presentation) -> ModAut:
    gens = tuple(Word.gen(i, p.rank) for i in range(1, p.rank + 1))
    return ModAut(p, gens, gens, Identity())


def compose(a: ModAut, b: ModAut) -> ModAut:
    """``a ∘ b``: apply ``b`` first."""
    if a.domain != b.domain:
        raise AutError("automorphisms of different groups")
    n = a.domain.rank
    images = tuple(substitute(a.images, w, n) for w in b.images)
    inv = tuple(substitute(b.inverse_images, w, n) for w in a.inverse_images)
    tags = []
    for t in (b.tag, a.tag):
        if isinstance(t, Composite):
            tags += list(t.parts)
        elif not isinstance(t, Identity):
            tags.append(t)
    return ModAut(a.domain, images, inv, Composite(tuple(tags)) if tags else Identity())


def verify_aut(g: Gad, a: ModAut) -> None:
    """Relators map to 1 both ways and the compositions are the identity, all in ``g``."""
    p = g.presentation
    n = p.rank
    for imgs in (a.images, a.inverse_images):
        for r in p.relators:
            if not g.is_trivial(substitute(imgs, r, n)):
                raise AutError(f"relator {p.fmt(r)} is not preserved")
    for i in range(n):
        x = Word.gen(i + 1, n)
        for f, h in ((a.images, a.inverse_images), (a.inverse_images, a.images)):
            if not g.equal(substitute(f, h[i], n), x):
                raise AutError(f"inverse check fails on generator {p.generators[i]}")


def make_aut(g: Gad, images: Sequence[Word], inverse_images: Sequence[Word], tag) -> ModAut:
    a = ModAut(g.presentation, tuple(images), tuple(inverse_images), tag)
    verify_aut(g, a)
    return a


def inner(g: Gad, u: Word) -> ModAut:
    n = g.rank
    imgs = [product([u, Word.gen(i, n), inverse(u)], n) for i in range(1, n + 1)]
    inv = [product([inverse(u), Word.gen(i, n), u], n) for i in range(1, n + 1)]
    return make_aut(g, imgs, inv, Inner(u))


def _twist_images(s: Splitting, z: Word, side: int) -> list[Word]:
    g = s.gad
    n = g.rank
    ei = s.ei
    imgs = [Word.gen(i, n) for i in range(1, n + 1)]
    if s.form == "hnn":
        t = g.stable_gen[ei]
        imgs[t - 1] = multiply(Word.gen(t, n), z)
        return imgs
    moved = s.side2 if side == 2 else frozenset(range(len(g.vertices))) - s.side2
    for i, sl in enumerate(g.slots):
        if sl.kind == "v" and sl.index in moved:
            imgs[i] = product([z, Word.gen(i + 1, n), inverse(z)], n)
        elif sl.kind == "t":
            e = g.edges[sl.index]
            in1 = g.vindex[e.v1] in moved
            in2 = g.vindex[e.v2] in moved
            left = z if in2 else Word.identity(n)
            right = inverse(z) if in1 else Word.identity(n)
            imgs[i] = product([left, Word.gen(i + 1, n), right], n)
    return imgs


def dehn_twist(s: Splitting, z: Word, side: int = 2) -> ModAut:
    """Amalgam: conjugate side ``side`` by ``z``.  HNN: ``t -> t z``.

    ``z`` must commute with the edge images (checked in the group).
    """
    g = s.gad
    if z.rank != g.rank:
        raise AutError("twist element has the wrong rank")
    if side not in (1, 2):
        raise AutError("side must be 1 or 2")
    end = 1 if s.form == "hnn" else side
    for c in s.edge_words(end):
        if not g.is_trivial(commutator(z, c)):
            raise AutError(f"{g.fmt(z)} does not centralize edge element {g.fmt(c)}")
    imgs = _twist_images(s, z, side)
    inv = _twist_images(s, inverse(z), side)
    return make_aut(g, imgs, inv, DehnTwist(s.edge, z, side))


def peripheral_vectors(g: Gad, vi: int) -> list[tuple[int, ...]]:
    """Declared peripheral vectors of an abelian vertex plus incident edge images."""
    v = g.vertices[vi]
    out = [tuple(p) for p in v.kind.peripheral]
    for ei, e in enumerate(g.edges):
        if g.vindex[e.v1] == vi:
            out += [tuple(x) for x in g.eimg[ei][0]]
        if g.vindex[e.v2] == vi:
            out += [tuple(x) for x in g.eimg[ei][1]]
    return out


def _matrix_images(g: Gad, vi: int, M) -> list[Word]:
    n = g.rank
    eng = g.engines[vi]
    imgs = [Word.gen(i, n) for i in range(1, n + 1)]
    for j in range(len(M)):
        imgs[g.offset[vi] + j] = g.lift(vi, eng.to_local(tuple(M[j])))
    return imgs


def generalized_dehn_twist(g: Gad, vertex: str, M: Sequence[Sequence[int]]) -> ModAut:
    """Generator ``i`` of an abelian vertex goes to row ``i`` of ``M``."""
    vi = g.vindex[vertex]
    v = g.vertices[vi]
    if not isinstance(v.kind, Abelian):
        raise AutError(f"vertex {vertex} is not abelian")
    n = len(v.generators)
    M = [list(r) for r in M]
    if len(M) != n or any(len(r) != n for r in M):
        raise AutError(f"matrix must be {n}x{n}")
    d = la.det(M)
    if abs(d) != 1:
        raise AutError(f"matrix is not unimodular (det {d})")
    for p in peripheral_vectors(g, vi):
        if la.vecmat(p, M) != tuple(p):
            raise AutError(f"peripheral vector {p} is moved")
    Minv = la.inverse_unimodular(M)
    return make_aut(
        g, _matrix_images(g, vi, M), _matrix_images(g, vi, Minv),
        GeneralizedDehnTwist(vertex, tuple(map(tuple, M))),
    )


def apply_aut(a: ModAut, target):
    """Precompose a hom with ``a``, or substitute into a word."""
    if isinstance(target, Word):
        if target.rank != a.domain.rank:
            raise AutError("word is over different generators")
        return a(target)
    if isinstance(target, Hom):
        if target.domain.generators != a.domain.generators:
            raise AutError("hom domain differs from the automorphism's group")
        images = tuple(target(w) for w in a.images)
        return Hom(target.domain, target.target_rank, images, target.target_names)
    raise TypeError(f"cannot apply an automorphism to {type(target).__name__}")


def format_aut(a: ModAut) -> str:
    lines = [f"# tag {a.tag!r}"]
    lines += [f"aut {g} {a.domain.fmt(w)}" for g, w in zip(a.domain.generators, a.images)]
    return "\n".join(lines) + "\n"


# -- file format ---------------------------------------------------------

def _kv(tokens: list[str]) -> dict[str, str]:
    out = {}
    for t in tokens:
        if "=" not in t:
            raise GadError(f"expected key=value, got {t!r}")
        k, v = t.split("=", 1)
        out[k] = v
    return out


def _names(text: str) -> tuple[str, ...]:
    return tuple(x for x in text.replace(",", " ").split() if x)


def parse_gad(text: str) -> Gad:
    vertices: list[Vertex] = []
    raw_edges = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = shlex.split(line)
        try:
            if toks[0] == "vertex":
                vid, kv = toks[1], _kv(toks[2:])
                kind = kv.get("kind")
                gens = _names(kv.get("gens", ""))
                if kind == "rigid":
                    rels = tuple(r.strip() for r in kv.get("relators", "").split(";") if r.strip())
                    vertices.append(Vertex(vid, Rigid(gens, rels)))
                elif kind == "abelian":
                    per = tuple(
                        tuple(int(x) for x in p.split())
                        for p in kv.get("peripheral", "").split(";") if p.strip()
                    )
                    vertices.append(Vertex(vid, Abelian(gens, per)))
                elif kind == "qh":
                    vertices.append(Vertex(vid, QH(
                        gens, int(kv["genus"]), kv.get("orientable", "1") == "1", int(kv["boundary"]),
                    )))
                else:
                    raise GadError(f"unknown vertex kind {kind!r}")
            elif toks[0] == "edge":
                eid, a, b = toks[1:4]
                raw_edges.append((eid, a, b, _kv(toks[4:])))
            else:
                raise GadError(f"unexpected keyword {toks[0]!r}")
        except (IndexError, KeyError, ValueError) as exc:
            raise GadError(f"line {lineno}: {exc}") from exc
    vmap = {v.id: v for v in vertices}
    edges = []
    for eid, a, b, kv in raw_edges:
        for vid in (a, b):
            if vid not in vmap:
                raise GadError(f"edge {eid} refers to unknown vertex {vid}")
        imgs = []
        for vid, key in ((a, "img1"), (b, "img2")):
            gens = vmap[vid].generators
            imgs.append(tuple(parse_word(t, gens) for t in kv[key].split(";")))
        rank = int(kv.get("rank", len(imgs[0])))
        if rank != len(imgs[0]) or rank != len(imgs[1]):
            raise GadError(f"edge {eid}: rank={rank} but {len(imgs[0])}/{len(imgs[1])} images")
        tree = kv.get("tree", "1") == "1"
        edges.append(Edge(eid, a, b, imgs[0], imgs[1], tree, kv.get("stable")))
    return Gad(vertices, edges)


def format_gad(g: Gad) -> str:
    lines = []
    for v in g.vertices:
        k = v.kind
        gens = ",".join(k.generators)
        if isinstance(k, Rigid):
            extra = f" relators={shlex.quote(';'.join(k.relators))}" if k.relators else ""
            lines.append(f"vertex {v.id} kind=rigid gens={gens}{extra}")
        elif isinstance(k, Abelian):
            per = ";".join(" ".join(map(str, p)) for p in k.peripheral)
            lines.append(f"vertex {v.id} kind=abelian gens={gens} peripheral={shlex.quote(per)}")
        else:
            lines.append(
                f"vertex {v.id} kind=qh gens={gens} genus={k.genus} "
                f"orientable={int(k.orientable)} boundary={k.boundary}"
            )
    for e in g.edges:
        n1 = g.vertices[g.vindex[e.v1]].generators
        n2 = g.vertices[g.vindex[e.v2]].generators
        i1 = ";".join(format_word(w, n1) for w in e.img1)
        i2 = ";".join(format_word(w, n2) for w in e.img2)
        tail = "" if e.tree else f" stable={e.stable}"
        lines.append(
            f"edge {e.id} {e.v1} {e.v2} rank={e.rank} img1={shlex.quote(i1)} "
            f"img2={shlex.quote(i2)} tree={int(e.tree)}{tail}"
        )
    return "\n".join(lines) + "\n"
