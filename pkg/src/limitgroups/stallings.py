"""Stallings foldings with witnesses for subgroup membership.

Every edge of the folded graph carries, besides its letter, a word in the
free group on the subgroup generators.  Reading a closed path at the base
vertex multiplies those labels, which yields an expression of the element
in terms of the generators.  Folding keeps labels consistent by re-gauging
one endpoint (a vertex potential) before two edges are identified.
"""
from __future__ import annotations

from dataclasses import dataclass

from .words import Word, inverse, multiply, product


@dataclass
class _Edge:
    src: int
    dst: int
    letter: int  # positive generator index
    label: Word  # in the free group on the subgroup generators


class FoldedGraph:
    def __init__(self, gens: list[Word], rank: int):
        self.rank = rank
        self.ngens = max(len(gens), 1)
        self.gens = list(gens)
        self.edges: list[_Edge | None] = []
        self.nverts = 1
        self.base = 0
        for k, g in enumerate(gens):
            if g.rank != rank:
                raise ValueError("generator rank mismatch")
            self._add_petal(g, k + 1)
        self._fold()
        self._index()

    def _new_vertex(self) -> int:
        self.nverts += 1
        return self.nverts - 1

    def _add_edge(self, u: int, x: int, v: int, label: Word) -> None:
        # store with positive letter
        if x > 0:
            self.edges.append(_Edge(u, v, x, label))
        else:
            self.edges.append(_Edge(v, u, -x, inverse(label)))

    def _add_petal(self, g: Word, k: int) -> None:
        if not g:
            return
        ident = Word.identity(self.ngens)
        cur = self.base
        n = len(g)
        for i, x in enumerate(g.letters):
            nxt = self.base if i == n - 1 else self._new_vertex()
            label = Word.gen(k, self.ngens) if i == 0 else ident
            self._add_edge(cur, x, nxt, label)
            cur = nxt

    def _outgoing(self, u: int):
        """(signed letter, edge index, other end, label read leaving u)"""
        for i, e in enumerate(self.edges):
            if e is None:
                continue
            if e.src == u:
                yield e.letter, i, e.dst, e.label
            if e.dst == u:
                yield -e.letter, i, e.src, inverse(e.label)

    def _regauge(self, v: int, phi: Word) -> None:
        # potential phi at v: labels into v get * phi^-1, labels out of v get phi *
        for e in self.edges:
            if e is None:
                continue
            if e.src == v and e.dst == v:
                e.label = product([phi, e.label, inverse(phi)], self.ngens)
            elif e.src == v:
                e.label = multiply(phi, e.label)
            elif e.dst == v:
                e.label = multiply(e.label, inverse(phi))

    def _merge_vertex(self, keep: int, drop: int) -> None:
        for e in self.edges:
            if e is None:
                continue
            if e.src == drop:
                e.src = keep
            if e.dst == drop:
                e.dst = keep

    def _find_fold(self):
        for u in range(self.nverts):
            seen: dict[int, tuple[int, int, Word]] = {}
            for x, i, v, lab in self._outgoing(u):
                if x in seen and seen[x][0] != i:
                    return u, x, seen[x], (i, v, lab)
                seen.setdefault(x, (i, v, lab))
        return None

    def _fold(self) -> None:
        while True:
            f = self._find_fold()
            if f is None:
                return
            u, x, (i1, v1, l1), (i2, v2, l2) = f
            if v1 != v2:
                if v2 == self.base or (v2 == u and v1 != self.base):
                    i1, v1, l1, i2, v2, l2 = i2, v2, l2, i1, v1, l1
                if v2 != u:
                    # make the label read along edge 2 equal that along edge 1
                    self._regauge(v2, multiply(inverse(l1), l2))
                else:
                    # v1 is the base and edge 2 is a loop at u
                    self._regauge(u, multiply(inverse(l1), l2))
                self._merge_vertex(v1, v2)
            # edges now parallel with equal labels (or a relation among generators)
            self.edges[i2] = None

    def _index(self) -> None:
        self.out: dict[int, dict[int, tuple[int, Word]]] = {}
        for x_u in range(self.nverts):
            self.out[x_u] = {}
        for e in self.edges:
            if e is None:
                continue
            self.out.setdefault(e.src, {})[e.letter] = (e.dst, e.label)
            self.out.setdefault(e.dst, {})[-e.letter] = (e.src, inverse(e.label))

    @property
    def vertices(self) -> set[int]:
        vs = {self.base}
        for e in self.edges:
            if e is not None:
                vs.update((e.src, e.dst))
        return vs

    def num_edges(self) -> int:
        return sum(e is not None for e in self.edges)

    def rank_of_subgroup(self) -> int:
        return self.num_edges() - len(self.vertices) + 1

    def is_folded(self) -> bool:
        return self._find_fold() is None

    def read(self, w: Word) -> tuple[bool, Word | None]:
        cur = self.base
        labels = []
        for x in w.letters:
            step = self.out.get(cur, {}).get(x)
            if step is None:
                return False, None
            cur, lab = step
            labels.append(lab)
        if cur != self.base:
            return False, None
        return True, product(labels, self.ngens)


def stallings_membership(subgroup_gens, w: Word) -> tuple[bool, Word | None]:
    """Decide ``w in <subgroup_gens>``.

    The witness is a word in the free group on the generators (letter ``k``
    stands for ``subgroup_gens[k-1]``); substituting the generators into it
    reproduces ``w``.
    """
    gens = list(subgroup_gens)
    if not w:
        return True, Word.identity(max(len(gens), 1))
    return FoldedGraph(gens, w.rank).read(w)
