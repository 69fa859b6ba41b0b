"""Cutting quadratically hanging vertices along simple closed curves.

A surface vertex is replaced by the graph of groups obtained by cutting
along one curve: a separating curve gives two smaller surfaces glued along
a cyclic edge, a non-separating curve through a handle gives an HNN
extension of a surface of lower genus.  The new graph of groups comes with
name-preserving maps in both directions, checked to be mutually inverse
isomorphisms before use.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field

from .gad import QH, Edge, Gad, GadError, Vertex
from .words import Word, commutes, inverse, parse_word


@dataclass(frozen=True)
class Cut:
    vertex: str
    curve: str  # the curve, written in the old vertex generators
    kind: str  # "separating" or "handle"
    gad: Gad
    psi: dict[str, str]  # new generator -> word over the old group's generators
    phi: dict[str, str] = field(default_factory=dict)  # old generator -> new word, when not by name


def _factors(k: QH) -> list[tuple]:
    if k.orientable:
        fs = [("h", 2 * i + 1, 2 * i + 2) for i in range(k.genus)]
    else:
        fs = [("c", i + 1) for i in range(k.genus)]
    return fs + [("d", k.boundary_index(j)) for j in range(1, k.boundary + 1)]


def _factor_word(f, names) -> str:
    if f[0] == "h":
        a, b = names[f[1] - 1], names[f[2] - 1]
        return f"{a} {b} {a}^-1 {b}^-1"
    if f[0] == "c":
        return f"{names[f[1] - 1]}^2"
    return names[f[1] - 1]


def _units(fs) -> int:
    return sum(2 if f[0] == "h" else 1 for f in fs)


def _piece(fs, names, new_boundary: str, orientable: bool) -> QH:
    gens = []
    for f in fs:
        gens += [names[i - 1] for i in f[1:]] if f[0] != "d" else []
    gens += [names[f[1] - 1] for f in fs if f[0] == "d"]
    gens.append(new_boundary)
    handles = sum(f[0] == "h" for f in fs)
    caps = sum(f[0] == "c" for f in fs)
    b = sum(f[0] == "d" for f in fs) + 1
    return QH(tuple(gens), handles if orientable else caps, orientable, b)


def _fresh(base: str, taken: set[str]) -> str:
    stem = re.sub(r"[^A-Za-z0-9_]", "_", base)
    if not stem or not (stem[0].isalpha() or stem[0] == "_"):
        stem = "s" + stem
    for i in itertools.count(1):
        name = f"{stem}_{i}"
        if name not in taken:
            taken.add(name)
            return name
    raise AssertionError


def _rebuild(g: Gad, vi: int, pieces: list[Vertex], new_edges: list[Edge]) -> Gad:
    """Replace vertex ``vi`` by ``pieces`` and reattach its edges."""
    old = g.vertices[vi]
    owner = {}
    for p in pieces:
        for name in p.generators:
            owner[name] = p
    vertices = list(g.vertices[:vi]) + pieces + list(g.vertices[vi + 1 :])
    edges = []
    for e in g.edges:
        ends = []
        for vid, imgs in ((e.v1, e.img1), (e.v2, e.img2)):
            if vid != old.id:
                ends.append((vid, imgs))
                continue
            texts = [" ".join(_letters(w, old.generators)) for w in imgs]
            used = {t.split("^")[0] for text in texts for t in text.split()}
            homes = {owner[n].id for n in used}
            if len(homes) > 1:
                raise GadError(f"edge {e.id} does not lie in one piece after the cut")
            home = next((p for p in pieces if p.id in homes), pieces[0])
            ends.append((home.id, tuple(parse_word(t, home.generators) for t in texts)))
        edges.append(Edge(e.id, ends[0][0], ends[1][0], ends[0][1], ends[1][1], e.tree, e.stable))
    return Gad(vertices, edges + new_edges)


def _letters(w: Word, names) -> list[str]:
    return [names[abs(c) - 1] + ("" if c > 0 else "^-1") for c in w.letters]


def separating_cuts(k: QH):
    """Candidate ``(rotation, split)`` pairs for cuts after a factor prefix."""
    fs = _factors(k)
    m = len(fs)
    rotations = range(m) if k.genus == 0 else [0]
    for r in rotations:
        rot = fs[r:] + fs[:r]
        for p in range(1, m):
            P, S = rot[:p], rot[p:]
            if _units(P) >= 2 and _units(S) >= 2:
                yield rot, p


def cut_separating(g: Gad, vi: int, rot, p) -> Cut:
    v = g.vertices[vi]
    k = v.kind
    names = k.generators
    taken = set(g.names)
    e1, e2 = _fresh(v.id + "_e", taken), _fresh(v.id + "_e", taken)
    P, S = rot[:p], rot[p:]
    q1 = _piece(P, names, e1, k.orientable)
    q2 = _piece(S, names, e2, k.orientable)
    id1, id2 = f"{v.id}.1", f"{v.id}.2"
    pv = [Vertex(id1, q1), Vertex(id2, q2)]
    zeta = " ".join(_factor_word(f, names) for f in P)
    edge = Edge(
        f"{v.id}.cut", id1, id2,
        (parse_word(f"{e1}^-1", q1.generators),), (parse_word(e2, q2.generators),), True,
    )
    new = _rebuild(g, vi, pv, [edge])
    inv_zeta = " ".join(reversed([_inv_tok(t) for t in _expand(zeta)]))
    return Cut(v.id, zeta, "separating", new, {e1: inv_zeta, e2: zeta})


def _expand(text: str) -> list[str]:
    out = []
    for tok in text.split():
        name, _, e = tok.partition("^")
        k = int(e) if e else 1
        out += [name if k > 0 else f"{name}^-1"] * abs(k)
    return out


def _inv_tok(t: str) -> str:
    return t[:-3] if t.endswith("^-1") else t + "^-1"


def cut_handle(g: Gad, vi: int, along_b: bool = False) -> Cut:
    """Cut an orientable surface along ``a1`` (or ``b1``), giving an HNN extension."""
    v = g.vertices[vi]
    k = v.kind
    if not k.orientable or k.genus < 1:
        raise GadError("handle cuts need an orientable surface of positive genus")
    names = list(k.generators)
    a, b = names[0], names[1]
    taken = set(g.names)
    rest = names[2:]
    handles = [(rest[2 * i], rest[2 * i + 1]) for i in range(k.genus - 1)]
    ds = tuple(rest[2 * (k.genus - 1):])
    inner = tuple(x for h in handles for x in h)
    y = _fresh(v.id + "_y", taken)
    pid = f"{v.id}.1"
    if along_b:
        # [a,b] = y x with y = a b a^-1, x = b^-1; stable letter a: a x^-1 a^-1 = y
        x = _fresh(v.id + "_x", taken)
        gens = inner + ds + (y, x)
        img1, img2 = inverse(parse_word(x, gens)), parse_word(y, gens)
        stable, zeta = a, b
        phi = {b: f"{x}^-1"}
        psi = {y: f"{a} {b} {a}^-1", x: f"{b}^-1"}
    else:
        # [a,b] = x y with x = a, y = b a^-1 b^-1; stable letter b: b x b^-1 = y^-1
        gens = inner + ds + (a, y)
        img1, img2 = parse_word(a, gens), inverse(parse_word(y, gens))
        stable, zeta = b, a
        phi = {}
        psi = {y: f"{b} {a}^-1 {b}^-1"}
    piece = QH(gens, k.genus - 1, True, k.boundary + 2)
    edge = Edge(f"{v.id}.cut", pid, pid, (img1,), (img2,), False, stable)
    new = _rebuild_handle(g, vi, Vertex(pid, piece), edge)
    return Cut(v.id, zeta, "handle", new, psi, phi)


def _rebuild_handle(g: Gad, vi, piece: Vertex, edge: Edge) -> Gad:
    # edges attached at the old vertex may not use the handle generators
    old = g.vertices[vi]
    handle_names = set(old.generators[:2])
    for e in g.edges:
        for vid, imgs in ((e.v1, e.img1), (e.v2, e.img2)):
            if vid == old.id:
                for w in imgs:
                    if any(old.generators[abs(c) - 1] in handle_names for c in w.letters):
                        raise GadError(f"edge {e.id} uses a handle generator of {old.id}")
    return _rebuild(g, vi, [piece], [edge])


def word_map(src: Gad, dst: Gad, overrides: dict[str, str]) -> list[Word]:
    """Images of ``src`` generators in ``dst``, by name unless overridden."""
    out = []
    for name in src.names:
        text = overrides.get(name, name)
        out.append(parse_word(text, dst.names))
    return out


def surface_images_nonabelian(images: list[Word]) -> bool:
    return any(not commutes(x, y) for x, y in itertools.combinations(images, 2))
