"""Finite presentations and verified homomorphisms into free groups."""
from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from .words import (
    Word,
    default_names,
    format_word,
    inverse,
    multiply,
    parse_word,
    product,
)


class RelatorError(ValueError):
    """A proposed homomorphism does not kill some relator."""

    def __init__(self, index: int, relator: Word, image: Word):
        self.index = index
        self.relator = relator
        self.image = image
        super().__init__(
            f"relator #{index} ({format_word(relator)}) maps to {format_word(image)}, not 1"
        )


@dataclass(frozen=True)
class Presentation:
    generators: tuple[str, ...]
    relators: tuple[Word, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "generators", tuple(self.generators))
        object.__setattr__(self, "relators", tuple(self.relators))
        if len(set(self.generators)) != len(self.generators):
            raise ValueError(f"duplicate generator names in {self.generators}")
        for r in self.relators:
            if r.rank != self.rank:
                raise ValueError("relator rank differs from generator count")
            if not r:
                raise ValueError("relators must be nonempty")

    @property
    def rank(self) -> int:
        return len(self.generators)

    def word(self, text: str) -> Word:
        return parse_word(text, self.generators)

    def gen(self, name: str) -> Word:
        return Word.gen(self.generators.index(name) + 1, self.rank)

    def fmt(self, w: Word) -> str:
        return format_word(w, self.generators)


def substitute(images: Sequence[Word], w: Word, rank: int) -> Word:
    """Image of ``w`` under the letter substitution ``i -> images[i-1]``."""
    if len(images) < w.rank:
        raise ValueError(f"word of rank {w.rank} but only {len(images)} images")
    out: list[int] = []
    for x in w.letters:
        img = images[abs(x) - 1].letters
        if x < 0:
            img = tuple(-y for y in reversed(img))
        for y in img:
            if out and out[-1] == -y:
                out.pop()
            else:
                out.append(y)
    return Word(tuple(out), rank)


@dataclass(frozen=True)
class Hom:
    """A homomorphism from a presented group to the free group of ``target_rank``.

    Construction fails with :class:`RelatorError` unless every relator maps
    to the identity.
    """

    domain: Presentation
    target_rank: int
    images: tuple[Word, ...]
    target_names: tuple[str, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "images", tuple(self.images))
        if len(self.images) != self.domain.rank:
            raise ValueError(
                f"{len(self.images)} images for {self.domain.rank} generators"
            )
        for w in self.images:
            if w.rank != self.target_rank:
                raise ValueError("image rank differs from target rank")
        for i, r in enumerate(self.domain.relators):
            img = substitute(self.images, r, self.target_rank)
            if img:
                raise RelatorError(i, r, img)

    def __call__(self, w: Word) -> Word:
        return evaluate(self, w)

    @property
    def names(self) -> tuple[str, ...]:
        return self.target_names or default_names(self.target_rank)

    def relators_ok(self) -> bool:
        return all(not substitute(self.images, r, self.target_rank) for r in self.domain.relators)

    def key(self) -> tuple:
        """Ordering used for shortening: max length, total length, serialized form."""
        lens = [len(w) for w in self.images]
        return (max(lens, default=0), sum(lens), tuple(w.sort_key() for w in self.images))


def validate_hom(p: Presentation, target_rank: int, images: Sequence[Word], target_names=None) -> Hom:
    return Hom(p, target_rank, tuple(images), target_names)


def evaluate(f: Hom, w: Word) -> Word:
    if w.rank != f.domain.rank:
        raise ValueError(f"word has rank {w.rank}, domain has {f.domain.rank} generators")
    return substitute(f.images, w, f.target_rank)


def hom_length(f: Hom) -> int:
    return max((len(w) for w in f.images), default=0)


def nontrivial_on(f: Hom, X: Iterable[Word]) -> bool:
    return all(evaluate(f, x) for x in X)


def pairwise_quotients(X: Sequence[Word]) -> list[Word]:
    """``x y^-1`` for each unordered pair of distinct members of ``X`` (in order)."""
    X = list(dict.fromkeys(X))
    return [multiply(x, inverse(y)) for x, y in itertools.combinations(X, 2)]


def injective_on(f: Hom, X: Iterable[Word]) -> bool:
    images = [evaluate(f, x) for x in dict.fromkeys(X)]
    return len(set(images)) == len(images)


def free_presentation(n: int, names: Sequence[str] | None = None) -> Presentation:
    return Presentation(tuple(names) if names else default_names(n))


def embed_free_into_rank2(n: int, names: Sequence[str] | None = None) -> Hom:
    """``x_i -> b^i a b^-i``: the free group of rank ``n`` inside ``F(a, b)``."""
    if n < 1:
        raise ValueError("n must be positive")
    a, b = Word.gen(1, 2), Word.gen(2, 2)
    images = [product([b ** i, a, b ** -i], 2) for i in range(1, n + 1)]
    return Hom(free_presentation(n, names), 2, tuple(images))


# -- free abelian groups ----------------------------------------------

def dot(u: Sequence[int], v: Sequence[int]) -> int:
    return sum(x * y for x, y in zip(u, v))


def shell(n: int, k: int) -> Iterable[tuple[int, ...]]:
    """Integer n-vectors of max-norm exactly ``k``, lexicographically ascending."""
    for z in itertools.product(range(-k, k + 1), repeat=n):
        if max(map(abs, z), default=0) == k:
            yield z


def canonical_vectors(n: int, max_norm: int | None = None) -> Iterable[tuple[int, ...]]:
    k = 1
    while max_norm is None or k <= max_norm:
        yield from shell(n, k)
        k += 1


def abelian_discriminator(
    vectors: Iterable[Sequence[int]], dim: int | None = None
) -> tuple[tuple[int, ...], Callable[[Sequence[int]], int]]:
    """First ``z`` in the canonical enumeration with ``<z, v> != 0`` for every ``v``."""
    vs = [tuple(v) for v in vectors]
    if dim is None:
        if not vs:
            raise ValueError("dimension unknown for empty input")
        dim = len(vs[0])
    if any(len(v) != dim for v in vs):
        raise ValueError("vectors of mixed dimension")
    if any(not any(v) for v in vs):
        raise ValueError("zero vector cannot be discriminated")
    if not vs:
        z = (1,) + (0,) * (dim - 1)
        return z, functools.partial(dot, z)
    for z in canonical_vectors(dim):
        if all(dot(z, v) for v in vs):
            return z, functools.partial(dot, z)
    raise AssertionError("unreachable")


# -- stable kernels ----------------------------------------------------

EVENTUALLY_TRIVIAL = "eventually-trivial"
EVENTUALLY_NONTRIVIAL = "eventually-nontrivial"
UNSTABLE = "unstable-in-window"


@dataclass(frozen=True)
class StableReport:
    """Windowed, heuristic stability verdict for one element."""

    element: Word
    trivial: tuple[bool, ...]
    verdict: str


def _verdict(pattern: Sequence[bool]) -> str:
    last = pattern[-1]
    tail = len(list(itertools.takewhile(lambda t: t == last, reversed(pattern))))
    if 2 * tail < len(pattern):
        return UNSTABLE
    return EVENTUALLY_TRIVIAL if last else EVENTUALLY_NONTRIVIAL


def stable_kernel_window(fs: Sequence[Hom], X: Iterable[Word]) -> list[StableReport]:
    fs = list(fs)
    if not fs:
        raise ValueError("empty sequence of homomorphisms")
    d, r = fs[0].domain, fs[0].target_rank
    if any(f.domain != d or f.target_rank != r for f in fs):
        raise ValueError("homomorphisms must share domain and target rank")
    reports = []
    for x in X:
        pattern = tuple(not evaluate(f, x) for f in fs)
        reports.append(StableReport(x, pattern, _verdict(pattern)))
    return reports


# -- file formats ------------------------------------------------------

def _lines(text: str):
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            yield line


def parse_presentation(text: str) -> Presentation:
    gens: tuple[str, ...] | None = None
    rel_texts: list[str] = []
    for line in _lines(text):
        head, _, rest = line.partition(" ")
        if head == "gens":
            gens = tuple(rest.split())
        elif head == "rel":
            rel_texts.append(rest)
        else:
            raise ValueError(f"unexpected line {line!r}")
    if gens is None:
        raise ValueError("missing 'gens' line")
    rels = [parse_word(t, gens) for t in rel_texts]
    return Presentation(gens, tuple(r for r in rels if r))


def format_presentation(p: Presentation) -> str:
    lines = ["gens " + " ".join(p.generators)]
    lines += [f"rel {p.fmt(r)}" for r in p.relators]
    return "\n".join(lines) + "\n"


def parse_hom_images(text: str, domain_gens: Sequence[str]) -> tuple[int, tuple[str, ...], list[Word]]:
    """Parse a hom file into ``(target_rank, target_names, images)`` without verifying relators."""
    target_rank = None
    names: tuple[str, ...] | None = None
    raw: dict[str, str] = {}
    for line in _lines(text):
        parts = line.split(None, 2)
        if parts[0] == "target_rank":
            target_rank = int(parts[1])
        elif parts[0] == "target_gens":
            names = tuple(line.split()[1:])
        elif parts[0] == "image":
            raw[parts[1]] = parts[2] if len(parts) > 2 else "1"
        else:
            raise ValueError(f"unexpected line {line!r}")
    if target_rank is None:
        raise ValueError("missing 'target_rank' line")
    names = names or default_names(target_rank)
    if len(names) != target_rank:
        raise ValueError("target_gens disagrees with target_rank")
    missing = [g for g in domain_gens if g not in raw]
    if missing:
        raise ValueError(f"no image for generators {missing}")
    return target_rank, names, [parse_word(raw[g], names) for g in domain_gens]


def parse_hom(text: str, domain: Presentation) -> Hom:
    rank, names, images = parse_hom_images(text, domain.generators)
    return Hom(domain, rank, tuple(images), names)


def format_hom(f: Hom) -> str:
    lines = [f"target_rank {f.target_rank}", "target_gens " + " ".join(f.names)]
    lines += [
        f"image {g} {format_word(w, f.names)}" for g, w in zip(f.domain.generators, f.images)
    ]
    return "\n".join(lines) + "\n"
