"""Reduced words in a free group of finite rank.

Letters are signed generator indices: ``+i`` is the ``i``-th generator
(1-based) and ``-i`` its inverse.  A :class:`Word` always holds a freely
reduced letter tuple together with the rank of the ambient free group, so
that identities of different ranks stay distinguishable.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence


class RankError(ValueError):
    """Letter out of range, or words of different ranks combined."""


def _free_reduce(letters: Iterable[int]) -> list[int]:
    out: list[int] = []
    for x in letters:
        if out and out[-1] == -x:
            out.pop()
        else:
            out.append(x)
    return out


@dataclass(frozen=True)
class Word:
    letters: tuple[int, ...]
    rank: int

    def __post_init__(self):
        if self.rank < 1:
            raise RankError(f"rank must be positive, got {self.rank}")
        for x in self.letters:
            if x == 0 or abs(x) > self.rank:
                raise RankError(f"letter {x} outside rank {self.rank}")
        for x, y in zip(self.letters, self.letters[1:]):
            if x == -y:
                raise ValueError("Word letters must be freely reduced; use reduce()")

    # -- constructors -------------------------------------------------
    @classmethod
    def identity(cls, rank: int) -> "Word":
        return cls((), rank)

    @classmethod
    def gen(cls, i: int, rank: int) -> "Word":
        return cls((i,), rank)

    # -- basic protocol ------------------------------------------------
    def __len__(self) -> int:
        return len(self.letters)

    def __iter__(self) -> Iterator[int]:
        return iter(self.letters)

    def __bool__(self) -> bool:
        return bool(self.letters)

    def is_identity(self) -> bool:
        return not self.letters

    def __mul__(self, other: "Word") -> "Word":
        return multiply(self, other)

    def __invert__(self) -> "Word":
        return inverse(self)

    def __pow__(self, k: int) -> "Word":
        return power(self, k)

    def __repr__(self) -> str:
        return f"Word({format_word(self)!r}, rank={self.rank})"

    def sort_key(self) -> tuple:
        """Shortlex key with letter order 1 < -1 < 2 < -2 < ..."""
        return (len(self.letters), tuple(2 * abs(x) + (x < 0) for x in self.letters))


def reduce(raw: Iterable[int], rank: int) -> Word:
    """Freely reduce a letter sequence."""
    raw = list(raw)
    for x in raw:
        if x == 0 or abs(x) > rank:
            raise RankError(f"letter {x} outside rank {rank}")
    return Word(tuple(_free_reduce(raw)), rank)


def _check_ranks(w1: Word, w2: Word) -> None:
    if w1.rank != w2.rank:
        raise RankError(f"rank mismatch: {w1.rank} vs {w2.rank}")


def multiply(w1: Word, w2: Word) -> Word:
    _check_ranks(w1, w2)
    a, b = w1.letters, w2.letters
    i = 0
    n = min(len(a), len(b))
    while i < n and a[len(a) - 1 - i] == -b[i]:
        i += 1
    return Word(a[: len(a) - i] + b[i:], w1.rank)


def product(words: Iterable[Word], rank: int) -> Word:
    out: list[int] = []
    for w in words:
        if w.rank != rank:
            raise RankError(f"rank mismatch: {w.rank} vs {rank}")
        for x in w.letters:
            if out and out[-1] == -x:
                out.pop()
            else:
                out.append(x)
    return Word(tuple(out), rank)


def inverse(w: Word) -> Word:
    return Word(tuple(-x for x in reversed(w.letters)), w.rank)


def power(w: Word, k: int) -> Word:
    if k < 0:
        w, k = inverse(w), -k
    if k == 0 or not w:
        return Word.identity(w.rank)
    conj, core = cyclic_reduce(w)
    inner = Word(core.letters * k, w.rank)
    return product([conj, inner, inverse(conj)], w.rank)


def commutator(u: Word, v: Word) -> Word:
    """``u v u^-1 v^-1``."""
    _check_ranks(u, v)
    return product([u, v, inverse(u), inverse(v)], u.rank)


def conjugate(w: Word, by: Word) -> Word:
    """``by w by^-1``."""
    return product([by, w, inverse(by)], w.rank)


def cyclic_reduce(w: Word) -> tuple[Word, Word]:
    """Return ``(conjugator, core)`` with ``w = conjugator core conjugator^-1``."""
    a = w.letters
    i, j = 0, len(a) - 1
    while i < j and a[i] == -a[j]:
        i += 1
        j -= 1
    return Word(a[:i], w.rank), Word(a[i : j + 1], w.rank)


def _smallest_period(seq: Sequence[int]) -> int:
    n = len(seq)
    fail = [0] * n
    k = 0
    for i in range(1, n):
        while k and seq[i] != seq[k]:
            k = fail[k - 1]
        if seq[i] == seq[k]:
            k += 1
        fail[i] = k
    p = n - fail[-1]
    return p if n % p == 0 else n


def primitive_root(w: Word) -> tuple[Word, int]:
    if not w:
        raise ValueError("the identity has no primitive root")
    conj, core = cyclic_reduce(w)
    p = _smallest_period(core.letters)
    root_core = Word(core.letters[:p], w.rank)
    return conjugate(root_core, conj), len(core) // p


def commutes(w1: Word, w2: Word) -> bool:
    return multiply(w1, w2) == multiply(w2, w1)


def share_root(w1: Word, w2: Word) -> bool:
    """Commutation decided through primitive roots (independent of :func:`commutes`)."""
    _check_ranks(w1, w2)
    if not w1 or not w2:
        return True
    r1, _ = primitive_root(w1)
    r2, _ = primitive_root(w2)
    return r1 == r2 or r1 == inverse(r2)


def translation_length(w: Word) -> int:
    return len(cyclic_reduce(w)[1])


def conjugator(u: Word, v: Word) -> Word | None:
    """Some ``g`` with ``v = g u g^-1``, or ``None`` when not conjugate."""
    _check_ranks(u, v)
    pu, cu = cyclic_reduce(u)
    pv, cv = cyclic_reduce(v)
    if len(cu) != len(cv):
        return None
    if not cu:
        return Word.identity(u.rank)
    n = len(cu)
    doubled = cu.letters + cu.letters
    for r in range(n):
        if doubled[r : r + n] == cv.letters:
            # cv = rot^-1 cu rot with rot = cu[:r]
            rot = Word(cu.letters[:r], u.rank)
            return product([pv, inverse(rot), inverse(pu)], u.rank)
    return None


def reduced_words(rank: int, length: int) -> Iterator[Word]:
    """All reduced words of exactly ``length`` letters, in shortlex order."""
    alphabet = [x for i in range(1, rank + 1) for x in (i, -i)]
    if length == 0:
        yield Word.identity(rank)
        return

    def extend(prefix: list[int]):
        if len(prefix) == length:
            yield Word(tuple(prefix), rank)
            return
        for x in alphabet:
            if prefix and prefix[-1] == -x:
                continue
            prefix.append(x)
            yield from extend(prefix)
            prefix.pop()

    yield from extend([])


def ball(rank: int, radius: int) -> list[Word]:
    return [w for n in range(radius + 1) for w in reduced_words(rank, n)]


# -- text form ---------------------------------------------------------

def default_names(rank: int) -> tuple[str, ...]:
    return tuple(f"x{i}" for i in range(1, rank + 1))


_TOKEN = re.compile(r"^([A-Za-z_][A-Za-z0-9_']*)(?:\^(-?\d+))?$")


def parse_word(text: str, names: Sequence[str]) -> Word:
    """Parse whitespace-separated tokens ``g``, ``g^-1``, ``g^k``; ``1`` is the identity."""
    index = {name: i + 1 for i, name in enumerate(names)}
    letters: list[int] = []
    for tok in text.split():
        if tok == "1":
            continue
        m = _TOKEN.match(tok)
        if not m:
            raise ValueError(f"bad token {tok!r}")
        name, exp = m.group(1), m.group(2)
        if name not in index:
            raise ValueError(f"unknown generator {name!r}")
        k = int(exp) if exp is not None else 1
        if k == 0:
            raise ValueError(f"zero exponent in {tok!r}")
        x = index[name] if k > 0 else -index[name]
        letters.extend([x] * abs(k))
    return reduce(letters, len(names))


def format_word(w: Word, names: Sequence[str] | None = None) -> str:
    if not w:
        return "1"
    names = names or default_names(w.rank)
    toks = []
    for x, grp in itertools.groupby(w.letters):
        k = len(list(grp))
        name = names[abs(x) - 1]
        e = k if x > 0 else -k
        toks.append(name if e == 1 else f"{name}^{e}")
    return " ".join(toks)
