"""Measured laminations on a 2-complex, recorded by their edge weights."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

FLOAT_TOL = 1e-12


class LaminationError(ValueError):
    pass


@dataclass(frozen=True)
class Complex2:
    edges: tuple[str, ...]
    cells: tuple[tuple[str, str, str], ...]

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(self.edges))
        object.__setattr__(self, "cells", tuple(tuple(c) for c in self.cells))
        if len(set(self.edges)) != len(self.edges):
            raise LaminationError("duplicate edge identifier")
        known = set(self.edges)
        for c in self.cells:
            if len(c) != 3:
                raise LaminationError(f"cell {c} is not a triangle")
            for e in c:
                if e not in known:
                    raise LaminationError(f"cell {c} uses unknown edge {e}")


Weights = Mapping[str, Fraction | float]


def weights(values: Mapping[str, object]) -> dict[str, Fraction | float]:
    out = {}
    for k, v in values.items():
        v = v if isinstance(v, float) else Fraction(v)
        if v < 0:
            raise LaminationError(f"negative weight on edge {k}")
        out[k] = v
    return out


def _half(x):
    return x / 2 if isinstance(x, float) else Fraction(x) / 2


def corner_coordinates(w1, w2, w3) -> tuple:
    return (_half(w1 + w2 - w3), _half(w2 + w3 - w1), _half(w3 + w1 - w2))


def validate(k: Complex2, w: Weights) -> bool:
    for e in k.edges:
        if e not in w:
            raise LaminationError(f"no weight on edge {e}")
    for c in k.cells:
        vals = [w[e] for e in c]
        tol = FLOAT_TOL if any(isinstance(v, float) for v in vals) else 0
        if any(x < -tol for x in corner_coordinates(*vals)):
            return False
    return True


def projectivize(w: Weights) -> dict[str, Fraction | float]:
    total = sum(w.values())
    if not total > 0:
        raise LaminationError("the zero lamination has no projective class")
    if isinstance(total, float):
        return {k: v / total for k, v in w.items()}
    return {k: Fraction(v) / total for k, v in w.items()}


def octahedron() -> Complex2:
    """Boundary of the octahedron: vertices ``±x, ±y, ±z``."""
    verts = ["px", "nx", "py", "ny", "pz", "nz"]
    edges = [f"{u}{v}" for u, v in itertools.combinations(verts, 2) if u[1] != v[1]]
    cells = []
    for sx, sy, sz in itertools.product("pn", repeat=3):
        a, b, c = sx + "x", sy + "y", sz + "z"
        cells.append((a + b, b + c, a + c))
    return Complex2(tuple(edges), tuple(cells))


# -- files -----------------------------------------------------------------


def _lines(text: str):
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            yield line.split()


def parse_complex(text: str) -> Complex2:
    edges, cells = [], []
    for toks in _lines(text):
        if toks[0] == "edge" and len(toks) == 2:
            edges.append(toks[1])
        elif toks[0] == "cell" and len(toks) == 4:
            cells.append(tuple(toks[1:]))
        else:
            raise LaminationError(f"bad complex line: {' '.join(toks)}")
    return Complex2(tuple(edges), tuple(cells))


def format_complex(k: Complex2) -> str:
    lines = [f"edge {e}" for e in k.edges] + [f"cell {' '.join(c)}" for c in k.cells]
    return "\n".join(lines) + "\n"


def parse_weights(text: str, floating: bool = False) -> dict[str, Fraction | float]:
    out = {}
    for toks in _lines(text):
        if toks[0] != "w" or len(toks) != 3:
            raise LaminationError(f"bad weights line: {' '.join(toks)}")
        try:
            out[toks[1]] = float(toks[2]) if floating else Fraction(toks[2])
        except ValueError as exc:
            raise LaminationError(f"bad weight value {toks[2]!r}") from exc
    return weights(out)


def format_weights(w: Weights, order: Sequence[str] | None = None) -> str:
    keys = order or list(w)
    return "".join(f"w {k} {w[k]!r}\n" if isinstance(w[k], float) else f"w {k} {w[k]}\n" for k in keys)
