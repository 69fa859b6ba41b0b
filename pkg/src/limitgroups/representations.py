"""Matrix images of free and constructible limit groups.

Exact work is done with :class:`fractions.Fraction`.  Floating point only
appears in :func:`numeric_solve`.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import minimize

from .homs import Presentation, pairwise_quotients
from .words import Word, format_word, inverse


class IsometryClass(enum.Enum):
    IDENTITY = "identity"
    ELLIPTIC = "elliptic"
    PARABOLIC = "parabolic"
    HYPERBOLIC = "hyperbolic"


def _fr(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


@dataclass(frozen=True)
class Mat2:
    a: Fraction
    b: Fraction
    c: Fraction
    d: Fraction

    def __post_init__(self):
        for k in "abcd":
            object.__setattr__(self, k, _fr(getattr(self, k)))
        if self.a * self.d - self.b * self.c != 1:
            raise ValueError("determinant is not 1")

    @classmethod
    def of(cls, rows) -> "Mat2":
        (a, b), (c, d) = rows
        return cls(a, b, c, d)

    @classmethod
    def identity(cls) -> "Mat2":
        return cls(1, 0, 0, 1)

    def __matmul__(self, o: "Mat2") -> "Mat2":
        return Mat2(
            self.a * o.a + self.b * o.c, self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c, self.c * o.b + self.d * o.d,
        )

    def inv(self) -> "Mat2":
        return Mat2(self.d, -self.b, -self.c, self.a)

    @property
    def trace(self) -> Fraction:
        return self.a + self.d

    def is_scalar_identity(self) -> bool:
        """``±I``, the identity in PSL2."""
        return self.b == 0 and self.c == 0 and self.a == self.d

    def rows(self):
        return ((self.a, self.b), (self.c, self.d))


@dataclass(frozen=True)
class Mat3:
    rows: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(_fr(x) for x in r) for r in self.rows)
        object.__setattr__(self, "rows", rows)
        for x in (x for r in rows for x in r):
            q = x.denominator
            while q % 5 == 0:
                q //= 5
            if q != 1:
                raise ValueError("denominators must be powers of 5")
        if _mul3(_transpose(rows), rows) != _ID3:
            raise ValueError("matrix is not orthogonal")
        if _det3(rows) != 1:
            raise ValueError("determinant is not 1")

    def __matmul__(self, o: "Mat3") -> "Mat3":
        return Mat3(_mul3(self.rows, o.rows))

    def inv(self) -> "Mat3":
        return Mat3(_transpose(self.rows))

    def apply(self, v: Sequence) -> tuple[Fraction, ...]:
        return tuple(sum(r[j] * _fr(v[j]) for j in range(3)) for r in self.rows)

    def is_identity(self) -> bool:
        return self.rows == _ID3


_ID3 = tuple(tuple(Fraction(int(i == j)) for j in range(3)) for i in range(3))


def _mul3(A, B):
    return tuple(tuple(sum(A[i][k] * B[k][j] for k in range(3)) for j in range(3)) for i in range(3))


def _transpose(A):
    return tuple(tuple(A[j][i] for j in range(3)) for i in range(3))


def _det3(A):
    return (
        A[0][0] * (A[1][1] * A[2][2] - A[1][2] * A[2][1])
        - A[0][1] * (A[1][0] * A[2][2] - A[1][2] * A[2][0])
        + A[0][2] * (A[1][0] * A[2][1] - A[1][1] * A[2][0])
    )


def classify_isometry(m: Mat2) -> IsometryClass:
    if m.is_scalar_identity():
        return IsometryClass.IDENTITY
    t = abs(m.trace)
    if t > 2:
        return IsometryClass.HYPERBOLIC
    if t == 2:
        return IsometryClass.PARABOLIC
    return IsometryClass.ELLIPTIC


def evaluate_matrix(w: Word, gens: Sequence, one):
    """Image of ``w`` with generator ``i`` sent to ``gens[i-1]``."""
    out = one
    invs = {}
    for c in w.letters:
        i = abs(c) - 1
        if c > 0:
            m = gens[i]
        else:
            if i not in invs:
                invs[i] = gens[i].inv()
            m = invs[i]
        out = out @ m
    return out


def _sweep(gens, one, depth: int):
    """Yield ``(word, image)`` over reduced words of length 1..depth, depth first."""
    rank = len(gens)
    letters = [s * i for i in range(1, rank + 1) for s in (1, -1)]
    mats = {i: gens[i - 1] for i in range(1, rank + 1)}
    mats.update({-i: gens[i - 1].inv() for i in range(1, rank + 1)})
    stack = [((c,), mats[c]) for c in reversed(letters)]
    while stack:
        word, m = stack.pop()
        yield Word(word, rank), m
        if len(word) < depth:
            for c in reversed(letters):
                if c != -word[-1]:
                    stack.append((word + (c,), m @ mats[c]))


@dataclass(frozen=True)
class Certificate:
    kind: str
    depth: int
    checked: int
    ok: bool
    failures: tuple[Word, ...] = ()

    def line(self) -> str:
        verdict = "pass" if self.ok else "FAIL"
        return f"{verdict} {self.kind} depth={self.depth} words={self.checked} failures={len(self.failures)}"


def _cyclic_traces_agree(w: Word, A: Mat2, B: Mat2, tr: Fraction) -> bool:
    gens = (A, B)
    if evaluate_matrix(inverse(w), gens, Mat2.identity()).trace != tr:
        return False
    letters = w.letters
    mats = {1: A, -1: A.inv(), 2: B, -2: B.inv()}
    for k in range(1, len(letters)):
        m = Mat2.identity()
        for c in letters[k:] + letters[:k]:
            m = m @ mats[c]
        if m.trace != tr:
            return False
    return True


def schottky_pair(depth: int = 6, cross_check: bool = True) -> tuple[Mat2, Mat2, Certificate]:
    A = Mat2(3, 0, 0, Fraction(1, 3))
    T = Mat2(1, 1, 1, 2)
    B = T @ A @ T.inv()
    fails = []
    n = 0
    for w, m in _sweep((A, B), Mat2.identity(), depth):
        n += 1
        tr = m.trace
        ok = abs(tr) > 2
        if ok and cross_check and len(w) > 1:
            ok = _cyclic_traces_agree(w, A, B, tr)
        if not ok:
            fails.append(w)
    return A, B, Certificate("schottky |tr|>2", depth, n, not fails, tuple(fails))


def so3_pair(depth: int = 8) -> tuple[Mat3, Mat3, Certificate]:
    """Rotations by ``arccos(3/5)`` about the z and x axes.

    Freeness to ``depth`` is certified mod 5: for a reduced word of length
    ``n`` the integer matrix ``5^n w`` is not divisible by 5, so ``w`` is
    not the identity.  Orthogonality is checked on every image.
    """
    f = Fraction
    P = Mat3(((f(3, 5), f(-4, 5), 0), (f(4, 5), f(3, 5), 0), (0, 0, 1)))
    Q = Mat3(((1, 0, 0), (0, f(3, 5), f(-4, 5)), (0, f(4, 5), f(3, 5))))
    fails = []
    n = 0
    for w, m in _sweep((P, Q), Mat3(_ID3), depth):
        n += 1
        scale = 5 ** len(w)
        ints = [x * scale for r in m.rows for x in r]
        if any(x.denominator != 1 for x in ints) or all(int(x) % 5 == 0 for x in ints):
            fails.append(w)
    return P, Q, Certificate("so3 mod-5 nonidentity", depth, n, not fails, tuple(fails))


def moves_basepoint(P: Mat3, Q: Mat3, depth: int = 8, v=(1, 0, 0)) -> Certificate:
    """Check that every reduced word of length ``<= depth`` moves ``v``."""
    v = tuple(Fraction(x) for x in v)
    fails = []
    n = 0
    for w, m in _sweep((P, Q), Mat3(_ID3), depth):
        n += 1
        if m.apply(v) == v:
            fails.append(w)
    label = ",".join(str(x) for x in v)
    return Certificate(f"so3 moves ({label})", depth, n, not fails, tuple(fails))


# -- embedding a CLG --------------------------------------------------------


@dataclass(frozen=True)
class EmbeddingReport:
    target: str
    hom: object
    matrices: tuple
    checks: tuple[tuple[str, bool], ...]

    @property
    def ok(self) -> bool:
        return all(ok for _, ok in self.checks)

    def lines(self) -> list[str]:
        return [f"{'pass' if ok else 'FAIL'} {text}" for text, ok in self.checks]


def _free_matrices(target: str, rank: int, depth: int):
    if target == "sl2":
        A, B, _ = schottky_pair(depth=1, cross_check=False)
        one = Mat2.identity()
    elif target == "so3":
        A, B, _ = so3_pair(depth=1)
        one = Mat3(_ID3)
    else:
        raise ValueError(f"unknown target {target!r}")
    if rank > 2:
        raise ValueError("free factor of rank above 2 after discrimination")
    return (A, B)[:rank], one


def embed_clg(c, X: Iterable[Word], target: str = "sl2", max_doublings: int = 12) -> EmbeddingReport:
    """Discriminate ``X`` injectively, then send the free target to a free matrix pair."""
    from .clg import discriminate

    X = list(X)
    if any(not x for x in X):
        raise ValueError("the identity is not allowed in X")
    h, _ = discriminate(c, X, "injective", max_doublings)
    gens, one = _free_matrices(target, h.target_rank, 0)
    mats = tuple(evaluate_matrix(w, gens, one) for w in h.images)
    names = c.presentation.generators
    checks = []
    for x in X:
        m = evaluate_matrix(h(x), gens, one)
        label = format_word(x, names)
        if target == "sl2":
            cls = classify_isometry(m)
            checks.append((f"{label} -> tr {m.trace} {cls.value}", cls is IsometryClass.HYPERBOLIC))
        else:
            checks.append((f"{label} -> non-identity rotation", not m.is_identity()))
    if target == "sl2":
        bad = 0
        qs = pairwise_quotients(X)
        for q in qs:
            m = evaluate_matrix(h(q), gens, one)
            if classify_isometry(m) in (IsometryClass.PARABOLIC, IsometryClass.IDENTITY):
                bad += 1
        checks.append((f"no parabolic or trivial image among {len(qs)} quotients", bad == 0))
    return EmbeddingReport(target, h, mats, tuple(checks))


# -- numerical representation varieties ------------------------------------


@dataclass(frozen=True)
class NumericRep:
    matrices: tuple[np.ndarray, ...]
    residual: float
    traces: tuple[float, ...]
    success: bool
    attempts: int
    seed: int

    def lines(self, names: Sequence[str], target_labels: Sequence[str] = ()) -> list[str]:
        out = []
        for n, m in zip(names, self.matrices):
            vals = " ".join(f"{x:.17g}" for x in m.ravel())
            out.append(f"matrix {n} {vals}")
        for lab, t in zip(target_labels, self.traces):
            out.append(f"trace {lab} {t:.17g}")
        out.append(f"residual {self.residual:.17g}")
        out.append(f"success {int(self.success)} attempts={self.attempts} seed={self.seed}")
        return out


def _normalize(params: np.ndarray, k: int) -> list[np.ndarray]:
    mats = []
    for i in range(k):
        m = params[4 * i : 4 * i + 4].reshape(2, 2).copy()
        d = np.linalg.det(m)
        if d < 0:
            m[0] = -m[0]
            d = -d
        mats.append(m / math.sqrt(max(d, 1e-300)))
    return mats


def _eval_float(w: Word, mats, invs) -> np.ndarray:
    out = np.eye(2)
    for c in w.letters:
        out = out @ (mats[c - 1] if c > 0 else invs[-c - 1])
    return out


def _sl2_inv(m: np.ndarray) -> np.ndarray:
    return np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]])


def numeric_solve(
    p: Presentation,
    hyperbolic_targets: Iterable[Word] = (),
    attempts: int = 50,
    tolerance: float = 1e-9,
    seed: int = 0,
    margin: float = 0.5,
) -> NumericRep:
    """Random restarts of a Nelder-Mead descent on the relator residual.

    The objective is the sum of squared relator residuals plus a hinge
    penalty keeping each target trace above ``2 + margin``.  Success means
    residual below ``tolerance`` and every target with ``|tr| > 2 + tolerance``.
    """
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    targets = list(hyperbolic_targets)
    k = p.rank
    rng = np.random.default_rng(seed)

    def parts(x):
        mats = _normalize(x, k)
        invs = [_sl2_inv(m) for m in mats]
        res = [float(np.linalg.norm(_eval_float(r, mats, invs) - np.eye(2))) for r in p.relators]
        trs = [float(np.trace(_eval_float(t, mats, invs))) for t in targets]
        return mats, res, trs

    def objective(x):
        _, res, trs = parts(x)
        pen = sum(max(0.0, 2 + margin - abs(t)) ** 2 for t in trs)
        return sum(r * r for r in res) + pen

    best = None
    for attempt in range(1, attempts + 1):
        x0 = rng.normal(size=4 * k) * 2
        x = x0
        if p.relators or targets:
            for _ in range(6):
                r = minimize(objective, x, method="Nelder-Mead",
                             options={"xatol": 1e-14, "fatol": 1e-30, "maxiter": 4000 * k, "maxfev": 8000 * k})
                x = r.x
                _, res, trs = parts(x)
                if max(res, default=0.0) < tolerance and all(abs(t) > 2 + margin for t in trs):
                    break
        mats, res, trs = parts(x)
        residual = max(res, default=0.0)
        ok = residual < tolerance and all(abs(t) > 2 + tolerance for t in trs)
        cand = (not ok, residual, attempt, mats, trs)
        if best is None or cand[:3] < best[:3]:
            best = cand
        if ok:
            break
    failed, residual, attempt, mats, trs = best
    return NumericRep(tuple(mats), residual, tuple(trs), not failed, attempt, seed)
