"""Finite-to-one systems: the circle map x -> Nx mod 1, one-sided subshifts of
finite type, and affine iterated function systems on the line.

All three are handled through their symbolic coding.  A point (or cell) is a
finite word of symbols; ``r`` drops the first symbol and the inverse branches
prepend one.  For the circle the word is the base-N expansion of ``j/N**L``,
so a level-L cell ``[j/N**L, (j+1)/N**L)`` and the word of its left endpoint
coincide.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence, Union

import numpy as np

from .errors import BranchOutOfRange, ConfigError, EmptyWord, InvalidPoint


@dataclass(frozen=True)
class CircleMap:
    """``r(x) = N x mod 1`` on ``[0, 1)``."""

    N: int

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise ValueError(f"CircleMap needs an integer N >= 2, got {self.N}")

    kind = "circle"

    @property
    def symbols(self):
        return tuple(range(self.N))

    @property
    def full(self):
        return True


@dataclass(frozen=True)
class Subshift:
    """One-sided subshift of finite type given by a 0-1 transition matrix.

    Symbols are ``0..K-1``; a word ``w`` is admissible when
    ``A[w[i], w[i+1]] == 1`` for all consecutive pairs.
    """

    A: tuple

    def __post_init__(self):
        A = tuple(tuple(int(a) for a in row) for row in self.A)
        object.__setattr__(self, "A", A)
        K = len(A)
        if K < 1 or any(len(row) != K for row in A):
            raise ValueError("transition matrix must be square")
        if any(a not in (0, 1) for row in A for a in row):
            raise ValueError("transition matrix entries must be 0 or 1")
        # r_A is onto iff every column holds a 1
        for j in range(K):
            if not any(A[i][j] for i in range(K)):
                raise ValueError(f"column {j} of A has no entry 1: the shift is not onto")

    kind = "sft"

    @property
    def symbols(self):
        return tuple(range(len(self.A)))

    @property
    def full(self):
        return all(all(row) for row in self.A)

    def matrix(self):
        return np.array(self.A, dtype=np.int64)


@dataclass(frozen=True)
class AffineIFS:
    """Branches ``x -> (x + d) / scale`` for each digit ``d``.

    Words are digit expansions ``x = sum d_i scale**-i``; the middle-third
    Cantor set is ``AffineIFS(3, (0, 2))``.
    """

    scale: int
    digits: tuple

    def __post_init__(self):
        digits = tuple(int(d) for d in self.digits)
        object.__setattr__(self, "digits", digits)
        if int(self.scale) != self.scale or self.scale < 2:
            raise ValueError("scale must be an integer >= 2")
        if len(set(digits)) != len(digits) or not digits:
            raise ValueError("digits must be distinct and non-empty")
        if any(d < 0 or d >= self.scale for d in digits):
            raise ValueError("digits must lie in [0, scale)")
        if list(digits) != sorted(digits):
            object.__setattr__(self, "digits", tuple(sorted(digits)))

    kind = "ifs"

    @property
    def symbols(self):
        return self.digits

    @property
    def full(self):
        return True


System = Union[CircleMap, Subshift, AffineIFS]


@dataclass(frozen=True)
class Point:
    """A finite word of symbols standing for a point or a cylinder."""

    word: tuple

    def __post_init__(self):
        object.__setattr__(self, "word", tuple(int(s) for s in self.word))

    def __len__(self):
        return len(self.word)


def circle_point(N, j, level):
    """The point ``j / N**level`` written with exactly ``level`` digits."""
    if not 0 <= j < N ** level:
        raise InvalidPoint(f"index {j} out of range for level {level}")
    digits = []
    for _ in range(level):
        j, d = divmod(j, N)
        digits.append(d)
    return Point(tuple(reversed(digits)))


def circle_index(sys: CircleMap, p: Point) -> int:
    j = 0
    for d in p.word:
        j = j * sys.N + d
    return j


def point_value(sys: System, p: Point) -> Fraction:
    """Exact real coordinate of a circle or IFS point (left end of its cell)."""
    if sys.kind == "sft":
        raise InvalidPoint("subshift points have no real coordinate")
    base = sys.N if sys.kind == "circle" else sys.scale
    x = Fraction(0)
    for i, d in enumerate(p.word, start=1):
        x += Fraction(d, base ** i)
    return x


def same_point(sys: System, p: Point, q: Point) -> bool:
    """Circle points compare by value (trailing zero digits are padding)."""
    if sys.kind == "circle":
        return point_value(sys, p) == point_value(sys, q)
    return p.word == q.word


def letter_index(sys: System, symbol: int) -> int:
    try:
        return sys.symbols.index(symbol)
    except ValueError:
        raise InvalidPoint(f"symbol {symbol} not in alphabet {sys.symbols}") from None


def _letters(sys, p: Point):
    return tuple(letter_index(sys, s) for s in p.word)


def _admissible_pair(sys, a, b):
    if sys.kind == "sft":
        return sys.A[a][b] == 1
    return True


def validate(sys: System, p: Point) -> None:
    letters = _letters(sys, p)
    for a, b in zip(letters, letters[1:]):
        if not _admissible_pair(sys, a, b):
            raise InvalidPoint(f"word {p.word} is not admissible")


def forward(sys: System, p: Point) -> Point:
    """Apply ``r``.

    Circle points keep their level (a zero digit is appended, the point
    ``j/N**L`` being exact); word points lose their first symbol.
    """
    validate(sys, p)
    if len(p.word) == 0:
        raise EmptyWord("cannot shift an empty word")
    if sys.kind == "circle":
        return Point(p.word[1:] + (0,))
    return Point(p.word[1:])


def branch_count(sys: System, p: Point) -> int:
    if sys.kind != "sft":
        return len(sys.symbols)
    if len(p.word) == 0:
        raise EmptyWord("branch count of a subshift point needs its first symbol")
    x1 = letter_index(sys, p.word[0])
    return sum(sys.A[y][x1] for y in range(len(sys.A)))


def preimages(sys: System, p: Point) -> list:
    """All ``y`` with ``r(y) = p``, one symbol deeper, ascending."""
    validate(sys, p)
    return [branch(sys, k, p) for k in range(branch_count(sys, p))]


def branch(sys: System, k: int, p: Point) -> Point:
    """The inverse branch ``tau_k``; for subshifts ``k`` counts the
    admissible prefix symbols in ascending order."""
    validate(sys, p)
    n = branch_count(sys, p)
    if not 0 <= k < n:
        raise BranchOutOfRange(f"branch {k} out of range (point has {n} branches)")
    if sys.kind == "sft":
        x1 = p.word[0]
        prefixes = [y for y in range(len(sys.A)) if sys.A[y][x1]]
        return Point((prefixes[k],) + p.word)
    return Point((sys.symbols[k],) + p.word)


def branch_of(sys: System, p: Point) -> int:
    """The digit ``k`` with ``p`` in ``tau_k(X)``."""
    if len(p.word) == 0:
        raise EmptyWord("empty word lies in no branch")
    if sys.kind != "sft":
        return letter_index(sys, p.word[0])
    if len(p.word) < 2:
        raise InvalidPoint("subshift branch digit needs two symbols")
    x1 = p.word[1]
    prefixes = [y for y in range(len(sys.A)) if sys.A[y][x1]]
    return prefixes.index(p.word[0])


def structure_flags(sys: System) -> dict:
    if sys.kind != "sft":
        return {"onto": True, "aperiodic": True, "max_branches": len(sys.symbols)}
    A = sys.matrix()
    K = A.shape[0]
    onto = bool(np.all(A.sum(axis=0) > 0))
    aperiodic = False
    P = np.eye(K, dtype=np.int64)
    for _ in range(K * K):
        P = np.minimum(P @ A, 1)
        if np.all(P > 0):
            aperiodic = True
            break
    return {"onto": onto, "aperiodic": aperiodic,
            "max_branches": int(A.sum(axis=0).max())}


class CellTable:
    """Index arithmetic for the admissible words of one fixed length.

    Cells are listed in ascending lexicographic order of their letter
    indices.  ``pre[k, c]`` is the cell of ``k + w[:-1]`` (or -1 when that
    prefix is not allowed), ``parent[c]`` the cell of ``w[:-1]`` and
    ``tail[c]`` the cell of ``w[1:]``, both one level up.
    """

    def __init__(self, sys: System, depth: int):
        if depth < 1:
            raise ValueError("cell depth must be >= 1")
        self.sys = sys
        self.depth = depth
        K = len(sys.symbols)
        self.n_letters = K
        if sys.full:
            n = K ** depth
            idx = np.arange(n)
            self.words = np.stack(
                [(idx // K ** (depth - 1 - i)) % K for i in range(depth)], axis=1)
            self.pre = np.stack([k * K ** (depth - 1) + idx // K for k in range(K)])
            self.parent = idx // K
            self.tail = idx % K ** (depth - 1)
            self._lookup = None
        else:
            A = sys.A
            words = [(a,) for a in range(K)]
            for _ in range(depth - 1):
                words = [w + (b,) for w in words for b in range(K) if A[w[-1]][b]]
            self.words = np.array(words, dtype=np.int64).reshape(len(words), depth)
            self._lookup = {w: i for i, w in enumerate(words)}
            pre = np.full((K, len(words)), -1, dtype=np.int64)
            for c, w in enumerate(words):
                for k in range(K):
                    if A[k][w[0]]:
                        pre[k, c] = self._lookup[(k,) + w[:-1]]
            self.pre = pre
            if depth > 1:
                up = cell_table(sys, depth - 1)
                self.parent = np.array([up.index(w[:-1]) for w in words], dtype=np.int64)
                self.tail = np.array([up.index(w[1:]) for w in words], dtype=np.int64)
            else:
                self.parent = np.zeros(len(words), dtype=np.int64)
                self.tail = np.zeros(len(words), dtype=np.int64)
        self.size = self.words.shape[0]
        self.valid = self.pre >= 0
        self.nbranch = self.valid.sum(axis=0)

    def index(self, letters: Sequence[int]) -> int:
        letters = tuple(int(a) for a in letters)
        if len(letters) != self.depth:
            raise InvalidPoint(f"need a word of length {self.depth}")
        if self._lookup is None:
            j = 0
            for a in letters:
                if not 0 <= a < self.n_letters:
                    raise InvalidPoint(f"letter {a} out of range")
                j = j * self.n_letters + a
            return j
        try:
            return self._lookup[letters]
        except KeyError:
            raise InvalidPoint(f"word {letters} is not admissible") from None

    def cell_of(self, p: Point) -> int:
        """Cell containing ``p``; circle words shorter than the depth are
        padded with zeros (the point is exact)."""
        word = p.word
        if len(word) < self.depth:
            if self.sys.kind != "circle":
                raise InvalidPoint(
                    f"word of length {len(word)} does not resolve depth {self.depth}")
            word = word + (0,) * (self.depth - len(word))
        return self.index(tuple(letter_index(self.sys, s) for s in word[:self.depth]))

    def symbol_words(self):
        return np.asarray(self.sys.symbols)[self.words]

    def ancestors(self, depth: int) -> np.ndarray:
        """Map each cell to its prefix cell at a shallower ``depth``."""
        if depth == self.depth:
            return np.arange(self.size)
        if depth > self.depth or depth < 1:
            raise ValueError("ancestor depth must lie in [1, depth]")
        return cell_table(self.sys, self.depth - 1).ancestors(depth)[self.parent]


@lru_cache(maxsize=256)
def cell_table(sys: System, depth: int) -> CellTable:
    return CellTable(sys, depth)


def cell_midpoints(sys: System, depth: int) -> np.ndarray:
    """Real representative of every cell.

    Circle cells use their midpoint.  IFS cylinders use the image of the
    centre of the attractor's convex hull, which is the midpoint of the
    cylinder's hull.
    """
    table = cell_table(sys, depth)
    sym = table.symbol_words().astype(float)
    if sys.kind == "circle":
        base = float(sys.N)
        centre = 0.5
    elif sys.kind == "ifs":
        base = float(sys.scale)
        centre = (sys.digits[0] + sys.digits[-1]) / (2.0 * (sys.scale - 1))
    else:
        raise InvalidPoint("subshift cells have no real coordinate")
    x = np.zeros(table.size)
    for i in range(depth):
        x += sym[:, i] * base ** -(i + 1)
    return x + centre * base ** -depth


def parse_system(obj) -> System:
    """Build a system from its JSON form (dict or JSON text)."""
    if isinstance(obj, str):
        obj = json.loads(obj)
    try:
        kind = obj["type"]
        if kind == "circle":
            return CircleMap(int(obj["N"]))
        if kind == "sft":
            return Subshift(tuple(tuple(row) for row in obj["A"]))
        if kind == "ifs":
            return AffineIFS(int(obj["scale"]), tuple(obj["digits"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad system description {obj!r}: {exc}") from exc
    raise ConfigError(f"unknown system type {kind!r}")


def system_to_json(sys: System) -> dict:
    if sys.kind == "circle":
        return {"type": "circle", "N": sys.N}
    if sys.kind == "sft":
        return {"type": "sft", "A": [list(row) for row in sys.A]}
    return {"type": "ifs", "scale": sys.scale, "digits": list(sys.digits)}
