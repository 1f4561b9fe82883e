"""Cell geometry of the planar Sierpinski carpet.

The carpet is generated by 8 contractions of ratio 1/3 on [-1,1]^2 (the
center cell of the 3x3 subdivision is removed).  A level-n cell is addressed
by a word of n digits from {1,...,8}; digit d contracts toward the anchor
point q_d, walking counterclockwise from the bottom-left corner:

    7 6 5          (0,2) (1,2) (2,2)
    8 . 4   grid   (0,1)       (2,1)
    1 2 3          (0,0) (1,0) (2,0)

Words are encoded as (level, integer) with the integer written base 8,
digit d contributing d-1, first digit most significant.  This makes the
level-n words a dense index range 0..8^n-1, in the order used by every
array in the package.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

NUM_CHILDREN = 8
SUBDIVISION = 3

# digit d (1-based) -> grid cell of the 3x3 subdivision, derived from the
# anchor points q_1=(-1,-1), q_2=(0,-1), ..., q_8=(-1,0)
DIGIT_GRID = ((0, 0), (1, 0), (2, 0), (2, 1), (2, 2), (1, 2), (0, 2), (0, 1))

_GRID_TO_DIGIT = {g: i + 1 for i, g in enumerate(DIGIT_GRID)}

FACE_DIGITS = {
    "L": frozenset({1, 7, 8}),
    "R": frozenset({3, 4, 5}),
    "B": frozenset({1, 2, 3}),
    "T": frozenset({5, 6, 7}),
}


@dataclass(frozen=True, order=True)
class Word:
    """A cell address: ``level`` digits from {1,...,8}, encoded in base 8."""

    level: int
    code: int

    def __post_init__(self):
        if self.level < 0:
            raise ValueError("negative level")
        if not 0 <= self.code < NUM_CHILDREN**self.level:
            raise ValueError(f"code {self.code} out of range for level {self.level}")

    @classmethod
    def from_digits(cls, digits) -> "Word":
        digits = tuple(digits)
        code = 0
        for d in digits:
            if not 1 <= d <= NUM_CHILDREN:
                raise ValueError(f"digit {d} outside 1..8")
            code = code * NUM_CHILDREN + (d - 1)
        return cls(len(digits), code)

    @classmethod
    def from_string(cls, s: str) -> "Word":
        return cls.from_digits(int(c) for c in s)

    @property
    def digits(self) -> tuple:
        out = []
        c = self.code
        for _ in range(self.level):
            out.append(c % NUM_CHILDREN + 1)
            c //= NUM_CHILDREN
        return tuple(reversed(out))

    def __str__(self) -> str:
        return "".join(str(d) for d in self.digits)

    def child(self, digit: int) -> "Word":
        if not 1 <= digit <= NUM_CHILDREN:
            raise ValueError(f"digit {digit} outside 1..8")
        return Word(self.level + 1, self.code * NUM_CHILDREN + digit - 1)

    def parent(self) -> "Word":
        if self.level == 0:
            raise ValueError("the empty word has no parent")
        return Word(self.level - 1, self.code // NUM_CHILDREN)


@dataclass(frozen=True)
class CellBox:
    """Grid position of a cell: column/row in [0, 3^level)."""

    col: int
    row: int
    level: int

    def side_length(self) -> Fraction:
        # side of the represented square inside [-1,1]^2
        return Fraction(2, SUBDIVISION**self.level)


def word_to_box(w: Word) -> CellBox:
    """Grid coordinates of the cell addressed by ``w``."""
    col = row = 0
    for d in w.digits:
        gx, gy = DIGIT_GRID[d - 1]
        col = col * SUBDIVISION + gx
        row = row * SUBDIVISION + gy
    return CellBox(col, row, w.level)


def box_to_word(box: CellBox) -> Word:
    """Inverse of :func:`word_to_box`; rejects removed-center positions."""
    digits = []
    col, row = box.col, box.row
    for _ in range(box.level):
        col, gx = divmod(col, SUBDIVISION)
        row, gy = divmod(row, SUBDIVISION)
        digits.append(_GRID_TO_DIGIT.get((gx, gy)))
        if digits[-1] is None:
            raise ValueError(f"({box.col},{box.row}) hits a removed center cell")
    if col or row:
        raise ValueError(f"({box.col},{box.row}) outside the level-{box.level} grid")
    return Word.from_digits(reversed(digits))


@functools.lru_cache(maxsize=16)
def level_boxes(n: int):
    """(cols, rows) arrays indexed by word code, for every level-n word."""
    codes = np.arange(NUM_CHILDREN**n, dtype=np.int64)
    gx = np.array([g[0] for g in DIGIT_GRID], dtype=np.int64)
    gy = np.array([g[1] for g in DIGIT_GRID], dtype=np.int64)
    cols = np.zeros_like(codes)
    rows = np.zeros_like(codes)
    for k in range(n):
        digit = (codes // NUM_CHILDREN ** (n - 1 - k)) % NUM_CHILDREN
        cols = cols * SUBDIVISION + gx[digit]
        rows = rows * SUBDIVISION + gy[digit]
    cols.setflags(write=False)
    rows.setflags(write=False)
    return cols, rows


def cell_centers(n: int):
    """(x, y) coordinates in [-1,1]^2 of every level-n cell center."""
    cols, rows = level_boxes(n)
    scale = SUBDIVISION**n
    x = -1.0 + (2 * cols + 1) / scale
    y = -1.0 + (2 * rows + 1) / scale
    return x, y


def cells_adjacent(v: Word, w: Word) -> str:
    """How two same-level cells touch: ``"edge"``, ``"corner"`` or ``"none"``.

    Cell boundaries lie in the carpet, so cells intersect exactly when their
    squares do: side contact gives an infinite intersection (edge-sharing),
    diagonal contact a single point.
    """
    if v.level != w.level:
        raise ValueError(f"level mismatch: {v.level} != {w.level}")
    if v == w:
        raise ValueError("cells_adjacent expects distinct words")
    a, b = word_to_box(v), word_to_box(w)
    dx, dy = abs(a.col - b.col), abs(a.row - b.row)
    if dx + dy == 1:
        return "edge"
    if dx == 1 and dy == 1:
        return "corner"
    return "none"


def cell_measure(w: Word) -> Fraction:
    """Self-similar measure of the cell, exactly 8^-level."""
    return Fraction(1, NUM_CHILDREN**w.level)


def face_words(n: int, face: str):
    """Level-n words whose cells touch the named side of [-1,1]^2."""
    if n < 1:
        raise ValueError("face_words needs level >= 1")
    digits = FACE_DIGITS.get(face)
    if digits is None:
        raise ValueError(f"face must be one of L/T/R/B, got {face!r}")
    out = set()

    def rec(word, k):
        if k == n:
            out.add(word)
            return
        for d in digits:
            rec(word.child(d), k + 1)

    rec(Word(0, 0), 0)
    return out


def face_codes(n: int, face: str) -> np.ndarray:
    """Vectorized :func:`face_words`: sorted array of word codes."""
    if n < 1:
        raise ValueError("face_codes needs level >= 1")
    digits = FACE_DIGITS.get(face)
    if digits is None:
        raise ValueError(f"face must be one of L/T/R/B, got {face!r}")
    codes = np.array([0], dtype=np.int64)
    opts = np.array(sorted(d - 1 for d in digits), dtype=np.int64)
    for _ in range(n):
        codes = (codes[:, None] * NUM_CHILDREN + opts[None, :]).ravel()
    return np.sort(codes)


# --- dihedral symmetries -------------------------------------------------

@dataclass(frozen=True)
class SymmetryElement:
    """One of the 8 square symmetries: rotation R_k or reflection S_k.

    R_k rotates by k*pi/2; S_k is the reflection with matrix
    [[cos, sin], [sin, -cos]](k*pi/2), so S_0 flips across the x-axis.
    """

    kind: str  # "rotation" | "reflection"
    index: int

    def __post_init__(self):
        if self.kind not in ("rotation", "reflection"):
            raise ValueError(f"bad kind {self.kind!r}")
        if self.index not in (0, 1, 2, 3):
            raise ValueError(f"index {self.index} outside 0..3")

    def digit_table(self) -> tuple:
        """0-based digit permutation: table[j] is the image of digit j+1, minus 1."""
        k = self.index
        if self.kind == "rotation":
            return tuple((j + 2 * k) % 8 for j in range(8))
        return tuple((6 - j + 2 * k) % 8 for j in range(8))

    def matrix(self) -> np.ndarray:
        c, s = {0: (1, 0), 1: (0, 1), 2: (-1, 0), 3: (0, -1)}[self.index]
        if self.kind == "rotation":
            return np.array([[c, -s], [s, c]], dtype=np.int64)
        return np.array([[c, s], [s, -c]], dtype=np.int64)


IDENTITY = SymmetryElement("rotation", 0)
D4 = tuple(
    SymmetryElement(kind, k) for kind in ("rotation", "reflection") for k in range(4)
)


def compose(a: SymmetryElement, b: SymmetryElement) -> SymmetryElement:
    """Group composition a o b (apply b first)."""
    m = a.matrix() @ b.matrix()
    for e in D4:
        if np.array_equal(e.matrix(), m):
            return e
    raise AssertionError("D4 is not closed; table corrupted")


def inverse(a: SymmetryElement) -> SymmetryElement:
    for e in D4:
        if compose(a, e) == IDENTITY:
            return e
    raise AssertionError("D4 element without inverse")


def apply_symmetry(phi: SymmetryElement, w: Word) -> Word:
    """The word of the cell Phi(K_w); acts digit-wise by a fixed permutation."""
    table = phi.digit_table()
    return Word.from_digits(table[d - 1] + 1 for d in w.digits)


@functools.lru_cache(maxsize=64)
def symmetry_codes(phi: SymmetryElement, n: int) -> np.ndarray:
    """Vectorized word permutation: perm[code] = code of tau_phi(word)."""
    table = np.array(phi.digit_table(), dtype=np.int64)
    codes = np.arange(NUM_CHILDREN**n, dtype=np.int64)
    out = np.zeros_like(codes)
    for k in range(n):
        digit = (codes // NUM_CHILDREN ** (n - 1 - k)) % NUM_CHILDREN
        out = out * NUM_CHILDREN + table[digit]
    out.setflags(write=False)
    return out


def symmetry_on_boxes(phi: SymmetryElement, box: CellBox) -> CellBox:
    """Image of a cell box under the symmetry, computed in grid coordinates."""
    hi = SUBDIVISION**box.level - 1
    # centered coordinates scaled by 2: c = 2*col - hi in [-hi, hi]
    c = 2 * box.col - hi
    r = 2 * box.row - hi
    m = phi.matrix()
    c2 = m[0, 0] * c + m[0, 1] * r
    r2 = m[1, 0] * c + m[1, 1] * r
    return CellBox((c2 + hi) // 2, (r2 + hi) // 2, box.level)


def _validate_tables():
    # the permutation tables were derived by hand from the q_i geometry;
    # cross-check them against box coordinates once at import
    for phi in D4:
        for code in range(NUM_CHILDREN**2):
            w = Word(2, code)
            expect = symmetry_on_boxes(phi, word_to_box(w))
            got = word_to_box(apply_symmetry(phi, w))
            if expect != got:
                raise AssertionError(f"digit table of {phi} disagrees with geometry")
    for a in D4:
        for b in D4:
            ab = compose(a, b)
            w = Word.from_string("1472")
            if apply_symmetry(ab, w) != apply_symmetry(a, apply_symmetry(b, w)):
                raise AssertionError("digit tables do not respect the group law")


_validate_tables()
