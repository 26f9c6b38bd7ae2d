"""Rauzy-Veech renormalization, Zorich acceleration, and the word calculus.

Sign convention (fixed throughout the package): the plus side is
lambda_{pi^-1(m)} > lambda_m, where operation a applies; a Zorich step
repeats one operation until the sign flips, so a-letters start on the
plus side and land on the minus side.  Consequently the accelerated-map
preimages of a minus-side state are its iterated a-pullbacks, and those
of a plus-side state its b-pullbacks; compatibility of a letter with a
state is defined by that forward round trip.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import rauzy
from .errors import BoundaryError
from .iet import IETState
from .rauzy import IntMatrix, Perm, mat_identity, mat_mul, mat_vec, perm_str


class SignSet(Enum):
    PLUS = "plus"
    MINUS = "minus"
    BOUNDARY = "boundary"


def sign_set(state: IETState) -> SignSet:
    lam = state.lengths
    p = rauzy.invert(state.perm)[state.m - 1]
    d = lam[p - 1] - lam[state.m - 1]
    if d > 0:
        return SignSet.PLUS
    if d < 0:
        return SignSet.MINUS
    return SignSet.BOUNDARY


def rauzy_step(state: IETState, normalized: bool = True):
    """One step of the induction map.

    Returns (new_state, op, matrix) with matrix @ lambda'_unnormalized
    equal to the input lambda exactly.  Raises BoundaryError on the tie.
    """
    sign = sign_set(state)
    if sign is SignSet.BOUNDARY:
        raise BoundaryError("critical lengths tie: induction undefined")
    op = "a" if sign is SignSet.PLUS else "b"
    m = state.m
    lam = state.lengths.copy()
    p = rauzy.invert(state.perm)[m - 1]  # 1-based position of value m
    if op == "a":
        lm = lam[m - 1]
        new = np.empty(m)
        new[: p - 1] = lam[: p - 1]
        new[p - 1] = lam[p - 1] - lm
        new[p] = lm
        new[p + 1 :] = lam[p : m - 1]
        new_perm = rauzy.apply_a(state.perm)
    else:
        new = lam.copy()
        new[m - 1] = lam[m - 1] - lam[p - 1]
        new_perm = rauzy.apply_b(state.perm)
    if normalized:
        new = new / new.sum()
    return IETState(new, new_perm), op, rauzy.matrix(state.perm, op)


@dataclass(frozen=True)
class Letter:
    """One Zorich step: op repeated n times starting from permutation perm."""

    op: str
    n: int
    perm: Perm

    def __post_init__(self):
        if self.op not in ("a", "b") or self.n < 1:
            raise ValueError(f"bad letter ({self.op!r}, {self.n})")

    @property
    def end_perm(self) -> Perm:
        return rauzy.apply_op(self.perm, self.op, self.n)

    def __str__(self):
        return f"{self.op}:{self.n}@{perm_str(self.perm)}"


Word = tuple[Letter, ...]


def parse_word(text: str) -> Word:
    """Parse the serialization ``a:2@21/b:1@21``."""
    letters = []
    for chunk in text.split("/"):
        chunk = chunk.strip()
        if not chunk:
            continue
        opn, perm = chunk.split("@")
        op, n = opn.split(":")
        letters.append(Letter(op, int(n), rauzy.parse_perm(perm)))
    return tuple(letters)


def word_str(word: Word) -> str:
    return "/".join(str(w) for w in word)


def is_admissible(word: Word) -> bool:
    """Adjacent letters must chain permutations and alternate operations."""
    for w1, w2 in zip(word, word[1:]):
        if w1.end_perm != w2.perm or w1.op == w2.op:
            return False
    return True


def check_admissible(word: Word) -> Word:
    word = tuple(word)
    if not is_admissible(word):
        raise ValueError(f"word is not admissible: {word_str(word)}")
    return word


def zorich_step(state: IETState, max_block: int = 1 << 16):
    """Accelerated step: iterate the induction until the sign flips.

    Returns (new_state, Letter); the output state always lies on the
    opposite side from the input.  A block longer than max_block means the
    state sits within rounding distance of the boundary set (where true
    ties would stop the induction), so it is rejected the same way.
    """
    start_sign = sign_set(state)
    if start_sign is SignSet.BOUNDARY:
        raise BoundaryError("boundary state")
    cur = state
    n = 0
    while sign_set(cur) is start_sign:
        cur, op, _ = rauzy_step(cur)
        n += 1
        if sign_set(cur) is SignSet.BOUNDARY:
            raise BoundaryError("boundary hit mid-step")
        if n >= max_block:
            raise BoundaryError("renormalization block exceeded cap; state is numerically degenerate")
    letter = Letter("a" if start_sign is SignSet.PLUS else "b", n, state.perm)
    return cur, letter


def letter_matrix(letter: Letter) -> IntMatrix:
    """Cocycle factor of one Zorich step: A(pi,c) A(c pi,c) ... A(c^{n-1} pi,c)."""
    acc = mat_identity(len(letter.perm))
    perm = letter.perm
    for _ in range(letter.n):
        acc = mat_mul(acc, rauzy.matrix(perm, letter.op))
        perm = rauzy.apply_op(perm, letter.op)
    return acc


def word_matrix(word: Word) -> IntMatrix:
    """Product of the per-letter factors; exact integer arithmetic."""
    word = check_admissible(word)
    if not word:
        raise ValueError("empty word has no size; use mat_identity(m)")
    acc = mat_identity(len(word[0].perm))
    for letter in word:
        acc = mat_mul(acc, letter_matrix(letter))
    return acc


def word_end_perm(word: Word) -> Perm:
    return word[-1].end_perm


def preimage(state: IETState, n: int, normalized: bool = True) -> IETState:
    """The n-indexed Zorich preimage t_{c^{-n}} (or unnormalized T_{c^{-n}}).

    c = a when the state is on the minus side, b on the plus side, so that
    zorich_step(preimage(state, n)) == (state, (c, n, .)).
    """
    if n < 1:
        raise ValueError("preimage index must be >= 1")
    sign = sign_set(state)
    if sign is SignSet.BOUNDARY:
        raise BoundaryError("boundary state")
    op = "a" if sign is SignSet.MINUS else "b"
    lam = [float(x) for x in state.lengths]
    perm = state.perm
    for _ in range(n):
        perm = rauzy.apply_op(perm, op, -1)
        lam = [float(x) for x in mat_vec(rauzy.matrix(perm, op), lam)]
    arr = np.array(lam)
    if normalized:
        arr = arr / arr.sum()
    return IETState(arr, perm)


def pullback(word: Word, state: IETState, normalized: bool = True) -> IETState:
    """t_w(state): pull the state back through the whole word."""
    word = check_admissible(word)
    if not word:
        return state
    if word_end_perm(word) != state.perm:
        raise ValueError("word does not end at the state's permutation")
    A = word_matrix(word)
    lam = np.array(mat_vec(A, [float(x) for x in state.lengths]), dtype=float)
    if normalized:
        lam = lam / lam.sum()
    return IETState(lam, word[0].perm)


@dataclass(frozen=True)
class Cylinder:
    """Image simplex of a word: spanned by the normalized columns of A(w)."""

    word: Word
    matrix: IntMatrix
    target_perm: Perm

    @property
    def vertex_images(self) -> np.ndarray:
        cols = np.array(self.matrix, dtype=float).T
        return cols / cols.sum(axis=1, keepdims=True)

    def min_coordinate(self) -> float:
        """Exact infimum over the simplex of the smallest coordinate.

        Per coordinate i the infimum is min_j A_ij / colsum_j; the overall
        value decides inclusion in the thin-simplex complement Delta_eps.
        """
        A = np.array(self.matrix, dtype=float)
        colsum = A.sum(axis=0)
        return float((A / colsum).min())


def cylinder(word: Word) -> Cylinder:
    word = check_admissible(word)
    if not word:
        raise ValueError("empty word: the cylinder is the full simplex")
    return Cylinder(word, word_matrix(word), word[0].perm)


def encode(state: IETState, n_letters: int) -> Word:
    """First n_letters of the forward Zorich itinerary.

    A boundary hit raises BoundaryError with the truncated word attached
    as ``partial``.
    """
    letters = []
    cur = state
    for _ in range(n_letters):
        try:
            cur, letter = zorich_step(cur)
        except BoundaryError as exc:
            raise BoundaryError(str(exc), partial=tuple(letters)) from None
        letters.append(letter)
    return tuple(letters)


def member(cyl: Cylinder, state: IETState) -> bool:
    """True iff the state's itinerary starts with the cylinder's word."""
    if state.perm != cyl.target_perm:
        return False
    try:
        return encode(state, len(cyl.word)) == cyl.word
    except BoundaryError:
        return False


def is_compatible(letter_or_word, state: IETState) -> bool:
    """Forward-check compatibility: the pullback is a genuine preimage chain.

    A letter (c, n, pi0) is compatible when c^n pi0 equals the state's
    permutation and the forward Zorich step from the pullback reproduces
    the state with that exact letter; a word is compatible when its last
    letter is and the property chains.
    """
    word = (letter_or_word,) if isinstance(letter_or_word, Letter) else tuple(letter_or_word)
    if not word:
        return True
    if not is_admissible(word):
        return False
    last = word[-1]
    if last.end_perm != state.perm:
        return False
    sign = sign_set(state)
    needed = SignSet.MINUS if last.op == "a" else SignSet.PLUS
    if sign is not needed:
        return False
    try:
        back = pullback((last,), state)
        fwd, letter = zorich_step(back)
    except BoundaryError:
        return False
    if letter != last or not np.allclose(fwd.lengths, state.normalized().lengths, atol=1e-9):
        return False
    if len(word) == 1:
        return True
    return is_compatible(word[:-1], back)


def critical_index(state: IETState) -> int:
    """1-based index of the subinterval in critical position."""
    sign = sign_set(state)
    if sign is SignSet.BOUNDARY:
        raise BoundaryError("boundary state")
    if sign is SignSet.PLUS:
        return rauzy.invert(state.perm)[state.m - 1]
    return state.m
