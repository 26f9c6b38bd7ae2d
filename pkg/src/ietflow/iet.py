"""Interval exchange transformations: construction, evaluation, orbits.

An IET is determined by a length vector lambda in R^m_+ and an irreducible
permutation pi; it translates the subinterval I_i = [beta_i, beta_{i+1})
onto the subinterval in position pi(i) of the image partition.  Break
points live in plain float arithmetic with half-open cells and no snapping:
a point within rounding distance of a break point belongs to the cell the
comparison says it does.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .rauzy import Perm, as_perm, check_irreducible, invert, perm_str


@dataclass(frozen=True)
class IETState:
    """Lengths plus permutation, with precomputed break points.

    ``beta[i]`` is the left endpoint of the i-th domain subinterval and
    ``beta_img[j]`` the left endpoint of the j-th image subinterval
    (both 0-based here; the math is 1-based).
    """

    lengths: np.ndarray
    perm: Perm
    beta: np.ndarray = field(init=False, repr=False, compare=False)
    beta_img: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        lam = np.asarray(self.lengths, dtype=float)
        if lam.ndim != 1 or lam.size != len(self.perm):
            raise ValueError("lengths and permutation size mismatch")
        if not np.all(lam > 0) or not np.all(np.isfinite(lam)):
            raise ValueError("all lengths must be positive finite reals")
        object.__setattr__(self, "lengths", lam)
        object.__setattr__(self, "perm", check_irreducible(as_perm(self.perm)))
        inv = invert(self.perm)
        beta = np.concatenate(([0.0], np.cumsum(lam)))
        img_lengths = lam[[i - 1 for i in inv]]
        beta_img = np.concatenate(([0.0], np.cumsum(img_lengths)))
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "beta_img", beta_img)

    @property
    def m(self) -> int:
        return len(self.perm)

    @property
    def total(self) -> float:
        return float(self.beta[-1])

    def normalized(self) -> "IETState":
        return IETState(self.lengths / self.lengths.sum(), self.perm)

    def __str__(self):
        lam = ",".join(f"{x:.17g}" for x in self.lengths)
        return f"({lam})@{perm_str(self.perm)}"


def new_iet(lengths, perm) -> IETState:
    """Build an IET; rejects reducible permutations and nonpositive lengths."""
    return IETState(np.asarray(lengths, dtype=float), as_perm(perm))


def cell_index(iet: IETState, x: float) -> int:
    """0-based index i with beta_i <= x < beta_{i+1}."""
    if not (0.0 <= x < iet.total):
        raise ValueError(f"point {x!r} outside domain [0, {iet.total})")
    i = int(np.searchsorted(iet.beta, x, side="right")) - 1
    return min(i, iet.m - 1)


def evaluate(iet: IETState, x: float) -> float:
    """Apply the exchange: x + beta^pi_{pi(i)} - beta_i on the cell I_i."""
    i = cell_index(iet, x)
    return x + float(iet.beta_img[iet.perm[i] - 1] - iet.beta[i])


def orbit(iet: IETState, x: float, n: int) -> np.ndarray:
    """The points (x, Tx, ..., T^{n-1}x); empty for n = 0."""
    from ._kernels import kernels

    if n < 0:
        raise ValueError("orbit length must be >= 0")
    if n == 0:
        return np.empty(0, dtype=float)
    cell_index(iet, x)  # domain check
    jumps = iet.beta_img[np.array(iet.perm) - 1] - iet.beta[:-1]
    return kernels.iet_orbit(iet.beta[1:].copy(), jumps.copy(), float(x), n)


def keane_density_report(iet: IETState, n: int, eps: float) -> dict:
    """Max circular gap of the length-n orbit of 0 and an eps-density flag.

    Density holds for irrational lengths (Keane/Oseledets); the report is
    purely empirical and runs on any input.
    """
    pts = orbit(iet, 0.0, max(n, 1))
    pts = np.sort(pts)
    gaps = np.diff(pts)
    wrap = iet.total - pts[-1] + pts[0]
    max_gap = float(max(gaps.max(initial=0.0), wrap))
    return {"n": int(n), "max_gap": max_gap, "eps": float(eps), "eps_dense": bool(max_gap < eps)}
