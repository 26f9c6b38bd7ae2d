"""Polyhedral cones of zippered-rectangle coordinates and their volumes.

The invariant density of the accelerated induction is proportional to the
volume of the delta-cone truncated by the area functional; the plus/minus
halves split it by the sign of the last zip coordinate.  All ray
enumeration and triangulation is exact over the rationals; only the final
evaluation against a float length vector leaves integer arithmetic.

Density bookkeeping (the unknown class constant cancels in every exported
quantity): a plus-side state carries the minus-cone volume and vice
versa, because one accelerated step lands a-blocks on the minus side with
nonnegative last zip (the plus half-cone) and symmetrically for b-blocks.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import induction, rauzy, zippered
from .errors import BoundaryError
from .iet import IETState
from .induction import SignSet, Word, sign_set
from .rauzy import Perm

MAX_EXACT_DIM = 8  # double-description cost blows up beyond this


# ---------------------------------------------------------------------------
# exact linear algebra over Fractions
# ---------------------------------------------------------------------------

def _rank(vectors) -> int:
    rows = [[Fraction(x) for x in v] for v in vectors]
    if not rows:
        return 0
    ncols = len(rows[0])
    rank = 0
    col = 0
    while col < ncols and rank < len(rows):
        piv = next((r for r in range(rank, len(rows)) if rows[r][col] != 0), None)
        if piv is None:
            col += 1
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        pivval = rows[rank][col]
        for r in range(len(rows)):
            if r != rank and rows[r][col] != 0:
                f = rows[r][col] / pivval
                for c in range(col, ncols):
                    rows[r][c] -= f * rows[rank][c]
        rank += 1
        col += 1
    return rank


def _solve_unit(B, j: int):
    """Solve B x = e_j exactly; B square nonsingular (list of int rows)."""
    n = len(B)
    aug = [[Fraction(B[r][c]) for c in range(n)] + [Fraction(1 if r == j else 0)] for r in range(n)]
    for col in range(n):
        piv = next(r for r in range(col, n) if aug[r][col] != 0)
        aug[col], aug[piv] = aug[piv], aug[col]
        pv = aug[col][col]
        aug[col] = [x / pv for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return [aug[r][n] for r in range(n)]


def _primitive(vec) -> tuple[int, ...]:
    fracs = [Fraction(x) for x in vec]
    den = math.lcm(*(f.denominator for f in fracs)) if fracs else 1
    ints = [int(f * den) for f in fracs]
    g = math.gcd(*(abs(v) for v in ints)) or 1
    return tuple(v // g for v in ints)


# ---------------------------------------------------------------------------
# cone descriptions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConeDescription:
    """Pointed polyhedral cone {x : c . x >= 0 for all covectors c}."""

    m: int
    inequalities: tuple[tuple[int, ...], ...]
    rays: tuple[tuple[int, ...], ...]
    simplices: tuple[tuple[int, ...], ...]  # ray-index tuples of a triangulation
    simplex_dets: tuple[int, ...]  # |det| of the generator matrix per simplex


def _cone_inequalities(perm: Perm, variant: str) -> list[tuple[int, ...]]:
    m = len(perm)
    inv = rauzy.invert(perm)
    ineqs = []
    for i in range(1, m):  # prefix sums <= 0
        ineqs.append(tuple(-1 if j < i else 0 for j in range(m)))
    for i in range(1, m):  # permuted prefix sums >= 0
        cov = [0] * m
        for l in range(1, i + 1):
            cov[inv[l - 1] - 1] = 1
        ineqs.append(tuple(cov))
    if variant == "plus":
        ineqs.append(tuple([-1] * m))
    elif variant == "minus":
        ineqs.append(tuple([1] * m))
    elif variant != "full":
        raise ValueError(f"variant must be full/plus/minus, got {variant!r}")
    return ineqs


def _double_description(m: int, ineqs: list[tuple[int, ...]]) -> list[tuple[int, ...]]:
    """Extreme rays of a pointed cone, built one halfspace at a time."""
    base_idx = None
    for k in range(len(ineqs)):
        cand = list(range(m - 1)) + [k] if k >= m - 1 else None
        if cand and _rank([ineqs[i] for i in cand]) == m:
            base_idx = cand
            break
    if base_idx is None:
        raise ValueError("could not find a simplicial base among the inequalities")
    B = [list(ineqs[i]) for i in base_idx]
    rays = [_primitive(_solve_unit(B, j)) for j in range(m)]
    rest = [k for k in range(len(ineqs)) if k not in base_idx]

    processed = list(base_idx)
    for k in rest:
        c = ineqs[k]
        vals = [sum(ci * ri for ci, ri in zip(c, r)) for r in rays]
        if all(v >= 0 for v in vals):
            processed.append(k)
            continue
        keep = [r for r, v in zip(rays, vals) if v >= 0]
        plus = [(r, v) for r, v in zip(rays, vals) if v > 0]
        minus = [(r, v) for r, v in zip(rays, vals) if v < 0]

        def tight_set(r):
            return frozenset(
                i for i in processed if sum(ci * ri for ci, ri in zip(ineqs[i], r)) == 0
            )

        new_rays = list(keep)
        for rp, vp in plus:
            zp = tight_set(rp)
            for rm, vm in minus:
                common = zp & tight_set(rm)
                if _rank([ineqs[i] for i in common]) == m - 2:
                    w = _primitive([vp * b - vm * a for a, b in zip(rp, rm)])
                    if w not in new_rays:
                        new_rays.append(w)
        rays = new_rays
        processed.append(k)
    return sorted(set(rays))


def _triangulate(rays, tight, face_ray_ids, dim):
    """Fan the face from its lexicographically least ray, recursively."""
    if len(face_ray_ids) == dim:
        return [tuple(face_ray_ids)]
    v0 = min(face_ray_ids, key=lambda i: rays[i])
    facets = set()
    all_ineq = set().union(*(tight[i] for i in face_ray_ids)) if face_ray_ids else set()
    for j in sorted(all_ineq):
        f = tuple(i for i in face_ray_ids if j in tight[i])
        if v0 in f or len(f) < dim - 1 or set(f) == set(face_ray_ids):
            continue
        if _rank([rays[i] for i in f]) == dim - 1:
            facets.add(f)
    out = []
    seen = set()
    for f in sorted(facets):
        key = frozenset(f)
        if key in seen:
            continue
        seen.add(key)
        for sub in _triangulate(rays, tight, list(f), dim - 1):
            out.append((v0,) + sub)
    if not out:
        raise RuntimeError("triangulation failed: no facets avoid the apex ray")
    return out


@lru_cache(maxsize=None)
def cone(perm: Perm, variant: str = "full") -> ConeDescription:
    """Inequality and ray description of the delta-cone (or its half).

    Exact rational arithmetic throughout; dimension capped at
    MAX_EXACT_DIM because double description cost explodes.
    """
    perm = rauzy.check_irreducible(perm)
    m = len(perm)
    if m > MAX_EXACT_DIM:
        raise ValueError(f"exact cone volumes capped at m <= {MAX_EXACT_DIM}, got m = {m}")
    raw_ineqs = _cone_inequalities(perm, variant)
    rays = _double_description(m, raw_ineqs)
    # keep only facet-defining inequalities: tight on a rank-(m-1) ray set
    ineqs = []
    for c in raw_ineqs:
        tight_rays = [r for r in rays if sum(ci * ri for ci, ri in zip(c, r)) == 0]
        if tight_rays and _rank(tight_rays) == m - 1 and c not in ineqs:
            ineqs.append(c)
    tight = [
        frozenset(
            j
            for j, c in enumerate(ineqs)
            if sum(ci * ri for ci, ri in zip(c, r)) == 0
        )
        for r in rays
    ]
    simplices = tuple(_triangulate(list(rays), tight, list(range(len(rays))), m))
    dets = tuple(
        abs(rauzy.mat_det(tuple(rays[i] for i in simplex))) for simplex in simplices
    )
    return ConeDescription(m, tuple(ineqs), tuple(rays), simplices, dets)


@dataclass(frozen=True)
class VolumeValue:
    value: float
    finite: bool
    terms: tuple  # (simplex ray indices, |det|, product of ell over generators)


def truncated_volume(cone_desc: ConeDescription, ell) -> VolumeValue:
    """Volume of {x in cone : ell(x) <= 1}: sum |det| / (m! prod ell(v_k)).

    A ray with ell <= 0 makes the truncated region unbounded; reported as
    an infinite value rather than an error.
    """
    m = cone_desc.m
    ell = list(ell)
    ray_ell = [sum(c * v for c, v in zip(ell, ray)) for ray in cone_desc.rays]
    if any(le <= 0 for le in ray_ell):
        return VolumeValue(math.inf, False, ())
    fact = math.factorial(m)
    total = 0.0 if not isinstance(ray_ell[0], Fraction) else Fraction(0)
    terms = []
    for simplex, det in zip(cone_desc.simplices, cone_desc.simplex_dets):
        prod = 1
        for i in simplex:
            prod = prod * ray_ell[i]
        total = total + det / (fact * prod)
        terms.append((simplex, det, prod))
    return VolumeValue(total, True, tuple(terms))


# ---------------------------------------------------------------------------
# invariant density up to the class constant
# ---------------------------------------------------------------------------

def _volume(state_lam, perm: Perm, variant: str) -> float:
    ell = zippered.area_coefficients(np.asarray(state_lam, dtype=float), perm)
    v = truncated_volume(cone(perm, variant), [float(x) for x in ell])
    return float(v.value)


def r(lam, perm: Perm) -> float:
    """Truncated volume of the full cone; Veech's density up to a constant."""
    return _volume(lam, perm, "full")


def r_plus(lam, perm: Perm) -> float:
    return _volume(lam, perm, "plus")


def r_minus(lam, perm: Perm) -> float:
    return _volume(lam, perm, "minus")


def density_profile(state: IETState) -> float:
    """Unnormalized invariant density: r_minus on the plus side, r_plus on minus."""
    sign = sign_set(state)
    if sign is SignSet.BOUNDARY:
        raise BoundaryError("density undefined on the boundary")
    if sign is SignSet.PLUS:
        return r_minus(state.lengths, state.perm)
    return r_plus(state.lengths, state.perm)


def _pullback_op(state: IETState, op: str | None) -> str:
    sign = sign_set(state)
    if sign is SignSet.BOUNDARY:
        raise BoundaryError("boundary state")
    natural = "a" if sign is SignSet.MINUS else "b"
    return natural if op is None else op


def transition_p(state: IETState, n: int, op: str | None = None) -> float:
    """Backward transition probability onto the n-indexed preimage.

    With op forced, evaluates the same rational identity off its natural
    domain (the summation formulas hold for any positive lambda).
    """
    op = _pullback_op(state, op)
    back = _iter_pullback(state, n, op)
    if op == "a":
        return r_minus(back.lengths, back.perm) / r_plus(state.lengths, state.perm)
    return r_plus(back.lengths, back.perm) / r_minus(state.lengths, state.perm)


def tail(state: IETState, n_from: int, op: str | None = None) -> float:
    """Mass of all preimages with index > n_from: a single volume ratio."""
    op = _pullback_op(state, op)
    back = _iter_pullback(state, n_from, op)
    if op == "a":
        return r_plus(back.lengths, back.perm) / r_plus(state.lengths, state.perm)
    return r_minus(back.lengths, back.perm) / r_minus(state.lengths, state.perm)


def _iter_pullback(state: IETState, n: int, op: str) -> IETState:
    lam = [float(x) for x in state.lengths]
    perm = state.perm
    for _ in range(n):
        perm = rauzy.apply_op(perm, op, -1)
        lam = [float(x) for x in rauzy.mat_vec(rauzy.matrix(perm, op), lam)]
    return IETState(np.array(lam), perm)


def prob_word(word: Word, state: IETState) -> float:
    """Conditional probability of a backward word: density ratio at the pullback."""
    if not word:
        return 1.0
    if not induction.is_compatible(word, state):
        raise ValueError("word is not compatible with the state")
    A = induction.word_matrix(word)
    lam = rauzy.mat_vec(A, [float(x) for x in state.lengths])
    back = IETState(np.array(lam, dtype=float), word[0].perm)
    return density_profile(back) / density_profile(state)


def lower_bounds_check(word: Word, state: IETState) -> dict:
    """Report Prob(w | state) * |A(w)|^m, the quantity bounded away from zero."""
    p = prob_word(word, state)
    A = induction.word_matrix(word)
    m = state.m
    total = float(sum(sum(row) for row in A))
    return {"prob": p, "total": total, "ratio": p * total**m}


# ---------------------------------------------------------------------------
# sampling and export helpers
# ---------------------------------------------------------------------------

def sample_cone_point(cone_desc: ConeDescription, ell, rng) -> np.ndarray:
    """Uniform sample of {x in cone : ell(x) <= 1} via its triangulation."""
    vol = truncated_volume(cone_desc, [float(x) for x in ell])
    if not vol.finite:
        raise ValueError("cannot sample an unbounded truncation")
    m = cone_desc.m
    weights = np.array([det / (math.factorial(m) * prod) for _, det, prod in vol.terms])
    weights = weights / weights.sum()
    simplex, _, _ = vol.terms[rng.choice(len(weights), p=weights)]
    gens = []
    for i in simplex:
        ray = np.array(cone_desc.rays[i], dtype=float)
        le = float(sum(c * v for c, v in zip(ell, cone_desc.rays[i])))
        gens.append(ray / le)
    cuts = np.sort(np.concatenate(([0.0], rng.random(m), [1.0])))
    coords = np.diff(cuts)[:m]  # uniform on {t >= 0, sum t <= 1}
    return np.dot(coords, np.array(gens))


def minus_shuffle(delta: np.ndarray, perm: Perm) -> np.ndarray:
    """Coordinate shuffle sending the minus half-cone onto the b-pullback's cone.

    This is the backward cocycle transport A(b^-1 pi, b) @ delta, which adds
    the coordinate at position (b^-1 pi)^-1(m) to the last one; it is
    unimodular and preserves the area functional exactly, so it realizes the
    volume identity between the half cone and the pullback's full cone.
    """
    m = len(perm)
    perm_b = rauzy.apply_b_inv(perm)
    p = rauzy.invert(perm_b)[m - 1]
    out = np.array(delta, dtype=float)
    out[m - 1] = delta[m - 1] + delta[p - 1]
    return out


def minus_shuffle_inv(delta: np.ndarray, perm: Perm) -> np.ndarray:
    m = len(perm)
    perm_b = rauzy.apply_b_inv(perm)
    p = rauzy.invert(perm_b)[m - 1]
    out = np.array(delta, dtype=float)
    out[m - 1] = delta[m - 1] - delta[p - 1]
    return out


def export_density_csv(perm: Perm, lambdas, path) -> None:
    """CSV rows lambda_1..lambda_m, r_plus, r_minus over the supplied grid."""
    m = len(perm)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"lambda_{i+1}" for i in range(m)] + ["r_plus", "r_minus"])
        for lam in lambdas:
            lam = np.asarray(lam, dtype=float)
            writer.writerow(
                [f"{x:.17g}" for x in lam]
                + [f"{r_plus(lam, perm):.17g}", f"{r_minus(lam, perm):.17g}"]
            )
