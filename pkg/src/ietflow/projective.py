"""Hilbert metric on the simplex, projective matrix actions, and distortion.

The metric is d(u, v) = log(max_i u_i/v_i / min_i u_i/v_i); nonnegative
matrices act projectively by J_A(u) = Au/|Au| and contract it strictly
when all entries are positive.
"""

from __future__ import annotations

import numpy as np

from .iet import IETState


def hilbert_distance(u, v) -> float:
    """Log-ratio distance of two strictly positive vectors; scale-invariant."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise ValueError("shape mismatch")
    if np.any(u <= 0) or np.any(v <= 0):
        raise ValueError("hilbert_distance requires strictly positive vectors")
    r = u / v
    return float(np.log(r.max() / r.min()))


def extended_distance(x: IETState, y: IETState) -> float:
    """Metric on the simplex times the Rauzy class: +2 when permutations differ."""
    d = hilbert_distance(x.lengths, y.lengths)
    return d if x.perm == y.perm else d + 2.0


def project(A, u) -> np.ndarray:
    """J_A(u) = Au/|Au| for nonnegative A."""
    A = np.asarray(A, dtype=float)
    u = np.asarray(u, dtype=float)
    img = A @ u
    total = img.sum()
    if total <= 0 or np.any(img < 0):
        raise ValueError("projective image is not a positive vector")
    return img / total


def jacobian_det(A, u) -> float:
    """|det DJ_A| on the simplex: 1/|Au|^m for unimodular A, u normalized."""
    A = np.asarray(A, dtype=float)
    u = np.asarray(u, dtype=float)
    m = len(u)
    return float(1.0 / (A @ u).sum() ** m)


def total(A) -> float:
    return float(np.asarray(A, dtype=float).sum())


def row_ratio(A) -> float:
    """max_{i,j,k} A_ij/A_ik: largest within-row entry ratio, inf on a zero entry."""
    A = np.asarray(A, dtype=float)
    out = 1.0
    for row in A:
        mx = row.max()
        mn = row.min()
        if mn <= 0.0:
            if mx > 0.0:
                return float("inf")
            continue
        out = max(out, mx / mn)
    return out


def col_ratio(A) -> float:
    return row_ratio(np.asarray(A, dtype=float).T)


def quantities(A) -> dict:
    """The three distortion quantities |A|, row(A), col(A)."""
    return {"total": total(A), "row": row_ratio(A), "col": col_ratio(A)}


def distortion_bounds(A, n_samples: int, rng, radius: float = 0.05) -> dict:
    """Check the measure-distortion bound for J_A on two sampled patches.

    Picks two small simplex patches C1, C2, computes their exact image
    measures as Monte Carlo integrals of |det DJ_A| and reports whether
    the ratio sits inside [row(A)^-m, row(A)^m] * m(C1)/m(C2).
    """
    A = np.asarray(A, dtype=float)
    m = A.shape[0]
    if np.any(A <= 0):
        raise ValueError("distortion bound requires a positive matrix")

    def patch_samples():
        # translated copy of one fixed sampling law: both patches carry the
        # same Lebesgue measure, so m(C1)/m(C2) = 1 in the bound
        while True:
            center = rng.dirichlet(np.full(m, 8.0))
            pts = center[None, :] + radius * (rng.dirichlet(np.ones(m), size=n_samples) - 1.0 / m)
            if np.all(pts > 0):
                return pts

    c1, c2 = patch_samples(), patch_samples()
    img1 = float(np.mean([jacobian_det(A, u) for u in c1]))
    img2 = float(np.mean([jacobian_det(A, u) for u in c2]))
    ratio = img1 / img2
    r = row_ratio(A)
    return {
        "ratio": ratio,
        "lower": r**-m,
        "upper": r**m,
        "within": bool(r**-m <= ratio <= r**m),
    }


def contraction_factor(A, trials: int, rng) -> float:
    """Sampled sup of d(J_A u, J_A v)/d(u, v); < 1 for positive A.

    Reports an empirical maximum, not a certified bound.
    """
    A = np.asarray(A, dtype=float)
    if np.any(A <= 0):
        raise ValueError("contraction requires a strictly positive matrix")
    m = A.shape[0]
    worst = 0.0
    for _ in range(trials):
        u = rng.dirichlet(np.ones(m))
        v = rng.dirichlet(np.ones(m))
        u = np.clip(u, 1e-12, None)
        v = np.clip(v, 1e-12, None)
        d0 = hilbert_distance(u, v)
        if d0 < 1e-12:
            continue
        d1 = hilbert_distance(A @ u, A @ v)
        worst = max(worst, d1 / d0)
    return worst
