"""Zippered rectangles: Veech coordinates, the lifted induction, and the flow.

A zippered rectangle is (lambda, h, a, pi) subject to matching equations
and sign constraints; equivalently (lambda, pi, delta) with
delta_i = a_{i-1} - a_i ranging over a polyhedral cone.  The dilation
flow scales lambda by e^t and (h, a) by e^-t; the lifted induction U
applies one Rauzy step upstairs.

Case selection for U follows the induction module: the a-branch fires on
the plus side (lambda_{pi^-1(m)} > lambda_m).  Membership in the Zorich
section pairs the plus side with a_m <= 0 and the minus side with
a_m >= 0; one step of the lift always lands in the opposite piece (the
last a-step of a block forces a_m >= 0, the last b-step a_m <= 0).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import induction, rauzy
from .errors import BoundaryError
from .iet import IETState
from .induction import SignSet, Word, sign_set
from .rauzy import Perm, mat_transpose, mat_vec, perm_str


@dataclass(frozen=True)
class ZipperedRectangle:
    lam: np.ndarray
    h: np.ndarray
    a: np.ndarray
    perm: Perm

    def __post_init__(self):
        object.__setattr__(self, "lam", np.asarray(self.lam, dtype=float))
        object.__setattr__(self, "h", np.asarray(self.h, dtype=float))
        object.__setattr__(self, "a", np.asarray(self.a, dtype=float))
        object.__setattr__(self, "perm", rauzy.check_irreducible(tuple(self.perm)))

    @property
    def m(self) -> int:
        return len(self.perm)

    @property
    def area(self) -> float:
        return float(np.dot(self.lam, self.h))

    def state(self) -> IETState:
        return IETState(self.lam.copy(), self.perm)


@dataclass(frozen=True)
class DeltaCoords:
    lam: np.ndarray
    perm: Perm
    delta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lam", np.asarray(self.lam, dtype=float))
        object.__setattr__(self, "delta", np.asarray(self.delta, dtype=float))
        object.__setattr__(self, "perm", rauzy.check_irreducible(tuple(self.perm)))


# ---------------------------------------------------------------------------
# constraint system
# ---------------------------------------------------------------------------

def validate(zr: ZipperedRectangle, eq_tol: float = 1e-10, ineq_slack: float = -1e-12):
    """Check the matching equations and sign constraints.

    Returns (ok, violations); violations name each failed condition.
    """
    m, lam, h, a, perm = zr.m, zr.lam, zr.h, zr.a, zr.perm
    inv = rauzy.invert(perm)
    violations = []

    def h_at(i):  # auxiliary h_0 = h_{m+1} = 0
        return h[i - 1] if 1 <= i <= m else 0.0

    def a_at(i):
        return a[i - 1] if 1 <= i <= m else 0.0

    def pi_at(i):
        return perm[i - 1] if i >= 1 else 0

    def pi_inv(j):
        return inv[j - 1] if j <= m else m + 1

    if np.any(lam <= 0):
        violations.append("lengths must be positive")
    for i in range(0, m + 1):
        j = pi_inv(pi_at(i) + 1)
        lhs = h_at(i) - a_at(i)
        rhs = h_at(j) - a_at(j - 1)
        if abs(lhs - rhs) > eq_tol:
            violations.append(f"matching equation fails at i={i}: {lhs!r} != {rhs!r}")
    for i in range(1, m + 1):
        if h_at(i) < ineq_slack:
            violations.append(f"h_{i} < 0")
    for i in range(1, m):
        if a_at(i) < ineq_slack:
            violations.append(f"a_{i} < 0")
    p = inv[m - 1]
    for i in range(1, m + 1):
        if i in (m, p):
            continue
        if a_at(i) - min(h_at(i), h_at(i + 1)) > -ineq_slack:
            violations.append(f"a_{i} > min(h_{i}, h_{i+1})")
    if a_at(m) - h_at(m) > -ineq_slack:
        violations.append("a_m > h_m")
    if -h_at(p) - a_at(m) > -ineq_slack:
        violations.append("a_m < -h_{pi^-1 m}")
    if a_at(p) - h_at(p + 1) > -ineq_slack:
        violations.append("a_{pi^-1 m} > h_{pi^-1 m + 1}")
    return (not violations), violations


def delta_of(zr: ZipperedRectangle) -> np.ndarray:
    a_ext = np.concatenate(([0.0], zr.a))
    return a_ext[:-1] - a_ext[1:]


def to_delta(zr: ZipperedRectangle) -> DeltaCoords:
    return DeltaCoords(zr.lam.copy(), zr.perm, delta_of(zr))


def heights_from_delta(delta: np.ndarray, perm: Perm) -> np.ndarray:
    """h_r = -sum_{i<r} delta_i + sum_{l<pi(r)} delta_{pi^-1(l)}."""
    m = len(perm)
    inv = rauzy.invert(perm)
    pre = np.concatenate(([0.0], np.cumsum(delta)))
    pre_pi = np.concatenate(([0.0], np.cumsum([delta[inv[l - 1] - 1] for l in range(1, m + 1)])))
    return np.array([-pre[r - 1] + pre_pi[perm[r - 1] - 1] for r in range(1, m + 1)])


def in_cone(delta: np.ndarray, perm: Perm, tol: float = 0.0) -> bool:
    """delta in K_pi: prefix sums <= 0 and pi-permuted prefix sums >= 0."""
    m = len(perm)
    inv = rauzy.invert(perm)
    s = np.cumsum(delta)
    s_pi = np.cumsum([delta[inv[l - 1] - 1] for l in range(1, m + 1)])
    return bool(np.all(s[: m - 1] <= tol) and np.all(s_pi[: m - 1] >= -tol))


def from_delta(dc: DeltaCoords) -> ZipperedRectangle:
    """Reconstruct (lambda, h, a, pi); rejects delta outside K_pi."""
    if not in_cone(dc.delta, dc.perm, tol=1e-12):
        raise ValueError("delta lies outside the cone of valid zippered rectangles")
    a = -np.cumsum(dc.delta)
    h = heights_from_delta(dc.delta, dc.perm)
    return ZipperedRectangle(dc.lam.copy(), h, a, dc.perm)


def area(dc: DeltaCoords) -> float:
    """Area in delta form: sum_i delta_i (-sum_{r>i} lam_r + sum_{r>pi(i)} lam_{pi^-1 r})."""
    return float(np.dot(dc.delta, area_coefficients(dc.lam, dc.perm)))


def area_coefficients(lam: np.ndarray, perm: Perm) -> np.ndarray:
    m = len(perm)
    inv = rauzy.invert(perm)
    lam = np.asarray(lam, dtype=float)
    suffix = np.concatenate((np.cumsum(lam[::-1])[::-1], [0.0]))  # suffix[i] = sum_{r>=i+1}
    lam_pi = np.array([lam[inv[r - 1] - 1] for r in range(1, m + 1)])
    suffix_pi = np.concatenate((np.cumsum(lam_pi[::-1])[::-1], [0.0]))
    return np.array([-suffix[i] + suffix_pi[perm[i - 1]] for i in range(1, m + 1)])


# ---------------------------------------------------------------------------
# the lifted induction and the flow
# ---------------------------------------------------------------------------

def map_u(zr: ZipperedRectangle) -> ZipperedRectangle:
    """One unnormalized Rauzy step upstairs: (A^-1 lam, A^t h, a', c pi)."""
    state = zr.state()
    sign = sign_set(state)
    if sign is SignSet.BOUNDARY:
        raise BoundaryError("boundary state")
    new_state, op, A = induction.rauzy_step(state, normalized=False)
    h = np.array(mat_vec(mat_transpose(A), list(zr.h)), dtype=float)
    m, a = zr.m, zr.a
    p = rauzy.invert(zr.perm)[m - 1]
    new_a = np.empty(m)
    if op == "a":
        new_a[: p - 1] = a[: p - 1]
        new_a[p - 1] = zr.h[p - 1] + (a[m - 2] if m >= 2 else 0.0)
        new_a[p:] = a[p - 1 : m - 1]
    else:
        new_a[: m - 1] = a[: m - 1]
        new_a[m - 1] = -zr.h[p - 1] + (a[p - 2] if p >= 2 else 0.0)
    return ZipperedRectangle(new_state.lengths, h, new_a, new_state.perm)


def flow(zr: ZipperedRectangle, t: float) -> ZipperedRectangle:
    s = float(np.exp(t))
    return ZipperedRectangle(zr.lam * s, zr.h / s, zr.a / s, zr.perm)


def roof(zr: ZipperedRectangle) -> float:
    """Return time to the |lambda| = 1 section: -log(|lambda| - min critical length).

    Positive on the section; the flow expands lambda, so the section is
    reached after the induction cut shortens the interval.
    """
    lam, m = zr.lam, zr.m
    total = float(lam.sum())
    if abs(total - 1.0) > 1e-9:
        raise ValueError("roof is defined on the |lambda| = 1 section")
    p = rauzy.invert(zr.perm)[m - 1]
    return float(-np.log(total - min(lam[m - 1], lam[p - 1])))


def section_map_s(zr: ZipperedRectangle) -> ZipperedRectangle:
    """S = U composed with the flow by the roof time; keeps |lambda| = 1."""
    tau = roof(zr)
    return flow(map_u(zr), tau)


def in_zorich_section(zr: ZipperedRectangle, tol: float = 0.0) -> bool:
    """Plus side pairs with a_m <= 0, minus side with a_m >= 0."""
    sign = sign_set(zr.state())
    am = float(zr.a[-1])
    if sign is SignSet.PLUS:
        return am <= tol
    if sign is SignSet.MINUS:
        return am >= -tol
    return False


def zorich_lift_f(zr: ZipperedRectangle):
    """F: iterate S until the sign set flips; alternates the section pieces.

    Returns (new_zr, Letter).
    """
    if abs(float(zr.lam.sum()) - 1.0) > 1e-9:
        raise ValueError("F is defined on the |lambda| = 1 section")
    if not in_zorich_section(zr, tol=1e-12):
        raise ValueError("zippered rectangle is not in the Zorich section")
    start_sign = sign_set(zr.state())
    if start_sign is SignSet.BOUNDARY:
        raise BoundaryError("boundary state")
    cur = zr
    n = 0
    while sign_set(cur.state()) is start_sign:
        cur = section_map_s(cur)
        n += 1
        if sign_set(cur.state()) is SignSet.BOUNDARY:
            raise BoundaryError("boundary hit mid-step")
    op = "a" if start_sign is SignSet.PLUS else "b"
    return cur, induction.Letter(op, n, zr.perm)


# ---------------------------------------------------------------------------
# metric and natural-extension reconstruction
# ---------------------------------------------------------------------------

def zr_distance(x: ZipperedRectangle, y: ZipperedRectangle) -> float:
    """Log-ratio span over lambda, h, |a| and |h - a|; +2 across pieces.

    Undefined (rejected) when any compared component vanishes.
    """
    vals_x = np.concatenate((x.lam, x.h, np.abs(x.a), np.abs(x.h - x.a)))
    vals_y = np.concatenate((y.lam, y.h, np.abs(y.a), np.abs(y.h - y.a)))
    if np.any(vals_x == 0) or np.any(vals_y == 0):
        raise ValueError("metric undefined when a compared component is zero")
    r = vals_x / vals_y
    d = float(np.log(r.max() / r.min()))
    same_piece = x.perm == y.perm and x.a[-1] * y.a[-1] > 0
    return d if same_piece else d + 2.0


def reconstruct_height(past: Word, current: IETState):
    """Height direction of the natural extension from a finite past.

    The admissible heights lie in the nested cones A(w(n))^t R^m_+; the
    estimate is the normalized mean of the column directions of A(past)^t,
    scaled so that <lambda, h> = 1.  The Hilbert diameter of the column
    set is returned as the residual; a past without a positive cocycle
    product is flagged wide.
    """
    from .projective import hilbert_distance

    m = current.m
    if not past:
        return None, {"wide": True, "diameter": float("inf")}
    A = induction.word_matrix(past)
    if induction.word_end_perm(past) != current.perm:
        raise ValueError("past word does not end at the current permutation")
    At = np.array(A, dtype=float).T
    cols = At.T  # columns of A^t as rows
    cols = cols / cols.sum(axis=1, keepdims=True)
    positive = bool(np.all(np.array(A) > 0))
    diameter = 0.0
    if positive:
        for i in range(m):
            for j in range(i + 1, m):
                diameter = max(diameter, hilbert_distance(cols[i], cols[j]))
    else:
        diameter = float("inf")
    direction = cols.mean(axis=0)
    h = direction / float(np.dot(current.lengths, direction))
    return h, {"wide": not positive, "diameter": diameter}


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def to_json(zr: ZipperedRectangle) -> str:
    def fmt(xs):
        return [float(f"{x:.17g}") for x in xs]

    return json.dumps(
        {
            "lambda": fmt(zr.lam),
            "h": fmt(zr.h),
            "a": fmt(zr.a),
            "perm": perm_str(zr.perm),
            "area": float(f"{zr.area:.17g}"),
        }
    )


def from_json(text: str) -> ZipperedRectangle:
    obj = json.loads(text)
    return ZipperedRectangle(
        np.array(obj["lambda"], dtype=float),
        np.array(obj["h"], dtype=float),
        np.array(obj["a"], dtype=float),
        rauzy.parse_perm(obj["perm"]),
    )
