import math
from fractions import Fraction

import numpy as np
import pytest

from ietflow import density, iet, induction, rauzy, zippered
from ietflow.errors import BoundaryError
from conftest import random_irreducible


def clip_polygon(poly, a, b, c):
    """Sutherland-Hodgman clip of a polygon by {a x + b y <= c} (oracle only)."""
    out = []
    n = len(poly)
    for i in range(n):
        p, q = poly[i], poly[(i + 1) % n]
        fp = a * p[0] + b * p[1] - c
        fq = a * q[0] + b * q[1] - c
        if fp <= 0:
            out.append(p)
        if (fp < 0 < fq) or (fq < 0 < fp):
            t = fp / (fp - fq)
            out.append((p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])))
    return out


def shoelace(poly):
    s = 0.0
    for i in range(len(poly)):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % len(poly)]
        s += x1 * y2 - x2 * y1
    return abs(s) / 2


def polygon_volume_oracle(lam, variant):
    """Truncated-cone area for m=2 by straight polygon clipping."""
    big = 10.0 / min(lam)  # the truncated cone fits well inside this box
    poly = [(-big, -big), (big, -big), (big, big), (-big, big)]
    poly = clip_polygon(poly, 1.0, 0.0, 0.0)  # delta_1 <= 0
    poly = clip_polygon(poly, 0.0, -1.0, 0.0)  # delta_2 >= 0
    if variant == "plus":
        poly = clip_polygon(poly, 1.0, 1.0, 0.0)
    elif variant == "minus":
        poly = clip_polygon(poly, -1.0, -1.0, 0.0)
    c1, c2 = -lam[1], lam[0]  # area functional coefficients for pi = (21)
    poly = clip_polygon(poly, c1, c2, 1.0)
    return shoelace(poly)


def test_cone_m2():
    full = density.cone((2, 1), "full")
    assert set(full.rays) == {(-1, 0), (0, 1)}
    minus = density.cone((2, 1), "minus")
    assert set(minus.rays) == {(-1, 1), (0, 1)}
    plus = density.cone((2, 1), "plus")
    assert set(plus.rays) == {(-1, 1), (-1, 0)}


def test_rays_satisfy_inequalities_exactly(rng):
    for _ in range(40):
        m = int(rng.integers(2, 7))
        perm = random_irreducible(rng, m)
        for variant in ("full", "plus", "minus"):
            cd = density.cone(perm, variant)
            for ray in cd.rays:
                assert all(
                    sum(c * r for c, r in zip(ineq, ray)) >= 0 for ineq in cd.inequalities
                )
            # every inequality is tight on some ray (no redundant facets hiding)
            for ineq in cd.inequalities:
                assert any(sum(c * r for c, r in zip(ineq, ray)) == 0 for ray in cd.rays)


def test_m2_closed_forms(rng):
    for _ in range(100):
        lam = rng.dirichlet([1.0, 1.0])
        assert density.r(lam, (2, 1)) == pytest.approx(1 / (2 * lam[0] * lam[1]), rel=1e-12)
        assert density.r_plus(lam, (2, 1)) == pytest.approx(1 / (2 * lam[1]), rel=1e-12)
        assert density.r_minus(lam, (2, 1)) == pytest.approx(1 / (2 * lam[0]), rel=1e-12)


def test_m2_against_polygon_oracle(rng):
    for _ in range(100):
        lam = rng.dirichlet([1.0, 1.0])
        for variant, fn in (("full", density.r), ("plus", density.r_plus), ("minus", density.r_minus)):
            assert fn(lam, (2, 1)) == pytest.approx(polygon_volume_oracle(lam, variant), abs=1e-9)


def test_worked_example():
    lam = np.array([0.6, 0.4])
    assert density.r(lam, (2, 1)) == pytest.approx(25 / 12, rel=1e-12)
    assert density.r_plus(lam, (2, 1)) == pytest.approx(5 / 4, rel=1e-12)
    assert density.r_minus(lam, (2, 1)) == pytest.approx(5 / 6, rel=1e-12)


def test_exact_rational_volume():
    cd = density.cone((2, 1), "full")
    ell = [Fraction(-2, 5), Fraction(3, 5)]  # area functional of lam = (3/5, 2/5)
    vol = density.truncated_volume(cd, ell)
    assert vol.value == Fraction(25, 12)


def test_homogeneity(rng):
    for _ in range(50):
        m = int(rng.integers(2, 6))
        perm = random_irreducible(rng, m)
        lam = rng.dirichlet(np.ones(m))
        c = float(rng.uniform(0.5, 3.0))
        for fn in (density.r, density.r_plus, density.r_minus):
            assert fn(c * lam, perm) == pytest.approx(fn(lam, perm) / c**m, rel=1e-10)


def test_additivity(rng):
    for _ in range(60):
        m = int(rng.integers(2, 7))
        perm = random_irreducible(rng, m)
        lam = rng.dirichlet(np.ones(m))
        assert density.r(lam, perm) == pytest.approx(
            density.r_plus(lam, perm) + density.r_minus(lam, perm), rel=1e-10
        )


def test_dimension_cap():
    with pytest.raises(ValueError):
        density.cone(tuple(range(9, 0, -1)), "full")


def _pullback(lam, perm, op, n=1):
    lam = [float(x) for x in lam]
    for _ in range(n):
        perm = rauzy.apply_op(perm, op, -1)
        lam = [float(x) for x in rauzy.mat_vec(rauzy.matrix(perm, op), lam)]
    return np.array(lam), perm


def test_half_volume_pullback_identities(rng):
    # r_minus = r after a b-pullback; r_plus = r after an a-pullback
    for _ in range(100):
        m = int(rng.integers(2, 5))
        perm = random_irreducible(rng, m)
        lam = rng.dirichlet(np.ones(m))
        lam_b, perm_b = _pullback(lam, perm, "b")
        assert density.r_minus(lam, perm) == pytest.approx(density.r(lam_b, perm_b), rel=1e-9)
        lam_a, perm_a = _pullback(lam, perm, "a")
        assert density.r_plus(lam, perm) == pytest.approx(density.r(lam_a, perm_a), rel=1e-9)


def test_plus_volume_is_summed_minus_volumes(rng):
    # telescoping: r_plus = sum of a-pullback minus-volumes + residual, exactly
    for _ in range(40):
        m = int(rng.integers(2, 5))
        perm = random_irreducible(rng, m)
        lam = rng.dirichlet(np.ones(m))
        target = density.r_plus(lam, perm)
        total = 0.0
        cur, cur_perm = np.array(lam), perm
        for n in range(1, 40):
            cur, cur_perm = _pullback(cur, cur_perm, "a")
            total += density.r_minus(cur, cur_perm)
        residual = density.r_plus(cur, cur_perm)
        assert total + residual == pytest.approx(target, rel=1e-9)

    # and the infinite series converges to r_plus with adaptively chosen depth
    # (the m=2 residual decays like 1/n, so the demo stops at a modest level;
    # the 1e-9 finite identity above is the precision statement)
    lam = np.array([0.55, 0.45])
    target = density.r_plus(lam, (2, 1))
    total, cur, cur_perm = 0.0, lam, (2, 1)
    for n in range(1, 100_000):
        cur, cur_perm = _pullback(cur, cur_perm, "a")
        total += density.r_minus(cur, cur_perm)
        if density.r_plus(cur, cur_perm) < 1e-3 * target:
            break
    assert total == pytest.approx(target, rel=2e-3)
    assert density.r_plus(cur, cur_perm) < 1e-3 * target


def test_transition_p_m2_closed_form():
    st = iet.new_iet([0.25, 0.75], (2, 1))
    lam1, lam2 = 0.25, 0.75
    for n in range(1, 20):
        expect = lam2 / ((lam1 + n * lam2) * (lam1 + (n + 1) * lam2))
        assert density.transition_p(st, n) == pytest.approx(expect, abs=1e-10)


def test_transition_p_forced_branch_value():
    st = iet.new_iet([0.7, 0.3], (2, 1))
    assert density.transition_p(st, 1, op="a") == pytest.approx(3 / 13, abs=1e-12)


def test_tail_identity(rng):
    done = 0
    while done < 25:
        m = int(rng.integers(2, 6))
        perm = random_irreducible(rng, m)
        lam = rng.dirichlet(np.ones(m))
        st = iet.new_iet(lam, perm)
        try:
            N = int(rng.integers(1, 31))
            total = sum(density.transition_p(st, n) for n in range(1, N + 1))
            total += density.tail(st, N)
        except BoundaryError:
            continue
        assert total == pytest.approx(1.0, abs=1e-8)
        done += 1


def test_prob_word_empty_and_single():
    st = iet.new_iet([0.25, 0.75], (2, 1))
    assert density.prob_word((), st) == 1.0
    letter = induction.Letter("a", 2, (2, 1))
    assert density.prob_word((letter,), st) == pytest.approx(density.transition_p(st, 2), rel=1e-12)


def test_prob_word_chain_rule(rng):
    done = 0
    while done < 25:
        m = int(rng.integers(2, 5))
        perm = random_irreducible(rng, m)
        state = iet.new_iet(rng.dirichlet(np.ones(m)), perm)
        try:
            word = induction.encode(state, 4)
            end = state
            for _ in range(4):
                end, _ = induction.zorich_step(end)
        except BoundaryError:
            continue
        # prob of the full word versus the two-stage chain
        lhs = density.prob_word(word, end)
        mid = induction.pullback(word[2:], end)
        rhs = density.prob_word(word[2:], end) * density.prob_word(word[:2], mid)
        assert lhs == pytest.approx(rhs, rel=1e-10)
        assert 0 < lhs <= 1
        done += 1


def test_prob_word_rejects_incompatible():
    st = iet.new_iet([0.7, 0.3], (2, 1))
    with pytest.raises(ValueError):
        density.prob_word((induction.Letter("a", 2, (2, 1)),), st)


def test_lower_bounds_sweep(rng):
    # Prob(w | state) * |A(w)|^m stays bounded away from zero over samples
    ratios = []
    done = 0
    while done < 200:
        state = iet.new_iet(rng.dirichlet([1.0, 1.0]), (2, 1))
        if min(state.lengths) < 0.05:
            continue
        try:
            length = int(rng.integers(1, 7))
            word = induction.encode(state, length)
            end = state
            for _ in range(length):
                end, _ = induction.zorich_step(end)
        except BoundaryError:
            continue
        rep = density.lower_bounds_check(word, end)
        ratios.append(rep["ratio"])
        done += 1
    assert min(ratios) > 1e-4


def test_minus_shuffle_bijection(rng):
    # the coordinate shuffle maps the minus half onto the b-pullback's cone,
    # preserving the area functional value
    for _ in range(50):
        m = int(rng.integers(2, 5))
        perm = random_irreducible(rng, m)
        lam = rng.dirichlet(np.ones(m))
        ell = zippered.area_coefficients(lam, perm)
        cd = density.cone(perm, "minus")
        delta = density.sample_cone_point(cd, [float(x) for x in ell], rng)
        shuffled = density.minus_shuffle(delta, perm)
        lam_b, perm_b = _pullback(lam, perm, "b")
        assert zippered.in_cone(shuffled, perm_b, tol=1e-12)
        area_before = float(np.dot(delta, ell))
        area_after = float(np.dot(shuffled, zippered.area_coefficients(lam_b, perm_b)))
        assert area_after == pytest.approx(area_before, rel=1e-9)
        back = density.minus_shuffle_inv(shuffled, perm)
        assert np.allclose(back, delta, atol=1e-12)


def test_density_profile_sides():
    plus_state = iet.new_iet([0.7, 0.3], (2, 1))
    minus_state = iet.new_iet([0.25, 0.75], (2, 1))
    assert density.density_profile(plus_state) == pytest.approx(1 / (2 * 0.7))
    assert density.density_profile(minus_state) == pytest.approx(1 / (2 * 0.75))
    with pytest.raises(BoundaryError):
        density.density_profile(iet.new_iet([0.5, 0.5], (2, 1)))


def test_export_csv(tmp_path):
    path = tmp_path / "density.csv"
    lambdas = [np.array([x, 1 - x]) for x in (0.2, 0.5, 0.8)]
    density.export_density_csv((2, 1), lambdas, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "lambda_1,lambda_2,r_plus,r_minus"
    assert len(lines) == 4
    row = lines[1].split(",")
    assert float(row[2]) == pytest.approx(1 / (2 * 0.8))
    assert float(row[3]) == pytest.approx(1 / (2 * 0.2))


def test_infinite_volume_marker():
    cd = density.cone((2, 1), "full")
    vol = density.truncated_volume(cd, [0.0, 1.0])  # vanishes on the ray (-1, 0)
    assert not vol.finite and math.isinf(vol.value)
