import numpy as np
import pytest

from ietflow import density, induction, zippered
from ietflow.errors import BoundaryError
from ietflow.zippered import DeltaCoords, ZipperedRectangle
from conftest import random_irreducible

GOLDEN = (1 + np.sqrt(5)) / 2


def random_valid_zr(rng, perm, unit_area=True):
    m = len(perm)
    lam = rng.dirichlet(np.ones(m))
    ell = zippered.area_coefficients(lam, perm)
    delta = density.sample_cone_point(density.cone(perm, "full"), [float(x) for x in ell], rng)
    zr = zippered.from_delta(DeltaCoords(lam, perm, delta))
    if unit_area and zr.area > 0:
        zr = zippered.from_delta(DeltaCoords(lam, perm, delta / zr.area))
    return zr


def golden_zr():
    lam = np.array([GOLDEN - 1, 2 - GOLDEN])
    zr = zippered.from_delta(DeltaCoords(lam, (2, 1), np.array([-1.0, 1.0])))
    return zippered.from_delta(DeltaCoords(lam, (2, 1), zippered.delta_of(zr) / zr.area))


def test_from_delta_m2_examples():
    zr = zippered.from_delta(DeltaCoords(np.array([0.5, 0.5]), (2, 1), np.array([-1.0, 1.0])))
    assert np.allclose(zr.h, [1, 1]) and np.allclose(zr.a, [1, 0])
    ok, violations = zippered.validate(zr)
    assert ok, violations

    zr2 = zippered.from_delta(DeltaCoords(np.array([0.6, 0.4]), (2, 1), np.array([-0.5, 1.0])))
    assert np.allclose(zr2.h, [1.0, 0.5]) and np.allclose(zr2.a, [0.5, -0.5])
    assert zr2.area == pytest.approx(0.8)
    assert zippered.area(zippered.to_delta(zr2)) == pytest.approx(0.8)


def test_from_delta_rejects_outside_cone():
    with pytest.raises(ValueError):
        zippered.from_delta(DeltaCoords(np.array([0.5, 0.5]), (2, 1), np.array([1.0, -1.0])))


def test_validate_catches_broken_equation():
    zr = zippered.from_delta(DeltaCoords(np.array([0.5, 0.5]), (2, 1), np.array([-1.0, 1.0])))
    broken = ZipperedRectangle(zr.lam, zr.h + np.array([0.1, 0.0]), zr.a, zr.perm)
    ok, violations = zippered.validate(broken)
    assert not ok and any("matching equation" in v for v in violations)


def test_delta_roundtrip_exact(rng):
    for _ in range(100):
        m = int(rng.integers(2, 6))
        perm = random_irreducible(rng, m)
        zr = random_valid_zr(rng, perm)
        dc = zippered.to_delta(zr)
        zr2 = zippered.from_delta(dc)
        assert np.allclose(zr2.h, zr.h, atol=1e-12)
        assert np.allclose(zr2.a, zr.a, atol=1e-12)
        assert np.allclose(zippered.delta_of(zr2), dc.delta, atol=1e-12)


def test_area_two_forms_agree(rng):
    for _ in range(500):
        m = int(rng.integers(2, 6))
        perm = random_irreducible(rng, m)
        zr = random_valid_zr(rng, perm, unit_area=False)
        dc = zippered.to_delta(zr)
        assert zippered.area(dc) == pytest.approx(float(np.dot(zr.lam, zr.h)), abs=1e-12)


def test_validate_random_cone_points(rng):
    for _ in range(200):
        m = int(rng.integers(2, 7))
        perm = random_irreducible(rng, m)
        zr = random_valid_zr(rng, perm)
        ok, violations = zippered.validate(zr)
        assert ok, (perm, violations)


def test_map_u_worked_case():
    zr = ZipperedRectangle(np.array([0.7, 0.3]), np.array([1.0, 1.0]), np.array([1.0, 0.0]), (2, 1))
    img = zippered.map_u(zr)
    assert np.allclose(img.lam, [0.4, 0.3])
    assert np.allclose(img.h, [1.0, 2.0])
    assert np.allclose(img.a, [2.0, 1.0])
    assert zippered.validate(img)[0]
    assert img.area == pytest.approx(zr.area, abs=1e-12)


def test_map_u_preserves_area_and_projects(rng):
    from ietflow import induction

    done = 0
    while done < 200:
        m = int(rng.integers(2, 6))
        perm = random_irreducible(rng, m)
        zr = random_valid_zr(rng, perm)
        try:
            img = zippered.map_u(zr)
        except BoundaryError:
            continue
        done += 1
        assert img.area == pytest.approx(zr.area, abs=1e-12)
        assert zippered.validate(img)[0]
        expected, op, _ = induction.rauzy_step(zr.state(), normalized=False)
        assert np.allclose(img.lam, expected.lengths, atol=1e-14)
        assert img.perm == expected.perm


def test_delta_transport_conjugacy(rng):
    # one induction step in delta coordinates is delta -> A^-1 delta
    from ietflow import rauzy

    done = 0
    while done < 100:
        m = int(rng.integers(2, 6))
        perm = random_irreducible(rng, m)
        zr = random_valid_zr(rng, perm)
        try:
            img = zippered.map_u(zr)
        except BoundaryError:
            continue
        done += 1
        _, op, A = induction.rauzy_step(zr.state(), normalized=False)
        lhs = zippered.delta_of(img)
        rhs = np.linalg.solve(np.array(A, dtype=float), zippered.delta_of(zr))
        assert np.allclose(lhs, rhs, atol=1e-10)


def test_flow_scaling_and_group_law():
    zr = golden_zr()
    t = np.log(2.0)
    img = zippered.flow(zr, t)
    assert np.allclose(img.lam, 2 * zr.lam)
    assert np.allclose(img.h, zr.h / 2)
    assert np.allclose(img.a, zr.a / 2)
    two = zippered.flow(zippered.flow(zr, 0.3), 0.4)
    one = zippered.flow(zr, 0.7)
    assert np.allclose(two.lam, one.lam) and np.allclose(two.h, one.h)


def test_roof():
    zr = ZipperedRectangle(np.array([0.7, 0.3]), np.array([1.0, 1.0]), np.array([1.0, 0.0]), (2, 1))
    assert zippered.roof(zr) == pytest.approx(-np.log(0.7))
    with pytest.raises(ValueError):
        zippered.roof(zippered.flow(zr, 1.0))


def test_roof_positive(rng):
    for _ in range(200):
        m = int(rng.integers(2, 6))
        zr = random_valid_zr(rng, random_irreducible(rng, m))
        assert zippered.roof(zr) > 0


def test_section_map_projects_and_normalizes(rng):
    done = 0
    while done < 100:
        m = int(rng.integers(2, 5))
        zr = random_valid_zr(rng, random_irreducible(rng, m))
        try:
            img = zippered.section_map_s(zr)
        except BoundaryError:
            continue
        done += 1
        assert img.lam.sum() == pytest.approx(1.0, abs=1e-10)
        assert img.area == pytest.approx(zr.area, abs=1e-10)
        expected, _, _ = induction.rauzy_step(zr.state(), normalized=True)
        assert np.allclose(img.lam, expected.lengths, atol=1e-12)


def test_lift_f_alternates_and_projects():
    zr = golden_zr()
    assert zippered.in_zorich_section(zr)
    cur = zr
    for _ in range(20):
        state_before = cur.state()
        expected, letter_ref = induction.zorich_step(state_before)
        cur, letter = zippered.zorich_lift_f(cur)
        assert letter == letter_ref
        assert np.allclose(cur.lam, expected.lengths, atol=1e-9)
        assert zippered.validate(cur)[0]
        assert zippered.in_zorich_section(cur, tol=1e-12)
        assert cur.area == pytest.approx(1.0, abs=1e-10)


def test_lift_f_rejects_off_section():
    zr = golden_zr()
    # force the wrong sign of a_m: plus side must carry a_m <= 0
    bad = ZipperedRectangle(zr.lam, zr.h, np.array([zr.a[0], 0.5]), zr.perm)
    with pytest.raises(ValueError):
        zippered.zorich_lift_f(bad)


def test_zr_distance():
    zr = zippered.from_delta(
        DeltaCoords(np.array([0.6, 0.4]), (2, 1), np.array([-1.0, 0.7]))
    )
    assert float(zr.a[-1]) != 0.0
    other = ZipperedRectangle(zr.lam, zr.h * 2, zr.a * 2, zr.perm)
    assert zippered.zr_distance(zr, zr) == 0.0
    assert zippered.zr_distance(zr, other) == pytest.approx(np.log(2))
    assert zippered.zr_distance(zr, other) == zippered.zr_distance(other, zr)
    # flipping the sign of a_m crosses pieces (+2) and moves |h_m - a_m|
    flipped = ZipperedRectangle(zr.lam, zr.h, np.array([zr.a[0], -zr.a[1]]), zr.perm)
    assert zippered.zr_distance(zr, flipped) == pytest.approx(2.0 + np.log(1.3 / 0.7))
    degenerate = ZipperedRectangle(zr.lam, zr.h, np.array([zr.a[0], 0.0]), zr.perm)
    with pytest.raises(ValueError):
        zippered.zr_distance(zr, degenerate)


def _golden_f_orbit(zr, steps):
    """F-orbit along the golden trajectory, resnapping lambda each step.

    The exact golden orbit alternates the two length vectors; resnapping
    removes the exponential float drift of the subtractive lambda update
    while heights and zips follow the genuine cocycle.
    """
    lam_plus = np.array([GOLDEN - 1, 2 - GOLDEN])
    letters = []
    cur = zr
    for _ in range(steps):
        cur, letter = zippered.zorich_lift_f(cur)
        lam = lam_plus if cur.lam[0] > cur.lam[1] else lam_plus[::-1]
        cur = ZipperedRectangle(lam.copy(), cur.h, cur.a, cur.perm)
        letters.append(letter)
    return cur, tuple(letters)


def test_height_reconstruction_golden():
    final, word = _golden_f_orbit(golden_zr(), 50)
    assert induction.is_admissible(word)
    h_est, diag = zippered.reconstruct_height(word, final.state())
    assert not diag["wide"]
    true_h = final.h / float(np.dot(final.lam, final.h))
    cos = np.dot(h_est, true_h) / (np.linalg.norm(h_est) * np.linalg.norm(true_h))
    assert np.arccos(min(1.0, cos)) < 1e-6


def test_height_reconstruction_diameter_decreases():
    final, word = _golden_f_orbit(golden_zr(), 24)
    diams = []
    for k in range(2, 25, 2):
        _, diag = zippered.reconstruct_height(word[-k:], final.state())
        if np.isfinite(diag["diameter"]):
            diams.append(diag["diameter"])
    assert len(diams) >= 8
    assert all(b <= a + 1e-15 for a, b in zip(diams, diams[1:]))


def test_height_reconstruction_empty_past():
    h, diag = zippered.reconstruct_height((), golden_zr().state())
    assert h is None and diag["wide"]


def test_json_roundtrip(rng):
    zr = random_valid_zr(rng, (3, 2, 1))
    text = zippered.to_json(zr)
    back = zippered.from_json(text)
    assert np.array_equal(back.lam, zr.lam)
    assert np.array_equal(back.h, zr.h)
    assert np.array_equal(back.a, zr.a)
    assert back.perm == zr.perm
    assert zippered.to_json(back) == text
