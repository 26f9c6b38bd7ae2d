import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ietflow import rauzy
from conftest import random_irreducible

# the labelled graph of (4321): seven vertices, one a- and one b-edge each
FIGURE_EDGES = {
    ("4321", "a"): "4132",
    ("4321", "b"): "2431",
    ("4132", "a"): "4213",
    ("4132", "b"): "3142",
    ("3142", "a"): "3142",
    ("3142", "b"): "4132",
    ("4213", "a"): "4321",
    ("4213", "b"): "4213",
    ("2431", "a"): "2413",
    ("2431", "b"): "3241",
    ("2413", "a"): "2431",
    ("2413", "b"): "2413",
    ("3241", "a"): "3241",
    ("3241", "b"): "4321",
}


def test_irreducibility():
    assert rauzy.is_irreducible((2, 1))
    assert not rauzy.is_irreducible((1, 2))
    assert rauzy.is_irreducible((4, 3, 2, 1))
    assert not rauzy.is_irreducible((2, 1, 3))
    assert not rauzy.is_irreducible((1,)) is False  # m = 1 is trivially irreducible


def test_parse_and_str():
    assert rauzy.parse_perm("4321") == (4, 3, 2, 1)
    assert rauzy.parse_perm("4,3,2,1") == (4, 3, 2, 1)
    assert rauzy.perm_str((4, 3, 2, 1)) == "4321"
    with pytest.raises(ValueError):
        rauzy.parse_perm("433")


@pytest.mark.parametrize("src_op, dst", [(k, v) for k, v in FIGURE_EDGES.items()])
def test_figure_edges(src_op, dst):
    src, op = src_op
    fn = rauzy.apply_a if op == "a" else rauzy.apply_b
    assert rauzy.perm_str(fn(rauzy.parse_perm(src))) == dst


def test_figure_inverse_edges():
    assert rauzy.apply_a_inv((4, 1, 3, 2)) == (4, 3, 2, 1)
    assert rauzy.apply_b_inv((2, 4, 3, 1)) == (4, 3, 2, 1)


def test_inverses_on_class():
    for perm in rauzy.rauzy_class((4, 3, 2, 1)):
        assert rauzy.apply_a_inv(rauzy.apply_a(perm)) == perm
        assert rauzy.apply_b_inv(rauzy.apply_b(perm)) == perm
        assert rauzy.apply_a(rauzy.apply_a_inv(perm)) == perm
        assert rauzy.apply_b(rauzy.apply_b_inv(perm)) == perm


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 7), st.randoms(use_true_random=False))
def test_inverse_property_random(m, pyrandom):
    values = list(range(1, m + 1))
    pyrandom.shuffle(values)
    perm = tuple(values)
    if not rauzy.is_irreducible(perm):
        return
    assert rauzy.apply_a_inv(rauzy.apply_a(perm)) == perm
    assert rauzy.apply_b_inv(rauzy.apply_b(perm)) == perm


def test_rauzy_class_figure():
    cls = rauzy.rauzy_class((4, 3, 2, 1))
    assert {rauzy.perm_str(p) for p in cls} == {
        "4321", "4132", "3142", "4213", "2431", "3241", "2413",
    }


def test_rauzy_class_small():
    assert rauzy.rauzy_class((2, 1)) == frozenset({(2, 1)})
    assert {rauzy.perm_str(p) for p in rauzy.rauzy_class((3, 2, 1))} == {"321", "312", "231"}


def test_class_independent_of_start():
    cls = rauzy.rauzy_class((4, 3, 2, 1))
    for p in cls:
        assert rauzy.rauzy_class(p) == cls


def test_matrices_m2():
    assert rauzy.matrix((2, 1), "b") == ((1, 0), (1, 1))
    assert rauzy.matrix((2, 1), "a") == ((1, 1), (0, 1))


def test_matrices_unimodular_no_zero_lines(rng):
    for _ in range(200):
        m = int(rng.integers(2, 8))
        perm = random_irreducible(rng, m)
        for op in "ab":
            A = rauzy.matrix(perm, op)
            assert abs(rauzy.mat_det(A)) == 1
            assert all(any(row) for row in A)
            assert all(any(col) for col in zip(*A))


def test_matrix_lambda_relation(rng):
    # A(pi, op) @ lambda' = lambda where lambda' is the induced vector
    from ietflow import iet, induction

    for _ in range(100):
        m = int(rng.integers(2, 7))
        perm = random_irreducible(rng, m)
        lam = rng.dirichlet(np.ones(m))
        state = iet.IETState(lam, perm)
        try:
            new, op, A = induction.rauzy_step(state, normalized=False)
        except Exception:
            continue
        back = rauzy.mat_vec(A, list(new.lengths))
        assert np.allclose(back, lam, atol=1e-14)


def test_graph_figure_and_dot_roundtrip(tmp_path):
    g = rauzy.rauzy_graph((4, 3, 2, 1))
    assert len(g.vertices) == 7
    assert len(g.edges) == 14
    # self-loops from the figure
    assert g.successor((3, 1, 4, 2), "a") == (3, 1, 4, 2)
    assert g.successor((2, 4, 1, 3), "b") == (2, 4, 1, 3)
    dot = g.to_dot()
    assert rauzy.parse_dot(dot) == g
    # out-degree 2 and in-degree 2 everywhere
    outs = {}
    ins = {}
    for src, dst, _ in g.edges:
        outs[src] = outs.get(src, 0) + 1
        ins[dst] = ins.get(dst, 0) + 1
    assert all(outs[v] == 2 for v in g.vertices)
    assert all(ins[v] == 2 for v in g.vertices)


def test_cycle_lengths():
    assert rauzy.cycle_length((3, 1, 4, 2), "a") == 1
    assert rauzy.cycle_length((2, 1), "a") == 1
    assert rauzy.cycle_length((2, 1), "b") == 1
    # read the a-cycle of (4321) off the figure: 4321 -> 4132 -> 4213 -> 4321
    assert rauzy.cycle_length((4, 3, 2, 1), "a") == 3


def _paths_of_length(cls, n):
    # brute-force path-counting oracle, independent of the boolean-power code
    verts = sorted(cls)
    reach = {v: {v} for v in verts}
    for _ in range(n):
        reach = {
            v: {w for u in targets for w in (rauzy.apply_a(u), rauzy.apply_b(u))}
            for v, targets in reach.items()
        }
    return reach


def test_connecting_diameter_singleton():
    assert rauzy.connecting_diameter(rauzy.rauzy_class((2, 1))) == 1


def test_connecting_diameter_oracle():
    cls = rauzy.rauzy_class((3, 2, 1))
    M = rauzy.connecting_diameter(cls)
    reach = _paths_of_length(cls, M)
    assert all(len(t) == len(cls) for t in reach.values())
    if M > 1:
        reach_prev = _paths_of_length(cls, M - 1)
        assert any(len(t) < len(cls) for t in reach_prev.values())


def test_connecting_diameter_4321_bound():
    assert rauzy.connecting_diameter(rauzy.rauzy_class((4, 3, 2, 1))) <= 30
