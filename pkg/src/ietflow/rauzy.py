"""Permutations, the two Rauzy operations, their matrices, and the Rauzy graph.

Permutations on m symbols are stored in one-line notation as tuples of
1-based values, so ``perm[i]`` is the image of ``i + 1``.  All operations
are pure functions on these tuples.

Elementary renormalization matrices are kept as nested tuples of Python
ints; cocycle products over long words overflow 64-bit integers quickly,
so arbitrary precision is the default and nothing is ever cast to float
here.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

Perm = tuple[int, ...]
IntMatrix = tuple[tuple[int, ...], ...]


# ---------------------------------------------------------------------------
# permutations
# ---------------------------------------------------------------------------

def as_perm(values: Iterable[int]) -> Perm:
    """Validate and normalize a one-line permutation."""
    p = tuple(int(v) for v in values)
    if len(p) < 1 or sorted(p) != list(range(1, len(p) + 1)):
        raise ValueError(f"not a permutation of 1..m: {p}")
    return p


def parse_perm(text: str) -> Perm:
    """Parse one-line notation: ``"4321"`` (digits, m <= 9) or ``"4,3,2,1"``."""
    text = text.strip()
    if "," in text:
        return as_perm(int(t) for t in text.split(","))
    return as_perm(int(ch) for ch in text)


def perm_str(perm: Perm) -> str:
    """One-line notation: digits concatenated for m <= 9, else comma-separated."""
    if len(perm) <= 9:
        return "".join(str(v) for v in perm)
    return ",".join(str(v) for v in perm)


def invert(perm: Perm) -> Perm:
    inv = [0] * len(perm)
    for i, v in enumerate(perm):
        inv[v - 1] = i + 1
    return tuple(inv)


def is_irreducible(perm: Perm) -> bool:
    """True iff pi{1..k} = {1..k} forces k = m."""
    top = 0
    for k, v in enumerate(perm[:-1], start=1):
        top = max(top, v)
        if top == k:
            return False
    return True


def check_irreducible(perm: Perm) -> Perm:
    perm = as_perm(perm)
    if not is_irreducible(perm):
        raise ValueError(f"permutation {perm_str(perm)} is reducible")
    return perm


# ---------------------------------------------------------------------------
# Rauzy operations a, b and their inverses
# ---------------------------------------------------------------------------

def apply_a(perm: Perm) -> Perm:
    """Operation a: cut the last subinterval, reinsert it after position pi^-1(m)."""
    m = len(perm)
    p = invert(perm)[m - 1]  # pi^-1(m)
    out = []
    for j in range(1, m + 1):
        if j <= p:
            out.append(perm[j - 1])
        elif j == p + 1:
            out.append(perm[m - 1])
        else:
            out.append(perm[j - 2])
    return tuple(out)


def apply_b(perm: Perm) -> Perm:
    m = len(perm)
    pm = perm[m - 1]
    out = []
    for j in range(1, m + 1):
        pj = perm[j - 1]
        if pj <= pm:
            out.append(pj)
        elif pj < m:
            out.append(pj + 1)
        else:
            out.append(pm + 1)
    return tuple(out)


def apply_a_inv(perm: Perm) -> Perm:
    m = len(perm)
    k = invert(perm)[m - 1]  # position of the value m
    out = []
    for j in range(1, m + 1):
        if j <= k:
            out.append(perm[j - 1])
        elif j < m:
            out.append(perm[j])
        else:
            out.append(perm[k])
    return tuple(out)


def apply_b_inv(perm: Perm) -> Perm:
    m = len(perm)
    p = perm[m - 1]
    out = []
    for j in range(1, m + 1):
        pj = perm[j - 1]
        if pj <= p:
            out.append(pj)
        elif pj == p + 1:
            out.append(m)
        else:
            out.append(pj - 1)
    return tuple(out)


_OPS = {"a": apply_a, "b": apply_b}
_OPS_INV = {"a": apply_a_inv, "b": apply_b_inv}


def apply_op(perm: Perm, op: str, power: int = 1) -> Perm:
    """Apply op (or its inverse for negative power) repeatedly."""
    fn = _OPS[op] if power >= 0 else _OPS_INV[op]
    for _ in range(abs(power)):
        perm = fn(perm)
    return perm


# ---------------------------------------------------------------------------
# renormalization matrices
# ---------------------------------------------------------------------------

def matrix(perm: Perm, op: str) -> IntMatrix:
    """Nonnegative unimodular A with A @ lambda' = lambda for one Rauzy step.

    lambda' is the unnormalized induced length vector of the op-step taken
    from permutation ``perm``.
    """
    m = len(perm)
    rows = [[0] * m for _ in range(m)]
    if op == "a":
        p = invert(perm)[m - 1]
        for i in range(1, p + 1):
            rows[i - 1][i - 1] = 1
        rows[p - 1][p] = 1
        for i in range(p + 1, m):
            rows[i - 1][i] = 1
        rows[m - 1][p] = 1
    elif op == "b":
        p = invert(perm)[m - 1]
        for i in range(m):
            rows[i][i] = 1
        rows[m - 1][p - 1] += 1
    else:
        raise ValueError(f"op must be 'a' or 'b', got {op!r}")
    return tuple(tuple(r) for r in rows)


def mat_mul(a: IntMatrix, b: IntMatrix) -> IntMatrix:
    n = len(a)
    return tuple(
        tuple(sum(a[i][k] * b[k][j] for k in range(n)) for j in range(n))
        for i in range(n)
    )


def mat_identity(m: int) -> IntMatrix:
    return tuple(tuple(1 if i == j else 0 for j in range(m)) for i in range(m))


def mat_vec(a: IntMatrix, v: Sequence) -> list:
    return [sum(a[i][j] * v[j] for j in range(len(v))) for i in range(len(a))]


def mat_transpose(a: IntMatrix) -> IntMatrix:
    return tuple(zip(*a))


def mat_det(a: IntMatrix) -> int:
    """Exact integer determinant (fraction-free Gaussian elimination)."""
    n = len(a)
    rows = [[Fraction(x) for x in row] for row in a]
    det = Fraction(1)
    for col in range(n):
        piv = next((r for r in range(col, n) if rows[r][col] != 0), None)
        if piv is None:
            return 0
        if piv != col:
            rows[col], rows[piv] = rows[piv], rows[col]
            det = -det
        det *= rows[col][col]
        inv = 1 / rows[col][col]
        for r in range(col + 1, n):
            f = rows[r][col] * inv
            if f:
                for c in range(col, n):
                    rows[r][c] -= f * rows[col][c]
    assert det.denominator == 1
    return int(det)


def is_unimodular(a: IntMatrix) -> bool:
    return abs(mat_det(a)) == 1


# ---------------------------------------------------------------------------
# Rauzy class and graph
# ---------------------------------------------------------------------------

def rauzy_class(perm: Perm) -> frozenset[Perm]:
    """Breadth-first closure of ``perm`` under the operations a and b."""
    perm = check_irreducible(perm)
    seen = {perm}
    frontier = [perm]
    while frontier:
        nxt = []
        for q in frontier:
            for op in ("a", "b"):
                r = _OPS[op](q)
                if r not in seen:
                    seen.add(r)
                    nxt.append(r)
        frontier = nxt
    return frozenset(seen)


class RauzyGraph:
    """Labelled directed graph of a Rauzy class; every vertex has one a- and one b-edge."""

    def __init__(self, vertices: Iterable[Perm], edges: Iterable[tuple[Perm, Perm, str]]):
        self.vertices = tuple(sorted(set(vertices)))
        self.edges = tuple(sorted(set(edges), key=lambda e: (e[0], e[2], e[1])))
        self._index = {v: i for i, v in enumerate(self.vertices)}

    def __eq__(self, other):
        return (
            isinstance(other, RauzyGraph)
            and self.vertices == other.vertices
            and self.edges == other.edges
        )

    def __hash__(self):
        return hash((self.vertices, self.edges))

    def successor(self, perm: Perm, op: str) -> Perm:
        for src, dst, label in self.edges:
            if src == perm and label == op:
                return dst
        raise KeyError((perm, op))

    def to_dot(self) -> str:
        """DOT text; vertices in lexicographic order for reproducible output."""
        lines = ["digraph rauzy {"]
        for v in self.vertices:
            lines.append(f'  "{perm_str(v)}";')
        for src, dst, label in self.edges:
            lines.append(f'  "{perm_str(src)}" -> "{perm_str(dst)}" [label="{label}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def rauzy_graph(perm: Perm) -> RauzyGraph:
    verts = rauzy_class(perm)
    edges = [(v, _OPS[op](v), op) for v in verts for op in ("a", "b")]
    return RauzyGraph(verts, edges)


def parse_dot(text: str) -> RauzyGraph:
    """Parse the DOT subset emitted by :meth:`RauzyGraph.to_dot`."""
    vertices, edges = [], []
    for line in text.splitlines():
        line = line.strip()
        if line.startswith(("digraph", "}")) or not line:
            continue
        line = line.rstrip(";")
        if "->" in line:
            lhs, rhs = line.split("->")
            src = parse_perm(lhs.strip().strip('"'))
            rest, attr = rhs.split("[")
            dst = parse_perm(rest.strip().strip('"'))
            label = attr.split('label="')[1].split('"')[0]
            edges.append((src, dst, label))
        else:
            vertices.append(parse_perm(line.strip().strip('"')))
    return RauzyGraph(vertices, edges)


def cycle_length(perm: Perm, op: str) -> int:
    """Least l >= 1 with op^l(perm) == perm."""
    perm = check_irreducible(perm)
    q = _OPS[op](perm)
    length = 1
    while q != perm:
        q = _OPS[op](q)
        length += 1
        if length > 10**6:
            raise RuntimeError("op-cycle did not close")
    return length


def connecting_diameter(cls: Iterable[Perm]) -> int:
    """Least M such that every ordered vertex pair is joined by a directed
    path of length exactly n, for every n >= M.

    Since every vertex has out-degree >= 1, the set of such n is upward
    closed, so M is the first n whose boolean adjacency power is all ones.
    """
    verts = sorted(set(cls))
    k = len(verts)
    idx = {v: i for i, v in enumerate(verts)}
    adj = [[False] * k for _ in range(k)]
    for v in verts:
        for op in ("a", "b"):
            adj[idx[v]][idx[_OPS[op](v)]] = True

    power = [row[:] for row in adj]
    bound = 4 * k * k + 4
    for n in range(1, bound + 1):
        if all(all(row) for row in power):
            return n
        power = [
            [any(power[i][t] and adj[t][j] for t in range(k)) for j in range(k)]
            for i in range(k)
        ]
    raise RuntimeError(f"no connecting diameter found up to {bound} steps")
