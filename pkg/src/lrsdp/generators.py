"""Benchmark problem generators: Max-Cut, matrix completion, and
second-order moment relaxations of binary quadratic and quartic-sphere
polynomial programs.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, combinations_with_replacement
from typing import Dict, List, Tuple

import numpy as np

from .problem import ManifoldKind, ProblemError, SdpProblem, SparseSymMatrix


@dataclass(frozen=True)
class WeightedGraph:
    """Undirected graph with 1-based nodes and weighted edges (i < j)."""

    N: int
    edges: Tuple[Tuple[int, int, float], ...]

    def __post_init__(self):
        seen = set()
        for i, j, _ in self.edges:
            if not 1 <= i < j <= self.N:
                raise ProblemError(f"bad edge ({i}, {j}) for N = {self.N}")
            if (i, j) in seen:
                raise ProblemError(f"duplicate edge ({i}, {j})")
            seen.add((i, j))


def gen_maxcut(graph):
    """Max-Cut SDP relaxation: max (1/4) <L, X> over unit-diagonal PSD X.

    Internally minimizes <-L/4, X>; the reported objective flips the sign.
    """
    if not graph.edges:
        raise ProblemError("empty graph")
    n = graph.N
    deg = np.zeros(n)
    triplets = []
    for i, j, w in graph.edges:
        deg[i - 1] += w
        deg[j - 1] += w
        triplets.append((i - 1, j - 1, w / 4.0))  # -L_ij / 4 = w / 4
    for i in range(n):
        if deg[i]:
            triplets.append((i, i, -deg[i] / 4.0))
    C = SparseSymMatrix.from_triplets(n, triplets)
    return SdpProblem(n, C, [], np.zeros(0), ManifoldKind.UNIT_DIAGONAL,
                      objective_sign=-1.0)


def gen_matrix_completion(s, t, entries):
    """Nuclear-norm matrix completion as a trace-minimization SDP.

    ``entries`` lists (i, j, value) samples of the s x t matrix, 0-based.
    One constraint per sample pins the off-diagonal block of the PSD
    variable: <A_ij, X> = 2 value.
    """
    n = s + t
    seen = set()
    A, b = [], []
    for i, j, val in entries:
        if not (0 <= i < s and 0 <= j < t):
            raise ProblemError(f"sample index ({i}, {j}) out of range")
        if (i, j) in seen:
            raise ProblemError(f"duplicate sample ({i}, {j})")
        seen.add((i, j))
        A.append(SparseSymMatrix.from_triplets(n, [(i, s + j, 1.0)]))
        b.append(2.0 * val)
    return SdpProblem(n, SparseSymMatrix.identity(n), A, np.array(b),
                      ManifoldKind.FREE)


# --- moment relaxations -------------------------------------------------

def _entry_triplet(a, b, coeff):
    """Triplet encoding coeff * X[a, b] (one count per unordered pair)."""
    if a == b:
        return (a, a, coeff)
    return (min(a, b), max(a, b), coeff / 2.0)


def gen_bqp_moment(Q, c):
    """Second-order moment relaxation of min x'Qx + c'x over x in {-1, 1}^q.

    The monomial basis is [1, x_i, x_i x_j (i<j)]; products are reduced
    modulo x_i^2 = 1, so each matrix entry carries a squarefree monomial.
    The constraint list pins every diagonal entry to one, ties all entries
    sharing a reduced monomial (one spanning star per class), and closes
    one extra cycle edge per degree-two class; this reproduces the
    constraint counts of the reference relaxation exactly.
    """
    Q = np.asarray(Q, dtype=float)
    c = np.asarray(c, dtype=float)
    q = c.size
    if q < 2 or Q.shape != (q, q):
        raise ProblemError("need q >= 2 with Q of shape (q, q)")
    if not np.allclose(Q, Q.T):
        raise ProblemError("Q must be symmetric")

    basis = [frozenset()]
    basis += [frozenset([i]) for i in range(q)]
    pair_index = {}
    for i, j in combinations(range(q), 2):
        pair_index[(i, j)] = len(basis)
        basis.append(frozenset([i, j]))
    n = len(basis)

    # group off-diagonal entries by the reduced monomial (symmetric diff)
    classes: Dict[frozenset, List[Tuple[int, int]]] = {}
    for a in range(n):
        for b_ in range(a + 1, n):
            classes.setdefault(basis[a] ^ basis[b_], []).append((a, b_))

    A, rhs = [], []
    for a in range(n):  # diagonal entries of the moment matrix are ones
        A.append(SparseSymMatrix.from_triplets(n, [(a, a, 1.0)]))
        rhs.append(1.0)
    for mono in sorted(classes, key=lambda s: tuple(sorted(s))):
        members = classes[mono]
        rep = members[0]
        for other in members[1:]:
            A.append(SparseSymMatrix.from_triplets(
                n, [_entry_triplet(*rep, 1.0), _entry_triplet(*other, -1.0)]))
            rhs.append(0.0)
        if len(mono) == 2 and len(members) >= 3:
            A.append(SparseSymMatrix.from_triplets(
                n, [_entry_triplet(*members[1], 1.0),
                    _entry_triplet(*members[2], -1.0)]))
            rhs.append(0.0)

    cost = []
    for i, j in combinations(range(q), 2):
        if Q[i, j]:
            cost.append(_entry_triplet(0, pair_index[(i, j)], 2.0 * Q[i, j]))
    for i in range(q):
        if c[i]:
            cost.append(_entry_triplet(0, 1 + i, c[i]))
    C = SparseSymMatrix.from_triplets(n, cost) if cost \
        else SparseSymMatrix.from_triplets(n, [(0, 0, 0.0)])
    return SdpProblem(n, C, A, np.array(rhs), ManifoldKind.UNIT_DIAGONAL,
                      objective_offset=float(np.trace(Q)))


def bqp_basis_size(q):
    return 1 + q + q * (q - 1) // 2


def gen_quartic_sphere(q, coeffs):
    """Second-order moment relaxation of min c . [x]_4 on the unit sphere.

    ``coeffs`` maps monomials (sorted tuples of variable indices, length =
    degree, e.g. (0, 0, 1) for x_0^2 x_1) to real coefficients. The basis
    includes squares; constraints are entry coincidences, the sphere
    multiplier identities w (sum_i x_i^2 - 1) = 0 for every basis monomial
    w, and the normalization of the leading entry.
    """
    basis = [()]
    basis += [(i,) for i in range(q)]
    basis += list(combinations_with_replacement(range(q), 2))
    n = len(basis)

    # canonical representative entry for every degree-<=4 monomial
    rep: Dict[tuple, Tuple[int, int]] = {}
    coincidences = []
    for a in range(n):
        for b_ in range(a, n):
            mono = tuple(sorted(basis[a] + basis[b_]))
            if mono in rep:
                coincidences.append((rep[mono], (a, b_)))
            else:
                rep[mono] = (a, b_)

    A, rhs = [], []
    for anchor, other in coincidences:
        A.append(SparseSymMatrix.from_triplets(
            n, [_entry_triplet(*anchor, 1.0), _entry_triplet(*other, -1.0)]))
        rhs.append(0.0)
    for w in basis:  # w * (sum_i x_i^2 - 1) = 0
        acc: Dict[Tuple[int, int], float] = {}
        for i in range(q):
            e = rep[tuple(sorted(w + (i, i)))]
            acc[e] = acc.get(e, 0.0) + 1.0
        e = rep[w]
        acc[e] = acc.get(e, 0.0) - 1.0
        A.append(SparseSymMatrix.from_triplets(
            n, [_entry_triplet(a, b_, g) for (a, b_), g in acc.items() if g]))
        rhs.append(0.0)
    A.append(SparseSymMatrix.from_triplets(n, [(0, 0, 1.0)]))
    rhs.append(1.0)

    acc: Dict[Tuple[int, int], float] = {}
    for mono, coeff in coeffs.items():
        mono = tuple(sorted(mono))
        if len(mono) > 4:
            raise ProblemError(f"monomial degree {len(mono)} exceeds four")
        if any(not 0 <= v < q for v in mono):
            raise ProblemError(f"variable index out of range in {mono}")
        e = rep[mono]
        acc[e] = acc.get(e, 0.0) + float(coeff)
    cost = [_entry_triplet(a, b_, g) for (a, b_), g in acc.items() if g]
    C = SparseSymMatrix.from_triplets(n, cost) if cost \
        else SparseSymMatrix.from_triplets(n, [(0, 0, 0.0)])
    return SdpProblem(n, C, A, np.array(rhs), ManifoldKind.FREE)


def quartic_basis_size(q):
    return 1 + q + q * (q + 1) // 2


# --- random benchmark instances ----------------------------------------

def random_bqp(q, seed):
    """Random (Q, c) with standard-normal entries, Q symmetrized."""
    rng = np.random.default_rng(seed)
    Q = rng.standard_normal((q, q))
    Q = 0.5 * (Q + Q.T)
    c = rng.standard_normal(q)
    return Q, c


def random_quartic(q, seed):
    """Random standard-normal coefficients on all monomials of degree <= 4."""
    rng = np.random.default_rng(seed)
    coeffs = {}
    for deg in range(5):
        for mono in combinations_with_replacement(range(q), deg):
            coeffs[mono] = float(rng.standard_normal())
    return coeffs


def random_completion(s, t, rank, num_samples, seed):
    """Random rank-``rank`` matrix plus a uniform sample of its entries."""
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((s, rank)) @ rng.standard_normal((rank, t))
    all_idx = [(i, j) for i in range(s) for j in range(t)]
    chosen = rng.choice(len(all_idx), size=num_samples, replace=False)
    entries = [(all_idx[k][0], all_idx[k][1], M[all_idx[k]])
               for k in sorted(chosen)]
    return M, entries


def unit_edge_graph():
    return WeightedGraph(2, ((1, 2, 1.0),))


def unit_triangle_graph():
    return WeightedGraph(3, ((1, 2, 1.0), (1, 3, 1.0), (2, 3, 1.0)))
