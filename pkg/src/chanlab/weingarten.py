"""Exact unitary Weingarten functions and moment formulas for random channels.

Every value here is an exact :class:`fractions.Fraction`.  The tables are
built on the class algebra of S_p: Wg_n is a class function, so the Gram
system ``sum_tau n^#(sigma tau^-1) Wg_n(tau) = [sigma == id]`` only needs one
row and column per cycle type.

The moment formulas give expectations over a Haar-random isometry V of size
ds x d, cut into s blocks V^(k) of size d x d.  The functions ``moment_*``
are the ground truth that Monte Carlo estimates are tested against.
"""

import threading
from collections import Counter
from fractions import Fraction
from itertools import product
from math import factorial

import numpy as np

from . import perm as P

__all__ = [
    "WeingartenTable",
    "MomentQuery",
    "SingularGramError",
    "weingarten_table",
    "weingarten",
    "weingarten_asymptotic",
    "rising",
    "moment_lambda",
    "moment_trace_matrix",
    "moment_entry",
    "gamma_moment",
    "normal_ss_moment",
    "semicircle_moment",
    "isometry_integral",
    "evaluate_query",
    "fraction_str",
]

MAX_WG_DEGREE = 6


class SingularGramError(ValueError):
    """Raised when n < p, where the Gram matrix n^#(sigma tau^-1) is singular."""


class WeingartenTable:
    """Exact Wg_n on S_p, keyed by cycle type."""

    __slots__ = ("p", "n", "values")

    def __init__(self, p, n, values):
        self.p = p
        self.n = n
        self.values = dict(values)

    def __call__(self, sigma):
        return self.values[P.cycle_type(sigma)]

    def total(self):
        """sum over all of S_p."""
        return sum(P.class_size(mu) * w for mu, w in self.values.items())

    def __repr__(self):
        return f"WeingartenTable(p={self.p}, n={self.n})"


_cache = {}
_cache_lock = threading.Lock()
_class_gram_counts = {}


def _class_structure(p):
    """For each pair of classes (nu, mu) count tau in K_mu by #(sigma_nu tau^-1).

    Returned as a dict ``(nu, mu) -> Counter(cycle_count -> multiplicity)``;
    independent of n, so it is computed once per degree.
    """
    if p in _class_gram_counts:
        return _class_gram_counts[p]
    perms = P.all_permutations_array(p)
    codes = P.cycle_type_codes(perms)
    shapes = P.integer_partitions(p)
    code_of = {}
    reps = {}
    for row, code in zip(perms, codes):
        shape = P.decode_cycle_type(int(code), p)
        code_of[int(code)] = shape
        reps.setdefault(shape, row)
    inv = P.invert_arrays(perms)
    out = {}
    for nu in shapes:
        sigma = np.broadcast_to(reps[nu], perms.shape)
        counts = P.cycle_counts_array(P.compose_arrays(sigma, inv))
        for mu in shapes:
            out[(nu, mu)] = Counter()
        for code, c in zip(codes, counts):
            out[(nu, code_of[int(code)])][int(c)] += 1
    _class_gram_counts[p] = out
    return out


def _solve_exact(matrix, rhs):
    """Gauss-Jordan elimination over the rationals."""
    m = len(matrix)
    aug = [list(row) + [b] for row, b in zip(matrix, rhs)]
    for col in range(m):
        pivot = next((r for r in range(col, m) if aug[r][col] != 0), None)
        if pivot is None:
            raise SingularGramError("Gram matrix is singular")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        piv = aug[col][col]
        aug[col] = [x / piv for x in aug[col]]
        for r in range(m):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return [row[-1] for row in aug]


def weingarten_table(p, n):
    """Exact Weingarten function Wg_n on S_p for 1 <= p <= 6 and n >= p."""
    if not 1 <= p <= MAX_WG_DEGREE:
        raise ValueError(f"degree {p} outside supported range 1..{MAX_WG_DEGREE}")
    if n < p:
        raise SingularGramError(f"n = {n} < p = {p}: Gram matrix is not invertible")
    key = (p, n)
    table = _cache.get(key)
    if table is not None:
        return table
    with _cache_lock:
        table = _cache.get(key)
        if table is not None:
            return table
        counts = _class_structure(p)
        shapes = P.integer_partitions(p)
        identity_shape = (1,) * p
        gram = [
            [sum(Fraction(n) ** c * k for c, k in counts[(nu, mu)].items()) for mu in shapes]
            for nu in shapes
        ]
        rhs = [Fraction(1 if nu == identity_shape else 0) for nu in shapes]
        solution = _solve_exact(gram, rhs)
        table = WeingartenTable(p, n, zip(shapes, solution))
        _cache[key] = table
    return table


def weingarten(sigma, n):
    """Wg_n(sigma) for a single permutation."""
    return weingarten_table(sigma.p, n)(sigma)


def weingarten_asymptotic(sigma, n):
    """Leading term Moeb(sigma) n^(-p-|sigma|) of Wg_n(sigma)."""
    if n < 1:
        raise ValueError("n must be positive")
    return float(P.mobius(sigma)) * float(n) ** (-(sigma.p + P.length(sigma)))


def rising(x, p):
    """Rising factorial x(x+1)...(x+p-1) as an exact integer or Fraction."""
    out = 1
    for k in range(p):
        out *= x + k
    return out


# ---------------------------------------------------------------------------
# Moment formulas

TARGETS = ("lambda1", "lambda2", "lambda3", "TrA", "TrB", "TrC", "entryA", "entryB2", "entryC2")


class MomentQuery:
    """A request for an exact moment: (d, s, p, target)."""

    __slots__ = ("d", "s", "p", "target")

    def __init__(self, d, s, p, target):
        if target not in TARGETS:
            raise ValueError(f"unknown target {target!r}; expected one of {TARGETS}")
        if min(d, s, p) < 1:
            raise ValueError("d, s and p must be positive")
        self.d, self.s, self.p, self.target = int(d), int(s), int(p), target

    def as_dict(self):
        return {"d": self.d, "s": self.s, "p": self.p, "target": self.target}


def _pair_sum(d, s, p, join_exponent):
    """sum over alpha, beta of s^#alpha d^E(alpha, beta) Wg_ds(alpha beta^-1).

    ``join_exponent(alpha, beta)`` receives ``(p!, p)`` arrays (alpha fixed per
    call, beta running over S_p) and returns the exponent of d for each pair.
    """
    table = weingarten_table(p, d * s)
    perms = P.all_permutations_array(p)
    inv = P.invert_arrays(perms)
    n_alpha = P.cycle_counts_array(perms)
    tally = Counter()
    for a_row, c_alpha in zip(perms, n_alpha):
        alpha = np.broadcast_to(a_row, perms.shape)
        exps = join_exponent(alpha, perms)
        classes = P.cycle_type_codes(P.compose_arrays(alpha, inv))
        keys, mult = np.unique(np.stack([exps, classes], axis=1), axis=0, return_counts=True)
        for (e, code), m in zip(keys, mult):
            tally[(int(c_alpha), int(e), int(code))] += int(m)
    total = Fraction(0)
    for (ca, e, code), m in tally.items():
        total += m * Fraction(s) ** ca * Fraction(d) ** e * table.values[P.decode_cycle_type(code, p)]
    return total


def _check_degree(p, limit):
    if not 1 <= p <= limit:
        raise ValueError(f"moment order {p} outside supported range 1..{limit}")


def moment_lambda(i, d, s, p):
    """E[lambda_i^p] for the random Stinespring channel with parameters (d, s)."""
    _check_degree(p, MAX_WG_DEGREE)
    if i == 1:
        table = weingarten_table(p, d * s)
        inner = sum(
            P.class_size(mu) * Fraction(d) ** len(mu) * w for mu, w in table.values.items()
        )
        return rising(s, p) * inner
    if i == 2:
        return _pair_sum(d, s, p, lambda a, b: P.cycle_counts_array(P.compose_arrays(a, b)))
    if i == 3:
        return _pair_sum(d, s, p, P.join_counts_array)
    raise ValueError(f"lambda index must be 1, 2 or 3, got {i}")


def moment_trace_matrix(which, d, s, p):
    """E[Tr X^p] for X in {A, B, C} built from the isometry blocks."""
    _check_degree(p, 5)
    gamma = np.array(P.full_cycle(p).images, dtype=np.int8)
    ginv = np.array(P.full_cycle(p).inverse().images, dtype=np.int8)

    def g_inv_times(x):
        return P.compose_arrays(np.broadcast_to(ginv, x.shape), x)

    if which == "A":

        def exponent(a, b):
            conj = P.compose_arrays(g_inv_times(a), np.broadcast_to(gamma, a.shape))
            return P.join_counts_array(conj, b)

    elif which == "B":

        def exponent(a, b):
            return P.join_counts_array(g_inv_times(a), g_inv_times(b))

    elif which == "C":

        def exponent(a, b):
            return P.join_counts_array(g_inv_times(a), g_inv_times(P.invert_arrays(b)))

    else:
        raise ValueError(f"matrix must be 'A', 'B' or 'C', got {which!r}")
    return _pair_sum(d, s, p, exponent)


def moment_entry(which, d, s, p):
    """Moments of a single off-diagonal entry: E[A_ij^p] or E[|B_ij|^2p] = E[|C_ij|^2p]."""
    if which == "A":
        _check_degree(p, MAX_WG_DEGREE)
        return Fraction(rising(s, p), rising(d * s, p))
    if which in ("B2", "C2"):
        _check_degree(p, 3)
        if d * s < 2 * p:
            raise SingularGramError(f"ds = {d * s} < 2p = {2 * p}")
        if d < 2:
            raise ValueError("off-diagonal entries need d >= 2")
        table = weingarten_table(2 * p, d * s)
        perms = P.all_permutations_array(2 * p)
        keep = np.all(perms % 2 == np.arange(2 * p) % 2, axis=1)
        codes = P.cycle_type_codes(perms[keep])
        total = Fraction(0)
        for code, m in Counter(int(c) for c in codes).items():
            total += m * table.values[P.decode_cycle_type(code, 2 * p)]
        return factorial(p) * rising(s, p) * total
    raise ValueError(f"entry must be 'A', 'B2' or 'C2', got {which!r}")


# ---------------------------------------------------------------------------
# Reference laws


def gamma_moment(s, p):
    """p-th moment of the Gamma(s, 1) law."""
    return Fraction(rising(Fraction(s), p))


def _pair_partitions(p, noncrossing):
    """Yield the number of pairs of each partition of {0..p-1} into blocks of size 1 or 2."""

    def rec(points):
        if not points:
            yield 0
            return
        first, rest = points[0], points[1:]
        for k in rec(rest):
            yield k
        for idx, partner in enumerate(rest):
            inside, outside = rest[:idx], rest[idx + 1 :]
            if noncrossing:
                # points strictly inside the pair must be matched among themselves
                for k_in in rec(inside):
                    for k_out in rec(outside):
                        yield 1 + k_in + k_out
            else:
                for k in rec(inside + outside):
                    yield 1 + k

    yield from rec(list(range(p)))


def normal_ss_moment(s, p):
    """p-th moment of N(s, s): sum over partitions into singletons and pairs of s^#blocks."""
    if p > 8:
        raise ValueError("p must be at most 8")
    s = Fraction(s)
    return sum((s ** (p - k) for k in _pair_partitions(p, noncrossing=False)), Fraction(0))


def semicircle_moment(m, v, p):
    """p-th moment of the semicircle law with mean m and variance v.

    Sum over non-crossing partitions into singletons (weight m) and pairs (weight v).
    """
    if p > 8:
        raise ValueError("p must be at most 8")
    m, v = Fraction(m), Fraction(v)
    return sum((m ** (p - 2 * k) * v**k for k in _pair_partitions(p, noncrossing=True)), Fraction(0))


# ---------------------------------------------------------------------------
# Generic integration of monomials in the entries of a Haar isometry


def isometry_integral(rows, cols, rows_bar, cols_bar, n):
    """Exact E[prod_a V[i_a, j_a] * prod_a conj(V[i'_a, j'_a])] for a Haar isometry with n rows.

    Uses the Weingarten formula: sum over sigma, tau in S_p of
    prod delta(i_a, i'_sigma(a)) delta(j_a, j'_tau(a)) Wg_n(tau sigma^-1).
    """
    p = len(rows)
    if not (len(cols) == len(rows_bar) == len(cols_bar) == p):
        raise ValueError("index tuples must have equal length")
    if p == 0:
        return Fraction(1)
    table = weingarten_table(p, n)
    row_matches = [
        s for s in P.enumerate_symmetric_group(p) if all(rows[a] == rows_bar[s(a)] for a in range(p))
    ]
    if not row_matches:
        return Fraction(0)
    col_matches = [
        t for t in P.enumerate_symmetric_group(p) if all(cols[a] == cols_bar[t(a)] for a in range(p))
    ]
    total = Fraction(0)
    for sigma, tau in product(row_matches, col_matches):
        total += table(tau * sigma.inverse())
    return total


# ---------------------------------------------------------------------------
# Oracle entry point


def evaluate_query(query):
    """Exact value for a :class:`MomentQuery`."""
    d, s, p, t = query.d, query.s, query.p, query.target
    if t.startswith("lambda"):
        return moment_lambda(int(t[-1]), d, s, p)
    if t.startswith("Tr"):
        return moment_trace_matrix(t[2], d, s, p)
    return moment_entry(t[len("entry") :], d, s, p)


def fraction_str(x):
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"
