"""Symmetric group and partition combinatorics.

Permutations compose right-to-left: ``(a * b)(i) == a(b(i))``, so ``b`` is
applied first.  Images are stored 0-based; ``str`` and ``from_cycles`` use
1-based cycle notation.

Besides the scalar :class:`Permutation` API there are a few vectorised
helpers working on integer arrays of shape ``(n, p)`` whose rows are
permutations.  The Weingarten moment formulas sum over all of
``S_p x S_p`` and these helpers keep that affordable for ``p <= 6``.
"""

from fractions import Fraction
from functools import lru_cache
from itertools import permutations as _itertools_permutations
from math import comb, factorial

import numpy as np

__all__ = [
    "Permutation",
    "SetPartition",
    "enumerate_symmetric_group",
    "cycle_count",
    "length",
    "cycle_type",
    "mobius",
    "catalan",
    "motzkin",
    "join_partition",
    "join_rank",
    "is_geodesic",
    "enumerate_nc12",
    "full_cycle",
    "double_cycle",
    "series_coefficients",
    "class_size",
    "integer_partitions",
    "all_permutations_array",
    "compose_arrays",
    "invert_arrays",
    "cycle_counts_array",
    "join_counts_array",
    "cycle_type_codes",
]

MAX_ENUM_DEGREE = 8
MAX_CATALAN = 30


class Permutation:
    """Element of the symmetric group S_p.

    Parameters
    ----------
    images : sequence of int
        ``images[i]`` is the 0-based image of ``i``.
    """

    __slots__ = ("_images",)

    def __init__(self, images):
        images = tuple(int(x) for x in images)
        if sorted(images) != list(range(len(images))):
            raise ValueError(f"not a bijection of {{0..{len(images) - 1}}}: {images}")
        if not images:
            raise ValueError("degree must be at least 1")
        self._images = images

    @classmethod
    def identity(cls, p):
        return cls(range(p))

    @classmethod
    def from_cycles(cls, p, cycles):
        """Build from 1-based cycles, e.g. ``from_cycles(3, [(1, 2)])``."""
        images = list(range(p))
        seen = set()
        for cyc in cycles:
            cyc = [int(c) - 1 for c in cyc]
            for a in cyc:
                if not 0 <= a < p or a in seen:
                    raise ValueError(f"bad cycle {cyc} for degree {p}")
                seen.add(a)
            for a, b in zip(cyc, cyc[1:] + cyc[:1]):
                images[a] = b
        return cls(images)

    @property
    def p(self):
        return len(self._images)

    @property
    def images(self):
        return self._images

    def __call__(self, i):
        return self._images[i]

    def __mul__(self, other):
        _check_degrees(self, other)
        return Permutation(self._images[j] for j in other._images)

    def inverse(self):
        inv = [0] * self.p
        for i, j in enumerate(self._images):
            inv[j] = i
        return Permutation(inv)

    def __pow__(self, k):
        if k < 0:
            return self.inverse() ** (-k)
        out = Permutation.identity(self.p)
        for _ in range(k):
            out = out * self
        return out

    def cycles(self):
        """Cycles as tuples of 0-based points, each starting at its minimum."""
        seen = [False] * self.p
        out = []
        for start in range(self.p):
            if seen[start]:
                continue
            cyc = []
            i = start
            while not seen[i]:
                seen[i] = True
                cyc.append(i)
                i = self._images[i]
            out.append(tuple(cyc))
        return out

    def is_involution(self):
        return all(self._images[j] == i for i, j in enumerate(self._images))

    def __eq__(self, other):
        return isinstance(other, Permutation) and self._images == other._images

    def __hash__(self):
        return hash(self._images)

    def __repr__(self):
        return f"Permutation({list(self._images)})"

    def __str__(self):
        parts = [c for c in self.cycles() if len(c) > 1]
        if not parts:
            return "()"
        return "".join("(" + " ".join(str(i + 1) for i in c) + ")" for c in parts)


class SetPartition:
    """Partition of {0, ..., p-1} into disjoint nonempty blocks."""

    __slots__ = ("p", "blocks")

    def __init__(self, p, blocks):
        blocks = [frozenset(int(x) for x in b) for b in blocks]
        if any(not b for b in blocks):
            raise ValueError("empty block")
        union = set().union(*blocks) if blocks else set()
        if sum(len(b) for b in blocks) != p or union != set(range(p)):
            raise ValueError("blocks do not partition the ground set")
        self.p = p
        self.blocks = tuple(sorted(blocks, key=min))

    @classmethod
    def of_permutation(cls, sigma):
        return cls(sigma.p, sigma.cycles())

    def __len__(self):
        return len(self.blocks)

    def __eq__(self, other):
        return isinstance(other, SetPartition) and self.blocks == other.blocks

    def __hash__(self):
        return hash(self.blocks)

    def __repr__(self):
        inner = ", ".join("{" + ",".join(str(i + 1) for i in sorted(b)) + "}" for b in self.blocks)
        return f"SetPartition({inner})"


def _check_degrees(alpha, beta):
    if alpha.p != beta.p:
        raise ValueError(f"degree mismatch: {alpha.p} vs {beta.p}")


def _check_enum_degree(p):
    if not 1 <= p <= MAX_ENUM_DEGREE:
        raise ValueError(f"degree {p} outside enumeration range 1..{MAX_ENUM_DEGREE}")


def enumerate_symmetric_group(p):
    """All p! permutations of degree ``p`` in lexicographic image order."""
    _check_enum_degree(p)
    return [Permutation(t) for t in _itertools_permutations(range(p))]


def cycle_count(sigma):
    """Number of cycles of ``sigma``, fixed points included."""
    return len(sigma.cycles())


def length(sigma):
    """Minimal number of transpositions needed to write ``sigma``."""
    return sigma.p - cycle_count(sigma)


def cycle_type(sigma):
    """Cycle lengths sorted in decreasing order (an integer partition of p)."""
    return tuple(sorted((len(c) for c in sigma.cycles()), reverse=True))


def catalan(n):
    if n < 0:
        raise ValueError("catalan index must be nonnegative")
    if n > MAX_CATALAN:
        raise OverflowError(f"catalan({n}) exceeds the supported range n <= {MAX_CATALAN}")
    return comb(2 * n, n) // (n + 1)


def mobius(sigma):
    """Moebius function: product over cycles c of (-1)^(|c|-1) Cat_{|c|-1}."""
    out = 1
    for c in sigma.cycles():
        k = len(c) - 1
        out *= (-1) ** k * catalan(k)
    return out


@lru_cache(maxsize=None)
def motzkin(n):
    """Motzkin numbers via M_n = M_{n-1} + sum_k M_k M_{n-2-k}."""
    if n < 2:
        return 1
    return motzkin(n - 1) + sum(motzkin(k) * motzkin(n - 2 - k) for k in range(n - 1))


def _union_find_blocks(p, maps):
    parent = list(range(p))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for images in maps:
        for i, j in enumerate(images):
            ri, rj = find(i), find(j)
            if ri != rj:
                parent[max(ri, rj)] = min(ri, rj)
    groups = {}
    for i in range(p):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def join_partition(alpha, beta):
    """Join of the orbit partitions of ``alpha`` and ``beta``."""
    _check_degrees(alpha, beta)
    return SetPartition(alpha.p, _union_find_blocks(alpha.p, [alpha.images, beta.images]))


def join_rank(alpha, beta):
    """``p - #(alpha v beta)`` where # counts blocks of the join."""
    return alpha.p - len(join_partition(alpha, beta))


def is_geodesic(alpha, sigma):
    """True iff ``|alpha| + |alpha^-1 sigma| == |sigma|``."""
    _check_degrees(alpha, sigma)
    return length(alpha) + length(alpha.inverse() * sigma) == length(sigma)


def _involutions(p):
    """All involutions of {0..p-1}, generated by pairing up the first free point."""

    def rec(free):
        if not free:
            yield {}
            return
        first, rest = free[0], free[1:]
        for sub in rec(rest):
            yield {**sub, first: first}
        for k, partner in enumerate(rest):
            remaining = rest[:k] + rest[k + 1 :]
            for sub in rec(remaining):
                yield {**sub, first: partner, partner: first}

    for m in rec(list(range(p))):
        yield Permutation(m[i] for i in range(p))


def enumerate_nc12(sigma):
    """Involutions lying on a geodesic from the identity to ``sigma``."""
    _check_enum_degree(sigma.p)
    return [a for a in _involutions(sigma.p) if is_geodesic(a, sigma)]


def full_cycle(p):
    """gamma = (p p-1 ... 2 1): gamma(1) = p and gamma(i) = i-1 (1-based)."""
    if p < 1:
        raise ValueError("degree must be at least 1")
    return Permutation([(i - 1) % p for i in range(p)])


def double_cycle(p):
    """(p ... 1)(2p ... p+1) in S_2p."""
    if p < 1:
        raise ValueError("degree must be at least 1")
    g = [(i - 1) % p for i in range(p)]
    return Permutation(g + [p + x for x in g])


@lru_cache(maxsize=None)
def _a_coefficient(k, p):
    if k == 0:
        return 1
    if p == 0:
        return 0
    return (p - 1) * _a_coefficient(k - 1, p - 1) + _a_coefficient(k, p - 1)


def series_coefficients(kind, k, p):
    """Coefficients a_{k,p}, b_{k,p}, c_{k,p} of the large-s expansions.

    ``a`` expands s^(-p) s(s+1)...(s+p-1) = sum_k a_{k,p} s^(-k);
    ``b`` counts partitions of p points into k pairs and p-2k singletons;
    ``c`` counts the non-crossing ones.
    """
    if k < 0 or p < 0:
        raise ValueError("k and p must be nonnegative")
    if kind == "a":
        return Fraction(_a_coefficient(k, p))
    if kind == "b":
        if 2 * k > p:
            return Fraction(0)
        num = 1
        for j in range(2 * k):
            num *= p - j
        return Fraction(num, 2**k * factorial(k))
    if kind == "c":
        return Fraction(comb(p, 2 * k) * catalan(k))
    raise ValueError(f"unknown series kind {kind!r}")


def integer_partitions(p):
    """Integer partitions of p as decreasing tuples."""

    def rec(n, largest):
        if n == 0:
            yield ()
            return
        for first in range(min(n, largest), 0, -1):
            for rest in rec(n - first, first):
                yield (first,) + rest

    return list(rec(p, p))


def class_size(shape):
    """Number of permutations with cycle type ``shape``: p! / prod(k^m_k m_k!)."""
    p = sum(shape)
    denom = 1
    for k in set(shape):
        m = shape.count(k)
        denom *= k**m * factorial(m)
    return factorial(p) // denom


# ---------------------------------------------------------------------------
# Vectorised helpers.  Rows of an (n, p) integer array are permutations.


@lru_cache(maxsize=None)
def _all_permutations_cached(p):
    arr = np.array(list(_itertools_permutations(range(p))), dtype=np.int8).reshape(-1, p)
    arr.setflags(write=False)
    return arr


def all_permutations_array(p):
    """Read-only ``(p!, p)`` array of all permutations, same order as enumerate_symmetric_group."""
    _check_enum_degree(p)
    return _all_permutations_cached(p)


def compose_arrays(a, b):
    """Row-wise composition: ``out[k, i] = a[k, b[k, i]]``."""
    a, b = np.broadcast_arrays(a, b)
    return np.take_along_axis(a, b.astype(np.intp), axis=-1)


def invert_arrays(a):
    a = np.asarray(a)
    inv = np.empty_like(a)
    rows = np.arange(a.shape[0])[:, None]
    inv[rows, a] = np.arange(a.shape[1], dtype=a.dtype)
    return inv


def _orbit_minimum(maps, p):
    """Smallest point reachable from each i using any of the given maps."""
    n = maps[0].shape[0]
    label = np.broadcast_to(np.arange(p, dtype=np.int8), (n, p)).copy()
    # forward reachability suffices: inverses are positive powers in a finite group
    for _ in range(p):
        new = label
        for m in maps:
            new = np.minimum(new, np.take_along_axis(label, m.astype(np.intp), axis=1))
        if np.array_equal(new, label):
            break
        label = new
    return label


def cycle_counts_array(a):
    """Number of cycles of each row."""
    a = np.asarray(a)
    p = a.shape[1]
    label = _orbit_minimum([a], p)
    return (label == np.arange(p)).sum(axis=1)


def join_counts_array(a, b):
    """Number of blocks of the join of the orbit partitions, row-wise."""
    a, b = np.broadcast_arrays(np.asarray(a), np.asarray(b))
    p = a.shape[1]
    label = _orbit_minimum([a, b], p)
    return (label == np.arange(p)).sum(axis=1)


def cycle_type_codes(a):
    """Integer code of each row's cycle type, decodable with :func:`decode_cycle_type`."""
    a = np.asarray(a).astype(np.intp)
    n, p = a.shape
    orbit = np.zeros((n, p), dtype=np.int64)
    cur = a.copy()
    start = np.arange(p)
    for t in range(1, p + 1):
        hit = (cur == start) & (orbit == 0)
        orbit[hit] = t
        cur = np.take_along_axis(a, cur, axis=1)
    orbit.sort(axis=1)
    weights = (p + 1) ** np.arange(p, dtype=np.int64)
    return orbit @ weights


def decode_cycle_type(code, p):
    """Inverse of :func:`cycle_type_codes` for a single code."""
    orbit = []
    for _ in range(p):
        orbit.append(int(code % (p + 1)))
        code //= p + 1
    shape = []
    for k in sorted(set(orbit), reverse=True):
        shape += [k] * (orbit.count(k) // k)
    return tuple(shape)
