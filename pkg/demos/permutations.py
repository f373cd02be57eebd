"""Walk through the permutation combinatorics behind the moment formulas.

Run with ``python demos/permutations.py``.
"""

from chanlab.perm import (
    catalan,
    cycle_count,
    enumerate_nc12,
    enumerate_symmetric_group,
    full_cycle,
    is_geodesic,
    length,
    mobius,
    motzkin,
)

p = 4
gamma = full_cycle(p)
print(f"full cycle of degree {p}: images {gamma.images}, |gamma| = {length(gamma)}")

# Permutations on a geodesic from the identity to the full cycle are the
# non-crossing partitions, counted by Catalan numbers.
group = enumerate_symmetric_group(p)
geodesic = [a for a in group if is_geodesic(a, gamma)]
print(f"{len(geodesic)} of {len(group)} permutations lie on a geodesic; Catalan({p}) = {catalan(p)}")

# Restricting to involutions (blocks of size one or two) gives Motzkin numbers.
for q in range(1, 7):
    print(f"  p = {q}: NC_1,2 count {len(enumerate_nc12(full_cycle(q)))}, Motzkin {motzkin(q)}")

# The Moebius function weights the leading term of the Weingarten function.
print("Moebius function on a few cycle types:")
for a in group[:6]:
    print(f"  cycles {a.cycles()}: #cycles = {cycle_count(a)}, Moeb = {mobius(a)}")
