"""Exact Weingarten values and the moment oracle built on them.

Every number printed here is an exact rational.
"""

from chanlab.perm import Permutation
from chanlab.weingarten import (
    MomentQuery,
    evaluate_query,
    fraction_str,
    gamma_moment,
    moment_lambda,
    weingarten,
    weingarten_asymptotic,
)

n = 5
for images in [(0, 1, 2), (1, 0, 2), (1, 2, 0)]:
    sigma = Permutation(images)
    exact = weingarten(sigma, n)
    print(f"Wg_{n}{sigma.cycles()} = {fraction_str(exact)}  (leading term {weingarten_asymptotic(sigma, n):.3e})")

# Variance of lambda_1 for a random channel with d = 3, s = 2.
d, s = 3, 2
m2 = moment_lambda(1, d, s, 2)
print(f"E[lambda_1^2] at d={d}, s={s}: {fraction_str(m2)}; variance {fraction_str(m2 - 1)}")

# As d grows, moments of s * lambda_1 approach those of Gamma(s, 1).
for d in (4, 16, 64):
    scaled = [float(s**k * moment_lambda(1, d, s, k)) for k in (1, 2, 3)]
    print(f"d = {d:>2}: moments of s*lambda_1 = {[round(x, 3) for x in scaled]}")
print("Gamma(2,1) moments:", [int(gamma_moment(s, k)) for k in (1, 2, 3)])

query = MomentQuery(2, 1, 2, "entryA")
print(f"E[A_01^2] at d=2, s=1: {fraction_str(evaluate_query(query))}")
