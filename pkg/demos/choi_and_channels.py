"""Choi matrices, partial transposes and the basic positivity tests."""

import numpy as np

from chanlab.quantum import (
    choi_of_map,
    dephasing_map,
    depolarizing_map,
    identity_map,
    is_ppt,
    map_of_choi,
    min_eigenvalue,
    partial_transpose,
    transpose_map,
)

d = 3
for name, phi in [
    ("identity", identity_map(d)),
    ("completely depolarizing", depolarizing_map(d)),
    ("completely dephasing", dephasing_map(d)),
    ("transpose", transpose_map(d)),
]:
    J = choi_of_map(phi)
    print(f"{name:>24}: lambda_min(J) = {min_eigenvalue(J):+.3f}, "
          f"lambda_min(J^Gamma) = {min_eigenvalue(partial_transpose(J)):+.3f}, PPT = {is_ppt(J)}")

# A map can be rebuilt from its Choi matrix.
rho = np.diag([0.5, 0.3, 0.2]).astype(complex)
J = choi_of_map(dephasing_map(d))
print("dephasing applied through its Choi matrix:", np.real(np.diag(map_of_choi(J)(rho))))
