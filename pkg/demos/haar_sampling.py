"""Haar isometries, Stinespring channels and their reproducible random streams."""

import numpy as np

from chanlab.quantum import is_psd, partial_trace_output
from chanlab.sampling import RngStream, sample_haar_isometry, sample_isometry_batch, stinespring_choi
from chanlab.twirl import lambdas_of_blocks
from chanlab.weingarten import moment_lambda

d, s = 4, 3
V = sample_haar_isometry(d, s, RngStream(2024, 0))
print(f"isometry of shape {V.V.shape}, defect {V.defect():.1e}")
J = stinespring_choi(V)
print("Choi matrix is PSD:", is_psd(J), "| Tr_out J = I:", np.allclose(partial_trace_output(J), np.eye(d)))

# Sample k always comes from stream (seed, k): batches reproduce single draws.
again = sample_isometry_batch(d, s, 2024, [0])[0]
print("batch draw equals single draw:", np.allclose(again, V.V))

# Monte Carlo against the exact oracle.
n = 20000
blocks = sample_isometry_batch(d, s, 7, range(n)).reshape(n, s, d, d)
l1 = lambdas_of_blocks(blocks)[0]
se = l1.var(ddof=1) ** 0.5 / n**0.5
print(f"E[lambda_1]: Monte Carlo {l1.mean():.4f} +- {se:.4f}, exact {float(moment_lambda(1, d, s, 1))}")
print(f"E[lambda_1^2]: Monte Carlo {np.mean(l1**2):.4f}, exact {float(moment_lambda(1, d, s, 2)):.4f}")
