"""Twirl one random channel into each symmetry class and read off its parameters."""

from chanlab.families import ppt_eb_test_hh, ppt_eb_test_oo, ppt_eb_test_uu, ppt_eb_test_uubar, ppt_test
from chanlab.sampling import RngStream, sample_haar_isometry
from chanlab.twirl import covariant_params, twirl_diagonal, twirl_hh, twirl_oo, twirl_uu, twirl_uubar

d, s = 5, 1
V = sample_haar_isometry(d, s, RngStream(11))
cp = covariant_params(V)
print(f"lambda_1 = {cp.lambda1:.3f}, lambda_2 = {cp.lambda2:.3f}, lambda_3 = {cp.lambda3:.3f}")
print(f"(U,U) weight p = {cp.p:.4f}; (U,Ubar) weight q = {cp.q:.4f}")
print("(H,H) weights (Delta, id, T):", [round(x, 4) for x in cp.hh])

for name, twirl, test in [
    ("(U, U)", twirl_uu, ppt_eb_test_uu),
    ("(U, Ubar)", twirl_uubar, ppt_eb_test_uubar),
    ("(O, O)", twirl_oo, ppt_eb_test_oo),
    ("(H, H)", twirl_hh, ppt_eb_test_hh),
]:
    params, channel = twirl(V)
    print(f"{name:>10} twirl: PPT (and EB) = {test(params)}")

# The diagonal classes keep whole matrices of parameters.
for kind in ("DUC", "CDUC", "DOC"):
    print(f"{kind:>5} twirl: PPT = {ppt_test(twirl_diagonal(V, kind)).ppt}")
