"""Regenerate the JSON fixtures used by the test suite.

    python fixtures/make_fixtures.py
"""

import json
import os

import numpy as np

from chanlab.families import DOCChannel, DOCTriple, ppt_test, realignment_test, triple_to_json, validate
from chanlab.sampling import RngStream, sample_haar_isometry
from chanlab.twirl import abc_of_isometry

HERE = os.path.dirname(os.path.abspath(__file__))
REALIGNMENT_SEED = 31415


def ppt_pair():
    """A d = 3 PPT DOC triple and a PPT CDUC pair, neither certified EB on its own.

    Both have small diagonals and off-diagonal C (resp. F) at 0.9 of the
    entrywise bound sqrt(A_ij A_ji), which breaks the 2x2 block test.
    """
    d = 3
    off = 1 - np.eye(d)
    a, a2 = 0.32, 0.34
    b, b2 = (1 - a) / 2, (1 - a2) / 2
    doc = DOCChannel(DOCTriple(a * np.eye(d) + b * off, a * np.eye(d), a * np.eye(d) + 0.9 * b * off))
    cduc = DOCChannel.cduc(a2 * np.eye(d) + b2 * off, a2 * np.eye(d) + 0.9 * b2 * off)
    return doc, cduc


def ppt_entangled_triple(seed=0, max_trials=200_000):
    """First random d = 3 DOC channel that is PPT yet violates the realignment bound.

    Such a channel is PPT but not entanglement breaking.  Candidates have a
    column-stochastic A and off-diagonal B, C with random phases and moduli
    scaled down from sqrt(A_ij A_ji).
    """
    rng = np.random.default_rng(seed)
    d = 3
    for _ in range(max_trials):
        A = rng.random((d, d)) ** 3
        A /= A.sum(axis=0)
        bound = np.sqrt(A * A.T)
        mats = []
        for _ in range(2):
            phase = np.triu(np.exp(2j * np.pi * rng.random((d, d))), 1)
            M = bound * (phase + phase.conj().T) * rng.random()
            np.fill_diagonal(M, np.diag(A))
            mats.append(M)
        t = DOCTriple(A, *mats)
        if validate(t).ok and ppt_test(t).ppt and not realignment_test(t)[0]:
            return DOCChannel(t)
    raise RuntimeError("no PPT entangled instance found")


def realignment_instance(d=30):
    V = sample_haar_isometry(d, d * d, RngStream(REALIGNMENT_SEED), method="cholesky")
    return DOCChannel(abc_of_isometry(V))


def write(name, obj):
    with open(os.path.join(HERE, name), "w") as fh:
        json.dump(obj, fh, indent=1)
        fh.write("\n")


if __name__ == "__main__":
    doc, cduc = ppt_pair()
    write("ppt_doc_d3.json", triple_to_json(doc))
    write("ppt_cduc_d3.json", triple_to_json(cduc))
    write("ppt_entangled_d3.json", triple_to_json(ppt_entangled_triple()))
    ch = realignment_instance()
    _, slack = realignment_test(ch)
    write(
        "realignment_d30.json",
        {"seed": REALIGNMENT_SEED, "d": 30, "s": 900, "slack": slack, "triple": triple_to_json(ch)},
    )
