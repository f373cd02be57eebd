import importlib.util
import json
import os
from itertools import product

import numpy as np
import pytest

from chanlab.families import (
    DOCChannel,
    DOCTriple,
    HHChannel,
    apply_doc,
    choi_of_doc,
    composition_split,
    compose_doc,
    eb_certificate,
    equal_split,
    ppt2_conditions,
    ppt_eb_test_hh,
    ppt_eb_test_oo,
    ppt_eb_test_uu,
    ppt_eb_test_uubar,
    ppt_test,
    realignment_test,
    triple_from_json,
    triple_to_json,
    validate,
)
from chanlab.quantum import choi_of_map, compose, is_ppt, map_of_choi, partial_transpose, psd_margin, transpose_map
from chanlab.sampling import RngStream, sample_haar_isometry
from chanlab.twirl import CovariantParams, abc_of_choi, abc_of_isometry

FIXTURES = os.path.join(os.path.dirname(__file__), os.pardir, "fixtures")


def load_fixture(name):
    with open(os.path.join(FIXTURES, name)) as fh:
        return json.load(fh)


def fixture_module():
    spec = importlib.util.spec_from_file_location("make_fixtures", os.path.join(FIXTURES, "make_fixtures.py"))
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    return mod


def random_triple(d, s, seed):
    return abc_of_isometry(sample_haar_isometry(d, s, RngStream(seed)))


def random_instances(n, seed=0):
    """Random DOC, DUC and CDUC channels of assorted sizes, a mix of PPT and not."""
    rng = np.random.default_rng(seed)
    out = []
    for k in range(n):
        d = int(rng.integers(2, 7))
        s = int(rng.choice([1, 2, d, d * d, 2 * d * d]))
        t = random_triple(d, s, 1000 * seed + k)
        kind = ["DOC", "DUC", "CDUC"][k % 3]
        if kind == "DUC":
            out.append(DOCChannel.duc(t.A, t.B))
        elif kind == "CDUC":
            out.append(DOCChannel.cduc(t.A, t.C))
        else:
            out.append(DOCChannel(t))
    return out


def dist(X, Y):
    return float(np.max(np.abs(np.asarray(X) - np.asarray(Y))))


def test_triple_shared_diagonal():
    with pytest.raises(ValueError):
        DOCTriple(np.eye(2), np.ones((2, 2)) * 2, np.eye(2))
    with pytest.raises(ValueError):
        DOCTriple(np.eye(2), np.eye(3), np.eye(2))
    t = DOCTriple(np.eye(2), np.eye(2) + 1e-10, np.eye(2))
    assert np.array_equal(np.diag(t.B), np.ones(2))
    DOCChannel(DOCTriple.identity(2), "DUC")  # C = I is diagonal
    with pytest.raises(ValueError):
        DOCChannel(DOCTriple(np.eye(2), np.eye(2), [[1, 0.1], [0.1, 1]]), "DUC")
    with pytest.raises(ValueError):
        DOCChannel(DOCTriple.identity(2), "CDUC")
    with pytest.raises(ValueError):
        DOCChannel(DOCTriple.identity(2), "XYZ")


def test_validate_examples():
    d = 3
    assert validate(DOCTriple.depolarizing(d)).ok
    A = np.full((d, d), 1 / d)
    A[0, 1] = -0.1
    rep = validate(DOCTriple(A, np.eye(d) / d, np.eye(d) / d))
    assert not rep.cp and rep.min_A == pytest.approx(-0.1)
    rep = validate(DOCTriple(2 * np.eye(d), 2 * np.eye(d), 2 * np.eye(d)))
    assert rep.cp and not rep.tp
    assert rep.max_column_deviation == pytest.approx(1)


def test_validate_detects_b_and_c_violations():
    d = 2
    A = np.full((d, d), 0.5)
    bad_b = DOCTriple(A, [[0.5, 0.9], [0.9, 0.5]], np.diag([0.5, 0.5]))
    rep = validate(bad_b)
    assert rep.lambda_min_B == pytest.approx(-0.4) and not rep.cp
    bad_c = DOCTriple(A, np.diag([0.5, 0.5]), [[0.5, 0.6], [0.6, 0.5]])
    rep = validate(bad_c)
    assert rep.c_pair_margin == pytest.approx(0.25 - 0.36) and not rep.cp


def test_apply_examples():
    rng = np.random.default_rng(0)
    d = 4
    Z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    assert np.allclose(apply_doc(DOCTriple.identity(d), Z), Z)
    assert np.allclose(apply_doc(DOCTriple.dephasing(d), Z), np.diag(np.diag(Z)))
    assert np.allclose(apply_doc(DOCTriple.depolarizing(d), Z), np.trace(Z) / d * np.eye(d))
    with pytest.raises(ValueError):
        apply_doc(DOCTriple.identity(d), np.eye(3))


@pytest.mark.parametrize("seed", range(5))
def test_apply_matches_dense_choi(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 7))
    ch = DOCChannel(random_triple(d, 3, seed))
    Z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    assert dist(ch(Z), map_of_choi(ch.choi())(Z)) <= 1e-10
    assert dist(choi_of_map(ch), choi_of_doc(ch)) <= 1e-12
    t = abc_of_choi(choi_of_doc(ch))
    assert dist(t.A, ch.triple.A) + dist(t.B, ch.triple.B) + dist(t.C, ch.triple.C) == 0


def test_ppt_examples():
    d = 2
    assert ppt_test(DOCTriple.depolarizing(d)).ppt
    t = DOCTriple(np.full((d, d), 0.5), np.diag([0.5, 0.5]), [[0.5, 1], [1, 0.5]])
    res = ppt_test(t)
    assert not res and res.lambda_min_C == pytest.approx(-0.5)
    res = ppt_test(DOCTriple.identity(d))
    assert not res.ppt and res.lambda_min_C == pytest.approx(1) and res.pair_margin == pytest.approx(-1)


def test_ppt_class_specific_tests():
    # DUC only needs the entrywise bound, CDUC only the spectral one
    d = 3
    A = np.full((d, d), 1 / d)
    duc = DOCChannel.duc(A, np.full((d, d), 1 / d))
    assert ppt_test(duc).ppt
    cduc = DOCChannel.cduc(A, np.eye(d) / d)
    assert ppt_test(cduc).ppt


def test_transpose_identity():
    for seed, d in product(range(4), (2, 3, 6)):
        ch = DOCChannel(random_triple(d, 2, 100 * seed + d))
        lhs = choi_of_map(compose(ch, transpose_map(d)))
        rhs = choi_of_doc(ch.triple.transposed_input())
        assert dist(lhs, rhs) <= 1e-10
        assert dist(partial_transpose(choi_of_doc(ch)), rhs) <= 1e-12


def test_structured_ppt_agrees_with_dense():
    disagreements = 0
    outcomes = set()
    for ch in random_instances(200):
        res = ppt_test(ch)
        margin = psd_margin(partial_transpose(ch.choi()))
        outcomes.add(res.ppt)
        if abs(margin) > 1e-7 and res.ppt != is_ppt(ch.choi()):
            disagreements += 1
    assert disagreements == 0
    assert outcomes == {True, False}


def test_realignment_examples():
    d = 4
    ok, slack = realignment_test(DOCTriple.depolarizing(d))
    assert ok and slack == pytest.approx(d - 1)
    ok, slack = realignment_test(DOCTriple.identity(d))
    assert not ok and slack == pytest.approx(-(d * d - d))


def test_realignment_regression_fixture():
    realignment_instance = fixture_module().realignment_instance
    fx = load_fixture("realignment_d30.json")
    ch = realignment_instance(fx["d"])
    ok, slack = realignment_test(ch)
    assert ok and slack > 0
    assert slack == pytest.approx(fx["slack"], abs=1e-9)
    stored = triple_from_json(fx["triple"])
    assert dist(stored.triple.A, ch.triple.A) <= 1e-12
    assert dist(stored.triple.C, ch.triple.C) <= 1e-12


def test_hh_channel_examples():
    d = 3
    for lam, expected in [((1, 1, 1), True), ((d, d, d), True), ((d * d, d, d), False)]:
        assert ppt_eb_test_hh(CovariantParams(d, *lam)) is expected
    assert ppt_eb_test_uu(CovariantParams(d, d, 0, 1))
    assert not ppt_eb_test_uu(CovariantParams(d, d + 0.1, 0, 1))
    assert not ppt_eb_test_uubar(CovariantParams(d, 1, -0.1, 1))
    assert ppt_eb_test_oo(CovariantParams(d, 1, 1, 1))


def _hh_params_grid(d):
    """lambda values on and around the faces of the HH PPT region, plus interior points."""
    l3s = [0, d / 4, d / 2, d - 1, d]
    out = []
    for l3 in l3s:
        lo, hi = max(0, 2 * l3 - d), min(d, d * l3)
        cands = sorted({lo, hi, (lo + hi) / 2, lo - 0.05, hi + 0.05, -0.05, d + 0.05})
        for l1, l2 in product(cands, repeat=2):
            out.append((l1, l2, l3))
    return out


@pytest.mark.parametrize("d", range(2, 7))
def test_hh_inequalities_agree_with_dense_ppt(d):
    checked = 0
    for l1, l2, l3 in _hh_params_grid(d):
        cp = CovariantParams(d, l1, l2, l3)
        ch = HHChannel(d, *cp.hh)
        J = ch.choi()
        if psd_margin(J) < -1e-9:
            continue  # not a channel
        checked += 1
        assert ppt_eb_test_hh(cp) == is_ppt(J), (l1, l2, l3)
    assert checked > 10


def test_hh_channel_action_and_weights():
    d = 4
    ch = HHChannel(d, 0.2, 0.3, 0.1)
    assert dist(choi_of_map(map_of_choi(ch.choi())), ch.choi()) <= 1e-12
    # eigenvalues of J are the projector weights
    w = ch.projector_weights()
    ev = np.linalg.eigvalsh(ch.choi())
    assert sorted(set(np.round(ev, 10))) == sorted(set(np.round(w, 10)))
    rng = np.random.default_rng(1)
    Z = rng.standard_normal((d, d))
    assert dist(ch(Z), map_of_choi(ch.choi())(Z)) <= 1e-12


def test_eb_certificate_examples():
    d = 3
    assert eb_certificate(DOCTriple.depolarizing(d)).verdict == "Certified"
    cert = eb_certificate(DOCTriple.identity(d))
    assert cert.verdict == "Refuted" and cert.reason == "not PPT"


def unknown_triple():
    # PPT, pair bounds hold, but C off-diagonals at 0.9 sqrt(A_ij A_ji) beat A_ii A_jj / (d-1)^2
    d = 3
    a = 0.32
    b = (1 - a) / 2
    off = 1 - np.eye(d)
    return DOCTriple(a * np.eye(d) + b * off, a * np.eye(d), a * np.eye(d) + 0.9 * b * off)


def test_eb_certificate_unknown_instance():
    t = unknown_triple()
    assert validate(t).ok
    assert ppt_test(t).ppt
    assert realignment_test(t)[0]
    cert = eb_certificate(t)
    assert cert.verdict == "Unknown"
    assert cert.failing_pairs == [(0, 1), (0, 2), (1, 2)]
    assert cert.min_margin < 0


def test_eb_certificate_refutes_by_realignment():
    # a PPT channel that violates the realignment bound, hence PPT but entangled
    ch = triple_from_json(load_fixture("ppt_entangled_d3.json"))
    assert validate(ch).ok and ppt_test(ch).ppt
    ok, slack = realignment_test(ch)
    assert not ok and slack < -1e-3
    cert = eb_certificate(ch)
    assert cert.verdict == "Refuted" and "realignment" in cert.reason
    assert cert.min_margin == pytest.approx(slack)


def test_symmetric_family_sits_on_realignment_boundary():
    # A = a I + b (J - I) with B off-diagonals at the pair bound b: slack is exactly zero
    d = 3
    t = DOCTriple(np.full((d, d), 1 / d), np.full((d, d), 1 / d), np.eye(d) / d)
    assert ppt_test(t).ppt
    ok, slack = realignment_test(t)
    assert ok and slack == pytest.approx(0, abs=1e-12)


def test_eb_certificate_split_validation():
    t = DOCTriple.depolarizing(3)
    with pytest.raises(ValueError):
        eb_certificate(t, split=np.ones((3, 3)))
    S = equal_split(t)
    assert np.allclose(S.sum(axis=1), np.diag(t.A))
    assert eb_certificate(t, split=S).certified


def test_implication_chain_on_random_instances():
    counts = {"Certified": 0, "Refuted": 0, "Unknown": 0}
    for ch in random_instances(150, seed=3):
        cert = eb_certificate(ch)
        counts[cert.verdict] += 1
        if cert.certified:
            assert ppt_test(DOCChannel(ch.triple)).ppt
            assert realignment_test(ch)[0]
        if cert.verdict == "Refuted":
            assert not ppt_test(DOCChannel(ch.triple)).ppt or not realignment_test(ch)[0]
    assert counts["Certified"] > 0 and counts["Refuted"] > 0


def test_compose_examples():
    d = 4
    t = random_triple(d, 3, 5)
    c = compose_doc(DOCTriple.identity(d), t)
    assert dist(c.A, t.A) + dist(c.B, t.B) + dist(c.C, t.C) <= 1e-12
    c = compose_doc(t, DOCTriple.identity(d))
    assert dist(c.A, t.A) + dist(c.B, t.B) + dist(c.C, t.C) <= 1e-12
    dep = DOCTriple.depolarizing(d)
    c = compose_doc(dep, dep)
    assert dist(c.A, dep.A) + dist(c.B, dep.B) + dist(c.C, dep.C) <= 1e-12
    with pytest.raises(ValueError):
        compose_doc(dep, DOCTriple.depolarizing(3))


@pytest.mark.parametrize("seed", range(10))
def test_compose_matches_choi_level(seed):
    d = 6 if seed < 5 else 3
    t1, t2 = random_triple(d, 2, seed), random_triple(d, 5, seed + 50)
    dense = choi_of_map(compose(DOCChannel(t1), DOCChannel(t2)))
    c = compose_doc(t1, t2)
    assert dist(choi_of_doc(c), dense) <= 1e-10
    r = abc_of_choi(dense)
    assert dist(r.A, c.A) + dist(r.B, c.B) + dist(r.C, c.C) <= 1e-10


def test_ppt2_examples():
    d = 4
    ok, _, _ = ppt2_conditions(DOCTriple.depolarizing(d), DOCTriple.depolarizing(d))
    assert ok
    ok, m1, _ = ppt2_conditions(DOCTriple.identity(d), DOCTriple.identity(d))
    # C = I has no off-diagonal part, so the right-hand side is |B_ij E_ij|^2 = 1
    assert not ok and m1 == pytest.approx(1 / (d - 1) ** 2 - 1)
    with pytest.raises(ValueError):
        ppt2_conditions(DOCTriple.identity(2), DOCTriple.identity(3))


def test_ppt2_implies_certified_composition():
    hits = 0
    for seed in range(60):
        rng = np.random.default_rng(seed)
        d = int(rng.integers(2, 7))
        t1 = random_triple(d, int(rng.choice([d, d * d])), 7000 + seed)
        t2 = random_triple(d, int(rng.choice([d, d * d])), 8000 + seed)
        ok, _, _ = ppt2_conditions(t1, t2)
        if ok:
            hits += 1
            c = compose_doc(t1, t2)
            assert eb_certificate(c, split=composition_split(t1, t2)).certified
    assert hits > 10


def test_composition_split_rows():
    t1, t2 = random_triple(5, 3, 1), random_triple(5, 4, 2)
    S = composition_split(t1, t2)
    assert np.allclose(S.sum(axis=1), np.diag(compose_doc(t1, t2).A))
    assert np.all(np.diag(S) == 0)


def test_ppt_doc_and_cduc_compose_to_certified():
    doc = triple_from_json(load_fixture("ppt_doc_d3.json"))
    cduc = triple_from_json(load_fixture("ppt_cduc_d3.json"))
    assert cduc.kind == "CDUC"
    for ch in (doc, cduc):
        assert validate(ch).ok and ppt_test(ch).ppt
        assert eb_certificate(ch).verdict == "Unknown"
    for t1, t2 in [(doc.triple, cduc.triple), (cduc.triple, doc.triple)]:
        assert ppt2_conditions(t1, t2)[0]
        c = compose_doc(t1, t2)
        assert eb_certificate(c, split=composition_split(t1, t2)).certified
        assert eb_certificate(c).certified


def test_json_round_trip():
    ch = DOCChannel(random_triple(3, 2, 9))
    back = triple_from_json(json.loads(json.dumps(triple_to_json(ch))))
    assert back.kind == "DOC"
    assert np.array_equal(back.triple.A, ch.triple.A)
    assert np.array_equal(back.triple.B, ch.triple.B)
    assert np.array_equal(back.triple.C, ch.triple.C)
    bad = triple_to_json(ch)
    bad["d"] = 4
    with pytest.raises(ValueError):
        triple_from_json(bad)
