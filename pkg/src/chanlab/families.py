"""Structured covariant channel families and their PPT / EB tests.

Diagonal-orthogonal covariant (DOC) channels are stored as a triple (A, B, C)
of d x d matrices sharing their diagonal, with action

    Phi(Z) = diag(A diag(Z)) + B_off * Z + C_off * Z^T

where ``X_off`` is X with its diagonal removed and ``*`` is the entrywise
product.  DUC channels are the special case with C diagonal, CDUC channels
the case with B diagonal.

Hyperoctahedral covariant channels are combinations of the completely
depolarizing map, the identity, the transposition and the dephasing map and
are stored by their weights.

All inequality tests follow the same convention: ``LHS >= RHS - tol * (1 +
|LHS| + |RHS|)``, and the reported margin is the smallest ``LHS - RHS``.
"""

from dataclasses import dataclass, field

import numpy as np

from .quantum import (
    ChannelMap,
    diag_projector,
    flip_operator,
    max_entangled_vector,
    min_eigenvalue,
    nuclear_norm,
    off_diagonal,
)

__all__ = [
    "DOCTriple",
    "DOCChannel",
    "HHChannel",
    "ValidityReport",
    "PPTResult",
    "EBCertificate",
    "CERTIFIED",
    "REFUTED",
    "UNKNOWN",
    "validate",
    "apply_doc",
    "choi_of_doc",
    "ppt_test",
    "ppt_eb_test_hh",
    "ppt_eb_test_uu",
    "ppt_eb_test_uubar",
    "ppt_eb_test_oo",
    "realignment_test",
    "eb_certificate",
    "equal_split",
    "composition_split",
    "compose_doc",
    "ppt2_conditions",
    "triple_to_json",
    "triple_from_json",
]

DIAG_TOL = 1e-8
DEFAULT_TOL = 1e-9


def _slack(lhs, rhs, tol):
    """lhs - rhs + tol * (1 + |lhs| + |rhs|): nonnegative iff the test passes."""
    return lhs - rhs + tol * (1 + np.abs(lhs) + np.abs(rhs))


class DOCTriple:
    """Matrices (A, B, C) with a shared diagonal.

    The diagonal of B and C is checked against that of A (tolerance 1e-8)
    and then overwritten with it.
    """

    __slots__ = ("d", "A", "B", "C")

    def __init__(self, A, B, C, tol=DIAG_TOL):
        A = np.asarray(A, dtype=float)
        B = np.array(B, dtype=complex)
        C = np.array(C, dtype=complex)
        d = A.shape[0]
        if A.shape != (d, d) or B.shape != (d, d) or C.shape != (d, d):
            raise ValueError("A, B, C must be square matrices of equal size")
        da = np.diag(A)
        err = max(np.max(np.abs(np.diag(B) - da)), np.max(np.abs(np.diag(C) - da)))
        if err > tol:
            raise ValueError(f"A, B, C do not share their diagonal (mismatch {err:.3e})")
        np.fill_diagonal(B, da)
        np.fill_diagonal(C, da)
        self.d, self.A, self.B, self.C = d, A, B, C

    @classmethod
    def identity(cls, d):
        return cls(np.eye(d), np.ones((d, d)), np.eye(d))

    @classmethod
    def depolarizing(cls, d):
        return cls(np.ones((d, d)) / d, np.eye(d) / d, np.eye(d) / d)

    @classmethod
    def dephasing(cls, d):
        return cls(np.eye(d), np.eye(d), np.eye(d))

    def conj(self):
        """Triple of the entrywise complex-conjugated channel."""
        return DOCTriple(self.A, self.B.conj(), self.C.conj())

    def transposed_input(self):
        """Triple of Phi o T, which swaps the roles of B and C."""
        return DOCTriple(self.A, self.C, self.B)

    def __repr__(self):
        return f"DOCTriple(d={self.d})"


class DOCChannel(ChannelMap):
    """A DUC, CDUC or DOC channel stored by its triple."""

    KINDS = ("DUC", "CDUC", "DOC")

    def __init__(self, triple, kind="DOC"):
        if kind not in self.KINDS:
            raise ValueError(f"kind must be one of {self.KINDS}")
        if kind == "DUC" and np.any(off_diagonal(triple.C) != 0):
            raise ValueError("a DUC channel has diagonal C")
        if kind == "CDUC" and np.any(off_diagonal(triple.B) != 0):
            raise ValueError("a CDUC channel has diagonal B")
        self.triple = triple
        self.kind = kind
        self.d = triple.d
        self._action = None
        self._choi = None

    @classmethod
    def duc(cls, A, B):
        return cls(DOCTriple(A, B, np.diag(np.diag(A))), "DUC")

    @classmethod
    def cduc(cls, A, C):
        return cls(DOCTriple(A, np.diag(np.diag(A)), C), "CDUC")

    def __call__(self, Z):
        return apply_doc(self.triple, Z)

    def choi(self):
        return choi_of_doc(self.triple)


def _triple(ch):
    if isinstance(ch, DOCChannel):
        return ch.triple, ch.kind
    if isinstance(ch, DOCTriple):
        return ch, "DOC"
    raise TypeError("expected a DOCChannel or DOCTriple")


def apply_doc(ch, Z):
    t, _ = _triple(ch)
    Z = np.asarray(Z)
    if Z.shape != (t.d, t.d):
        raise ValueError(f"input of shape {Z.shape} does not match d = {t.d}")
    out = off_diagonal(t.B) * Z + off_diagonal(t.C) * Z.T
    out[np.diag_indices(t.d)] = t.A @ np.diag(Z)
    return out


def choi_of_doc(ch):
    """Dense Choi matrix: A_ij at (ij, ij), B_ij at (ii, jj), C_ij at (ij, ji)."""
    t, _ = _triple(ch)
    d = t.d
    J = np.zeros((d, d, d, d), dtype=complex)
    i, j = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
    J[i, j, i, j] = t.A
    off = i != j
    J[i[off], i[off], j[off], j[off]] = t.B[off]
    J[i[off], j[off], j[off], i[off]] = t.C[off]
    return J.reshape(d * d, d * d)


@dataclass
class ValidityReport:
    min_A: float
    lambda_min_B: float
    c_pair_margin: float
    c_hermitian_error: float
    max_column_deviation: float
    tol: float = DEFAULT_TOL

    @property
    def cp(self):
        return (
            self.min_A >= -self.tol
            and self.lambda_min_B >= -self.tol
            and self.c_pair_margin >= -self.tol
            and self.c_hermitian_error <= 1e-9
        )

    @property
    def tp(self):
        return self.max_column_deviation <= 1e-9

    @property
    def ok(self):
        return self.cp and self.tp


def _pair_products(A):
    """A_ij * A_ji for all pairs."""
    return A * A.T


def _offdiag_min(M):
    d = M.shape[0]
    if d < 2:
        return np.inf
    return float(np.min(M[~np.eye(d, dtype=bool)]))


def validate(ch, tol=DEFAULT_TOL):
    """Itemized CP / TP report with margins."""
    t, _ = _triple(ch)
    B_herm = (t.B + t.B.conj().T) / 2
    return ValidityReport(
        min_A=float(np.min(t.A)),
        lambda_min_B=float(np.linalg.eigvalsh(B_herm)[0]),
        c_pair_margin=_offdiag_min(_pair_products(t.A) - np.abs(t.C) ** 2),
        c_hermitian_error=float(np.max(np.abs(t.C - t.C.conj().T))),
        max_column_deviation=float(np.max(np.abs(t.A.sum(axis=0) - 1))),
        tol=tol,
    )


@dataclass
class PPTResult:
    ppt: bool
    lambda_min_C: float
    pair_margin: float

    def __bool__(self):
        return self.ppt


def ppt_test(ch, tol=DEFAULT_TOL):
    """PPT test: C is PSD and |B_ij|^2 <= A_ij A_ji.

    DUC channels only need the entrywise test, CDUC channels only the
    spectral one.
    """
    t, kind = _triple(ch)
    C_herm = (t.C + t.C.conj().T) / 2
    lam = float(np.linalg.eigvalsh(C_herm)[0])
    lhs = _pair_products(t.A)
    rhs = np.abs(t.B) ** 2
    pair_margin = _offdiag_min(lhs - rhs)
    pair_ok = t.d < 2 or bool(np.all(_slack(lhs, rhs, tol)[~np.eye(t.d, dtype=bool)] >= 0))
    spec_ok = lam >= -tol * (1 + np.max(np.abs(t.C)))
    if kind == "DUC":
        ok = pair_ok
    elif kind == "CDUC":
        ok = spec_ok
    else:
        ok = pair_ok and spec_ok
    return PPTResult(bool(ok), lam, pair_margin)


def realignment_test(ch, tol=DEFAULT_TOL):
    """Realignment bound sum A - ||A||_1 >= sum_{i != j} max(|B_ij|, |C_ij|).

    Returns ``(passes, slack)``; a failing test proves the channel is not EB.
    """
    t, _ = _triple(ch)
    lhs = float(np.sum(t.A)) - nuclear_norm(t.A)
    rhs = float(np.sum(np.maximum(np.abs(off_diagonal(t.B)), np.abs(off_diagonal(t.C)))))
    slack = lhs - rhs
    return bool(_slack(lhs, rhs, tol) >= 0), slack


# ---------------------------------------------------------------------------
# Hyperoctahedral and unitary/orthogonal families


def _lam(params):
    return params.d, params.lambda1, params.lambda2, params.lambda3


def _all_geq(pairs, tol):
    return all(_slack(lhs, rhs, tol) >= 0 for lhs, rhs in pairs)


def ppt_eb_test_hh(params, tol=DEFAULT_TOL):
    """PPT (equivalently EB) test for the hyperoctahedral twirl of a channel."""
    d, l1, l2, l3 = _lam(params)
    return _all_geq(
        [
            (l3, 0),
            (d, l3),
            (l1, 0),
            (l2, 0),
            (d * l3, l1),
            (d * l3, l2),
            (l1, 2 * l3 - d),
            (l2, 2 * l3 - d),
            (d, l1),
            (d, l2),
        ],
        tol,
    )


def ppt_eb_test_uu(params, tol=DEFAULT_TOL):
    d, l1, _, _ = _lam(params)
    return _all_geq([(l1, 0), (d, l1)], tol)


def ppt_eb_test_uubar(params, tol=DEFAULT_TOL):
    d, _, l2, _ = _lam(params)
    return _all_geq([(l2, 0), (d, l2)], tol)


def ppt_eb_test_oo(params, tol=DEFAULT_TOL):
    return ppt_eb_test_uu(params, tol) and ppt_eb_test_uubar(params, tol)


class HHChannel(ChannelMap):
    """p * Delta + q * id + r * T + (1 - p - q - r) * diag."""

    def __init__(self, d, p, q, r):
        self.d = int(d)
        self.p, self.q, self.r = float(p), float(q), float(r)
        self._action = None
        self._choi = None

    @property
    def w_diag(self):
        return 1 - self.p - self.q - self.r

    def __call__(self, Z):
        Z = np.asarray(Z)
        d = self.d
        out = self.p * np.trace(Z) / d * np.eye(d) + self.q * Z + self.r * Z.T
        return out + self.w_diag * np.diag(np.diag(Z))

    def choi(self):
        d = self.d
        omega = max_entangled_vector(d)
        return (
            self.p * np.eye(d * d) / d
            + self.q * d * np.outer(omega, omega.conj())
            + self.r * flip_operator(d)
            + self.w_diag * diag_projector(d)
        )

    def projector_weights(self):
        """Eigenvalues of the Choi matrix on Pi_0, ..., Pi_3."""
        d, p, q, r, w = self.d, self.p, self.q, self.r, self.w_diag
        return np.array([p / d + q * d + r + w, p / d + r, p / d - r, p / d + r + w])

    def __repr__(self):
        return f"HHChannel(d={self.d}, p={self.p:.6g}, q={self.q:.6g}, r={self.r:.6g})"


# ---------------------------------------------------------------------------
# EB certificate


CERTIFIED = "Certified"
REFUTED = "Refuted"
UNKNOWN = "Unknown"


@dataclass
class EBCertificate:
    verdict: str
    reason: str = ""
    min_margin: float = np.inf
    failing_pairs: list = field(default_factory=list)

    @property
    def certified(self):
        return self.verdict == CERTIFIED


def equal_split(triple):
    """Split of each diagonal entry A_ii into d-1 equal shares, one per pair."""
    d = triple.d
    S = np.repeat(np.diag(triple.A)[:, None] / (d - 1), d, axis=1)
    np.fill_diagonal(S, 0)
    return S


def composition_split(t1, t2):
    """Diagonal split matching the block decomposition of a composition.

    For (A, B, C) o (D, E, F) the share of (AD)_ii given to the pair {i, j}
    is A_ii D_ii / (d-1) + A_ij D_ji.
    """
    d = t1.d
    S = np.outer(np.diag(t1.A) * np.diag(t2.A), np.ones(d)) / (d - 1) + t1.A * t2.A.T
    np.fill_diagonal(S, 0)
    return S


def eb_certificate(ch, split=None, tol=DEFAULT_TOL):
    """Three-valued EB test.

    Refuted when the channel fails the PPT test or the realignment bound.
    Certified when the triple decomposes as a sum of PPT triples supported on
    two coordinates, each of which is EB.  ``split[i, j]`` is the share of
    A_ii assigned to the pair {i, j}; rows must sum to A_ii and the default
    is the equal split A_ii / (d-1).
    """
    t, _ = _triple(ch)
    d = t.d
    ppt = ppt_test(DOCChannel(t, "DOC"), tol)
    if not ppt.ppt:
        return EBCertificate(REFUTED, "not PPT", min(ppt.lambda_min_C, ppt.pair_margin))
    passes, slack = realignment_test(t, tol)
    if not passes:
        return EBCertificate(REFUTED, "realignment bound violated", slack)
    if d < 2:
        return EBCertificate(CERTIFIED, "d = 1", np.inf)
    S = equal_split(t) if split is None else np.asarray(split, dtype=float)
    row_err = np.max(np.abs(S.sum(axis=1) - np.diag(S) - np.diag(t.A)))
    if row_err > 1e-9 * (1 + np.max(np.abs(t.A))):
        raise ValueError(f"split rows do not sum to diag(A) (error {row_err:.3e})")
    block_diag = S * S.T
    pair = _pair_products(t.A)
    absB2 = np.abs(t.B) ** 2
    absC2 = np.abs(t.C) ** 2
    checks = [
        (block_diag, absB2),
        (block_diag, absC2),
        (pair, absB2),
        (pair, absC2),
        (np.minimum(t.A, t.A.T), np.zeros_like(t.A)),
        (np.minimum(S, S.T), np.zeros_like(t.A)),
    ]
    iu = np.triu_indices(d, 1)
    margins = np.min([lhs[iu] - rhs[iu] for lhs, rhs in checks], axis=0)
    ok = np.all([_slack(lhs[iu], rhs[iu], tol) >= 0 for lhs, rhs in checks], axis=0)
    failing = [(int(i), int(j)) for i, j, good in zip(*iu, ok) if not good]
    min_margin = float(np.min(margins))
    if not failing:
        return EBCertificate(CERTIFIED, "2x2 PPT decomposition", min_margin)
    return EBCertificate(UNKNOWN, "some 2x2 blocks are not PPT", min_margin, failing)


# ---------------------------------------------------------------------------
# Composition


def compose_doc(t1, t2):
    """Triple of Phi_1 o Phi_2 where Phi_1 = (A, B, C) and Phi_2 = (D, E, F)."""
    if t1.d != t2.d:
        raise ValueError(f"dimension mismatch: {t1.d} vs {t2.d}")
    A, B, C = t1.A, off_diagonal(t1.B), off_diagonal(t1.C)
    D, E, F = t2.A, off_diagonal(t2.B), off_diagonal(t2.C)
    AD = A @ D
    dg = np.diag(np.diag(AD))
    return DOCTriple(AD, dg + B * E + C * F.T, dg + B * F + C * E.T)


def ppt2_conditions(t1, t2, tol=DEFAULT_TOL):
    """Sufficient conditions for Phi_1 o Phi_2 to be EB.

    Returns ``(ok, margin_block, margin_pair)`` where the margins are the
    smallest LHS - RHS over i != j of the two families of inequalities.
    """
    d = t1.d
    if d != t2.d:
        raise ValueError(f"dimension mismatch: {t1.d} vs {t2.d}")
    if d < 2:
        return True, np.inf, np.inf
    A, B, C = t1.A, t1.B, t1.C
    D, E, F = t2.A, t2.B, t2.C
    rhs = np.maximum(np.abs(B * E + C * F.conj()) ** 2, np.abs(B * F + C * E.conj()) ** 2)
    share = np.outer(np.diag(A) * np.diag(D), np.ones(d)) / (d - 1) + A * D.T
    lhs1 = share * share.T
    AD = A @ D
    lhs2 = AD * AD.T
    off = ~np.eye(d, dtype=bool)
    ok = bool(np.all(_slack(lhs1, rhs, tol)[off] >= 0) and np.all(_slack(lhs2, rhs, tol)[off] >= 0))
    return ok, float(np.min((lhs1 - rhs)[off])), float(np.min((lhs2 - rhs)[off]))


# ---------------------------------------------------------------------------
# Serialization


def triple_to_json(ch):
    t, kind = _triple(ch)
    return {
        "d": t.d,
        "A": t.A.tolist(),
        "B_re": t.B.real.tolist(),
        "B_im": t.B.imag.tolist(),
        "C_re": t.C.real.tolist(),
        "C_im": t.C.imag.tolist(),
        "class": kind,
    }


def triple_from_json(obj):
    A = np.asarray(obj["A"], dtype=float)
    B = np.asarray(obj["B_re"], dtype=float) + 1j * np.asarray(obj["B_im"], dtype=float)
    C = np.asarray(obj["C_re"], dtype=float) + 1j * np.asarray(obj["C_im"], dtype=float)
    if A.shape != (obj["d"], obj["d"]):
        raise ValueError("triple dimension does not match its matrices")
    return DOCChannel(DOCTriple(A, B, C), obj.get("class", "DOC"))
