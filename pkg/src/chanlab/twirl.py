"""Covariant parameters and twirled channels.

Twirls are evaluated in closed form from a handful of Choi-matrix entries,
never by integrating over the group.  The inputs accepted everywhere are a
dense Choi matrix, a :class:`~chanlab.quantum.ChannelMap` or a
:class:`~chanlab.sampling.HaarIsometry`; for isometries the parameters are
read from the Kraus blocks so the d^2 x d^2 Choi matrix is never formed.
"""

from dataclasses import dataclass

import numpy as np

from .families import DOCChannel, DOCTriple, HHChannel
from .quantum import ChannelMap, diag_projector, flip_operator, max_entangled_vector
from .sampling import HaarIsometry

__all__ = [
    "CovariantParams",
    "HHProjectors",
    "lambda1",
    "lambda2",
    "lambda3",
    "covariant_params",
    "lambdas_of_blocks",
    "twirl_uu",
    "twirl_uubar",
    "twirl_oo",
    "twirl_hh",
    "hh_twirl_choi",
    "abc_of_choi",
    "abc_of_isometry",
    "abc_of_blocks",
    "twirl_diagonal",
]

REAL_TOL = 1e-8


def _real(z, what):
    z = complex(z)
    if abs(z.imag) > REAL_TOL:
        raise ValueError(f"{what} has imaginary part {z.imag:.3e}")
    return z.real


def _choi_of(obj):
    if isinstance(obj, ChannelMap):
        return obj.choi()
    if isinstance(obj, HaarIsometry):
        raise TypeError("pass isometries to covariant_params / abc_of_isometry")
    return np.asarray(obj)


def _dim(J):
    d = int(round(np.sqrt(J.shape[0])))
    if J.shape != (d * d, d * d):
        raise ValueError(f"not a Choi matrix shape: {J.shape}")
    return d


def lambda1(J):
    """d <Omega| J |Omega> = sum_ij <ii|J|jj>."""
    J = _choi_of(J)
    d = _dim(J)
    idx = np.arange(d) * (d + 1)
    return _real(J[np.ix_(idx, idx)].sum(), "lambda1")


def lambda2(J):
    """Tr(J F) = sum_ij <ij|J|ji>."""
    J = _choi_of(J)
    d = _dim(J)
    i, j = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
    return _real(J[(i * d + j).ravel(), (j * d + i).ravel()].sum(), "lambda2")


def lambda3(J):
    """Tr(J Pi_diag) = sum_i <ii|J|ii>."""
    J = _choi_of(J)
    d = _dim(J)
    idx = np.arange(d) * (d + 1)
    return _real(J[idx, idx].sum(), "lambda3")


@dataclass(frozen=True)
class CovariantParams:
    """lambda_1, lambda_2, lambda_3 of a channel and the twirl coefficients they fix."""

    d: int
    lambda1: float
    lambda2: float
    lambda3: float

    def _need_d2(self):
        if self.d < 2:
            raise ValueError("twirl coefficients need d >= 2")

    @property
    def p(self):
        """Weight of id in the (U, U) twirl."""
        self._need_d2()
        return (self.lambda1 - 1) / (self.d**2 - 1)

    @property
    def q(self):
        """Weight of the transposition in the (U, Ubar) twirl."""
        self._need_d2()
        return (self.lambda2 - 1) / (self.d**2 - 1)

    @property
    def p_prime(self):
        """Weight of id in the (O, O) twirl."""
        self._need_d2()
        d = self.d
        return ((d + 1) * self.lambda1 - self.lambda2 - d) / (d * (d + 2) * (d - 1))

    @property
    def q_prime(self):
        """Weight of the transposition in the (O, O) twirl."""
        self._need_d2()
        d = self.d
        return ((d + 1) * self.lambda2 - self.lambda1 - d) / (d * (d + 2) * (d - 1))

    @property
    def hh(self):
        """Weights (p, q, r) of (Delta, id, T) in the (H, H) twirl."""
        self._need_d2()
        d = self.d
        return (
            (d - self.lambda3) / (d - 1),
            (self.lambda1 - self.lambda3) / (d * d - d),
            (self.lambda2 - self.lambda3) / (d * d - d),
        )


def lambdas_of_blocks(blocks):
    """(lambda1, lambda2, lambda3) from Kraus blocks of shape (s, d, d) or (n, s, d, d)."""
    blocks = np.asarray(blocks)
    tr = np.trace(blocks, axis1=-2, axis2=-1)
    l1 = np.sum(np.abs(tr) ** 2, axis=-1)
    l2 = np.real(np.einsum("...kij,...kji->...", blocks, blocks.conj()))
    diag = np.diagonal(blocks, axis1=-2, axis2=-1)
    l3 = np.sum(np.abs(diag) ** 2, axis=(-2, -1))
    return l1, l2, l3


def covariant_params(obj):
    """CovariantParams of a Choi matrix, channel or isometry."""
    if isinstance(obj, CovariantParams):
        return obj
    if isinstance(obj, HaarIsometry):
        l1, l2, l3 = lambdas_of_blocks(obj.blocks)
        return CovariantParams(obj.d, float(l1), float(l2), float(l3))
    J = _choi_of(obj)
    return CovariantParams(_dim(J), lambda1(J), lambda2(J), lambda3(J))


def twirl_uu(phi):
    """(U, U) twirl: p id + (1 - p) Delta."""
    cp = covariant_params(phi)
    return cp, HHChannel(cp.d, 1 - cp.p, cp.p, 0.0)


def twirl_uubar(phi):
    """(U, Ubar) twirl: q T + (1 - q) Delta."""
    cp = covariant_params(phi)
    return cp, HHChannel(cp.d, 1 - cp.q, 0.0, cp.q)


def twirl_oo(phi):
    """(O, O) twirl: p' id + q' T + (1 - p' - q') Delta."""
    cp = covariant_params(phi)
    return cp, HHChannel(cp.d, 1 - cp.p_prime - cp.q_prime, cp.p_prime, cp.q_prime)


def twirl_hh(phi):
    """Hyperoctahedral twirl: p Delta + q id + r T + (1 - p - q - r) diag."""
    cp = covariant_params(phi)
    return cp, HHChannel(cp.d, *cp.hh)


class HHProjectors:
    """The four orthogonal projectors commuting with the hyperoctahedral action."""

    def __init__(self, d):
        self.d = d
        omega = max_entangled_vector(d)
        P_omega = np.outer(omega, omega.conj())
        F = flip_operator(d)
        I = np.eye(d * d)
        P_diag = diag_projector(d)
        self.projectors = (
            P_omega,
            (I + F) / 2 - P_diag,
            (I - F) / 2,
            P_diag - P_omega,
        )
        self.dims = (1, (d * d - d) // 2, (d * d - d) // 2, d - 1)

    def __iter__(self):
        return iter(self.projectors)


def hh_twirl_choi(J):
    """Hyperoctahedral twirl of a Choi matrix: sum_i Tr(Pi_i J) Pi_i / d_i."""
    J = _choi_of(J)
    proj = HHProjectors(_dim(J))
    out = np.zeros_like(J, dtype=complex)
    for P, dim in zip(proj.projectors, proj.dims):
        if dim:
            out += np.trace(P @ J) * P / dim
    return out


def abc_of_choi(J):
    """A_ij = <ij|J|ij>, B_ij = <ii|J|jj>, C_ij = <ij|J|ji>."""
    J = _choi_of(J)
    d = _dim(J)
    X = J.reshape(d, d, d, d)
    i, j = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
    A = X[i, j, i, j]
    if np.max(np.abs(A.imag)) > REAL_TOL:
        raise ValueError("A has a non-negligible imaginary part")
    return DOCTriple(A.real, X[i, i, j, j], X[i, j, j, i])


def abc_of_blocks(blocks):
    """(A, B, C) arrays from Kraus blocks of shape (s, d, d) or (n, s, d, d)."""
    blocks = np.asarray(blocks)
    A = np.sum(np.abs(blocks) ** 2, axis=-3)
    diag = np.diagonal(blocks, axis1=-2, axis2=-1)
    B = np.einsum("...ki,...kj->...ij", diag, diag.conj())
    C = np.einsum("...kij,...kji->...ij", blocks, blocks.conj())
    return A, B, C


def abc_of_isometry(V):
    """Triple of the Stinespring channel of V, computed from its blocks."""
    if not isinstance(V, HaarIsometry):
        raise TypeError("expected a HaarIsometry")
    err = V.defect()
    if err > 1e-8:
        raise ValueError(f"isometry defect {err:.3e}")
    return DOCTriple(*abc_of_blocks(V.blocks))


def twirl_diagonal(phi, kind="DOC"):
    """Diagonal twirl of a channel: DUC keeps (A, B), CDUC keeps (A, C), DOC keeps all three."""
    if isinstance(phi, HaarIsometry):
        t = abc_of_isometry(phi)
    elif isinstance(phi, DOCChannel):
        t = phi.triple
    elif isinstance(phi, DOCTriple):
        t = phi
    else:
        t = abc_of_choi(phi)
    if kind == "DUC":
        return DOCChannel.duc(t.A, t.B)
    if kind == "CDUC":
        return DOCChannel.cduc(t.A, t.C)
    if kind == "DOC":
        return DOCChannel(t, "DOC")
    raise ValueError(f"kind must be DUC, CDUC or DOC, got {kind!r}")
