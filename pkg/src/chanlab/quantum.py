"""Dense matrix primitives for channels and Choi matrices.

Index conventions
-----------------
The Choi matrix of a map Phi on d x d matrices is

    J(Phi) = sum_ij Phi(|i><j|) (x) |i><j|,

so the first tensor factor is the *output* and the second the *input*.  With
row-major flattening, ``J[a*d + i, b*d + j] == Phi(E_ij)[a, b]``.  The partial
transpose ``X^Gamma`` transposes the second (input) factor.  Many references
use the opposite order; the choice matters for which factor is traced out in
the trace-preservation check, but not for PPT (transposing either factor
gives the same spectrum).
"""

import numpy as np
from scipy import linalg as sla

__all__ = [
    "ChannelMap",
    "max_entangled_vector",
    "flip_operator",
    "diag_projector",
    "choi_of_map",
    "map_of_choi",
    "partial_transpose",
    "partial_trace_output",
    "partial_trace_input",
    "check_hermitian",
    "min_eigenvalue",
    "is_psd",
    "is_ppt",
    "psd_margin",
    "nuclear_norm",
    "compose",
    "off_diagonal",
    "identity_map",
    "transpose_map",
    "depolarizing_map",
    "dephasing_map",
    "validate_choi",
    "matrix_to_json",
    "matrix_from_json",
]

HERMITIAN_TOL = 1e-9


class ChannelMap:
    """A linear map on d x d matrices.

    Either give a callable ``action`` or a Choi matrix (``choi=``).  Structured
    maps can subclass and override :meth:`__call__` and :meth:`choi`.
    """

    def __init__(self, d, action=None, choi=None):
        if (action is None) == (choi is None):
            raise ValueError("give exactly one of action or choi")
        self.d = int(d)
        self._action = action
        self._choi = None
        if choi is not None:
            choi = np.asarray(choi, dtype=complex)
            if choi.shape != (self.d**2, self.d**2):
                raise ValueError(f"Choi matrix of shape {choi.shape} does not match d = {d}")
            self._choi = choi

    def __call__(self, Z):
        Z = np.asarray(Z)
        if Z.shape != (self.d, self.d):
            raise ValueError(f"input of shape {Z.shape} does not match d = {self.d}")
        if self._action is not None:
            return self._action(Z)
        J = self._choi.reshape(self.d, self.d, self.d, self.d)
        return np.einsum("aibj,ij->ab", J, Z)

    def choi(self):
        if self._choi is None:
            self._choi = choi_of_map(self)
        return self._choi

    def __repr__(self):
        return f"{type(self).__name__}(d={self.d})"


def max_entangled_vector(d):
    """(1/sqrt d) sum_i |ii>."""
    v = np.zeros(d * d, dtype=complex)
    v[:: d + 1] = 1 / np.sqrt(d)
    return v


def flip_operator(d):
    """F = sum_ij |ij><ji|."""
    F = np.zeros((d * d, d * d), dtype=complex)
    i, j = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
    F[(i * d + j).ravel(), (j * d + i).ravel()] = 1
    return F


def diag_projector(d):
    """Pi_diag = sum_i |ii><ii|."""
    P = np.zeros((d * d, d * d), dtype=complex)
    idx = np.arange(d) * (d + 1)
    P[idx, idx] = 1
    return P


def choi_of_map(phi, d=None):
    """Choi matrix of ``phi``, evaluated on the matrix units."""
    d = phi.d if d is None else d
    J = np.zeros((d, d, d, d), dtype=complex)
    E = np.zeros((d, d), dtype=complex)
    for i in range(d):
        for j in range(d):
            E[i, j] = 1
            J[:, i, :, j] = phi(E)
            E[i, j] = 0
    return J.reshape(d * d, d * d)


def _side(X):
    X = np.asarray(X)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {X.shape}")
    d = int(round(np.sqrt(X.shape[0])))
    if d * d != X.shape[0]:
        raise ValueError(f"side {X.shape[0]} is not a perfect square")
    return d


def map_of_choi(J):
    """Channel map backed by a dense Choi matrix."""
    d = _side(J)
    return ChannelMap(d, choi=J)


def partial_transpose(X):
    """Transpose of the second tensor factor."""
    d = _side(X)
    return np.asarray(X).reshape(d, d, d, d).transpose(0, 3, 2, 1).reshape(d * d, d * d)


def partial_trace_output(X):
    """[Tr (x) id](X): trace out the first factor."""
    d = _side(X)
    return np.einsum("aiaj->ij", np.asarray(X).reshape(d, d, d, d))


def partial_trace_input(X):
    """[id (x) Tr](X): trace out the second factor."""
    d = _side(X)
    return np.einsum("aibi->ab", np.asarray(X).reshape(d, d, d, d))


def check_hermitian(X, tol=HERMITIAN_TOL):
    X = np.asarray(X)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {X.shape}")
    err = np.max(np.abs(X - X.conj().T)) if X.size else 0.0
    if err > tol:
        raise ValueError(f"matrix is not Hermitian (asymmetry {err:.3e} > {tol:.0e})")
    return X


def min_eigenvalue(X):
    """Smallest eigenvalue of a Hermitian matrix (validated)."""
    X = check_hermitian(X)
    return float(sla.eigvalsh(X, subset_by_index=[0, 0])[0])


def _psd_scale(X):
    return max(1.0, float(np.real(np.trace(X))) / X.shape[0])


def psd_margin(X):
    """lambda_min(X) divided by the positivity scale max(1, Tr X / side)."""
    X = check_hermitian(X)
    return min_eigenvalue(X) / _psd_scale(X)


def is_psd(X, tol=1e-9):
    """True iff lambda_min(X) >= -tol * max(1, Tr X / side)."""
    return psd_margin(X) >= -tol


def is_ppt(J, tol=1e-9):
    return is_psd(partial_transpose(J), tol)


def nuclear_norm(M):
    return float(np.sum(np.linalg.svd(np.asarray(M), compute_uv=False)))


def compose(phi1, phi2):
    """The map Z -> phi1(phi2(Z))."""
    if phi1.d != phi2.d:
        raise ValueError(f"dimension mismatch: {phi1.d} vs {phi2.d}")
    return ChannelMap(phi1.d, action=lambda Z: phi1(phi2(Z)))


def off_diagonal(X):
    X = np.array(X, copy=True)
    np.fill_diagonal(X, 0)
    return X


def identity_map(d):
    return ChannelMap(d, action=lambda Z: np.array(Z, dtype=complex))


def transpose_map(d):
    return ChannelMap(d, action=lambda Z: np.array(Z, dtype=complex).T)


def depolarizing_map(d):
    """Completely depolarizing channel Z -> Tr(Z) I/d."""
    return ChannelMap(d, action=lambda Z: np.trace(Z) * np.eye(d, dtype=complex) / d)


def dephasing_map(d):
    """Z -> diag(Z)."""
    return ChannelMap(d, action=lambda Z: np.diag(np.diag(Z)).astype(complex))


def validate_choi(J, tol=1e-9):
    """Raise ValueError unless J is the Choi matrix of a quantum channel."""
    d = _side(J)
    J = check_hermitian(J)
    marg = partial_trace_output(J)
    err = np.max(np.abs(marg - np.eye(d)))
    if err > tol:
        raise ValueError(f"not trace preserving: |Tr_out J - I| = {err:.3e}")
    if not is_psd(J, tol):
        raise ValueError(f"not completely positive: lambda_min = {min_eigenvalue(J):.3e}")
    return J


def matrix_to_json(X):
    """Nested lists of [re, im] pairs."""
    X = np.asarray(X, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in X]


def matrix_from_json(rows):
    arr = np.asarray(rows, dtype=float)
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise ValueError("expected rows of [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]
