"""Reproducible Ginibre, Haar-isometry and random-channel sampling.

Every sample owns a random stream derived from ``(master_seed, index)``
through :class:`numpy.random.SeedSequence`, so results do not depend on how
samples are batched or distributed over threads.
"""

import numpy as np
from scipy.linalg import blas

from .quantum import ChannelMap, partial_trace_output

__all__ = [
    "RngStream",
    "HaarIsometry",
    "sample_ginibre",
    "sample_haar_isometry",
    "orthonormalize",
    "isometry_factor",
    "sample_ginibre_batch",
    "sample_isometry_batch",
    "stinespring_channel",
    "stinespring_choi",
    "sample_wishart_choi",
    "IsometryDefectError",
    "SingularMarginalError",
]


class IsometryDefectError(ValueError):
    pass


class SingularMarginalError(ValueError):
    pass


class RngStream:
    """Independent random stream number ``stream_index`` of ``master_seed``."""

    __slots__ = ("master_seed", "stream_index")

    def __init__(self, master_seed, stream_index=0):
        self.master_seed = int(master_seed)
        self.stream_index = int(stream_index)
        if not (0 <= self.master_seed < 2**64 and 0 <= self.stream_index < 2**64):
            raise ValueError("seed and stream index must be 64-bit unsigned integers")

    def generator(self):
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_index,))
        return np.random.Generator(np.random.PCG64(seq))

    def __repr__(self):
        return f"RngStream({self.master_seed}, {self.stream_index})"


def _as_generator(rng):
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def sample_ginibre(rows, cols, rng, dtype=np.complex128):
    """Complex Ginibre matrix with E|G_ij|^2 = 1."""
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be positive")
    rng = _as_generator(rng)
    real = np.float32 if dtype == np.complex64 else np.float64
    x = rng.standard_normal((rows, 2 * cols), dtype=real)
    x *= np.sqrt(0.5, dtype=real)
    return x.view(dtype)


class HaarIsometry:
    """A ds x d isometry V stacked from s blocks V^(k) of size d x d."""

    __slots__ = ("d", "s", "V")

    def __init__(self, V, d, s, check=True):
        V = np.asarray(V)
        if V.shape != (d * s, d):
            raise ValueError(f"isometry of shape {V.shape} does not match d={d}, s={s}")
        self.d, self.s, self.V = int(d), int(s), V
        if check:
            err = self.defect()
            if err > 1e-8:
                raise IsometryDefectError(f"|V*V - I| = {err:.3e}")

    @property
    def blocks(self):
        """View of shape (s, d, d) with ``blocks[k] == V^(k)``."""
        return self.V.reshape(self.s, self.d, self.d)

    def defect(self):
        return float(np.max(np.abs(self.V.conj().T @ self.V - np.eye(self.d))))

    def conj(self):
        return HaarIsometry(self.V.conj(), self.d, self.s, check=False)


def _cholesky_qr(G):
    """Q factor of G with positive R diagonal, via R = chol(G*G)."""
    gram = G.conj().T @ G
    L = np.linalg.cholesky(gram)
    trsm = blas.ztrsm if G.dtype == np.complex128 else blas.ctrsm
    # solve V L^H = G for V
    return trsm(1.0, L, G, side=1, lower=1, trans_a=2)


def isometry_factor(G):
    """Upper-triangular M with G @ M equal to the phase-fixed Q factor of G.

    M = L^{-*} where L is the Cholesky factor of G*G.  Works on a single
    tall matrix or a stack; useful when only traces of the Q factor are
    needed and forming Q itself would dominate the cost.
    """
    G = np.asarray(G)
    herk = blas.zherk if G.dtype == np.complex128 else blas.cherk
    flat = G.reshape(-1, *G.shape[-2:])
    gram = np.stack([herk(1.0, g, trans=2, lower=1) for g in flat])
    L = np.linalg.cholesky(gram)
    M = np.swapaxes(np.linalg.inv(L).conj(), -1, -2)
    return M.reshape(G.shape[:-2] + M.shape[-2:])


def orthonormalize(G, method="qr"):
    """Phase-fixed Q factor of a tall matrix or a stack of them.

    ``method="qr"`` uses Householder QR and then rescales columns so that
    diag(R) > 0.  ``method="cholesky"`` computes the same Q through the
    Cholesky factor of G*G; it is faster for tall, well-conditioned inputs.
    ``"auto"`` picks Cholesky when there are at least twice as many rows as
    columns.
    """
    G = np.asarray(G)
    rows, cols = G.shape[-2:]
    if method == "auto":
        method = "cholesky" if rows >= 2 * cols else "qr"
    if method == "qr":
        Q, R = np.linalg.qr(G)
        diag = np.diagonal(R, axis1=-2, axis2=-1)
        phase = diag / np.abs(diag)
        return Q * phase[..., None, :]
    if method == "cholesky":
        if G.ndim == 2:
            return _cholesky_qr(G)
        return G @ isometry_factor(G)
    raise ValueError(f"unknown orthonormalization method {method!r}")


def sample_haar_isometry(d, s, rng, method="qr"):
    """Haar-distributed ds x d isometry from a phase-fixed QR of a Ginibre matrix."""
    if d < 1 or s < 1:
        raise ValueError("d and s must be positive")
    G = sample_ginibre(d * s, d, rng)
    V = orthonormalize(G, method)
    return HaarIsometry(V, d, s)


def sample_ginibre_batch(d, s, seed, indices):
    """Stack of ds x d Ginibre matrices; sample ``k`` uses stream ``indices[k]``."""
    G = np.empty((len(indices), d * s, d), dtype=np.complex128)
    for out, idx in zip(G, indices):
        out[...] = sample_ginibre(d * s, d, RngStream(seed, idx))
    return G


def sample_isometry_batch(d, s, seed, indices, method="auto"):
    """Stack of isometries, shape (n, ds, d); sample ``k`` uses stream ``indices[k]``."""
    G = sample_ginibre_batch(d, s, seed, indices)
    if method == "auto":
        method = "cholesky" if s >= 2 else "qr"
    return orthonormalize(G, method)


def _blocks_of(V):
    if isinstance(V, HaarIsometry):
        return V.blocks, V.d, V.s
    raise TypeError("expected a HaarIsometry")


def stinespring_choi(V):
    """Choi matrix sum_k |V^(k)>><<V^(k)| assembled from the blocks."""
    blocks, d, s = _blocks_of(V)
    K = blocks.reshape(s, d * d).T
    return K @ K.conj().T


def stinespring_channel(V):
    """Phi_V(rho) = (id_d (x) Tr_s)(V rho V*), with the blocks as Kraus operators."""
    blocks, d, s = _blocks_of(V)
    err = V.defect()
    if err > 1e-8:
        raise IsometryDefectError(f"|V*V - I| = {err:.3e}")

    def action(Z):
        return np.einsum("kab,bc,kdc->ad", blocks, Z, blocks.conj())

    return ChannelMap(d, action=action)


def sample_wishart_choi(d, s, rng):
    """Random channel Choi (I (x) H^-1/2) W (I (x) H^-1/2) with W = GG* and H = Tr_out W."""
    G = sample_ginibre(d * d, s, rng)
    W = G @ G.conj().T
    H = partial_trace_output(W)
    evals, evecs = np.linalg.eigh(H)
    if not evals[0] > 1e-12 * np.trace(H).real / d:
        raise SingularMarginalError(f"lambda_min(H) = {evals[0]:.3e}")
    evals = np.maximum(evals, 1e-14 * evals[-1])
    h = (evecs * evals ** -0.5) @ evecs.conj().T
    # (I (x) h) G acts block by block on the d x s slices of G
    K = (h @ G.reshape(d, d, s)).reshape(d * d, s)
    J = K @ K.conj().T
    return (J + J.conj().T) / 2
