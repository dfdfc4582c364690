"""Constrained generalized eigenvalue solvers and the inf-sup estimator.

The coupled problem is a saddle pencil: find (E, lam) with
A E + B^T lam = omega^2 M E and B E = 0.  Small problems eliminate the
constraint with an orthonormal nullspace basis and solve the projected
dense pencil; large problems use shift-invert Lanczos on the saddle
matrix, where the singular mass block is handled by ARPACK's
generalized shift-invert mode.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

__all__ = [
    "EigenResult",
    "nullspace_basis",
    "solve_eigs",
    "filter_zero_modes",
    "cluster_eigenvalues",
    "infsup_constant",
]

# Above this constrained dimension the dense nullspace path is refused.
DENSE_LIMIT = 4500


@dataclass
class EigenResult:
    """Eigenvalues (ascending) and optional eigenvectors in field dofs."""

    values: np.ndarray
    vectors: np.ndarray | None
    method: str

    @property
    def n(self):
        return len(self.values)


def nullspace_basis(B, rtol=1e-12):
    """Orthonormal basis of ker(B) as columns of a dense array.

    Computed from the SVD of B; singular values below rtol times the
    largest are treated as zero.
    """
    B = B.toarray() if sp.issparse(B) else np.asarray(B, float)
    if B.shape[0] == 0:
        return np.eye(B.shape[1])
    U, s, Vt = np.linalg.svd(B, full_matrices=True)
    tol = (s[0] if len(s) else 0.0) * rtol
    rank = int(np.sum(s > tol))
    return Vt[rank:].T.copy()


def _dense_solve(A, M, B, want_vectors):
    A = A.toarray() if sp.issparse(A) else np.asarray(A, float)
    M = M.toarray() if sp.issparse(M) else np.asarray(M, float)
    if B is not None and B.shape[0] > 0:
        Z = nullspace_basis(B)
    else:
        Z = np.eye(A.shape[0])
    Ar = Z.T @ A @ Z
    Mr = Z.T @ M @ Z
    Ar = 0.5 * (Ar + Ar.T)
    Mr = 0.5 * (Mr + Mr.T)
    if want_vectors:
        w, y = sla.eigh(Ar, Mr)
        return w, Z @ y
    return sla.eigh(Ar, Mr, eigvals_only=True), None


def _sparse_solve(A, M, B, n_modes, sigma, want_vectors):
    n = A.shape[0]
    if B is not None and B.shape[0] > 0:
        m = B.shape[0]
        K = sp.bmat([[A, B.T], [B, None]], format="csc")
        Mf = sp.bmat(
            [[M, None], [None, sp.csr_matrix((m, m))]], format="csc"
        )
    else:
        K = sp.csc_matrix(A)
        Mf = sp.csc_matrix(M)
    k = min(n_modes, K.shape[0] - 2)
    vals, vecs = spla.eigsh(K, k=k, M=Mf, sigma=sigma, which="LM")
    order = np.argsort(vals)
    vals = vals[order]
    vecs = vecs[:, order]
    return vals, (vecs[:n] if want_vectors else None)


def solve_eigs(A, M, B=None, n_modes=20, sigma=None, method="auto", want_vectors=False):
    """Eigenvalues of the (optionally constrained) pencil A E = omega^2 M E.

    Parameters
    ----------
    A, M : sparse or dense symmetric matrices on the field dofs.
    B : optional constraint matrix; solutions satisfy B E = 0.
    n_modes : number of eigenvalues requested on the sparse path (the
        dense path always returns the full constrained spectrum).
    sigma : shift for shift-invert; required on the sparse path.  Place
        it inside the physical window of interest: kernel modes at zero
        and cluster outliers are then not the nearest eigenvalues.
    method : "auto", "dense", or "sparse".
    """
    n = A.shape[0]
    n_constr = 0 if B is None else B.shape[0]
    if method == "auto":
        method = "dense" if n + n_constr <= DENSE_LIMIT else "sparse"
    if method == "dense":
        if n + n_constr > 3 * DENSE_LIMIT:
            raise ValueError(f"problem of size {n} is too large for the dense path")
        vals, vecs = _dense_solve(A, M, B, want_vectors)
        # clamp kernel eigenvalues that round off slightly negative
        if len(vals) and vals.min() > -1e-8 * max(1.0, np.abs(vals).max()):
            vals = np.maximum(vals, 0.0)
        return EigenResult(vals, vecs, "dense")
    if sigma is None:
        raise ValueError("the sparse shift-invert path requires sigma")
    vals, vecs = _sparse_solve(A, M, B, n_modes, sigma, want_vectors)
    return EigenResult(vals, vecs, "sparse")


def filter_zero_modes(values, tol_rel=1e-8, ref=None):
    """Split eigenvalues into (kernel, physical) by a relative threshold.

    Values below tol_rel times the reference scale (default: largest
    returned magnitude) are classified as discrete-kernel modes.
    """
    values = np.asarray(values, float)
    scale = ref if ref is not None else (np.abs(values).max() if len(values) else 1.0)
    cut = tol_rel * max(scale, np.finfo(float).tiny)
    kernel = values[np.abs(values) <= cut]
    physical = values[values > cut]
    return kernel, physical


def cluster_eigenvalues(values, tol_rel=1e-6):
    """Group nearly equal eigenvalues into (value, multiplicity) pairs."""
    out = []
    for v in np.asarray(values, float):
        if out and abs(v - out[-1][0]) <= tol_rel * max(1.0, abs(v)):
            val, mult = out[-1]
            out[-1] = ((val * mult + v) / (mult + 1), mult + 1)
        else:
            out.append((v, 1))
    return out


def _schur_complement(B, N_V):
    """Dense S = B N_V^{-1} B^T with chunked solves to bound memory."""
    m = B.shape[0]
    if sp.issparse(N_V) and N_V.shape[0] > 600:
        # N_V is symmetric positive definite: the symmetric minimum-degree
        # ordering keeps the fill (and so the memory) well below COLAMD's
        lu = spla.splu(sp.csc_matrix(N_V), permc_spec="MMD_AT_PLUS_A")
        Bsp = sp.csr_matrix(B)
        S = np.empty((m, m))
        chunk = 64
        for start in range(0, m, chunk):
            rows = slice(start, min(start + chunk, m))
            X = lu.solve(Bsp[rows].toarray().T)
            S[:, rows] = Bsp @ X
        return S
    Bd = B.toarray() if sp.issparse(B) else np.asarray(B, float)
    NVd = N_V.toarray() if sp.issparse(N_V) else np.asarray(N_V, float)
    return Bd @ sla.solve(NVd, Bd.T, assume_a="pos")


def infsup_constant(B, N_V, N_L, blocks=None):
    """Discrete inf-sup constant of the pairing b(v, mu) = mu^T B v.

    beta^2 is the smallest eigenvalue of the multiplier Schur complement
    B N_V^{-1} B^T w = beta^2 N_L w, with N_V the field norm matrix and
    N_L the multiplier norm matrix.  When N_V is block diagonal the
    blocks argument (a list of index ranges) lets each diagonal block be
    factorized separately, which bounds the peak factorization memory.
    """
    if B.shape[0] == 0:
        return 0.0
    if (B.count_nonzero() if sp.issparse(B) else np.count_nonzero(B)) == 0:
        return 0.0
    if blocks is None:
        S = _schur_complement(B, N_V)
    else:
        Bsp = sp.csr_matrix(B)
        NV = sp.csr_matrix(N_V)
        S = np.zeros((B.shape[0],) * 2)
        for lo, hi in blocks:
            S += _schur_complement(Bsp[:, lo:hi], NV[lo:hi, lo:hi])
    S = 0.5 * (S + S.T)
    NLd = N_L.toarray() if sp.issparse(N_L) else np.asarray(N_L, float)
    w = sla.eigh(S, 0.5 * (NLd + NLd.T), eigvals_only=True)
    lam = max(w[0], 0.0)
    return float(np.sqrt(lam))
