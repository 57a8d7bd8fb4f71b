"""
Spectral Core
Laplacians, eigen/singular decompositions, k-means and Procrustes alignment

Every embedding produced here is sign-normalized: each column is flipped so
that its largest-magnitude entry is positive. Vectors are still never compared
entrywise across matrices; use procrustes_align or subspace angles for that.
"""

from dataclasses import dataclass, field
from typing import Tuple, Union

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh, orthogonal_procrustes
from scipy.sparse.linalg import ArpackError, ArpackNoConvergence, eigsh
from sklearn.cluster import KMeans

from community.src.sbm.model import SparseGraph
from community.utils.errors import EigenSolverError, EmptyClusterError, RankDeficientError
from community.utils.seeds import sklearn_seed

MatrixLike = Union[np.ndarray, sp.spmatrix, SparseGraph]

# Dense decomposition up to this size, ARPACK Lanczos above
DENSE_CUTOFF = 2048
LANCZOS_MAXITER_FACTOR = 20
SYMMETRY_TOL = 1e-10
RESIDUAL_TOL = 1e-7

# k-means settings
KMEANS_RESTARTS = 10
KMEANS_MAX_ITER = 100
KMEANS_TOL = 1e-8

# Relative floor on the K-th singular value / |eigenvalue|
RANK_TOL = 1e-8


# ============= RESULT TYPES =============

@dataclass(frozen=True)
class EigPair:
    """Top-K eigenpairs, ordered by descending |value| (ties by descending value)"""

    values: np.ndarray
    vectors: np.ndarray


@dataclass(frozen=True)
class SvdTriple:
    """Top-K singular triple with singular values strictly positive and descending"""

    left: np.ndarray
    singular: np.ndarray
    right: np.ndarray


@dataclass(frozen=True)
class SpectralClustering:
    """Output of full spectral clustering on one graph"""

    labels: np.ndarray
    centers: np.ndarray
    embedding: EigPair = field(repr=False)
    isolated: np.ndarray


# ============= HELPERS =============

def _as_matrix(A: MatrixLike):
    if isinstance(A, SparseGraph):
        return A.adjacency
    return A


def _inverse_sqrt(sums: np.ndarray) -> np.ndarray:
    """1/sqrt(x) with the 0/0 = 0 convention for zero sums"""
    out = np.zeros_like(sums, dtype=float)
    np.divide(1.0, np.sqrt(sums), out=out, where=sums > 0)
    return out


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip columns so that each column's largest-|entry| is positive"""
    if vectors.size == 0:
        return vectors
    pivots = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[pivots, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def _order_by_magnitude(values: np.ndarray) -> np.ndarray:
    """Indices ordering eigenvalues by descending |value|, ties by descending value"""
    return np.lexsort((-values, -np.abs(values)))


# ============= LAPLACIANS =============

def laplacian_square(A: MatrixLike) -> Tuple[sp.csr_matrix, np.ndarray]:
    """
    Normalized Laplacian D^-1/2 A D^-1/2 of a square adjacency.

    Args:
        A: Graph or square sparse/dense adjacency

    Returns:
        (L, isolated) where isolated lists zero-degree nodes; their rows and
        columns of L are all zero
    """
    A = sp.csr_matrix(_as_matrix(A), dtype=np.float64)
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"square adjacency required, got shape {A.shape}")
    degrees = np.asarray(A.sum(axis=1)).ravel()
    scale = sp.diags(_inverse_sqrt(degrees))
    L = sp.csr_matrix(scale @ A @ scale)
    isolated = np.flatnonzero(degrees == 0)
    return L, isolated


def laplacian_rect(A_sub: MatrixLike) -> Tuple[sp.csr_matrix, np.ndarray, np.ndarray]:
    """
    Rectangular Laplacian D^-1/2 A F^-1/2 with row sums D and column sums F.

    Returns:
        (L, zero_rows, zero_cols)
    """
    A = sp.csr_matrix(_as_matrix(A_sub), dtype=np.float64)
    row_sums = np.asarray(A.sum(axis=1)).ravel()
    col_sums = np.asarray(A.sum(axis=0)).ravel()
    L = sp.csr_matrix(sp.diags(_inverse_sqrt(row_sums)) @ A @ sp.diags(_inverse_sqrt(col_sums)))
    return L, np.flatnonzero(row_sums == 0), np.flatnonzero(col_sums == 0)


# ============= DECOMPOSITIONS =============

def _check_residuals(L, values: np.ndarray, vectors: np.ndarray) -> None:
    residual = np.linalg.norm(L @ vectors - vectors * values, axis=0)
    limit = RESIDUAL_TOL * np.maximum(1.0, np.abs(values))
    bad = np.flatnonzero(residual > limit)
    if bad.size:
        k = int(bad[0])
        raise EigenSolverError(
            f"eigenpair {k} residual {residual[k]:.3e} exceeds {limit[k]:.3e}"
        )


def top_k_eig_sym(L: MatrixLike, K: int) -> EigPair:
    """
    Top-K eigenpairs of a symmetric matrix by absolute eigenvalue.

    Dense scipy eigh for n <= DENSE_CUTOFF; ARPACK Lanczos (eigsh, which='LM')
    above it with a deterministic start vector. Every returned pair is
    residual-checked.

    Args:
        L: Symmetric n x n matrix (dense or sparse)
        K: Number of eigenpairs, 1 <= K <= n

    Returns:
        EigPair

    Raises:
        EigenSolverError: Lanczos did not converge or a residual check failed
    """
    L = _as_matrix(L)
    n = L.shape[0]
    if L.shape != (n, n):
        raise ValueError(f"square matrix required, got shape {L.shape}")
    if not 1 <= K <= n:
        raise ValueError(f"K must lie in [1, {n}], got {K}")

    asym = abs(L - L.T).max() if n else 0.0
    if asym > SYMMETRY_TOL:
        raise ValueError(f"matrix is not symmetric (max |L - L^T| = {asym:.3e})")

    if n <= DENSE_CUTOFF:
        dense = L.toarray() if sp.issparse(L) else np.asarray(L, dtype=float)
        values, vectors = eigh(dense)
    else:
        v0 = np.random.default_rng(0).standard_normal(n)
        try:
            values, vectors = eigsh(
                sp.csr_matrix(L, dtype=np.float64),
                k=K,
                which="LM",
                v0=v0,
                maxiter=LANCZOS_MAXITER_FACTOR * n,
            )
        except (ArpackNoConvergence, ArpackError) as exc:
            raise EigenSolverError(f"Lanczos failed for n={n}, K={K}: {exc}") from exc

    order = _order_by_magnitude(values)[:K]
    values = values[order]
    vectors = _fix_signs(vectors[:, order])
    _check_residuals(L, values, vectors)
    return EigPair(values=values, vectors=vectors)


def gram_svd(L_rect: MatrixLike, K: int) -> SvdTriple:
    """
    Top-K SVD of a tall matrix via its l x l Gram matrix.

    Eigendecompose G = L^T L (O(l^3)), then lift the left singular vectors as
    U = L V Sigma^-1 (O(n l^2)). Forming G squares the condition number, so the
    rank floor is sigma_1 * max(RANK_TOL, sqrt(l * eps)).

    Args:
        L_rect: n x l matrix with K <= l
        K: Rank of the truncation

    Returns:
        SvdTriple

    Raises:
        RankDeficientError: the K-th singular value is at or below the floor
    """
    L = _as_matrix(L_rect)
    n, l = L.shape
    if not 1 <= K <= l:
        raise ValueError(f"K must lie in [1, {l}], got {K}")

    gram = L.T @ L
    gram = gram.toarray() if sp.issparse(gram) else np.asarray(gram, dtype=float)
    values, right = eigh(gram, subset_by_index=[l - K, l - 1])
    values, right = values[::-1], right[:, ::-1]

    singular = np.sqrt(np.clip(values, 0.0, None))
    floor = singular[0] * max(RANK_TOL, np.sqrt(l * np.finfo(float).eps))
    if singular[0] == 0.0 or singular[-1] <= floor:
        raise RankDeficientError(
            f"singular value {K} is {singular[-1]:.3e}, at or below the rank floor {floor:.3e}"
        )

    right = _fix_signs(right)
    left = np.asarray(L @ right) / singular
    return SvdTriple(left=left, singular=singular, right=right)


# ============= CLUSTERING =============

def kmeans(points: np.ndarray, K: int, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    k-means++ with KMEANS_RESTARTS restarts, best restart by inertia.

    scikit-learn relocates empty clusters to far-away points during Lloyd
    iterations; a result with fewer than K clusters is still rejected.

    Returns:
        (labels, centers) with centers the member means
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2:
        raise ValueError("points must be a 2-D array")
    n = points.shape[0]
    if not 1 <= K <= n:
        raise ValueError(f"K must lie in [1, n={n}], got {K}")

    model = KMeans(
        n_clusters=K,
        init="k-means++",
        n_init=KMEANS_RESTARTS,
        max_iter=KMEANS_MAX_ITER,
        tol=KMEANS_TOL,
        random_state=sklearn_seed(seed),
    )
    labels = model.fit_predict(points).astype(np.int64)

    counts = np.bincount(labels, minlength=K)
    if np.any(counts == 0):
        raise EmptyClusterError(f"k-means left clusters {np.flatnonzero(counts == 0).tolist()} empty")

    centers = np.zeros((K, points.shape[1]))
    np.add.at(centers, labels, points)
    centers /= counts[:, None]
    return labels, centers


def procrustes_align(estimate: np.ndarray, reference: np.ndarray) -> Tuple[np.ndarray, float]:
    """
    Orthogonal Q minimizing ||estimate - reference Q||_F.

    Returns:
        (Q, residual)
    """
    estimate = np.asarray(estimate, dtype=float)
    reference = np.asarray(reference, dtype=float)
    if estimate.shape != reference.shape:
        raise ValueError(f"shape mismatch: {estimate.shape} vs {reference.shape}")
    Q, _ = orthogonal_procrustes(reference, estimate)
    residual = float(np.linalg.norm(estimate - reference @ Q))
    return Q, residual


# ============= BASELINE =============

def full_spectral_clustering(A: MatrixLike, K: int, seed: int) -> SpectralClustering:
    """
    Spectral clustering on the whole graph: Laplacian, top-K eigenvectors, k-means.

    Args:
        A: Graph or square adjacency
        K: Number of communities
        seed: k-means seed

    Returns:
        SpectralClustering
    """
    L, isolated = laplacian_square(A)
    embedding = top_k_eig_sym(L, K)
    if abs(embedding.values[-1]) <= RANK_TOL * abs(embedding.values[0]):
        raise RankDeficientError(
            f"eigenvalue {K} is {embedding.values[-1]:.3e}, graph cannot support {K} communities"
        )
    labels, centers = kmeans(embedding.vectors, K, seed)
    return SpectralClustering(labels=labels, centers=centers, embedding=embedding, isolated=isolated)
