"""
Spectral Package
Laplacians, decompositions, k-means and the full spectral clustering baseline
"""

from community.src.spectral.core import (
    EigPair,
    SpectralClustering,
    SvdTriple,
    full_spectral_clustering,
    gram_svd,
    kmeans,
    laplacian_rect,
    laplacian_square,
    procrustes_align,
    top_k_eig_sym,
)

__all__ = [
    "EigPair",
    "SpectralClustering",
    "SvdTriple",
    "full_spectral_clustering",
    "gram_svd",
    "kmeans",
    "laplacian_rect",
    "laplacian_square",
    "procrustes_align",
    "top_k_eig_sym",
]
