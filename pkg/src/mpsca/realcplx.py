"""Complex <-> real embeddings.

A complex vector ``w`` is stacked as ``[Re w, Im w]`` and a Hermitian matrix
``q`` as ``[[Re q, -Im q], [Im q, Re q]]`` so that ``w^H q w`` equals the real
quadratic form of the embedded objects.
"""

import numpy as np

HERMITIAN_ATOL = 1e-12


def embed_quadratic(q):
    """Return the ``2N x 2N`` real embedding of a Hermitian ``N x N`` matrix."""
    q = np.asarray(q, dtype=complex)
    if q.ndim != 2 or q.shape[0] != q.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {q.shape}")
    if not np.allclose(q, q.conj().T, rtol=0.0, atol=HERMITIAN_ATOL):
        raise ValueError("matrix is not Hermitian within 1e-12")
    re, im = q.real, q.imag
    return np.block([[re, -im], [im, re]])


def embed_vector(w):
    w = np.asarray(w, dtype=complex).ravel()
    return np.concatenate([w.real, w.imag])


def extract_complex(w_bar):
    w_bar = np.asarray(w_bar, dtype=float).ravel()
    if w_bar.size % 2:
        raise ValueError(f"real embedding must have even length, got {w_bar.size}")
    n = w_bar.size // 2
    w = np.empty(n, dtype=complex)
    w.real = w_bar[:n]
    w.imag = w_bar[n:]
    return w
