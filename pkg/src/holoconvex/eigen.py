"""Cyclic Jacobi eigensolver for small Hermitian (or real symmetric) matrices."""

from __future__ import annotations

import math

import numpy as np


def jacobi_eigh(a, tol: float = 1e-15, max_sweeps: int = 100):
    """Eigenvalues (ascending) and unitary eigenvectors (columns) of a Hermitian matrix.

    Each rotation first removes the phase of a[p, q], then applies the classical
    real Jacobi rotation that annihilates it.
    """
    a = np.array(a, dtype=complex)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("matrix must be square")
    if np.max(np.abs(a - a.conj().T), initial=0.0) > 1e-10 * max(1.0, np.max(np.abs(a), initial=0.0)):
        raise ValueError("matrix is not Hermitian")
    a = 0.5 * (a + a.conj().T)
    v = np.eye(n, dtype=complex)
    scale = max(np.linalg.norm(a), 1e-300)
    for _ in range(max_sweeps):
        off = math.sqrt(sum(abs(a[p, q]) ** 2 for p in range(n) for q in range(p + 1, n)))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag <= 1e-300:
                    continue
                phase = apq / mag
                theta = (a[q, q].real - a[p, p].real) / (2.0 * mag)
                # hypot avoids overflow of theta^2 when the pivot is tiny
                t = 1.0 / (abs(theta) + math.hypot(theta, 1.0))
                if theta < 0:
                    t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rot = np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]])
                # columns p, q then rows p, q
                a[:, [p, q]] = a[:, [p, q]] @ rot
                a[[p, q], :] = rot.conj().T @ a[[p, q], :]
                a[p, q] = a[q, p] = 0.0
                v[:, [p, q]] = v[:, [p, q]] @ rot
    w = np.real(np.diag(a))
    idx = np.argsort(w, kind="stable")
    return w[idx], v[:, idx]


def jacobi_eigvalsh(a, **kw) -> np.ndarray:
    return jacobi_eigh(a, **kw)[0]
