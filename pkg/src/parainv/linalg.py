"""Dense matrix primitives used by the invariance criteria.

Everything on the criterion path is real. Complex arithmetic only shows up in
:func:`matrix_exponential`, which backs the Fourier propagator.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .errors import GeometryError, InputError, NumericError

DEFAULT_TOL = 1e-9

# |det N^T| below this rejects a set of cone normals (columns are unit vectors).
SINGULAR_DET = 1e-10


def as_square(M, name="M", allow_complex=False) -> np.ndarray:
    """Validate and return ``M`` as a finite square 2-d array."""
    A = np.asarray(M)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise InputError(f"{name} must be a non-empty square matrix, got shape {A.shape}")
    if np.iscomplexobj(A):
        if not allow_complex:
            raise InputError(f"{name} must be real")
    else:
        A = A.astype(float, copy=False)
    if not np.all(np.isfinite(A)):
        raise InputError(f"{name} has non-finite entries")
    return A


def _unit(nu, m, name="nu") -> np.ndarray:
    v = np.asarray(nu, dtype=float)
    if v.shape != (m,):
        raise InputError(f"{name} must have shape ({m},), got {v.shape}")
    if not np.all(np.isfinite(v)):
        raise InputError(f"{name} has non-finite entries")
    if abs(np.linalg.norm(v) - 1.0) > 1e-12:
        raise InputError(f"{name} is not a unit vector (|{name}| = {np.linalg.norm(v)!r})")
    return v


@dataclass(frozen=True)
class AlignmentResult:
    """Outcome of testing whether ``nu`` is an eigenvector of ``M^T``.

    ``eigenvalue`` is the Rayleigh quotient ``(M^T nu) . nu`` and ``residual``
    the norm of the part of ``M^T nu`` orthogonal to ``nu``.
    """

    aligned: bool
    eigenvalue: float
    residual: float
    threshold: float

    def to_dict(self):
        return {
            "aligned": bool(self.aligned),
            "eigenvalue": float(self.eigenvalue),
            "residual": float(self.residual),
            "threshold": float(self.threshold),
        }


def alignment_threshold(M: np.ndarray, tol: float) -> float:
    return tol * (1.0 + np.linalg.norm(M, "fro"))


def eigen_align(M, nu, tol: float = DEFAULT_TOL) -> AlignmentResult:
    """Check whether the unit vector ``nu`` is an eigenvector of ``M^T``.

    Alignment is declared when the orthogonal residual is at most
    ``tol * (1 + ||M||_F)``.
    """
    A = as_square(M)
    v = _unit(nu, A.shape[0])
    w = A.T @ v
    mu = float(w @ v)
    residual = float(np.linalg.norm(w - mu * v))
    threshold = alignment_threshold(A, tol)
    return AlignmentResult(residual <= threshold, mu, residual, threshold)


def is_scalar(M, tol: float = DEFAULT_TOL) -> Optional[float]:
    """Return ``lambda`` if ``M`` equals ``lambda * I`` to tolerance, else ``None``."""
    A = as_square(M)
    lam = float(np.trace(A)) / A.shape[0]
    gap = np.linalg.norm(A - lam * np.eye(A.shape[0]), "fro")
    if gap <= alignment_threshold(A, tol):
        return lam
    return None


@dataclass(frozen=True)
class RowsStructure:
    offdiag_zero: bool
    equal_diagonal: bool


def _row_indices(rows: Iterable[int], m: int) -> np.ndarray:
    # Coordinate indices in the public API are 1-based, as in the body definitions.
    idx = sorted(set(int(r) for r in rows))
    if not idx:
        raise InputError("row index set must be nonempty")
    if idx[0] < 1 or idx[-1] > m:
        raise InputError(f"row indices {idx} out of range 1..{m}")
    return np.asarray(idx) - 1


def rows_structure(M, rows: Iterable[int], tol: float = DEFAULT_TOL) -> RowsStructure:
    """Structural predicates on the rows ``rows`` (1-based) of ``M``.

    ``offdiag_zero``: every off-diagonal entry in those rows is at most ``tol``
    in absolute value. ``equal_diagonal``: the spread of the corresponding
    diagonal entries is at most ``tol``.
    """
    A = as_square(M)
    idx = _row_indices(rows, A.shape[0])
    block = A[idx].copy()
    block[np.arange(len(idx)), idx] = 0.0
    diag = A[idx, idx]
    return RowsStructure(
        offdiag_zero=bool(np.max(np.abs(block), initial=0.0) <= tol),
        equal_diagonal=bool(np.ptp(diag) <= tol),
    )


def normal_matrix_det(N: np.ndarray) -> float:
    return float(np.linalg.det(N.T))


def similarity_diagonalize(M, N, tol: float = DEFAULT_TOL) -> Optional[np.ndarray]:
    """Return diagonal ``D`` with ``M = (N^T)^{-1} D N^T``, or ``None``.

    ``N`` holds the cone normals as columns. The candidate
    ``N^T M (N^T)^{-1}`` is formed with a linear solve; it is accepted when
    its off-diagonal Frobenius mass is at most ``tol * (1 + ||M||_F)``.
    """
    A = as_square(M)
    Nm = as_square(N, "N")
    if Nm.shape != A.shape:
        raise InputError(f"N has shape {Nm.shape}, expected {A.shape}")
    if abs(normal_matrix_det(Nm)) <= SINGULAR_DET:
        raise GeometryError("normal matrix is singular: the normals do not describe a valid cone")
    X = Nm.T @ A
    # D~ = X (N^T)^{-1}  <=>  D~^T = N^{-1} X^T
    Dt = np.linalg.solve(Nm, X.T).T
    off = Dt - np.diag(np.diag(Dt))
    if np.linalg.norm(off, "fro") <= alignment_threshold(A, tol):
        return np.diag(np.diag(Dt))
    return None


# Pade coefficients and 1-norm bounds for degrees 3..13, from Higham (2005).
_PADE = {
    3: (1.495585217958292e-2, [120.0, 60.0, 12.0, 1.0]),
    5: (2.539398330063230e-1, [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0]),
    7: (9.504178996162932e-1, [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0]),
    9: (2.097847961257068e0, [17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
                              2162160.0, 110880.0, 3960.0, 90.0, 1.0]),
    13: (5.371920351148152e0, [64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                               1187353796428800.0, 129060195264000.0, 10559470521600.0, 670442572800.0,
                               33522128640.0, 1323241920.0, 40840800.0, 960960.0, 16380.0, 182.0, 1.0]),
}


def _pade(A, degree):
    b = _PADE[degree][1]
    eye = np.broadcast_to(np.eye(A.shape[-1], dtype=A.dtype), A.shape)
    A2 = A @ A
    if degree == 13:
        A4 = A2 @ A2
        A6 = A4 @ A2
        U = A @ (A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2) + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * eye)
        V = A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2) + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * eye
    else:
        powers = [eye, A2]
        while len(powers) <= degree // 2:
            powers.append(powers[-1] @ A2)
        U = A @ sum(b[2 * i + 1] * P for i, P in enumerate(powers[: degree // 2 + 1]))
        V = sum(b[2 * i] * P for i, P in enumerate(powers[: degree // 2 + 1]))
    return np.linalg.solve(V - U, V + U)


def matrix_exponential(C) -> np.ndarray:
    """Matrix exponential by scaling and squaring with Pade approximants.

    Degrees 3..13 are chosen per matrix from its 1-norm; beyond the degree-13
    bound the matrix is scaled by ``2^-s`` and the result squared ``s`` times.
    Accepts a single ``(m, m)`` matrix or a stack ``(..., m, m)``.
    """
    A = np.asarray(C)
    if A.ndim < 2 or A.shape[-1] != A.shape[-2] or A.shape[-1] < 1:
        raise InputError(f"matrix_exponential needs square matrices, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InputError("matrix_exponential input has non-finite entries")
    dtype = np.result_type(A.dtype, np.float64)
    batch = A.astype(dtype).reshape((-1,) + A.shape[-2:])

    norms = np.max(np.sum(np.abs(batch), axis=-2), axis=-1)
    theta13 = _PADE[13][0]
    with np.errstate(divide="ignore"):
        s = np.where(norms > theta13, np.ceil(np.log2(norms / theta13)), 0.0).astype(int)
    degree = np.full(len(batch), 13)
    for d in (9, 7, 5, 3):
        degree[norms <= _PADE[d][0]] = d

    E = np.empty_like(batch)
    for d in np.unique(degree):
        sel = degree == d
        E[sel] = _pade(batch[sel] / (2.0 ** s[sel])[:, None, None], int(d))

    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(int(s.max(initial=0))):
            todo = s > k
            E[todo] = E[todo] @ E[todo]

    if not np.all(np.isfinite(E)):
        raise NumericError("matrix exponential overflowed")
    return E.reshape(A.shape)
