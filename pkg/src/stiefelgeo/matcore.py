"""Dense real-matrix kernels: matrix exponential, thin QR, skew spectra, Kronecker sums.

Matrices are plain float ndarrays.  Every operation is a pure function of its
inputs, so unrestricted parallel invocation is safe.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError, StructureError

TOL_ORTH = 1e-10
TOL_SKEW = 1e-10
TOL_SPEC = 1e-9

# numerator coefficients of the (13,13) Pade approximant to exp, and the
# largest 1-norm for which a single evaluation stays at machine accuracy
_PADE13 = np.array([
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0, 129060195264000.0, 10559470521600.0,
    670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
    960960.0, 16380.0, 182.0, 1.0,
])
_THETA13 = 5.371920351148152


def frobenius_inner(x: np.ndarray, y: np.ndarray) -> float:
    """Trace inner product tr(x^T y)."""
    return float(np.sum(np.asarray(x) * np.asarray(y)))


def frobenius_norm(x: np.ndarray) -> float:
    return float(np.linalg.norm(np.asarray(x)))


def vec(m: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization, the convention matching ``kron_sum``."""
    return np.asarray(m).ravel(order="F")


def unvec(v: np.ndarray, rows: int, cols: int) -> np.ndarray:
    return np.asarray(v).reshape((rows, cols), order="F")


def expm(x: np.ndarray) -> np.ndarray:
    """Matrix exponential via (13,13) Pade approximation with scaling and squaring.

    Accepts a single square matrix or a stack of them; leading axes are batch
    dimensions.  For skew-symmetric input the result is orthogonal to within
    a few ulps.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim < 2 or x.shape[-1] != x.shape[-2]:
        raise DimensionError(f"expm needs square matrices, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise DomainError("expm input contains non-finite entries")
    m = x.shape[-1]
    eye = np.eye(m)

    norm1 = np.abs(x).sum(axis=-2).max(axis=-1)
    nmax = float(np.max(norm1)) if norm1.size else 0.0
    s = int(np.ceil(np.log2(nmax / _THETA13))) if nmax > _THETA13 else 0
    a = x / (2.0 ** s)

    b = _PADE13
    a2 = a @ a
    a4 = a2 @ a2
    a6 = a4 @ a2
    u = a @ (a6 @ (b[13] * a6 + b[11] * a4 + b[9] * a2)
             + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * eye)
    v = (a6 @ (b[12] * a6 + b[10] * a4 + b[8] * a2)
         + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * eye)
    r = np.linalg.solve(v - u, v + u)
    for _ in range(s):
        r = r @ r
    return r


def _completion_column(basis: np.ndarray, n: int) -> np.ndarray:
    """Deterministic unit vector orthogonal to the given orthonormal columns.

    Picks the canonical basis vector least covered by ``basis`` and
    orthogonalizes it (twice, for numerical orthogonality).
    """
    if basis.shape[1] == 0:
        v = np.zeros(n)
        v[0] = 1.0
        return v
    covered = (basis ** 2).sum(axis=1)
    v = np.zeros(n)
    v[int(np.argmin(covered))] = 1.0
    for _ in range(2):
        v -= basis @ (basis.T @ v)
    return v / np.linalg.norm(v)


def thin_qr(m: np.ndarray, complete_against: np.ndarray | None = None):
    """Thin QR factorization with a deterministic rank-deficiency rule.

    Modified Gram-Schmidt with reorthogonalization.  The diagonal of R is
    non-negative.  A column whose post-projection norm is at most
    ``1e-10 * (column norm + 1)`` is treated as zero: its R diagonal entry is
    set to 0 and the corresponding Q column is completed deterministically
    with a unit vector orthogonal to the columns produced so far.

    ``complete_against`` may hold extra orthonormal columns that completion
    vectors must also be orthogonal to, as long as dimensions permit.

    Returns ``(q, r)`` with q of shape (n, p), r upper triangular (p, p) and
    ``q @ r == m`` to machine precision.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2:
        raise DimensionError(f"thin_qr needs a 2-d matrix, got shape {m.shape}")
    n, p = m.shape
    if n < p:
        raise DimensionError(f"thin_qr needs n >= p, got shape {m.shape}")
    guard = (np.zeros((n, 0)) if complete_against is None
             else np.asarray(complete_against, dtype=float))

    q = np.zeros((n, p))
    r = np.zeros((p, p))
    for j in range(p):
        v = m[:, j].copy()
        col_norm = np.linalg.norm(v)
        for _ in range(2):
            if j:
                c = q[:, :j].T @ v
                r[:j, j] += c
                v -= q[:, :j] @ c
        if np.linalg.norm(v) <= 1e-10 * (col_norm + 1.0):
            r[j, j] = 0.0
            # prefer completion orthogonal to the guard block as well; drop
            # the guard when the orthogonal complement is already exhausted
            if guard.shape[1] + j < n:
                basis = np.hstack([guard, q[:, :j]])
            else:
                basis = q[:, :j]
            q[:, j] = _completion_column(basis, n)
        else:
            r[j, j] = np.linalg.norm(v)
            q[:, j] = v / r[j, j]
    return q, r


@dataclass(frozen=True, eq=False)
class SkewSpectrum:
    """Real spectral data of a skew-symmetric matrix.

    ``planes[i]`` is an ordered orthonormal pair (u, v), columns of an
    (n, 2) block, spanning an invariant rotation plane:
    S u = frequencies[i] * v and S v = -frequencies[i] * u.
    """

    frequencies: np.ndarray   # (k,) positive rotation rates, ascending
    planes: np.ndarray        # (k, n, 2)
    kernel_basis: np.ndarray  # (n, n0), orthonormal basis of ker S

    @property
    def order(self) -> int:
        return self.kernel_basis.shape[0]

    def reconstruct(self) -> np.ndarray:
        """Rebuild S from the rotation planes; the kernel contributes nothing."""
        n = self.order
        s = np.zeros((n, n))
        for theta, plane in zip(self.frequencies, self.planes):
            u, v = plane[:, 0], plane[:, 1]
            s += theta * (np.outer(v, u) - np.outer(u, v))
        return s


def skew_spectrum(s: np.ndarray, skew_tol: float = TOL_SKEW) -> SkewSpectrum:
    """Frequencies and invariant planes of a skew-symmetric matrix.

    Works entirely in real arithmetic: the frequencies are obtained from the
    symmetric eigenproblem of S^T S, refined by the Rayleigh-type norm
    ||S u|| which stays accurate near zero, and the planes are recovered by
    pairing each eigenvector u with S u / theta.
    """
    s = np.asarray(s, dtype=float)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise DimensionError(f"skew_spectrum needs a square matrix, got {s.shape}")
    if np.linalg.norm(s + s.T) > skew_tol:
        raise StructureError("input is not skew-symmetric within tolerance")
    s = 0.5 * (s - s.T)
    n = s.shape[0]

    _, vecs = np.linalg.eigh(s.T @ s)
    rates = np.linalg.norm(s @ vecs, axis=0)
    scale = float(rates.max(initial=0.0))
    zero_tol = 1e-10 * max(1.0, scale)

    kernel = vecs[:, rates <= zero_tol]
    order = np.argsort(rates, kind="stable")
    active = [int(i) for i in order if rates[i] > zero_tol]

    cluster_tol = 1e-8 * max(1.0, scale)
    freqs: list[float] = []
    planes: list[np.ndarray] = []
    i = 0
    while i < len(active):
        j = i + 1
        while j < len(active) and rates[active[j]] - rates[active[i]] <= cluster_tol:
            j += 1
        w = vecs[:, active[i:j]]
        while w.shape[1] > 0:
            u = w[:, 0]
            su = s @ u
            theta = float(np.linalg.norm(su))
            v = su / theta
            freqs.append(theta)
            planes.append(np.column_stack([u, v]))
            if w.shape[1] <= 2:
                break
            rest = w[:, 1:]
            rest = rest - np.outer(u, u @ rest) - np.outer(v, v @ rest)
            left, sing, _ = np.linalg.svd(rest, full_matrices=False)
            w = left[:, sing > 0.5]
        i = j

    if planes:
        idx = np.argsort(freqs, kind="stable")
        frequencies = np.asarray(freqs)[idx]
        plane_arr = np.stack([planes[int(k)] for k in idx])
    else:
        frequencies = np.zeros(0)
        plane_arr = np.zeros((0, n, 2))
    return SkewSpectrum(frequencies=frequencies, planes=plane_arr, kernel_basis=kernel)


def kron_sum(a: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Kronecker sum  a (x) I_q + I_p (x) x  for square a (p, p) and x (q, q).

    With column-stacking vectorization this is the generator of the flow
    t -> exp(t x) C exp(t a^T), i.e. d/dt vec(C) = kron_sum(a, x) vec(C)
    whenever a is skew-symmetric.
    """
    a = np.asarray(a, dtype=float)
    x = np.asarray(x, dtype=float)
    for mat, name in ((a, "first"), (x, "second")):
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise DimensionError(f"kron_sum {name} argument must be square, got {mat.shape}")
    p, q = a.shape[0], x.shape[0]
    return np.kron(a, np.eye(q)) + np.kron(np.eye(p), x)
