"""Space-curve analysis: distinguished Frenet frames, Frenet curvatures,
constant-curvature normal forms, and closed-curve period detection.

Stiefel geodesics, viewed in the fixed (U Q) coordinate frame, are curves in
R^(2 p^2) whose derivative inner products are constant in time.  Their Frenet
curvatures are therefore constant, their vectorized form is a superposition
of circular motions at fixed frequencies, and they close exactly when those
frequencies have pairwise rational ratios.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import matcore, stiefel
from .errors import (
    DegenerateCurveError,
    DimensionError,
    DomainError,
    NormalizationError,
    ResolutionError,
    StructureError,
)

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True, eq=False)
class FrenetData:
    """Distinguished Frenet frame and curvatures of a curve.

    ``frame`` holds the orthonormal vectors e_1 ... e_k as columns;
    ``curvatures`` are kappa_1 ... kappa_{k-1} per unit arc length.  The
    final curvature is orientation-sensitive and reported unsigned.
    """

    frame: np.ndarray       # (N, k)
    curvatures: np.ndarray  # (k - 1,)
    effective_dim: int


def frenet_from_derivatives(d: np.ndarray):
    """Distinguished-frame Gram-Schmidt on derivative columns.

    Columns of ``d`` are successive curve derivatives.  Orthonormalization
    uses modified Gram-Schmidt with reorthogonalization and positive leading
    coefficients (each e_j has positive component along its derivative
    vector).  A column whose post-projection norm falls below
    1e-10 * (column norm + 1) terminates the frame: from there on the curve
    lives in the span already found, and later columns are only projected.

    Returns ``(frame, r)`` with frame of shape (N, k) and r of shape (k, m)
    so that ``d ~= frame @ r``.  When the frame fills the whole space
    (k == N) the last vector's sign is fixed so that det(frame) = +1.
    """
    d = np.asarray(d, dtype=float)
    if d.ndim != 2:
        raise DimensionError(f"expected a matrix of derivative columns, got shape {d.shape}")
    n, m = d.shape
    if m > n:
        raise DimensionError(f"more derivative columns ({m}) than ambient dimensions ({n})")

    frame = np.zeros((n, m))
    r = np.zeros((m, m))
    k = 0
    for j in range(m):
        v = d[:, j].copy()
        col_norm = np.linalg.norm(v)
        for _ in range(2):
            if k:
                c = frame[:, :k].T @ v
                r[:k, j] += c
                v -= frame[:, :k] @ c
        if k < j:
            continue  # frame already terminated, projection only
        norm = np.linalg.norm(v)
        if norm <= 1e-10 * (col_norm + 1.0):
            if j == 0:
                raise DegenerateCurveError("first derivative vanishes; curve is not regular")
            continue
        r[k, j] = norm
        frame[:, k] = v / norm
        k += 1

    frame = frame[:, :k]
    r = r[:k, :]
    if k == n and np.linalg.det(frame) < 0.0:
        frame = frame.copy()
        frame[:, -1] *= -1.0
        r = r.copy()
        r[-1, :] *= -1.0
    return frame, r


def _curvatures_from_factors(gamma: np.ndarray, gamma_dot: np.ndarray,
                             r: np.ndarray, k: int) -> np.ndarray:
    """kappa_j as the (j, j+1) entries of R^(-T) (dGamma^T Gamma) R^(-1).

    Needs the first k columns of Gamma and the first k-1 columns of its
    column-wise time derivative; the last curvature is returned unsigned.
    """
    if k < 2:
        return np.zeros(0)
    rk = r[:k, :k]
    m = gamma_dot[:, :k - 1].T @ gamma[:, :k]
    w = np.linalg.solve(rk[:k - 1, :k - 1].T, m)       # (k-1, k)
    c = np.linalg.solve(rk.T, w.T).T                   # w @ inv(rk)
    kappas = np.array([c[j, j + 1] for j in range(k - 1)])
    kappas[-1] = abs(kappas[-1])
    return kappas


def geodesic_frenet_curvatures(a: np.ndarray, b: np.ndarray, m: int,
                               unit_tol: float = 1e-8) -> FrenetData:
    """Frenet curvatures of the unit-speed geodesic with split (A, B).

    Works on the vectorized derivative columns vec(M_j; N_j), j = 1..m, whose
    inner products are time-independent, so the curvatures computed at t = 0
    hold along the whole curve.  Produces kappa_1 ... kappa_{min(k, m) - 1}.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    p = a.shape[0]
    if m > 2 * p * p:
        raise DimensionError(f"at most {2 * p * p} derivative columns exist, requested {m}")
    if m < 1:
        raise DomainError("need at least one derivative column")
    speed_sq = float(np.sum(a ** 2) + np.sum(b ** 2))
    if abs(speed_sq - 1.0) > unit_tol:
        raise NormalizationError(
            f"(A, B) must be unit speed; got ||A||^2 + ||B||^2 = {speed_sq:.6g}")

    coeffs = stiefel.geodesic_derivative_coeffs(a, b, m + 1)
    gamma = np.column_stack([matcore.vec(coeffs.block(j)) for j in range(1, m + 1)])
    gamma_dot = np.column_stack([matcore.vec(coeffs.block(j)) for j in range(2, m + 2)])
    frame, r = frenet_from_derivatives(gamma)
    k = frame.shape[1]
    kappas = _curvatures_from_factors(gamma, gamma_dot, r, k)
    return FrenetData(frame=frame, curvatures=kappas, effective_dim=k)


# ---------------------------------------------------------------------------
# finite-difference curvature profile
# ---------------------------------------------------------------------------

def finite_difference_weights(nodes: np.ndarray, x0: float, order: int) -> np.ndarray:
    """Fornberg weights: f^(order)(x0) ~= sum_i w_i f(nodes_i)."""
    nodes = np.asarray(nodes, dtype=float)
    n = len(nodes)
    if order >= n:
        raise DomainError("need more nodes than the derivative order")
    c = np.zeros((n, order + 1))
    c1 = 1.0
    c4 = nodes[0] - x0
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, order)
        c2 = 1.0
        c5 = c4
        c4 = nodes[i] - x0
        for j in range(i):
            c3 = nodes[i] - nodes[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, order]


def _stencil_nodes(t: float, order: int, hull: tuple[float, float]):
    """Centered 4th-order stencil at t, shifted (with one extra node) near the
    hull boundary.  Step sizes balance truncation against rounding per order."""
    h = np.finfo(float).eps ** (1.0 / (order + 4))
    half = order // 2 + 2
    offsets = np.arange(-half, half + 1, dtype=float)
    lo, hi = hull
    if hi - lo < (2 * half) * h:
        raise ResolutionError(
            f"parameter hull of length {hi - lo:.3g} cannot hold an order-{order} stencil")
    nodes = t + h * offsets
    if nodes[0] < lo or nodes[-1] > hi:
        offsets = np.arange(-half, half + 2, dtype=float)  # extra node keeps accuracy
        nodes = t + h * offsets
        if nodes[0] < lo:
            nodes += lo - nodes[0]
        if nodes[-1] > hi:
            nodes -= nodes[-1] - hi
    return nodes


@dataclass(frozen=True, eq=False)
class CurvatureProfile:
    """Per-grid-point Frenet curvatures of a sampled curve.

    ``kappas[i, j-1]`` holds kappa_j at t[i] (NaN beyond the effective
    frame dimension at that point); curvatures are per unit arc length.
    """

    t: np.ndarray             # (T,)
    kappas: np.ndarray        # (T, m - 1)
    effective_dim: np.ndarray # (T,)
    speed: np.ndarray         # (T,)


def curvature_profile(evaluator, t_grid, m: int) -> CurvatureProfile:
    """Numerical Frenet curvatures along a curve given only by an evaluator.

    ``evaluator(t)`` must return the curve point (any fixed array shape) for
    scalar t anywhere inside the convex hull of ``t_grid``.  Derivatives are
    taken by 4th-order-accurate finite differences, ``m`` of them, yielding
    kappa_1 ... kappa_{m-1} per grid point.  This path is independent of the
    closed-form derivative recursion and serves as its cross-check.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size < 2:
        raise DomainError("t_grid must be a 1-d array with at least two points")
    if m < 2:
        raise DomainError("need m >= 2 derivative columns for any curvature")
    hull = (float(t_grid.min()), float(t_grid.max()))

    n_t = t_grid.size
    kappas = np.full((n_t, m - 1), np.nan)
    dims = np.zeros(n_t, dtype=int)
    speeds = np.zeros(n_t)
    for idx, t in enumerate(t_grid):
        cols = []
        for order in range(1, m + 1):
            nodes = _stencil_nodes(float(t), order, hull)
            weights = finite_difference_weights(nodes, float(t), order)
            samples = np.stack([np.ravel(np.asarray(evaluator(tt), dtype=float))
                                for tt in nodes], axis=1)
            cols.append(samples @ weights)
        d = np.column_stack(cols)
        speed = float(np.linalg.norm(d[:, 0]))
        if speed <= 1e-10:
            raise DegenerateCurveError(f"curve speed vanishes at t = {t}")
        frame, r = frenet_from_derivatives(d)
        k = frame.shape[1]
        kk = _curvatures_from_factors(d, d[:, 1:], r, k) / speed
        kappas[idx, :len(kk)] = kk
        dims[idx] = k
        speeds[idx] = speed
    return CurvatureProfile(t=t_grid, kappas=kappas, effective_dim=dims, speed=speeds)


# ---------------------------------------------------------------------------
# constant-curvature normal form and periods
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class NormalForm:
    """Superposition-of-circles form of a vectorized geodesic.

    The curve c(t) = vec(exp(tX) (I_p; 0) exp(-tA)) in R^(2 p^2) decomposes
    as dc_offset plus, per component i, a circle of amplitude a_i and
    frequency b_i traced in the invariant plane ``planes[i]``.  Frequencies
    are positive, ascending and pairwise distinct after merging.
    """

    amplitudes: np.ndarray   # (k,)
    frequencies: np.ndarray  # (k,)
    planes: np.ndarray       # (k, N, 2)
    dc_offset: np.ndarray    # (N,)
    source_dim: int

    @property
    def components(self) -> list[tuple[float, float]]:
        """(amplitude, frequency) pairs."""
        return [(float(a), float(b)) for a, b in zip(self.amplitudes, self.frequencies)]

    def speed_squared(self) -> float:
        return float(np.sum(self.amplitudes ** 2 * self.frequencies ** 2))

    def sample(self, ts) -> np.ndarray:
        """Reconstructed curve points, shape (len(ts), N)."""
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        out = np.tile(self.dc_offset, (ts.size, 1))
        for a, b, plane in zip(self.amplitudes, self.frequencies, self.planes):
            out += a * (np.outer(np.cos(b * ts), plane[:, 0])
                        + np.outer(np.sin(b * ts), plane[:, 1]))
        return out


def normal_form(a: np.ndarray, b: np.ndarray, freq_tol: float = 1e-8,
                amp_tol: float = 1e-12) -> NormalForm:
    """Normal form of the geodesic with split (A, B), up to ambient isometry.

    Vectorizing turns the geodesic into t -> exp(tG) c0 with the skew
    generator G = kron_sum(A, X) and c0 = vec(I_p; 0).  Projecting c0 onto
    the invariant planes of G (merged within ``freq_tol`` relative tolerance)
    gives the active amplitudes and frequencies; the kernel projection is the
    constant offset.  Components with amplitude below ``amp_tol * ||c0||``
    are dropped as inactive.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.linalg.norm(a + a.T) > matcore.TOL_SKEW * max(1.0, float(np.linalg.norm(a))):
        raise StructureError("A block must be skew-symmetric")
    p = a.shape[0]
    x = stiefel.geodesic_generator(a, b)
    g = matcore.kron_sum(a, x)
    c0 = matcore.vec(np.vstack([np.eye(p), np.zeros((p, p))]))
    spectrum = matcore.skew_spectrum(g, skew_tol=1e-12 * max(1.0, float(np.linalg.norm(g))))

    dc = spectrum.kernel_basis @ (spectrum.kernel_basis.T @ c0)
    amps: list[float] = []
    freqs: list[float] = []
    planes: list[np.ndarray] = []
    c0_norm = float(np.linalg.norm(c0))
    fmax = float(spectrum.frequencies.max(initial=0.0))
    merge_tol = freq_tol * max(1.0, fmax)

    i = 0
    k = len(spectrum.frequencies)
    while i < k:
        j = i + 1
        while j < k and spectrum.frequencies[j] - spectrum.frequencies[i] <= merge_tol:
            j += 1
        w = np.zeros_like(c0)
        for plane in spectrum.planes[i:j]:
            w += plane @ (plane.T @ c0)
        amp = float(np.linalg.norm(w))
        if amp > amp_tol * c0_norm:
            gw = g @ w
            freq = float(np.linalg.norm(gw)) / amp
            planes.append(np.column_stack([w / amp, gw / (amp * freq)]))
            amps.append(amp)
            freqs.append(freq)
        i = j

    n_dim = 2 * p * p
    return NormalForm(
        amplitudes=np.asarray(amps),
        frequencies=np.asarray(freqs),
        planes=np.stack(planes) if planes else np.zeros((0, n_dim, 2)),
        dc_offset=dc,
        source_dim=n_dim,
    )


def _as_rational(x: float, d_max: int, ratio_tol: float):
    """Smallest-denominator convergent p/q of x with q <= d_max passing
    |x - p/q| <= max(32 eps, ratio_tol / q^2); None when no such convergent
    exists.  The 1/q^2 scaling is what separates genuinely rational ratios
    (which are hit to rounding accuracy) from irrational ones, whose
    convergents only achieve errors of order 1/q^2."""
    floor_tol = 32.0 * np.finfo(float).eps * max(1.0, abs(x))
    a = math.floor(x)
    p_prev, q_prev = 1, 0
    p, q = a, 1
    frac = x - a
    for _ in range(64):
        if abs(x - p / q) <= max(floor_tol, ratio_tol / (q * q)):
            return p, q
        if frac <= 0.0:
            return None
        y = 1.0 / frac
        a = math.floor(y)
        frac = y - a
        p, p_prev = a * p + p_prev, p
        q, q_prev = a * q + q_prev, q
        if q > d_max:
            return None
    return None


def minimal_period(nf: NormalForm, d_max: int = 1_000_000,
                   ratio_tol: float = 1e-9) -> float | None:
    """Smallest T > 0 with b_i T in 2 pi Z for every active frequency.

    Detected through simultaneous rational approximation of the frequency
    ratios by continued-fraction convergents with denominators capped at
    ``d_max``.  Returns None when the frequencies are incommensurable within
    the cap (the curve does not close).
    """
    if len(nf.frequencies) == 0:
        raise DegenerateCurveError("constant curve: no active frequency, no period")
    base = float(nf.frequencies.max())
    denominators = []
    for f in nf.frequencies:
        pq = _as_rational(float(f) / base, d_max, ratio_tol)
        if pq is None:
            return None
        denominators.append(Fraction(*pq).denominator)
    return TWO_PI * math.lcm(*denominators) / base


def geodesic_loop_length(a: np.ndarray, b: np.ndarray, unit_tol: float = 1e-8,
                         d_max: int = 1_000_000, ratio_tol: float = 1e-9) -> float | None:
    """Length of the closed unit-speed geodesic with split (A, B), or None.

    For unit-speed data the loop length equals the minimal period.  Any
    returned length is at least 2 pi (up to 1e-6); that bound holds because
    some active frequency never exceeds 1 at unit speed.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    speed_sq = float(np.sum(a ** 2) + np.sum(b ** 2))
    if abs(speed_sq - 1.0) > unit_tol:
        raise NormalizationError(
            f"(A, B) must be unit speed; got ||A||^2 + ||B||^2 = {speed_sq:.6g}")
    nf = normal_form(a, b)
    if len(nf.frequencies) == 0:
        raise DegenerateCurveError("zero tangent cannot trace a loop")
    period = minimal_period(nf, d_max=d_max, ratio_tol=ratio_tol)
    if period is not None and period < TWO_PI - 1e-6:
        raise StructureError(
            f"detected loop of length {period:.12g} below the 2 pi floor; "
            "this indicates a frequency-detection failure")
    return period
