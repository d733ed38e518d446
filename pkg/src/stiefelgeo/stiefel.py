"""Stiefel manifold St(n, p) under the Euclidean (Frobenius) metric.

Points are column-orthonormal n x p matrices, tangents at U are matrices D
with U^T D skew-symmetric.  Geodesics are available in closed form through
the 2p x 2p skew generator [[2A, -B^T], [B, 0]] built from the split
D = U A + Q B; the logarithm is computed by a damped Gauss-Newton shooting
solver.  All operations are pure; curve objects are immutable and safe to
share across parallel workers.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import matcore
from .config import DEFAULT_CONFIG, Config
from .errors import (
    ConvergenceError,
    DomainError,
    RankError,
    StructureError,
    NormalizationError,
    AmbiguityError,
)

TOL_ORTH = 1e-10
TOL_TAN = 1e-10


def _sym(z: np.ndarray) -> np.ndarray:
    return 0.5 * (z + z.T)


@dataclass(frozen=True, eq=False)
class StiefelPoint:
    """A point of St(n, p): an n x p matrix with orthonormal columns."""

    u: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        if u.ndim != 2 or u.shape[0] < u.shape[1]:
            raise DomainError(f"a Stiefel point needs shape n x p with n >= p, got {u.shape}")
        if not np.all(np.isfinite(u)):
            raise DomainError("point contains non-finite entries")
        defect = np.linalg.norm(u.T @ u - np.eye(u.shape[1]))
        if defect > TOL_ORTH:
            raise DomainError(f"columns are not orthonormal (defect {defect:.2e})")
        object.__setattr__(self, "u", u)

    @property
    def n(self) -> int:
        return self.u.shape[0]

    @property
    def p(self) -> int:
        return self.u.shape[1]


@dataclass(frozen=True, eq=False)
class TangentVector:
    """A tangent vector at ``base``: U^T delta is skew-symmetric."""

    base: StiefelPoint
    delta: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.delta, dtype=float)
        if d.shape != self.base.u.shape:
            raise DomainError(f"tangent shape {d.shape} does not match point {self.base.u.shape}")
        if not np.all(np.isfinite(d)):
            raise DomainError("tangent contains non-finite entries")
        a = self.base.u.T @ d
        defect = np.linalg.norm(a + a.T)
        if defect > TOL_TAN * max(1.0, float(np.linalg.norm(d))):
            raise DomainError(f"tangency violated (residual {defect:.2e})")
        object.__setattr__(self, "delta", d)

    @cached_property
    def split(self):
        """Canonical split (A, Q, B) with delta = U A + Q B."""
        return split_tangent(self.base, self.delta)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.delta))

    def __mul__(self, scalar):
        return TangentVector(self.base, float(scalar) * self.delta)

    __rmul__ = __mul__


def project_point(m: np.ndarray) -> StiefelPoint:
    """Closest Stiefel point in Frobenius norm: the orthonormal polar factor."""
    m = np.asarray(m, dtype=float)
    left, sing, right = np.linalg.svd(m, full_matrices=False)
    if sing[-1] <= 1e-12 * max(1.0, sing[0]):
        raise RankError("input matrix is (numerically) rank-deficient")
    return StiefelPoint(left @ right)


def project_tangent(point: StiefelPoint, w: np.ndarray) -> TangentVector:
    """Orthogonal projection of an ambient matrix onto the tangent space.

    delta = W - U sym(U^T W); idempotent, and delta is orthogonal to every
    normal direction U S with S symmetric.
    """
    w = np.asarray(w, dtype=float)
    u = point.u
    return TangentVector(point, w - u @ _sym(u.T @ w))


def metric_inner(t1: TangentVector, t2: TangentVector) -> float:
    """Euclidean metric tr(delta1^T delta2); requires a common base point."""
    if t1.base.u.shape != t2.base.u.shape or \
            np.linalg.norm(t1.base.u - t2.base.u) > TOL_ORTH * np.sqrt(t1.base.p):
        raise DomainError("tangent vectors live at different base points")
    return matcore.frobenius_inner(t1.delta, t2.delta)


def split_tangent(point: StiefelPoint, delta) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Canonical split delta = U A + Q B.

    A = U^T delta is skew; (Q, B) comes from the deterministic thin QR of the
    normal component (I - U U^T) delta, with completion columns chosen
    orthogonal to U whenever n >= 2p leaves room for that.
    """
    if isinstance(delta, TangentVector):
        delta = delta.delta
    delta = np.asarray(delta, dtype=float)
    u = point.u
    a = u.T @ delta
    k = delta - u @ a
    q, b = matcore.thin_qr(k, complete_against=u)
    return a, q, b


def geodesic_generator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """The 2p x 2p skew generator [[2A, -B^T], [B, 0]] of the geodesic flow."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    p = a.shape[0]
    if a.shape != (p, p) or b.shape != (p, p):
        raise DomainError(f"need square p x p blocks, got {a.shape} and {b.shape}")
    x = np.zeros((2 * p, 2 * p))
    x[:p, :p] = 2.0 * a
    x[:p, p:] = -b.T
    x[p:, :p] = b
    return x


@dataclass(frozen=True, eq=False)
class GeodesicCoeffs:
    """Derivative coefficient blocks (M_j; N_j) of a geodesic.

    blocks[j] is the stacked 2p x p matrix (M_j; N_j), starting from
    (M_0; N_0) = (I_p; 0) and following
    (M_{j+1}; N_{j+1}) = X (M_j; N_j) - (M_j A; N_j A).
    """

    a: np.ndarray
    b: np.ndarray
    blocks: np.ndarray  # (j_max + 1, 2p, p)

    @property
    def j_max(self) -> int:
        return self.blocks.shape[0] - 1

    def block(self, j: int) -> np.ndarray:
        return self.blocks[j]

    def m(self, j: int) -> np.ndarray:
        p = self.a.shape[0]
        return self.blocks[j][:p]

    def n(self, j: int) -> np.ndarray:
        p = self.a.shape[0]
        return self.blocks[j][p:]

    def squared_norm(self, j: int) -> float:
        """tr(M_j^T M_j + N_j^T N_j), the constant value of ||gamma^(j)(t)||^2."""
        return float(np.sum(self.blocks[j] ** 2))


def geodesic_derivative_coeffs(a: np.ndarray, b: np.ndarray, j_max: int,
                               skew_tol: float = matcore.TOL_SKEW) -> GeodesicCoeffs:
    """Iterate the coefficient recursion up to order ``j_max``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.linalg.norm(a + a.T) > skew_tol * max(1.0, float(np.linalg.norm(a))):
        raise StructureError("A block must be skew-symmetric")
    if j_max < 0:
        raise DomainError("j_max must be non-negative")
    p = a.shape[0]
    x = geodesic_generator(a, b)
    blocks = np.zeros((j_max + 1, 2 * p, p))
    blocks[0, :p] = np.eye(p)
    for j in range(j_max):
        blocks[j + 1] = x @ blocks[j] - blocks[j] @ a
    return GeodesicCoeffs(a=a, b=b, blocks=blocks)


@dataclass(frozen=True, eq=False)
class GeodesicCurve:
    """Geodesic t -> (U Q) exp(tX) (I_p; 0) exp(-tA), immutable after construction."""

    base: StiefelPoint
    a: np.ndarray
    q: np.ndarray
    b: np.ndarray

    @cached_property
    def generator(self) -> np.ndarray:
        return geodesic_generator(self.a, self.b)

    @cached_property
    def frame(self) -> np.ndarray:
        """The fixed n x 2p coordinate frame (U Q)."""
        return np.hstack([self.base.u, self.q])

    @cached_property
    def speed(self) -> float:
        return float(np.sqrt(np.sum(self.a ** 2) + np.sum(self.b ** 2)))

    @property
    def delta(self) -> np.ndarray:
        return self.base.u @ self.a + self.q @ self.b

    def trajectory(self, ts) -> np.ndarray:
        """Raw curve points; shape (len(ts), n, p)."""
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        p = self.a.shape[0]
        big = matcore.expm(ts[:, None, None] * self.generator)[:, :, :p]
        small = matcore.expm(-ts[:, None, None] * self.a)
        cores = big @ small
        return self.frame @ cores

    def evaluate(self, t: float) -> StiefelPoint:
        return StiefelPoint(self.trajectory(float(t))[0])

    def derivative(self, t: float, j: int) -> np.ndarray:
        """j-th derivative (U Q) exp(tX) (M_j; N_j) exp(-tA); j = 0 gives the point."""
        coeffs = geodesic_derivative_coeffs(self.a, self.b, j)
        core = matcore.expm(float(t) * self.generator) @ coeffs.block(j) \
            @ matcore.expm(-float(t) * self.a)
        return self.frame @ core

    def velocity(self, t: float) -> TangentVector:
        return TangentVector(self.evaluate(t), self.derivative(t, 1))


def geodesic_curve(point: StiefelPoint, tangent: TangentVector) -> GeodesicCurve:
    a, q, b = split_tangent(point, tangent)
    return GeodesicCurve(base=point, a=a, q=q, b=b)


def stiefel_exp(point: StiefelPoint, tangent: TangentVector) -> StiefelPoint:
    """Endpoint of the geodesic from ``point`` with initial velocity ``tangent``."""
    return geodesic_curve(point, tangent).evaluate(1.0)


def kappa1_squared(a: np.ndarray, b: np.ndarray, unit_tol: float = 1e-8) -> float:
    """Squared first Frenet curvature of the unit-speed geodesic with split (A, B).

    kappa_1^2 = ||A^2 - B^T B||_F^2 = tr(A^4) + tr((2 A^T A + B^T B) B^T B),
    which lies in [0, 1] for unit-speed data.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    speed_sq = float(np.sum(a ** 2) + np.sum(b ** 2))
    if abs(speed_sq - 1.0) > unit_tol:
        raise NormalizationError(
            f"(A, B) must be unit speed; got ||A||^2 + ||B||^2 = {speed_sq:.6g}")
    a2 = a @ a
    btb = b.T @ b
    val = float(np.sum((a2 - btb) ** 2))
    return max(val, 0.0)


def random_point(n: int, p: int, seed) -> StiefelPoint:
    """Orthonormal factor of an n x p standard normal matrix; deterministic per seed."""
    rng = np.random.default_rng(seed)
    q, _ = matcore.thin_qr(rng.standard_normal((n, p)))
    return StiefelPoint(q)


def random_tangent(point: StiefelPoint, seed, norm: float = 1.0) -> TangentVector:
    """Projected standard normal matrix, rescaled to the requested norm."""
    rng = np.random.default_rng(seed)
    t = project_tangent(point, rng.standard_normal(point.u.shape))
    current = t.norm
    if current == 0.0:
        raise DomainError("degenerate random draw produced a zero tangent")
    return TangentVector(point, (norm / current) * t.delta)


# ---------------------------------------------------------------------------
# shooting logarithm
# ---------------------------------------------------------------------------

def tangent_basis(point: StiefelPoint) -> np.ndarray:
    """Orthonormal basis of the tangent space, vectorized into an (n p, d) matrix.

    The first p(p-1)/2 columns span the U A directions (skew A), the rest the
    normal directions U_perp E_kl; d = n p - p(p+1)/2.
    """
    u = point.u
    n, p = u.shape
    full, _ = np.linalg.qr(u, mode="complete")
    uperp = full[:, p:]
    cols = []
    inv_sqrt2 = 1.0 / np.sqrt(2.0)
    for i in range(p):
        for j in range(i + 1, p):
            e = np.outer(u[:, i], np.eye(p)[j]) - np.outer(u[:, j], np.eye(p)[i])
            cols.append(matcore.vec(e * inv_sqrt2))
    for k in range(n - p):
        for l in range(p):
            e = np.outer(uperp[:, k], np.eye(p)[l])
            cols.append(matcore.vec(e))
    return np.column_stack(cols) if cols else np.zeros((n * p, 0))


@dataclass
class ShootingResult:
    """Outcome of the shooting solver.

    ``solutions`` lists distinct converged tangents sorted by norm;
    ``delta`` is the minimum-norm one (or the best attempt on failure).
    """

    delta: TangentVector
    converged: bool
    iterations: int
    residual: float
    solutions: list
    ambiguous: bool


class _Shooter:
    """Batched evaluation of the endpoint map and its shooting residual.

    The tangent is parameterized by coordinates in a fixed orthonormal basis
    of T_U; the residual is the full ambient endpoint mismatch
    vec(Exp_U(delta(x)) - V), attacked by damped least-squares Gauss-Newton.
    (Near a solution the mismatch lies in T_V, so the square Jacobian picture
    is recovered in the limit; as a merit function far from the solution the
    tangent-projected residual is non-monotone and stalls the line search.)
    The internal QR here may complete rank-deficient normal parts differently
    from the canonical split; the endpoint map does not depend on that choice.
    """

    def __init__(self, u: StiefelPoint, v: StiefelPoint, cfg: Config):
        self.cfg = cfg
        self.u = u.u
        self.v = v.u
        self.n, self.p = u.u.shape
        self.basis_u = tangent_basis(u)
        self.dim = self.basis_u.shape[1]

    def tangent_from_coords(self, x: np.ndarray) -> np.ndarray:
        flat = self.basis_u @ x
        return matcore.unvec(flat, self.n, self.p)

    def coords_from_tangent(self, delta: np.ndarray) -> np.ndarray:
        return self.basis_u.T @ matcore.vec(delta)

    def endpoints(self, xs: np.ndarray) -> np.ndarray:
        """Exp_U(delta(x)) for a stack of coordinate vectors xs of shape (k, d)."""
        k = xs.shape[0]
        n, p = self.n, self.p
        flat = xs @ self.basis_u.T                      # (k, n p), column-stacked
        deltas = flat.reshape(k, p, n).transpose(0, 2, 1)
        a = self.u.T @ deltas                           # (k, p, p), exactly skew
        kmat = deltas - self.u @ a
        q, b = np.linalg.qr(kmat)
        sign = np.where(np.diagonal(b, axis1=-2, axis2=-1) < 0.0, -1.0, 1.0)
        q = q * sign[:, None, :]
        b = b * sign[:, :, None]
        x2 = np.zeros((k, 2 * p, 2 * p))
        x2[:, :p, :p] = 2.0 * a
        x2[:, :p, p:] = -np.transpose(b, (0, 2, 1))
        x2[:, p:, :p] = b
        core = matcore.expm(x2)[:, :, :p] @ matcore.expm(-a)
        return self.u @ core[:, :p, :] + q @ core[:, p:, :]

    def residuals(self, xs: np.ndarray) -> np.ndarray:
        """Vectorized endpoint mismatches, shape (k, n p)."""
        mism = self.endpoints(xs) - self.v
        return mism.transpose(0, 2, 1).reshape(xs.shape[0], -1)

    def gauss_newton(self, x0: np.ndarray):
        """Damped Gauss-Newton from x0; returns (x, residual, iterations, converged).

        Iterates past ``tol_shoot`` down to the rounding floor so converged
        solutions come back polished; steps are capped at max(1, ||x||) to
        keep iterates from jumping between solution basins.
        """
        cfg = self.cfg
        d = self.dim
        x = np.asarray(x0, dtype=float)
        res = self.residuals(x[None])[0]
        full = float(np.linalg.norm(res))
        floor = 1e-13 * max(1.0, np.sqrt(self.p))
        iterations = 0
        for iterations in range(1, cfg.max_iter + 1):
            if full <= floor:
                break
            h = cfg.fd_step_scale * (1.0 + float(np.linalg.norm(x)))
            probes = np.concatenate([x + h * np.eye(d), x - h * np.eye(d)])
            probe_res = self.residuals(probes)
            jac = (probe_res[:d] - probe_res[d:]).T / (2.0 * h)
            step = np.linalg.lstsq(jac, -res, rcond=None)[0]
            cap = max(1.0, float(np.linalg.norm(x)))
            step_norm = float(np.linalg.norm(step))
            if step_norm > cap:
                step *= cap / step_norm
            alpha = 1.0
            accepted = False
            for _ in range(cfg.max_halvings):
                xn = x + alpha * step
                rn = self.residuals(xn[None])[0]
                fn = float(np.linalg.norm(rn))
                if fn < full:
                    x, res, full = xn, rn, fn
                    accepted = True
                    break
                alpha *= 0.5
            if not accepted:
                break
        return x, full, iterations, full <= cfg.tol_shoot


def log_shoot(point: StiefelPoint, target: StiefelPoint, cfg: Config = DEFAULT_CONFIG,
              extra_starts: int = 0, seed=0, start_scale: float | None = None) -> ShootingResult:
    """Shooting solver for the Riemannian logarithm.

    Runs damped Gauss-Newton from the canonical initial guess
    project_tangent(U, V - U), plus ``extra_starts`` randomly perturbed
    starts (perturbation radius ``start_scale``, default
    0.3 * max(||guess||, 1)).  Never raises on non-convergence; inspect the
    returned flags instead.
    """
    if point.u.shape != target.u.shape:
        raise DomainError("points live on different Stiefel manifolds")
    shooter = _Shooter(point, target, cfg)
    guess = shooter.coords_from_tangent(project_tangent(point, target.u - point.u).delta)
    if start_scale is None:
        start_scale = cfg.multi_start_scale * max(float(np.linalg.norm(guess)), 1.0)
    rng = np.random.default_rng(seed)
    starts = [guess]
    for _ in range(extra_starts):
        direction = rng.standard_normal(shooter.dim)
        norm = np.linalg.norm(direction)
        if norm > 0:
            starts.append(guess + start_scale * direction / norm)

    runs = [shooter.gauss_newton(x0) for x0 in starts]
    converged = [(x, res, its) for x, res, its, ok in runs if ok]

    if not converged:
        best = min(runs, key=lambda r: r[1])
        delta = TangentVector(point, shooter.tangent_from_coords(best[0]))
        return ShootingResult(delta=delta, converged=False, iterations=best[2],
                              residual=best[1], solutions=[], ambiguous=False)

    converged.sort(key=lambda r: float(np.linalg.norm(r[0])))
    distinct = []
    for x, res, its in converged:
        scale = max(1.0, float(np.linalg.norm(x)))
        if all(np.linalg.norm(x - y[0]) > 1e-6 * scale for y in distinct):
            distinct.append((x, res, its))
    solutions = [TangentVector(point, shooter.tangent_from_coords(x)) for x, _, _ in distinct]
    ambiguous = False
    if len(distinct) >= 2:
        n0 = float(np.linalg.norm(distinct[0][0]))
        n1 = float(np.linalg.norm(distinct[1][0]))
        ambiguous = abs(n0 - n1) <= 1e-6 * max(1.0, n0)
    return ShootingResult(delta=solutions[0], converged=True, iterations=distinct[0][2],
                          residual=distinct[0][1], solutions=solutions, ambiguous=ambiguous)


def stiefel_log(point: StiefelPoint, target: StiefelPoint, cfg: Config = DEFAULT_CONFIG,
                extra_starts: int = 0, seed=0) -> TangentVector:
    """Riemannian logarithm: the minimum-norm tangent with Exp_U(delta) = V.

    Intended for dist(U, V) < pi, where the solution is unique.  Raises
    ConvergenceError when no start converges and AmbiguityError when several
    distinct solutions of equal norm are found (expected exactly at
    distance pi).
    """
    result = log_shoot(point, target, cfg=cfg, extra_starts=extra_starts, seed=seed)
    if not result.converged:
        raise ConvergenceError(
            f"shooting solver stalled at residual {result.residual:.3e}",
            best_residual=result.residual, iterations=result.iterations)
    if result.ambiguous:
        raise AmbiguityError(
            "multiple minimum-norm tangents reach the target point",
            solutions=result.solutions)
    return result.delta
