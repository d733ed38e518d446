"""Independent oracles used by the test suite.

Each oracle deliberately avoids the code path it checks: truncated Taylor
series for the matrix exponential, a dense complex eigensolver for Kronecker
sums, and Gauss-Legendre quadrature for arc length.
"""

import numpy as np


def taylor_expm(x: np.ndarray, terms: int = 30) -> np.ndarray:
    """Truncated Taylor series at a scaled argument, then repeated squaring."""
    x = np.asarray(x, dtype=float)
    norm = np.linalg.norm(x, 1)
    squarings = max(0, int(np.ceil(np.log2(norm / 0.5)))) if norm > 0.5 else 0
    a = x / (2.0 ** squarings)
    result = np.eye(x.shape[0])
    term = np.eye(x.shape[0])
    for k in range(1, terms + 1):
        term = term @ a / k
        result = result + term
    for _ in range(squarings):
        result = result @ result
    return result


def eigenvalue_pair_sums(a: np.ndarray, x: np.ndarray) -> np.ndarray:
    """All pairwise sums of eigenvalues of a and x."""
    ev_a = np.linalg.eigvals(a)
    ev_x = np.linalg.eigvals(x)
    return np.array([va + vx for va in ev_a for vx in ev_x])


def multiset_match_distance(got: np.ndarray, expected: np.ndarray) -> float:
    """Largest gap in a greedy nearest-neighbor matching of two complex multisets."""
    remaining = list(expected)
    worst = 0.0
    for value in got:
        gaps = [abs(value - other) for other in remaining]
        idx = int(np.argmin(gaps))
        worst = max(worst, gaps[idx])
        remaining.pop(idx)
    return worst


def quadrature_arc_length(speed_fn, t0: float, t1: float, nodes: int = 64) -> float:
    """Gauss-Legendre quadrature of a scalar speed function over [t0, t1]."""
    xs, ws = np.polynomial.legendre.leggauss(nodes)
    mid, half = 0.5 * (t0 + t1), 0.5 * (t1 - t0)
    return float(half * sum(w * speed_fn(mid + half * x) for x, w in zip(xs, ws)))


def random_rank_deficient(rng, n: int, p: int, rank: int) -> np.ndarray:
    """Random n x p matrix of the given rank."""
    return rng.standard_normal((n, rank)) @ rng.standard_normal((rank, p))
