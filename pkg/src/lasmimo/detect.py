"""Detectors for the real-valued model.

Three pieces: linear front ends (matched filter, zero-forcing, MMSE) that
produce a grid-quantized starting point; the greedy likelihood ascent
search, which repeatedly applies the single best cost-decreasing
one-coordinate move and stops at a fixed point; and an exhaustive
minimum-distance oracle for system sizes where full enumeration is
affordable.

The search bookkeeping: with Gram matrix ``G = H^T H`` and residual
correlation ``z = H^T (y - H d)``, changing coordinate ``p`` by a signed
even step ``lam`` changes the squared-distance cost by
``lam^2 * G[p,p] - 2 * lam * z[p]``.  The best step along ``sign(z[p])``
of magnitude ``l`` therefore costs ``l^2 * a_p - 2 * l * |z_p|``, which is
minimized over the even grid by rounding ``|z_p| / (2 a_p)`` and clipping
to the moves the alphabet still allows.  After an accepted move ``z`` is
updated with one column of ``G`` instead of being recomputed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .model import Constellation, RealModel, SymbolVector

__all__ = [
    "INITIALIZERS",
    "DEFAULT_SPACE_CAP",
    "MaxIterationsError",
    "StateConsistencyError",
    "GramMatrix",
    "LasState",
    "DetectionResult",
    "initial_filter",
    "l_opt",
    "cost_delta",
    "las_step",
    "las_detect",
    "ml_bruteforce",
    "fixed_point_margin",
    "symbol_space",
]

INITIALIZERS = ("mf", "zf", "mmse")

# Exhaustive enumeration refuses symbol spaces larger than this.
DEFAULT_SPACE_CAP = 1 << 20
_CACHEABLE_ROWS = 1 << 17
_CHUNK_ROWS = 1 << 15


class MaxIterationsError(RuntimeError):
    """Search exceeded its step budget; strict descent makes this a bug signal."""


class StateConsistencyError(RuntimeError):
    """Incrementally maintained search state drifted from a fresh recompute."""


@dataclass(eq=False)
class GramMatrix:
    """``H^T H`` with its diagonal cached for the per-coordinate step costs."""

    g: np.ndarray
    diag: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        g = np.asarray(self.g, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise ValueError("Gram matrix must be square")
        self.g = g
        self.diag = g.diagonal().copy()

    @classmethod
    def from_real_model(cls, rm: RealModel) -> "GramMatrix":
        return cls(rm.h.T @ rm.h)


@dataclass(eq=False)
class LasState:
    """Mutable search state: candidate, residual correlation, running cost.

    ``clip_events`` counts how many per-coordinate optimal steps had to be
    shortened to stay on the alphabet (a diagnostic, not part of the
    algorithm's decisions).
    """

    d: np.ndarray
    z: np.ndarray
    cost: float
    constellation: Constellation
    iteration: int = 0
    clip_events: int = 0

    @classmethod
    def from_initial(cls, rm: RealModel, y: np.ndarray, d0: SymbolVector) -> "LasState":
        hd = rm.h @ d0.values
        z = rm.h.T @ (y - hd)
        cost = float(hd @ hd - 2.0 * (y @ hd))
        return cls(d=d0.values.copy(), z=z, cost=cost, constellation=d0.constellation)

    def recomputed_z(self, rm: RealModel, y: np.ndarray) -> np.ndarray:
        return rm.h.T @ (y - rm.h @ self.d)

    def recomputed_cost(self, rm: RealModel, y: np.ndarray) -> float:
        hd = rm.h @ self.d
        return float(hd @ hd - 2.0 * (y @ hd))

    def check_consistency(self, rm: RealModel, y: np.ndarray, rel_tol: float = 1e-9) -> None:
        """Raise if the incremental z or cost drifted beyond ``rel_tol``."""
        z_ref = self.recomputed_z(rm, y)
        z_err = np.linalg.norm(self.z - z_ref) / max(np.linalg.norm(z_ref), 1.0)
        if z_err > rel_tol:
            raise StateConsistencyError(f"z drifted by relative {z_err:.3e}")
        c_ref = self.recomputed_cost(rm, y)
        c_err = abs(self.cost - c_ref) / max(abs(c_ref), 1.0)
        if c_err > rel_tol:
            raise StateConsistencyError(f"cost drifted by relative {c_err:.3e}")


@dataclass(eq=False)
class DetectionResult:
    """Fixed point of the search together with how it was reached."""

    d_hat: SymbolVector
    iterations: int
    cost_trajectory: np.ndarray
    initializer: str
    clip_events: int = 0


def initial_filter(
    kind: str,
    rm: RealModel,
    y: np.ndarray,
    sigma2: float,
    c: Constellation,
) -> SymbolVector:
    """Linear front end quantized onto the constellation grid.

    ``mf`` applies ``H^T``, ``zf`` solves the normal equations, and
    ``mmse`` regularizes them with ``(sigma2 / 2) / E_real`` on the
    diagonal (real-coordinate noise variance over mean coordinate energy).
    Quantization breaks midpoint ties toward the positive level, so a
    vanishing filter output lands on the all-positive corner.
    """
    kind = kind.lower()
    if kind not in INITIALIZERS:
        raise ValueError(f"unknown initial filter {kind!r}; expected one of {INITIALIZERS}")
    y = np.asarray(y, dtype=float)
    if y.shape != (rm.dim_rx,):
        raise ValueError(f"received vector length {y.size} != {rm.dim_rx}")
    hty = rm.h.T @ y
    if kind == "mf":
        v = hty
    else:
        gram = rm.h.T @ rm.h
        if kind == "mmse":
            if sigma2 < 0:
                raise ValueError("noise variance must be nonnegative")
            gram = gram + (sigma2 / 2.0) / c.energy_real * np.eye(rm.dim_tx)
        try:
            v = np.linalg.solve(gram, hty)
        except np.linalg.LinAlgError as exc:
            raise np.linalg.LinAlgError(f"{kind} filter needs an invertible Gram matrix") from exc
    return SymbolVector(c.quantize(v), c)


def l_opt(z_p: float, a_p: float, d_p: float, c: Constellation) -> tuple[int, float]:
    """Best even step magnitude along ``sign(z_p)`` for one coordinate.

    Rounds ``|z_p| / (2 a_p)`` to the nearest integer (halves toward zero,
    preferring the smaller of two equal-cost moves), doubles it, then
    clips to the largest move that keeps the coordinate on the alphabet.
    Returns ``(l, direction)``; ``l == 0`` means no useful move.
    """
    if a_p <= 0:
        raise ValueError("Gram diagonal entry must be positive")
    direction = 1.0 if z_p >= 0 else -1.0
    raw = 2 * math.ceil(abs(z_p) / (2.0 * a_p) - 0.5)
    l_max = int(round((c.levels - 1) - direction * d_p))
    return min(raw, l_max), direction


def cost_delta(l: float, z_p: float, a_p: float) -> float:
    """Cost change for a step of magnitude ``l`` along ``sign(z_p)``."""
    return l * l * a_p - 2.0 * l * abs(z_p)


def las_step(state: LasState, gram: GramMatrix) -> bool:
    """Apply the single best cost-decreasing move, if one exists.

    Returns True when a coordinate was updated and False at a fixed point
    (state untouched).  Ties in the best coordinate go to the smallest
    index.
    """
    a = gram.diag
    if a.min() <= 0:
        raise ValueError("Gram diagonal entries must be positive")
    z = state.z
    abs_z = np.abs(z)
    direction = np.where(z >= 0.0, 1.0, -1.0)
    raw = 2.0 * np.ceil(abs_z / (2.0 * a) - 0.5)
    l_max = (state.constellation.levels - 1) - direction * state.d
    state.clip_events += int(np.count_nonzero(raw > l_max))
    l = np.minimum(raw, l_max)
    f = l * l * a - 2.0 * l * abs_z
    s = int(np.argmin(f))
    if f[s] >= 0.0:
        return False
    step = l[s] * direction[s]
    state.d[s] += step
    state.z -= step * gram.g[:, s]
    state.cost += float(f[s])
    state.iteration += 1
    return True


def las_detect(
    rm: RealModel,
    y: np.ndarray,
    sigma2: float,
    init: str,
    c: Constellation,
    max_iters: int | None = None,
) -> DetectionResult:
    """Run the descent search from a linear initial estimate to its fixed point.

    At the returned point no admissible single-coordinate move decreases
    the cost.  ``max_iters`` defaults to ``10 * 2 N_t``; exceeding it
    raises :class:`MaxIterationsError`, which strict descent on a finite
    grid should make impossible.
    """
    if max_iters is None:
        max_iters = 10 * rm.dim_tx
    if max_iters < 1:
        raise ValueError("max_iters must be at least 1")
    d0 = initial_filter(init, rm, y, sigma2, c)
    gram = GramMatrix.from_real_model(rm)
    state = LasState.from_initial(rm, y, d0)
    trajectory = [state.cost]
    while las_step(state, gram):
        trajectory.append(state.cost)
        if state.iteration > max_iters:
            raise MaxIterationsError(f"no fixed point after {state.iteration} updates")
    return DetectionResult(
        d_hat=SymbolVector(state.d.copy(), c),
        iterations=state.iteration,
        cost_trajectory=np.asarray(trajectory),
        initializer=init.lower(),
        clip_events=state.clip_events,
    )


def fixed_point_margin(
    rm: RealModel,
    y: np.ndarray,
    d: SymbolVector,
    c: Constellation,
) -> float:
    """Smallest cost change over all admissible single-coordinate moves.

    Evaluated from a freshly recomputed residual, independently of the
    incremental search bookkeeping.  Nonnegative exactly when ``d`` is a
    fixed point: no coordinate can be moved anywhere on the alphabet
    without raising the squared distance.
    """
    y = np.asarray(y, dtype=float)
    z = rm.h.T @ (y - rm.h @ d.values)
    a = np.einsum("ij,ij->j", rm.h, rm.h)
    lam = c.pam_points[None, :] - d.values[:, None]
    f = lam**2 * a[:, None] - 2.0 * lam * z[:, None]
    f = np.where(lam == 0.0, np.inf, f)
    return float(f.min())


@lru_cache(maxsize=8)
def _cached_space(levels: tuple[float, ...], dim: int) -> np.ndarray:
    return _candidate_rows(np.asarray(levels), dim, 0, len(levels) ** dim)


def _candidate_rows(pam: np.ndarray, dim: int, start: int, stop: int) -> np.ndarray:
    """Rows ``start:stop`` of the lexicographic enumeration of the grid."""
    idx = np.arange(start, stop)
    n_levels = pam.size
    out = np.empty((stop - start, dim))
    for col in range(dim):
        power = n_levels ** (dim - 1 - col)
        out[:, col] = pam[(idx // power) % n_levels]
    return out


def symbol_space(c: Constellation, dim: int, cap: int = DEFAULT_SPACE_CAP) -> np.ndarray:
    """All grid vectors of the given length, lexicographically ordered."""
    size = c.levels**dim
    if size > cap:
        raise ValueError(f"symbol space of size {size} exceeds the cap {cap}")
    if size <= _CACHEABLE_ROWS:
        return _cached_space(tuple(c.pam_points), dim)
    return _candidate_rows(c.pam_points, dim, 0, size)


def ml_bruteforce(
    rm: RealModel,
    y: np.ndarray,
    c: Constellation,
    cap: int = DEFAULT_SPACE_CAP,
) -> SymbolVector:
    """Exact minimum-distance detection by enumerating the whole grid.

    Ties (probability zero under continuous noise) resolve to the
    lexicographically smallest candidate.
    """
    y = np.asarray(y, dtype=float)
    if y.shape != (rm.dim_rx,):
        raise ValueError(f"received vector length {y.size} != {rm.dim_rx}")
    dim = rm.dim_tx
    size = c.levels**dim
    if size > cap:
        raise ValueError(f"symbol space of size {size} exceeds the cap {cap}")
    best_cost = math.inf
    best: np.ndarray | None = None
    ht = rm.h.T
    for start in range(0, size, _CHUNK_ROWS):
        stop = min(start + _CHUNK_ROWS, size)
        if start == 0 and stop == size and size <= _CACHEABLE_ROWS:
            cand = _cached_space(tuple(c.pam_points), dim)
        else:
            cand = _candidate_rows(c.pam_points, dim, start, stop)
        resid = y[None, :] - cand @ ht
        costs = np.einsum("ij,ij->i", resid, resid)
        i = int(np.argmin(costs))
        if costs[i] < best_cost:
            best_cost = float(costs[i])
            best = cand[i]
    assert best is not None
    return SymbolVector(best.copy(), c)
