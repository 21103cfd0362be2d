"""Analytical objects behind the large-system behavior of the search.

The search terminates exactly when no single-coordinate move helps.  The
stronger statement, that a candidate is the global minimum-distance
vector, is equivalent to a family of inequalities on the noise vector,
one per subset of coordinates ("n-updates"): flipping the coordinates in
the subset must not reduce the squared distance.  This module evaluates
those inequalities directly (:func:`check_Ln`, :func:`check_region`),
computes the normalized column cross-correlation statistic whose
concentration at zero links the depth-1 fixed point to the full family
(:func:`z_statistic`, :func:`vw_statistics`), and packages the seeded
Monte Carlo experiments that probe the claims empirically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from . import detect, model
from .model import Constellation, NoiseVector, RealModel, SymbolVector

__all__ = [
    "UpdateTuple",
    "ZSample",
    "RegionReport",
    "ZHistogram",
    "delta_d",
    "check_Ln",
    "check_region",
    "z_statistic",
    "vw_statistics",
    "z_pdf_experiment",
    "RegionUniquenessReport",
    "ml_region_uniqueness_experiment",
    "region_escalation_experiment",
    "DEFAULT_TUPLE_BUDGET",
]

DEFAULT_TUPLE_BUDGET = 100_000


@dataclass(frozen=True)
class UpdateTuple:
    """Strictly increasing 0-based coordinate indices selecting an n-update."""

    indices: tuple[int, ...]

    def __post_init__(self) -> None:
        idx = tuple(int(i) for i in self.indices)
        if len(idx) < 1:
            raise ValueError("an update tuple selects at least one coordinate")
        if any(i < 0 for i in idx):
            raise ValueError("indices must be nonnegative")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError("indices must be strictly increasing")
        object.__setattr__(self, "indices", idx)

    @property
    def n(self) -> int:
        return len(self.indices)

    @classmethod
    def full(cls, dim: int) -> "UpdateTuple":
        return cls(tuple(range(dim)))


@dataclass(frozen=True)
class ZSample:
    """One draw of the cross-correlation statistic."""

    n: int
    value: float
    n_tx: int

    def __post_init__(self) -> None:
        if not math.isfinite(self.value):
            raise ValueError("statistic must be finite")


@dataclass(eq=False)
class RegionReport:
    """Outcome of checking the noise-region inequalities up to depth m."""

    m: int
    margin: float
    violated_tuple: UpdateTuple | None
    exhaustive: bool
    tuples_checked: int

    @property
    def member(self) -> bool:
        return self.violated_tuple is None

    def __post_init__(self) -> None:
        if (self.margin < 0) != (self.violated_tuple is not None):
            raise ValueError("violated tuple must be present exactly when margin < 0")


def _check_indices(u: UpdateTuple, dim: int) -> None:
    if u.indices[-1] >= dim:
        raise ValueError(f"tuple index {u.indices[-1]} out of range for dimension {dim}")


def delta_d(d: SymbolVector, u: UpdateTuple) -> np.ndarray:
    """Update vector ``2 * d`` on the selected coordinates, zero elsewhere.

    Subtracting it negates those coordinates, which stays on the grid for
    any symmetric alphabet; applying it twice returns to ``d``.
    """
    _check_indices(u, len(d))
    out = np.zeros(len(d))
    idx = list(u.indices)
    out[idx] = 2.0 * d.values[idx]
    return out


def check_Ln(
    y: np.ndarray,
    rm: RealModel,
    d: SymbolVector,
    u: UpdateTuple,
) -> tuple[bool, float]:
    """Does the n-update selected by ``u`` fail to improve on ``d``?

    Returns ``(satisfied, margin)`` with
    ``margin = (y - H d + H delta / 2)^T (H delta)``; nonnegative margin
    means negating the selected coordinates does not reduce the squared
    distance.
    """
    y = np.asarray(y, dtype=float)
    hd = rm.h @ d.values
    h_delta = rm.h @ delta_d(d, u)
    margin = float((y - hd + 0.5 * h_delta) @ h_delta)
    return margin >= 0.0, margin


def _level_tuples(
    dim: int,
    n: int,
    budget: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, bool]:
    """Index matrix of n-subsets: exhaustive if they fit the budget, else sampled."""
    total = math.comb(dim, n)
    if total <= budget:
        idx = np.fromiter(
            (i for combo in combinations(range(dim), n) for i in combo),
            dtype=np.intp,
            count=total * n,
        ).reshape(total, n)
        return idx, True
    keys = rng.random((budget, dim))
    idx = np.argpartition(keys, n - 1, axis=1)[:, :n]
    idx.sort(axis=1)
    idx = np.unique(idx, axis=0)
    return idx, False


def check_region(
    noise: np.ndarray | NoiseVector,
    rm: RealModel,
    x: SymbolVector,
    d: SymbolVector,
    m: int,
    tuple_budget: int = DEFAULT_TUPLE_BUDGET,
    rng: np.random.Generator | None = None,
) -> RegionReport:
    """Check the noise-region inequalities for ``d`` at all depths up to ``m``.

    For every n-subset of coordinates (n = 1..m) the inequality
    ``(noise + H(x - d) + w)^T w >= 0`` must hold, where ``w`` sums the
    selected channel columns scaled by the corresponding entries of ``d``.
    When the total tuple count exceeds ``tuple_budget`` the levels are
    subsampled (budget split proportionally to level size, duplicates
    dropped) and the report is marked non-exhaustive.
    """
    if isinstance(noise, NoiseVector):
        noise = noise.values
    noise = np.asarray(noise, dtype=float)
    dim = rm.dim_tx
    if not 1 <= m <= dim:
        raise ValueError(f"depth m={m} out of range [1, {dim}]")
    if noise.shape != (rm.dim_rx,):
        raise ValueError(f"noise vector length {noise.size} != {rm.dim_rx}")
    if rng is None:
        rng = np.random.default_rng(0)

    residual = noise + rm.h @ (x.values - d.values)
    cols = rm.h * d.values[None, :]

    counts = [math.comb(dim, n) for n in range(1, m + 1)]
    total = sum(counts)
    budgets = [c for c in counts]
    if total > tuple_budget:
        budgets = [max(1, int(tuple_budget * c / total)) for c in counts]

    worst = math.inf
    worst_tuple: UpdateTuple | None = None
    checked = 0
    exhaustive = True
    for n, budget in zip(range(1, m + 1), budgets):
        idx, full = _level_tuples(dim, n, budget, rng)
        exhaustive = exhaustive and full
        for start in range(0, idx.shape[0], 8192):
            block = idx[start : start + 8192]
            w = cols[:, block.reshape(-1)].reshape(rm.dim_rx, block.shape[0], n).sum(axis=2)
            margins = residual @ w + np.einsum("ij,ij->j", w, w)
            j = int(np.argmin(margins))
            if margins[j] < worst:
                worst = float(margins[j])
                worst_tuple = UpdateTuple(tuple(int(i) for i in block[j]))
            checked += block.shape[0]
    violated = worst_tuple if worst < 0 else None
    return RegionReport(
        m=m,
        margin=worst,
        violated_tuple=violated,
        exhaustive=exhaustive,
        tuples_checked=checked,
    )


def z_statistic(rm: RealModel, d: SymbolVector, u: UpdateTuple) -> ZSample:
    """Normalized cross-correlation of the selected channel columns.

    Sum of ``h_j^T h_k d_j d_k`` over pairs inside the tuple, divided by
    the total squared norm of the selected columns.  Concentrates at zero
    as the system grows.
    """
    _check_indices(u, rm.dim_tx)
    idx = list(u.indices)
    cols = rm.h[:, idx]
    scaled = cols * d.values[idx][None, :]
    total = scaled.sum(axis=1)
    cross = 0.5 * float(total @ total - np.einsum("ij,ij->", scaled, scaled))
    denom = float(np.einsum("ij,ij->", cols, cols))
    return ZSample(n=u.n, value=cross / denom, n_tx=rm.n_tx)


def vw_statistics(rm: RealModel, d: SymbolVector, u: UpdateTuple) -> tuple[float, float]:
    """Relative weight of the newest column against the accumulated sum.

    For the tuple ``(i_1, ..., i_m)`` let ``a`` be the sum of the first
    ``m - 1`` scaled columns and ``b`` the last one.  Returns
    ``v = 2 a^T b / (|a|^2 + |h_m|^2)`` and ``w = v + 1``; for unit
    symbols ``w`` equals ``|a + b|^2 / (|h_m|^2 + |a|^2)`` and tends to 1
    as the system grows.
    """
    _check_indices(u, rm.dim_tx)
    if u.n < 2:
        raise ValueError("statistic needs a tuple of at least two coordinates")
    idx = list(u.indices)
    cols = rm.h[:, idx] * d.values[idx][None, :]
    a = cols[:, :-1].sum(axis=1)
    b = cols[:, -1]
    h_last = rm.h[:, idx[-1]]
    v = 2.0 * float(a @ b) / float(a @ a + h_last @ h_last)
    return v, v + 1.0


@dataclass(eq=False)
class ZHistogram:
    """Normalized histogram of the statistic plus concentration summaries."""

    n_tx: int
    n: int
    trials: int
    bin_edges: np.ndarray
    density: np.ndarray
    sample_std: float
    frac_near_zero: float

    @property
    def bin_width(self) -> float:
        return float(self.bin_edges[1] - self.bin_edges[0])


def z_pdf_experiment(
    n_tx_list: list[int],
    trials: int,
    bins: int = 200,
    master_seed: int = 0,
    near_zero: float = 0.05,
) -> list[ZHistogram]:
    """Empirical distribution of the statistic at full tuple size.

    For each antenna count draws ``trials`` channels, evaluates the
    statistic for the all-ones symbol vector on the full coordinate tuple,
    and bins the samples on [-1, 1] (out-of-range samples are clipped into
    the edge bins, so the densities integrate to exactly one).
    """
    if not n_tx_list:
        raise ValueError("need at least one antenna count")
    if trials < 1:
        raise ValueError("need at least one trial per histogram")
    if bins < 1:
        raise ValueError("need at least one bin")
    c = Constellation(4)
    edges = np.linspace(-1.0, 1.0, bins + 1)
    out = []
    for n_tx in n_tx_list:
        dim = 2 * n_tx
        d = SymbolVector(np.ones(dim), c)
        u = UpdateTuple.full(dim)
        samples = np.empty(trials)
        for t in range(trials):
            rng = model.trial_stream(master_seed, n_tx, t)
            rm = model.realify(model.sample_channel(n_tx, n_tx, rng))
            samples[t] = z_statistic(rm, d, u).value
        counts, _ = np.histogram(np.clip(samples, -1.0, 1.0), bins=edges)
        density = counts / (trials * (2.0 / bins))
        out.append(
            ZHistogram(
                n_tx=n_tx,
                n=dim,
                trials=trials,
                bin_edges=edges,
                density=density,
                sample_std=float(np.std(samples, ddof=1)) if trials > 1 else 0.0,
                frac_near_zero=float(np.mean(np.abs(samples) < near_zero)),
            )
        )
    return out


@dataclass(eq=False)
class RegionUniquenessReport:
    """Tally of the desk-scale uniqueness experiment."""

    draws: int
    zero_member_draws: int
    multi_member_draws: int
    ml_mismatch_draws: int

    @property
    def violations(self) -> int:
        return self.zero_member_draws + self.multi_member_draws + self.ml_mismatch_draws

    @property
    def ok(self) -> bool:
        return self.violations == 0


def ml_region_uniqueness_experiment(
    trials: int,
    snr_db: float,
    master_seed: int,
    n_tx: int = 2,
    qam_order: int = 4,
) -> RegionUniquenessReport:
    """Exhaustively test that exactly one candidate owns the noise draw.

    For each draw, every grid candidate is checked against the full-depth
    region inequalities; membership must single out exactly one candidate
    and it must coincide with the brute-force minimum-distance vector.
    Sized for small systems where both enumerations are exact.
    """
    c = Constellation(qam_order)
    dim = 2 * n_tx
    candidates = detect.symbol_space(c, dim)
    zero_member = multi_member = mismatch = 0
    for t in range(trials):
        rng = model.trial_stream(master_seed, t)
        bits = rng.integers(0, 2, size=dim * c.bits_per_real_dim)
        x = model.modulate(bits, c, n_tx)
        rm = model.realify(model.sample_channel(n_tx, n_tx, rng))
        sigma2 = model.sigma2_for_snr_db(snr_db, n_tx, c)
        nv = model.sample_noise(n_tx, sigma2, rng)
        y = model.transmit(rm, x, nv)
        members = [
            row
            for row in candidates
            if check_region(nv.values, rm, x, SymbolVector(row.copy(), c), m=dim).member
        ]
        if len(members) == 0:
            zero_member += 1
            continue
        if len(members) > 1:
            multi_member += 1
            continue
        d_ml = detect.ml_bruteforce(rm, y, c)
        if not np.array_equal(members[0], d_ml.values):
            mismatch += 1
    return RegionUniquenessReport(
        draws=trials,
        zero_member_draws=zero_member,
        multi_member_draws=multi_member,
        ml_mismatch_draws=mismatch,
    )


def region_escalation_experiment(
    n_tx_list: list[int],
    trials: int,
    snr_db: float,
    master_seed: int,
    qam_order: int = 4,
    initializer: str = "mmse",
    tuple_budget: int = DEFAULT_TUPLE_BUDGET,
) -> list[tuple[int, float]]:
    """Fraction of search fixed points whose noise lies in the full-depth region.

    Every terminal point satisfies the depth-1 inequalities by
    construction; this measures how often the remaining depths follow,
    which should grow with the antenna count.  Returns
    ``(n_tx, member_fraction)`` pairs.
    """
    c = Constellation(qam_order)
    out = []
    for n_tx in n_tx_list:
        dim = 2 * n_tx
        members = 0
        for t in range(trials):
            rng = model.trial_stream(master_seed, n_tx, t)
            bits = rng.integers(0, 2, size=dim * c.bits_per_real_dim)
            x = model.modulate(bits, c, n_tx)
            rm = model.realify(model.sample_channel(n_tx, n_tx, rng))
            sigma2 = model.sigma2_for_snr_db(snr_db, n_tx, c)
            nv = model.sample_noise(n_tx, sigma2, rng)
            y = model.transmit(rm, x, nv)
            result = detect.las_detect(rm, y, sigma2, initializer, c)
            report = check_region(
                nv.values, rm, x, result.d_hat, m=dim, tuple_budget=tuple_budget, rng=rng
            )
            members += int(report.member)
        out.append((n_tx, members / trials))
    return out
