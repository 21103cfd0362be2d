"""Signal model for spatial-multiplexing MIMO over i.i.d. Rayleigh fading.

A complex ``N_r x N_t`` system ``y_c = H_c x_c + n_c`` is mapped once to a
stacked real form: the channel becomes the ``2N_r x 2N_t`` matrix
``[[Re H, -Im H], [Im H, Re H]]`` and vectors stack real parts over
imaginary parts.  Square M-QAM then factors into two independent
sqrt(M)-PAM coordinates per transmit antenna, so every detector in this
package works on real vectors whose entries live on a small odd-integer
grid.

SNR convention used throughout: the average received SNR per receive
antenna is ``N_t * E_s / sigma2`` where ``E_s`` is the mean complex-symbol
energy (2 for 4-QAM with unit levels) and ``sigma2`` the complex noise
variance.  :func:`sigma2_for_snr_db` is the single source of truth for
that mapping; every output file records it implicitly through the config.

Randomness: all sampling takes an explicit ``numpy.random.Generator``.
Monte Carlo code derives one generator per trial from
``(master_seed, trial_index)`` via :func:`trial_stream`, so serial and
parallel runs consume identical streams.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Constellation",
    "ComplexChannel",
    "RealModel",
    "SymbolVector",
    "NoiseVector",
    "sample_channel",
    "realify",
    "realify_vector",
    "complexify_vector",
    "modulate",
    "demodulate",
    "transmit",
    "sample_noise",
    "sigma2_for_snr_db",
    "trial_stream",
]


@dataclass(frozen=True)
class Constellation:
    """Square M-QAM described by its per-coordinate PAM alphabet."""

    m: int

    def __post_init__(self) -> None:
        root = math.isqrt(self.m)
        if root * root != self.m or root < 2 or (root & (root - 1)) != 0:
            raise ValueError(f"QAM order must be one of 4, 16, 64, ...; got {self.m}")

    @property
    def levels(self) -> int:
        """Number of PAM levels per real coordinate (sqrt of the QAM order)."""
        return math.isqrt(self.m)

    @property
    def pam_points(self) -> np.ndarray:
        """Sorted odd-integer levels, e.g. ``[-3, -1, 1, 3]`` for 16-QAM."""
        lim = self.levels - 1
        return np.arange(-lim, lim + 2, 2, dtype=float)

    @property
    def bits_per_real_dim(self) -> int:
        return self.levels.bit_length() - 1

    @property
    def energy_real(self) -> float:
        """Mean squared PAM level: 1 for 4-QAM, 5 for 16-QAM."""
        return (self.levels**2 - 1) / 3.0

    @property
    def energy_complex(self) -> float:
        """Average complex-symbol energy, twice the per-coordinate energy."""
        return 2.0 * self.energy_real

    def quantize(self, values: np.ndarray) -> np.ndarray:
        """Round to the nearest PAM level, breaking midpoint ties upward."""
        lim = self.levels - 1
        q = 2.0 * np.floor(np.asarray(values, dtype=float) / 2.0) + 1.0
        return np.clip(q, -lim, lim)

    def contains(self, values: np.ndarray) -> bool:
        return bool(np.isin(np.asarray(values), self.pam_points).all())


@dataclass(eq=False)
class ComplexChannel:
    """Complex channel gains, one row per receive antenna."""

    entries: np.ndarray

    def __post_init__(self) -> None:
        e = np.asarray(self.entries, dtype=complex)
        if e.ndim != 2:
            raise ValueError("channel entries must form a 2-D matrix")
        n_rx, n_tx = e.shape
        if n_tx < 1 or n_tx > n_rx:
            raise ValueError(f"need 1 <= n_tx <= n_rx, got n_tx={n_tx}, n_rx={n_rx}")
        self.entries = e

    @property
    def n_rx(self) -> int:
        return self.entries.shape[0]

    @property
    def n_tx(self) -> int:
        return self.entries.shape[1]


@dataclass(eq=False)
class RealModel:
    """Stacked real form of a complex channel.

    The matrix carries the block structure ``[[A, -B], [B, A]]`` with
    ``A = Re H_c`` and ``B = Im H_c``; the constructor rejects anything
    else so downstream code can rely on it.
    """

    h: np.ndarray

    def __post_init__(self) -> None:
        h = np.asarray(self.h, dtype=float)
        if h.ndim != 2 or h.shape[0] % 2 or h.shape[1] % 2:
            raise ValueError("real channel matrix must be 2-D with even dimensions")
        nr, nt = h.shape[0] // 2, h.shape[1] // 2
        same_diag = np.array_equal(h[:nr, :nt], h[nr:, nt:])
        skew_off = np.array_equal(h[:nr, nt:], -h[nr:, :nt])
        if not (same_diag and skew_off):
            raise ValueError("matrix does not have the stacked real block structure")
        self.h = h

    @property
    def dim_rx(self) -> int:
        return self.h.shape[0]

    @property
    def dim_tx(self) -> int:
        return self.h.shape[1]

    @property
    def n_rx(self) -> int:
        return self.dim_rx // 2

    @property
    def n_tx(self) -> int:
        return self.dim_tx // 2


@dataclass(eq=False)
class SymbolVector:
    """Real symbol vector constrained to the constellation grid."""

    values: np.ndarray
    constellation: Constellation

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1:
            raise ValueError("symbol vector must be 1-D")
        if not self.constellation.contains(v):
            raise ValueError("symbol vector has components outside the constellation")
        self.values = v

    def __len__(self) -> int:
        return self.values.size


@dataclass(eq=False)
class NoiseVector:
    """Stacked real noise with the complex variance it was drawn from."""

    values: np.ndarray
    sigma2: float

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size % 2:
            raise ValueError("noise vector must be 1-D with even length")
        if self.sigma2 < 0:
            raise ValueError("noise variance must be nonnegative")
        self.values = v


def sample_channel(n_tx: int, n_rx: int, rng: np.random.Generator) -> ComplexChannel:
    """Draw i.i.d. unit-variance complex Gaussian gains (halved per part)."""
    if n_tx < 1 or n_tx > n_rx:
        raise ValueError(f"need 1 <= n_tx <= n_rx, got n_tx={n_tx}, n_rx={n_rx}")
    scale = math.sqrt(0.5)
    re = rng.standard_normal((n_rx, n_tx)) * scale
    im = rng.standard_normal((n_rx, n_tx)) * scale
    return ComplexChannel(re + 1j * im)


def realify(hc: ComplexChannel) -> RealModel:
    """Stack a complex channel into its real block form."""
    a = hc.entries.real
    b = hc.entries.imag
    return RealModel(np.block([[a, -b], [b, a]]))


def realify_vector(values: np.ndarray) -> np.ndarray:
    """Stack a complex vector as [real parts; imaginary parts]."""
    v = np.asarray(values)
    if v.ndim != 1:
        raise ValueError("expected a 1-D complex vector")
    return np.concatenate([v.real.astype(float), v.imag.astype(float)])


def complexify_vector(values: np.ndarray) -> np.ndarray:
    """Inverse of :func:`realify_vector`."""
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or v.size % 2:
        raise ValueError("expected a 1-D real vector of even length")
    n = v.size // 2
    return v[:n] + 1j * v[n:]


def _gray_decode(g: np.ndarray, width: int) -> np.ndarray:
    k = g.copy()
    shift = 1
    while shift < width:
        k ^= k >> shift
        shift <<= 1
    return k


def modulate(bits: np.ndarray, c: Constellation, n_tx: int) -> SymbolVector:
    """Gray-map a bit vector onto the PAM grid, one group per real coordinate.

    The first ``n_tx`` groups become the real parts of the complex symbols
    and the next ``n_tx`` groups the imaginary parts.  All-zero bits map to
    the top level; for 4-QAM the single bit maps 0 -> +1, 1 -> -1.
    """
    bits = np.asarray(bits)
    b = c.bits_per_real_dim
    expected = 2 * n_tx * b
    if bits.size != expected:
        raise ValueError(f"expected {expected} bits, got {bits.size}")
    if bits.size and not np.isin(bits, (0, 1)).all():
        raise ValueError("bits must be 0 or 1")
    groups = bits.reshape(2 * n_tx, b).astype(np.int64)
    weights = 1 << np.arange(b - 1, -1, -1)
    k = _gray_decode(groups @ weights, b)
    values = (c.levels - 1) - 2 * k
    return SymbolVector(values.astype(float), c)


def demodulate(d: SymbolVector, c: Constellation) -> np.ndarray:
    """Exact inverse of :func:`modulate` on the constellation grid."""
    v = c.quantize(d.values)
    k = (((c.levels - 1) - v) / 2).astype(np.int64)
    g = k ^ (k >> 1)
    b = c.bits_per_real_dim
    shifts = np.arange(b - 1, -1, -1)
    bits = (g[:, None] >> shifts[None, :]) & 1
    return bits.reshape(-1)


def transmit(rm: RealModel, x: SymbolVector, noise: NoiseVector) -> np.ndarray:
    """Received vector ``H x + n`` in the real model."""
    if len(x) != rm.dim_tx:
        raise ValueError(f"symbol vector length {len(x)} != {rm.dim_tx}")
    if noise.values.size != rm.dim_rx:
        raise ValueError(f"noise vector length {noise.values.size} != {rm.dim_rx}")
    return rm.h @ x.values + noise.values


def sample_noise(n_rx: int, sigma2: float, rng: np.random.Generator) -> NoiseVector:
    """Draw stacked real noise; each coordinate has variance sigma2 / 2."""
    if n_rx < 1:
        raise ValueError("need at least one receive antenna")
    if sigma2 < 0:
        raise ValueError("noise variance must be nonnegative")
    values = rng.standard_normal(2 * n_rx) * math.sqrt(sigma2 / 2.0)
    return NoiseVector(values, sigma2)


def sigma2_for_snr_db(snr_db: float, n_tx: int, c: Constellation) -> float:
    """Complex noise variance giving the requested received SNR per antenna."""
    return n_tx * c.energy_complex / (10.0 ** (snr_db / 10.0))


def trial_stream(master_seed: int, *path: int) -> np.random.Generator:
    """Independent generator for one trial, keyed by (master seed, indices)."""
    return np.random.default_rng([master_seed, *path])
