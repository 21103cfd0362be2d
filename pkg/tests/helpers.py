"""Independent naive re-implementations used as test oracles.

These deliberately avoid the library's incremental bookkeeping: the
residual correlation is recomputed from scratch every iteration and the
best move is found by enumerating every admissible target of every
coordinate.  Only the random-draw order is shared with the library (it
must be, to replay the same data).
"""

import numpy as np


def naive_las(h, y, d0, pam):
    """Plain-loop best-descent search over the alphabet grid.

    Per coordinate, candidate moves are visited in order of increasing
    step size; across coordinates in index order.  Strictly-better-only
    acceptance reproduces the tie rules (smaller move, smaller index).
    Returns the fixed point and the cost trajectory.
    """
    h = np.asarray(h, dtype=float)
    y = np.asarray(y, dtype=float)
    d = np.array(d0, dtype=float)
    pam = sorted(float(p) for p in pam)

    def cost(vec):
        r = y - h @ vec
        return float(r @ r) - float(y @ y)

    trajectory = [cost(d)]
    while True:
        z = h.T @ (y - h @ d)
        best_delta, best_p, best_target = 0.0, None, None
        for p in range(d.size):
            a = float(h[:, p] @ h[:, p])
            moves = sorted((abs(t - d[p]), t) for t in pam if t != d[p])
            for step, target in moves:
                lam = target - d[p]
                delta = lam * lam * a - 2.0 * lam * z[p]
                if delta < best_delta:
                    best_delta, best_p, best_target = delta, p, target
        if best_p is None:
            return d, trajectory
        d[best_p] = best_target
        trajectory.append(trajectory[-1] + best_delta)


def naive_trial_bit_errors(master_seed, trial_index, n_tx, snr_db):
    """Single-file 4-QAM trial: draw, MMSE start, naive search, count errors.

    Replays the library's draw order (bits, then channel real and
    imaginary parts, then noise) but builds everything else from scratch.
    """
    rng = np.random.default_rng([master_seed, trial_index])
    bits = rng.integers(0, 2, size=2 * n_tx)
    x = np.where(bits == 0, 1.0, -1.0)
    scale = np.sqrt(0.5)
    re = rng.standard_normal((n_tx, n_tx)) * scale
    im = rng.standard_normal((n_tx, n_tx)) * scale
    h = np.block([[re, -im], [im, re]])
    sigma2 = n_tx * 2.0 / 10.0 ** (snr_db / 10.0)
    noise = rng.standard_normal(2 * n_tx) * np.sqrt(sigma2 / 2.0)
    y = h @ x + noise
    gram = h.T @ h + (sigma2 / 2.0) * np.eye(2 * n_tx)
    v = np.linalg.solve(gram, h.T @ y)
    d0 = np.where(v >= 0.0, 1.0, -1.0)
    d, _ = naive_las(h, y, d0, (-1.0, 1.0))
    bits_hat = (d < 0).astype(int)
    return int(np.count_nonzero(bits != bits_hat))
