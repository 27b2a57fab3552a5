"""Pure numpy implementation of the response kernels.

Selected automatically when the compiled ``_kernels`` extension is not
available. Both modules expose the same functions with the same semantics.
"""
import numpy as np
from scipy.special import gammaln, xlog1py, xlogy

NAME = "python"


def binom_pmf(x, m, p):
    """Binomial pmf evaluated in log space; zero outside ``0 <= x <= m``."""
    x = np.asarray(x, dtype=float)
    m = np.asarray(m, dtype=float)
    x, m = np.broadcast_arrays(x, m)
    valid = (x >= 0) & (x <= m)
    xv = np.where(valid, x, 0.0)
    mv = np.where(valid, m, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        logp = (gammaln(mv + 1) - gammaln(xv + 1) - gammaln(mv - xv + 1)
                + xlogy(xv, p) + xlog1py(mv - xv, -p))
        out = np.where(valid, np.exp(logp), 0.0)
    return out


def response_matrix(eta, p_ct, n_max, k_max):
    """Photocount law ``r[N, k]`` for ``k <= k_max`` incident photons.

    Rows run over ``N = 0 .. min(n_max, 2 k_max)``. When ``n_max <= 2 k_max``
    the last row is the saturation bin holding all mass at ``N >= n_max``;
    otherwise saturation can never be reached and every row is exact.
    """
    eta = float(eta)
    p_ct = float(p_ct)
    n_max = int(n_max)
    k_max = int(k_max)
    saturate = n_max <= 2 * k_max
    n_rows = (n_max if saturate else 2 * k_max) + 1
    # rows computed directly from the loss/crosstalk sum
    n_direct = n_rows - 1 if saturate else n_rows
    ks = np.arange(k_max + 1)
    out = np.zeros((n_rows, k_max + 1))
    for n in range(min(k_max, n_direct - 1) + 1):
        detected = binom_pmf(n, ks, eta)
        xs = np.arange(min(n, n_direct - 1 - n) + 1)
        extra = binom_pmf(xs, n, p_ct)
        out[n + xs, :] += np.outer(extra, detected)
    if saturate:
        out[-1] = np.clip(1.0 - out[:-1].sum(axis=0), 0.0, None)
        # fewer than n_max / 2 photons cannot reach the saturation bin
        out[-1, 2 * ks < n_max] = 0.0
    return out
