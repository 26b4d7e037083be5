"""SVD-based pseudo-inversion with damped least squares and numerical
filtering of the smallest singular direction."""

from dataclasses import dataclass

import numpy as np

#: singular values below _RANK_TOL * sigma_max are treated as exact zeros
_RANK_TOL = 1e-12


@dataclass(frozen=True)
class DlsConfig:
    kappa: float = 0.01
    sigma_threshold: float = 0.05
    mode: str = "filtered"    # "exact" | "constant" | "filtered"

    def __post_init__(self):
        if self.kappa < 0.0:
            raise ValueError("kappa must be >= 0")
        if self.sigma_threshold <= 0.0:
            raise ValueError("sigma_threshold must be > 0")
        if self.mode not in ("exact", "constant", "filtered"):
            raise ValueError(f"unknown DLS mode {self.mode!r}")


def _svd(J):
    return np.linalg.svd(np.asarray(J, dtype=float))


def dls_inverse(J, kappa):
    """Constant-damping inverse: sum sigma/(sigma^2 + kappa^2) v u^T."""
    U, s, Vt = _svd(J)
    k = len(s)
    gain = s / (s * s + kappa * kappa) if kappa > 0.0 else _exact_gains(s)
    return Vt[:k].T @ (gain[:, None] * U[:, :k].T)


def _exact_gains(s):
    cutoff = _RANK_TOL * (s[0] if s[0] > 0.0 else 1.0)
    return np.where(s > cutoff, 1.0 / np.where(s > cutoff, s, 1.0), 0.0)


def filtered_gains(s, cfg):
    """Per-direction inverse gains of the numerically filtered DLS.

    Directions 1..k-1 are inverted exactly; only the smallest singular
    direction is damped, and only once sigma_k falls below the
    activation threshold.  The damping factor ramps quadratically from
    zero at the threshold so the inverse is continuous in sigma_k.
    """
    gain = _exact_gains(s)
    sk = s[-1]
    if sk < cfg.sigma_threshold:
        ratio = sk / cfg.sigma_threshold
        kappa2 = cfg.kappa ** 2 * (1.0 - ratio * ratio)
        gain[-1] = sk / (sk * sk + kappa2) if (sk > 0.0 or kappa2 > 0.0) else 0.0
    return gain


def filtered_dls_inverse(J, cfg, svd=None):
    """Inverse of J per the configured singularity-handling mode.

    `svd` may carry a precomputed (U, sigma, Vt) triple (e.g. the cache
    on an AugmentedJacobian) to avoid recomputing the decomposition.
    """
    U, s, Vt = svd if svd is not None else _svd(J)
    k = len(s)
    if cfg.mode == "exact":
        gain = _exact_gains(s)
    elif cfg.mode == "constant":
        gain = s / (s * s + cfg.kappa ** 2)
    else:
        gain = filtered_gains(s, cfg)
    return Vt[:k].T @ (gain[:, None] * U[:, :k].T)
