"""Shared helpers for the test suite."""

import math

import numpy as np

from catbell import ChannelParams


def channel_for(alpha: float, alpha_prime: float, loss_db_per_km: float = 0.2) -> ChannelParams:
    """Channel whose transmittance maps amplitude alpha down to alpha_prime."""
    eta = (alpha_prime / alpha) ** 2
    if eta >= 1.0:
        return ChannelParams(loss_db_per_km, 0.0)
    km = -10.0 * math.log10(eta) / loss_db_per_km
    return ChannelParams(loss_db_per_km, km)


def coherent_series(nu: complex, dim: int = 32) -> np.ndarray:
    """Independent number-basis expansion used as an in-test oracle.

    Plain series evaluation c_n = e^{-|nu|^2/2} nu^n / sqrt(n!), written out
    here so state-algebra tests do not lean on the package's own Fock module.
    """
    n = np.arange(dim)
    log_fact = np.concatenate(([0.0], np.cumsum(np.log(np.arange(1.0, dim)))))
    out = np.exp(-0.5 * abs(nu) ** 2 - 0.5 * log_fact) * np.power(complex(nu), n)
    return out
