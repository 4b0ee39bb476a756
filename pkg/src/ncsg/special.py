"""Complex Gamma function (Lanczos approximation with reflection)."""
from __future__ import annotations

import numpy as np

# g = 7, n = 9 coefficients; relative error ~1e-15 on Re s >= 1/2
_G = 7.0
_COEF = np.array([
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
])
_HALF_LOG_2PI = 0.5 * np.log(2.0 * np.pi)


class PoleError(ValueError):
    """Gamma evaluated at a nonpositive integer."""


def _log_sin_pi(s: np.ndarray) -> np.ndarray:
    """``log(sin(pi s))`` up to a multiple of ``2 pi i``, without overflow for large ``|Im s|``."""
    z = np.pi * s
    up = z.imag >= 0
    out = np.empty_like(z)
    zu, zd = z[up], z[~up]
    # within rounding of a pole the log is -inf and Gamma overflows to inf, as it should
    with np.errstate(divide="ignore"):
        out[up] = -1j * zu + np.log(0.5j) + np.log1p(-np.exp(2j * zu))
        out[~up] = 1j * zd + np.log(-0.5j) + np.log1p(-np.exp(-2j * zd))
    return out


def _lanczos_loggamma(s: np.ndarray) -> np.ndarray:
    s = s - 1.0
    x = np.full_like(s, _COEF[0])
    for k in range(1, len(_COEF)):
        x = x + _COEF[k] / (s + k)
    t = s + _G + 0.5
    return _HALF_LOG_2PI + (s + 0.5) * np.log(t) - t + np.log(x)


def loggamma(s):
    """A logarithm of ``Gamma(s)`` (branch unspecified); exact modulus via ``.real``."""
    arr = np.asarray(s, dtype=complex)
    flat = np.atleast_1d(arr).ravel()
    poles = (flat.imag == 0) & (flat.real <= 0) & (flat.real == np.round(flat.real))
    if np.any(poles):
        raise PoleError(f"Gamma has a pole at {flat[poles][0].real:g}")
    out = np.empty_like(flat)
    right = flat.real >= 0.5
    out[right] = _lanczos_loggamma(flat[right])
    left = flat[~right]
    # reflection: Gamma(s) Gamma(1 - s) = pi / sin(pi s)
    out[~right] = np.log(np.pi) - _log_sin_pi(left) - _lanczos_loggamma(1.0 - left)
    out = out.reshape(arr.shape)
    return out[()] if out.ndim == 0 else out


def gamma_fn(s):
    """Complex Gamma function; raises PoleError at nonpositive integers."""
    return np.exp(loggamma(s))
