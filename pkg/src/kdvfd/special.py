"""Complete elliptic integral K(m) and Jacobi cn/sn/dn by the arithmetic-geometric mean."""

from __future__ import annotations

import math

import numpy as np


def _check_m(m):
    if not (0.0 <= m < 1.0):
        raise ValueError(f"elliptic parameter m must lie in [0, 1), got {m}")


def elliptic_K(m: float) -> float:
    """K(m) = int_0^{pi/2} dt / sqrt(1 - m sin^2 t) = pi / (2 AGM(1, sqrt(1-m)))."""
    _check_m(m)
    a, b = 1.0, math.sqrt(1.0 - m)
    for _ in range(64):
        if abs(a - b) <= 1e-16 * a:
            break
        a, b = (a + b) / 2, math.sqrt(a * b)
    return math.pi / (a + b)


def jacobi_ellipj(z, m: float):
    """(sn, cn, dn) of real argument z, parameter m in [0, 1).

    Descending Landen sequence: run the AGM keeping c_n = (a_{n-1} - b_{n-1})/2,
    start from phi_N = 2^N a_N z and recur phi_{n-1} = (phi_n + asin(c_n sin(phi_n)/a_n))/2.
    """
    _check_m(m)
    z = np.asarray(z, dtype=float)
    if m == 0.0:
        return np.sin(z), np.cos(z), np.ones_like(z)
    a = [1.0]
    c = [math.sqrt(m)]
    b = math.sqrt(1.0 - m)
    while abs(c[-1]) > 1e-16 and len(a) < 64:
        an, bn = a[-1], b
        a.append((an + bn) / 2)
        c.append((an - bn) / 2)
        b = math.sqrt(an * bn)
    N = len(a) - 1
    phi = (2.0**N) * a[N] * z
    for n in range(N, 0, -1):
        phi = (phi + np.arcsin(np.clip(c[n] * np.sin(phi) / a[n], -1.0, 1.0))) / 2
    sn = np.sin(phi)
    # dn > 0 on the real line for m < 1
    return sn, np.cos(phi), np.sqrt(1.0 - m * sn * sn)


def jacobi_cn(z, m: float):
    return jacobi_ellipj(z, m)[1]
