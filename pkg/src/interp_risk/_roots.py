"""Small root-finding helpers used by the deterministic risk solvers."""

from __future__ import annotations

import math

import numpy as np

from .errors import SolverError

_MAX_EXPANSIONS = 200


def positive_quadratic_root(a: float, b: float, c: float) -> float:
    """Unique positive root of ``a x^2 + b x + c`` with ``a > 0, c < 0``.

    The sign pattern guarantees one positive and one negative real root
    (product of roots ``c/a < 0``); this is checked at runtime. Uses the
    cancellation-safe form of the quadratic formula.
    """
    if not (a > 0 and c < 0):
        raise SolverError(
            f"quadratic lacks a unique positive root: a={a}, c={c}"
        )
    disc = b * b - 4.0 * a * c
    q = -0.5 * (b + math.copysign(math.sqrt(disc), b)) if b != 0 else math.sqrt(-a * c)
    r1, r2 = q / a, c / q
    root = max(r1, r2)
    if not root > 0:
        raise SolverError("quadratic root selection failed")
    return root


def monotone_root(func, lo: float = 0.0, hi0: float = 1.0, grow: float = 2.0,
                  max_iter: int = 200) -> float:
    """Root of a strictly monotone ``func`` on ``[lo, inf)`` by bisection.

    Expands the upper bracket geometrically from ``hi0`` until the sign
    changes, then bisects to machine precision on the bracket. Raises
    :class:`SolverError` if no sign change appears after the expansion cap.
    """
    flo = func(lo)
    if flo == 0.0:
        return lo
    hi = hi0
    fhi = func(hi)
    expansions = 0
    while flo * fhi > 0.0:
        hi *= grow
        fhi = func(hi)
        expansions += 1
        if expansions > _MAX_EXPANSIONS:
            raise SolverError(
                "no sign change found while expanding the root bracket"
            )
    if fhi == 0.0:
        return hi
    eps = np.finfo(float).eps
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = func(mid)
        if fm == 0.0:
            return mid
        if flo * fm < 0.0:
            hi = mid
        else:
            lo, flo = mid, fm
        # relative width so roots far below 1 stay fully resolved
        if hi - lo <= eps * hi:
            break
    return 0.5 * (lo + hi)
