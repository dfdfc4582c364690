"""Transverse waveguide-mode catalogs for modal interface coupling.

Analytic TM/TE cross-section modes of rectangular and circular
interfaces, L^2-normalized and sorted by cutoff wavenumber.  The Bessel
functions and their zeros are computed here from the ascending series
(arbitrary-precision arithmetic absorbs the cancellation of the
alternating series), with bracketing + root refinement for the zeros.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np
from scipy.optimize import brentq

__all__ = [
    "bessel_j",
    "bessel_j_zeros",
    "bessel_jprime_zeros",
    "Mode",
    "rect_modes",
    "disc_modes",
]

# The ascending series needs O(x) extra digits to absorb cancellation;
# beyond this argument we refuse rather than silently degrade.
MAX_BESSEL_ARG = 200.0


def bessel_j(m, x):
    """J_m(x) for integer m >= 0 and 0 <= x <= 200, from the power series.

    Arbitrary-precision evaluation with the working precision chosen
    from the argument, so the returned double is correctly rounded to
    ~1e-15 relative accuracy.
    """
    if m < 0 or int(m) != m:
        raise ValueError("order must be a non-negative integer")
    if x < 0 or x > MAX_BESSEL_ARG:
        raise ValueError(f"argument must lie in [0, {MAX_BESSEL_ARG}]")
    if x == 0.0:
        return 1.0 if m == 0 else 0.0
    dps = 25 + int(0.45 * x)
    with mpmath.workdps(dps):
        xm = mpmath.mpf(x)
        half = xm / 2
        term = half ** m / mpmath.factorial(m)
        total = term
        j = 0
        h2 = half * half
        while True:
            j += 1
            term *= -h2 / (j * (m + j))
            total += term
            if abs(term) < mpmath.mpf(10) ** (-dps) * (abs(total) + 1):
                break
        return float(total)


def bessel_jprime(m, x):
    """Derivative J_m'(x) via the recurrence J_m' = J_{m-1} - (m/x) J_m."""
    if m == 0:
        return -bessel_j(1, x)
    if x == 0.0:
        return 0.5 if m == 1 else 0.0
    return bessel_j(m - 1, x) - (m / x) * bessel_j(m, x)


def _bracketed_zeros(f, count, x_start):
    """First `count` positive zeros of f by scan-and-refine."""
    zeros = []
    step = 0.25
    x0 = x_start
    f0 = f(x0)
    while len(zeros) < count:
        x1 = x0 + step
        if x1 > MAX_BESSEL_ARG:
            raise ValueError("zero search exceeded the supported argument range")
        f1 = f(x1)
        if f0 == 0.0:
            zeros.append(x0)
        elif f0 * f1 < 0:
            zeros.append(brentq(f, x0, x1, xtol=1e-13, rtol=8.9e-16))
        x0, f0 = x1, f1
    return tuple(zeros)


@lru_cache(maxsize=None)
def bessel_j_zeros(m, count):
    """First `count` positive zeros of J_m."""
    return _bracketed_zeros(lambda x: bessel_j(m, x), count, x_start=1e-6)


@lru_cache(maxsize=None)
def bessel_jprime_zeros(m, count):
    """First `count` positive zeros of J_m' (the zero at x = 0 excluded)."""
    # J_m' > 0 just right of 0 for m >= 1; for m = 0, J_0' = -J_1 < 0
    return _bracketed_zeros(lambda x: bessel_jprime(m, x), count, x_start=1e-6)


# Roundoff of the float64 series grows like eps * e^x; below this argument
# the absolute error stays under ~5e-12.
_FAST_SERIES_MAX = 12.0


def _bessel_j_series_array(m, x):
    """Vectorized float-precision series; accurate to ~5e-12 for x <= 12."""
    x = np.asarray(x, dtype=float)
    half = x / 2
    term = half ** m / float(mpmath.factorial(m))
    total = term.copy()
    h2 = half * half
    nmax = int(np.ceil(np.max(x))) + 25 if x.size else 1
    for j in range(1, max(nmax, 8)):
        term = term * (-h2) / (j * (m + j))
        total += term
        if np.max(np.abs(term)) < 1e-17 * (np.max(np.abs(total)) + 1):
            break
    return total


def bessel_j_array(m, x):
    """Elementwise J_m over an array, fast path for moderate arguments."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(x > MAX_BESSEL_ARG):
        raise ValueError(f"argument must lie in [0, {MAX_BESSEL_ARG}]")
    if x.size == 0:
        return np.zeros_like(x)
    if np.max(x) <= _FAST_SERIES_MAX:
        return _bessel_j_series_array(m, x)
    return np.vectorize(lambda t: bessel_j(m, t))(x)


@dataclass(frozen=True)
class Mode:
    """One transverse interface mode.

    The transverse field is the (rotated) gradient of the scalar
    eigenfunction psi, scaled so that its L^2 norm on the cross-section
    is one: ||grad psi|| = gamma ||psi||.
    """

    family: str  # "TM" or "TE"
    gamma: float  # cutoff wavenumber (sqrt of the Laplace eigenvalue)
    indices: tuple
    angular: str | None  # "cos"/"sin" for circular cross-sections
    _evaluator: object

    def eval(self, points):
        """Transverse vector field at in-plane points, shape (..., 2)."""
        pts = np.asarray(points, dtype=float)
        return self._evaluator(pts)

    def sort_key(self):
        fam = 0 if self.family == "TM" else 1
        ang = {None: 0, "cos": 0, "sin": 1}[self.angular]
        return (self.gamma, fam, self.indices, ang)


def _rot(grad):
    """In-plane rotation z x v applied to a (..., 2) gradient field."""
    out = np.empty_like(grad)
    out[..., 0] = -grad[..., 1]
    out[..., 1] = grad[..., 0]
    return out


def rect_modes(a, b, count):
    """First `count` modes of the a x b rectangular cross-section.

    TM uses sin*sin eigenfunctions (both indices >= 1); TE uses cos*cos
    (indices >= 0, not both zero).  Sorted by cutoff, ties broken TM
    first, then lexicographically by indices.
    """
    if a <= 0 or b <= 0 or count < 1:
        raise ValueError("invalid rectangle or mode count")
    modes = []
    nmax = int(np.ceil(np.sqrt(count) + 2)) + count // 2 + 2

    def add(family, k, l):
        gx, gy = k * np.pi / a, l * np.pi / b
        gamma = float(np.hypot(gx, gy))
        if family == "TM":
            norm2 = (a / 2) * (b / 2)
        else:
            norm2 = (a if k == 0 else a / 2) * (b if l == 0 else b / 2)
        c = 1.0 / (gamma * np.sqrt(norm2))

        def evaluator(pts, k=k, l=l, gx=gx, gy=gy, c=c, family=family):
            x, y = pts[..., 0], pts[..., 1]
            if family == "TM":
                grad = np.stack(
                    [
                        gx * np.cos(gx * x) * np.sin(gy * y),
                        gy * np.sin(gx * x) * np.cos(gy * y),
                    ],
                    axis=-1,
                )
                return c * grad
            grad = np.stack(
                [
                    -gx * np.sin(gx * x) * np.cos(gy * y),
                    -gy * np.cos(gx * x) * np.sin(gy * y),
                ],
                axis=-1,
            )
            return c * _rot(grad)

        modes.append(Mode(family, gamma, (k, l), None, evaluator))

    for k in range(1, nmax + 1):
        for l in range(1, nmax + 1):
            add("TM", k, l)
    for k in range(nmax + 1):
        for l in range(nmax + 1):
            if k == 0 and l == 0:
                continue
            add("TE", k, l)
    modes.sort(key=Mode.sort_key)
    if len(modes) < count:
        raise ValueError("mode pool exhausted; increase the internal range")
    return modes[:count]


def _disc_norm2(family, m, chi, R):
    """||psi||^2 over the disc for psi = J_m(gamma r) * trig(m theta)."""
    if family == "TM":
        radial = R * R / 2 * bessel_jprime(m, chi) ** 2
        # at a zero of J_m, J_m' = -J_{m+1} in magnitude
    else:
        radial = R * R / 2 * (1 - m * m / (chi * chi)) * bessel_j(m, chi) ** 2
    angular = 2 * np.pi if m == 0 else np.pi
    return radial * angular


def _disc_evaluator(family, m, gamma, c, angular):
    trig, dtrig = (np.cos, lambda t: -np.sin(t)) if angular != "sin" else (
        np.sin,
        np.cos,
    )

    def evaluator(pts):
        x, y = pts[..., 0], pts[..., 1]
        r = np.hypot(x, y)
        r_safe = np.maximum(r, 1e-12)
        th = np.arctan2(y, x)
        jm = bessel_j_array(m, gamma * r)
        if m == 0:
            djm = -bessel_j_array(1, gamma * r)
        else:
            djm = bessel_j_array(m - 1, gamma * r) - (m / (gamma * r_safe)) * jm
        dpsi_dr = gamma * djm * trig(m * th)
        dpsi_dth_over_r = jm * m * dtrig(m * th) / r_safe
        ct, st = np.cos(th), np.sin(th)
        grad = np.stack(
            [
                dpsi_dr * ct - dpsi_dth_over_r * st,
                dpsi_dr * st + dpsi_dth_over_r * ct,
            ],
            axis=-1,
        )
        g = c * grad
        return g if family == "TM" else _rot(g)

    return evaluator


def disc_modes(R, count):
    """First `count` modes of the circular cross-section of radius R.

    TM cutoffs are zeros of J_m over R, TE cutoffs zeros of J_m'.
    Azimuthal orders m >= 1 appear twice (cos and sin).  Sorted by
    cutoff; ties broken TM before TE, then by (m, k), cos before sin.
    """
    if R <= 0 or count < 1:
        raise ValueError("invalid radius or mode count")
    modes = []
    kmax = count + 1

    def pool(family, zeros_fn):
        m = 0
        while True:
            zeros = zeros_fn(m, kmax)
            added = []
            for k, chi in enumerate(zeros, start=1):
                gamma = chi / R
                norm2 = _disc_norm2(family, m, chi, R)
                c = 1.0 / (gamma * np.sqrt(norm2))
                angulars = (None,) if m == 0 else ("cos", "sin")
                for ang in angulars:
                    added.append(
                        Mode(
                            family,
                            gamma,
                            (m, k),
                            ang,
                            _disc_evaluator(family, m, gamma, c, ang),
                        )
                    )
            modes.extend(added)
            # enough modes strictly below the smallest cutoff of the next m?
            have = sorted(mode.gamma for mode in modes)
            if len(have) >= count and zeros_fn(m + 1, 1)[0] / R > have[count - 1]:
                break
            m += 1

    pool("TM", bessel_j_zeros)
    pool("TE", bessel_jprime_zeros)
    modes.sort(key=Mode.sort_key)
    return modes[:count]
