"""Univariate and tensor-product B-spline machinery.

Open knot vectors, Cox-de Boor basis/derivative evaluation, the
degree-reduced ("derived") knot vectors entering the curl-conforming
spaces, and the end-knot reduction that defines the interface
multiplier degree.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "KnotVector",
    "TensorBasis",
    "make_open_uniform",
    "eval_basis",
    "eval_basis_grid",
    "derived_knot_vector",
    "reduce_to_multiplier_degree",
    "greville_points",
]

# Absolute tolerance used when merging / comparing breakpoint values.
BREAKPOINT_TOL = 1e-12


@dataclass(frozen=True)
class KnotVector:
    """An open knot vector on [0, 1] for splines of degree `degree`.

    Immutable; all evaluation routines are pure and thread-safe.
    """

    degree: int
    knots: tuple

    def __post_init__(self):
        p = self.degree
        t = self.knots
        if p < 0:
            raise ValueError("degree must be non-negative")
        if len(t) < 2 * (p + 1):
            raise ValueError("too few knots for an open knot vector")
        arr = np.asarray(t, dtype=float)
        if np.any(np.diff(arr) < -BREAKPOINT_TOL):
            raise ValueError("knots must be non-decreasing")
        if abs(arr[0]) > BREAKPOINT_TOL or abs(arr[-1] - 1.0) > BREAKPOINT_TOL:
            raise ValueError("knot vector must span [0, 1]")
        if np.any(np.abs(arr[: p + 1] - arr[0]) > BREAKPOINT_TOL) or np.any(
            np.abs(arr[-(p + 1):] - arr[-1]) > BREAKPOINT_TOL
        ):
            raise ValueError("knot vector is not open (end knots must repeat degree+1 times)")
        if p >= 1 and (len(t) > 2 * (p + 1)):
            if abs(arr[p + 1] - arr[0]) <= BREAKPOINT_TOL or abs(arr[-(p + 2)] - arr[-1]) <= BREAKPOINT_TOL:
                raise ValueError("end knots repeated more than degree+1 times")
        _, mults = _breakpoints_and_mults(arr, p)
        # multiplicity degree+1 (discontinuous splines) is allowed: it arises
        # when differentiating spaces with C^0 interior knots
        if len(mults) > 2 and np.any(np.asarray(mults[1:-1]) > p + 1):
            raise ValueError("interior knot multiplicity exceeds degree + 1")

    @property
    def n(self):
        """Number of basis functions."""
        return len(self.knots) - self.degree - 1

    @property
    def array(self):
        return np.asarray(self.knots, dtype=float)

    @property
    def breakpoints(self):
        bp, _ = _breakpoints_and_mults(self.array, self.degree)
        return bp

    @property
    def multiplicities(self):
        _, m = _breakpoints_and_mults(self.array, self.degree)
        return m

    @property
    def n_elements(self):
        return len(self.breakpoints) - 1

    @property
    def max_element_size(self):
        return float(np.max(np.diff(self.breakpoints)))

    @property
    def quasi_uniformity_bound(self):
        """Largest ratio of adjacent non-empty element sizes (theta >= 1)."""
        h = np.diff(self.breakpoints)
        if len(h) < 2:
            return 1.0
        r = h[1:] / h[:-1]
        return float(max(np.max(r), np.max(1.0 / r)))

    def is_reversal_symmetric(self, tol=BREAKPOINT_TOL):
        """True if the knot sequence is invariant under xi -> 1 - xi."""
        arr = self.array
        return bool(np.all(np.abs(arr + arr[::-1] - 1.0) <= tol))

    def __repr__(self):
        return f"KnotVector(p={self.degree}, n={self.n}, elements={self.n_elements})"


def _breakpoints_and_mults(arr, p):
    bp = [arr[0]]
    mults = [1]
    for x in arr[1:]:
        if x - bp[-1] > BREAKPOINT_TOL:
            bp.append(x)
            mults.append(1)
        else:
            mults[-1] += 1
    return np.asarray(bp), np.asarray(mults, dtype=int)


def make_open_uniform(p, n_el, r):
    """Open knot vector with `n_el` uniform elements and interior regularity `r`.

    Interior breakpoints k/n_el carry multiplicity p - r.  r = p - 1 is the
    maximally smooth space, r = 0 gives elementwise C^0 ("FEM-like") splines.
    """
    if r >= p or r < 0:
        raise ValueError(f"regularity must satisfy 0 <= r < p, got r={r}, p={p}")
    if n_el < 1:
        raise ValueError("element count must be >= 1")
    mult = p - r
    knots = [0.0] * (p + 1)
    for k in range(1, n_el):
        knots.extend([k / n_el] * mult)
    knots.extend([1.0] * (p + 1))
    return KnotVector(p, tuple(knots))


def find_span(kv: KnotVector, x):
    """Index i such that knots[i] <= x < knots[i+1] (right limit; left at x=1)."""
    arr = kv.array
    p = kv.degree
    n = kv.n
    if x < -BREAKPOINT_TOL or x > 1.0 + BREAKPOINT_TOL:
        raise ValueError(f"evaluation point {x} outside [0, 1]")
    if x >= arr[n]:
        # left limit at the right end of the last non-empty element
        span = n - 1
        while arr[span] >= arr[span + 1] - BREAKPOINT_TOL and span > p:
            span -= 1
        return span
    return int(np.searchsorted(arr, x, side="right")) - 1


def eval_basis(kv: KnotVector, x, der=0):
    """Nonzero B-spline basis values and derivatives at x.

    Returns (first, ders) where ders has shape (der+1, p+1) and
    ders[d, j] is the d-th derivative of basis function first+j.
    Cox-de Boor recursion; derivatives per the standard divided-knot
    difference formulas.
    """
    p = kv.degree
    arr = kv.array
    span = find_span(kv, x)
    first = span - p

    # Triangular table of basis values for degrees 0..p.
    ndu = np.zeros((p + 1, p + 1))
    ndu[0, 0] = 1.0
    left = np.zeros(p + 1)
    right = np.zeros(p + 1)
    for j in range(1, p + 1):
        left[j] = x - arr[span + 1 - j]
        right[j] = arr[span + j] - x
        saved = 0.0
        for r in range(j):
            ndu[j, r] = right[r + 1] + left[j - r]
            temp = ndu[r, j - 1] / ndu[j, r]
            ndu[r, j] = saved + right[r + 1] * temp
            saved = left[j - r] * temp
        ndu[j, j] = saved

    ders = np.zeros((der + 1, p + 1))
    ders[0, :] = ndu[:, p]
    if der == 0:
        return first, ders

    # Higher derivatives (NURBS-book A2.3).
    for r in range(p + 1):
        s1, s2 = 0, 1
        a = np.zeros((2, p + 1))
        a[0, 0] = 1.0
        for k in range(1, der + 1):
            d = 0.0
            rk = r - k
            pk = p - k
            if r >= k:
                a[s2, 0] = a[s1, 0] / ndu[pk + 1, rk]
                d = a[s2, 0] * ndu[rk, pk]
            j1 = 1 if rk >= -1 else -rk
            j2 = k - 1 if r - 1 <= pk else p - r
            for j in range(j1, j2 + 1):
                a[s2, j] = (a[s1, j] - a[s1, j - 1]) / ndu[pk + 1, rk + j]
                d += a[s2, j] * ndu[rk + j, pk]
            if r <= pk:
                a[s2, k] = -a[s1, k - 1] / ndu[pk + 1, r]
                d += a[s2, k] * ndu[r, pk]
            ders[k, r] = d
            s1, s2 = s2, s1
    fac = p
    for k in range(1, der + 1):
        ders[k, :] *= fac
        fac *= p - k
    return first, ders


def eval_basis_grid(kv: KnotVector, xs, der=0):
    """Vectorized eval_basis over an array of points.

    Returns (first, ders) with first shape (npts,) and ders shape
    (npts, der+1, p+1).
    """
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    firsts = np.empty(len(xs), dtype=int)
    out = np.empty((len(xs), der + 1, kv.degree + 1))
    for i, x in enumerate(xs):
        f, d = eval_basis(kv, x, der)
        firsts[i] = f
        out[i] = d
    return firsts, out


def derived_knot_vector(kv: KnotVector):
    """Degree p-1 knot vector with the first and last knot removed once."""
    if kv.degree < 1:
        raise ValueError("cannot derive a degree-0 knot vector")
    return KnotVector(kv.degree - 1, kv.knots[1:-1])


def reduce_to_multiplier_degree(kv: KnotVector, q):
    """Drop p - q repetitions of the first and last knots, giving degree q.

    Requires 1 <= q < p and interior multiplicities at most q, so the
    result is a valid open knot vector.
    """
    p = kv.degree
    if not (1 <= q < p):
        raise ValueError(f"multiplier degree must satisfy 1 <= q < p, got q={q}, p={p}")
    bp = kv.breakpoints
    mults = kv.multiplicities
    for x, m in zip(bp[1:-1], mults[1:-1]):
        if m > q:
            raise ValueError(
                f"interior knot {x} has multiplicity {m} > q={q}; "
                "the multiplier space requires interior multiplicities <= q"
            )
    drop = p - q
    return KnotVector(q, kv.knots[drop:-drop])


def greville_points(kv: KnotVector):
    """Greville abscissae: averages of p consecutive interior knots."""
    p = kv.degree
    arr = kv.array
    if p == 0:
        return 0.5 * (arr[:-1] + arr[1:])
    return np.array([arr[i + 1: i + p + 1].mean() for i in range(kv.n)])


@dataclass(frozen=True)
class TensorBasis:
    """Tensor-product B-spline basis; multi-indices ravel with direction 1 fastest."""

    kvs: tuple

    def __post_init__(self):
        if len(self.kvs) not in (2, 3):
            raise ValueError("TensorBasis supports 2 or 3 directions")

    @property
    def dim(self):
        return len(self.kvs)

    @property
    def degrees(self):
        return tuple(kv.degree for kv in self.kvs)

    @property
    def shape(self):
        return tuple(kv.n for kv in self.kvs)

    @property
    def N(self):
        return int(np.prod(self.shape))

    def ravel(self, multi_index):
        """Flat index of a multi-index (direction 1 fastest)."""
        return int(np.ravel_multi_index(multi_index, self.shape, order="F"))

    def ravel_grid(self, index_arrays):
        """Flat indices for a tuple of index arrays (broadcast, F-order)."""
        return np.ravel_multi_index(index_arrays, self.shape, order="F")

    def __repr__(self):
        return f"TensorBasis(p={self.degrees}, n={self.shape})"
