"""One-dimensional function machinery on [0, 1]: the skew function of the
binary skew-symmetric channel, its concave majorant, and upper concave
envelopes of sampled functions.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy.optimize import bisect

from .probcore import binary_entropy_array

CONTACT_TOL = 1e-9
DOMAIN_SLACK = 1e-12


def _check_unit(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if np.any(arr < -DOMAIN_SLACK) or np.any(arr > 1.0 + DOMAIN_SLACK):
        raise ValueError(f"{name}: argument outside [0, 1]")
    return np.clip(arr, 0.0, 1.0)


@dataclass(frozen=True)
class GridFunction:
    """Samples of a function at eta_i = i / (n - 1), i = 0..n-1."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=float)
        if arr.ndim != 1 or arr.size < 2:
            raise ValueError("a GridFunction needs at least two samples")
        if not np.all(np.isfinite(arr)):
            raise ValueError("GridFunction values must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def n_points(self) -> int:
        return self.values.size

    @property
    def etas(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n_points)

    @classmethod
    def sample(cls, fn: Callable[[np.ndarray], np.ndarray], n_points: int = 4097) -> "GridFunction":
        return cls(fn(np.linspace(0.0, 1.0, n_points)))


def f_skew(eta):
    """H(eta/2) - H((1-eta)/2): output-entropy difference H(Y1) - H(Y2) of
    the half-crossover skew-symmetric channel at P(X=0) = eta."""
    e = _check_unit(eta, "f_skew")
    out = binary_entropy_array(e / 2) - binary_entropy_array((1 - e) / 2)
    return float(out) if out.ndim == 0 else out


def f_skew_prime(eta):
    e = np.asarray(eta, dtype=float)
    with np.errstate(divide="ignore"):
        out = 0.5 * np.log2((2 - e) / e) + 0.5 * np.log2((1 + e) / (1 - e))
    return float(out) if out.ndim == 0 else out


def tangency_residual(eta: float) -> float:
    """Zero where the line from (eta, f(eta)) to (1, 1) is tangent to f."""
    return f_skew_prime(eta) * (1 - eta) - (1 - f_skew(eta))


@lru_cache(maxsize=None)
def solve_eta0(xtol: float = 1e-15) -> float:
    lo, hi = 1e-9, 0.5
    if not tangency_residual(lo) > 0 > tangency_residual(hi):
        raise ArithmeticError("tangency equation is not bracketed on (0, 1/2)")
    return float(bisect(tangency_residual, lo, hi, xtol=xtol, maxiter=200))


def g_function(eta):
    """Concave majorant of f_skew: f itself up to eta0, then the chord to (1, 1)."""
    e = _check_unit(eta, "g_function")
    e0 = solve_eta0()
    f0 = f_skew(e0)
    chord = (1 - e) / (1 - e0) * f0 + (e - e0) / (1 - e0) * 1.0
    out = np.where(e <= e0, f_skew(e), chord)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Envelope:
    """Upper concave envelope of a GridFunction.

    ``hull`` holds the grid indices of the upper-hull vertices (increasing);
    ``contact`` flags grid points where the envelope meets the input.
    """

    envelope: GridFunction
    contact: np.ndarray
    hull: np.ndarray

    def __call__(self, eta):
        x = np.linspace(0.0, 1.0, self.envelope.n_points)[self.hull]
        y = self.envelope.values[self.hull]
        return np.interp(eta, x, y)

    def witness(self, eta: float):
        """Two-atom decomposition (alphas, weights) realizing the envelope at eta.

        The weights average the alphas to eta; a single atom is returned when
        eta falls on a hull vertex.
        """
        n = self.envelope.n_points
        xs = self.hull / (n - 1)
        k = int(np.searchsorted(xs, eta))
        if k < xs.size and abs(xs[k] - eta) <= DOMAIN_SLACK:
            return np.array([xs[k]]), np.array([1.0])
        k = min(max(k, 1), xs.size - 1)
        lo, hi = xs[k - 1], xs[k]
        w_lo = (hi - eta) / (hi - lo)
        return np.array([lo, hi]), np.array([w_lo, 1.0 - w_lo])


def upper_hull_indices(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Indices of the upper convex hull of points sorted by increasing x.

    Monotone-chain scan; collinear interior points are dropped.
    """
    x, y = np.asarray(x, dtype=float).tolist(), np.asarray(y, dtype=float).tolist()  # scalar math is faster on floats
    hull: list[int] = []
    for i in range(len(x)):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            # b is removed when it lies on or below the segment a -> i
            if (y[b] - y[a]) * (x[i] - x[a]) <= (y[i] - y[a]) * (x[b] - x[a]):
                hull.pop()
            else:
                break
        hull.append(i)
    return np.array(hull, dtype=int)


def upper_concave_envelope(fn: GridFunction) -> Envelope:
    x = fn.etas
    y = fn.values
    hull = upper_hull_indices(x, y)
    env = np.interp(x, x[hull], y[hull])
    env = np.maximum(env, y)  # rounding on chords can leave env a hair below y
    contact = np.abs(env - y) <= CONTACT_TOL
    return Envelope(GridFunction(env), contact, hull)


def aux_sup_binary(phi: GridFunction, eta: float,
                   exact: Optional[Callable[[float], float]] = None) -> float:
    """Supremum of sum_i v_i phi(alpha_i) over decompositions with sum_i v_i alpha_i = eta.

    This is the upper concave envelope of phi at eta. Between grid points the
    hull is interpolated linearly; if ``exact`` (phi as a callable) is given,
    its value at eta is also admitted as a one-atom decomposition.
    """
    eta = float(_check_unit(eta, "aux_sup_binary"))
    val = float(upper_concave_envelope(phi)(eta))
    if exact is not None:
        val = max(val, float(exact(eta)))
    return val
