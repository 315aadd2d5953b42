"""Shared numerical kernels with no domain knowledge.

Provides tanh-sinh (double-exponential) quadrature over straight complex
segments, an embedded Dormand-Prince 5(4) stepper specialized to 2x2 linear
complex systems, complex Newton iteration, and winding-number accumulation
from phase samples.  Everything here is deterministic given its spec object.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np


class QuadratureError(RuntimeError):
    """Tanh-sinh refinement hit its level cap without converging."""


class NewtonError(RuntimeError):
    """Newton iteration stagnated or diverged."""


class StepSizeError(RuntimeError):
    """Adaptive step size collapsed below representable resolution."""


class WindingError(RuntimeError):
    """Phase samples too coarse (or contour passes through a zero)."""


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-10
    max_level: int = 14
    max_nodes: int = 2**14


@dataclass(frozen=True)
class RkSpec:
    rel_tol: float = 1e-11
    abs_tol: float = 1e-13
    max_steps: int = 2_000_000


# ---------------------------------------------------------------------------
# tanh-sinh quadrature
# ---------------------------------------------------------------------------

# Beyond |t| = T_CUT the summands of any DE-integrable integrand are below
# double-precision resolution.
_T_CUT = 4.0

_node_cache: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}


def tanh_sinh_nodes(level: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Nodes for step 2^-level on (-1,1), sorted along the interval.

    Returns (u, w, off) where u = tanh((pi/2) sinh t) are the abscissae,
    w the weights, and off = 1 - |u| the distance to the nearest endpoint
    computed without cancellation.  Positions on a segment [a,b] should be
    built from off (a + half*off on the left half, b - half*off on the
    right) so that nodes never collapse onto the endpoints.
    """
    cached = _node_cache.get(level)
    if cached is not None:
        return cached
    step = 2.0**-level
    t = np.arange(-math.floor(_T_CUT / step), math.floor(_T_CUT / step) + 1) * step
    s = 0.5 * math.pi * np.sinh(t)
    u = np.tanh(s)
    off = 2.0 / (1.0 + np.exp(2.0 * np.abs(s)))
    w = step * 0.5 * math.pi * np.cosh(t) / np.cosh(s) ** 2
    _node_cache[level] = (u, w, off)
    return u, w, off


def segment_nodes(
    a: complex, b: complex, level: int
) -> tuple[np.ndarray, np.ndarray]:
    """Tanh-sinh nodes mapped onto the segment [a,b] with their weights.

    The returned positions are ordered from a to b and kept strictly inside
    the segment; weights include the half-span Jacobian factor.
    """
    u, w, off = tanh_sinh_nodes(level)
    half = 0.5 * (complex(b) - complex(a))
    x = np.where(u < 0, a + half * off, b - half * off)
    return x, w * half


def integrate_segment(
    f: Callable[[np.ndarray], np.ndarray],
    a: complex,
    b: complex,
    spec: QuadratureSpec = QuadratureSpec(),
) -> complex:
    """Integrate f along the straight segment from a to b.

    f must accept an ndarray of points on the open segment and return the
    integrand values; it is never called at a or b themselves.  Non-finite
    values are tolerated only at nodes whose weight is already negligible
    (roundoff at an integrable endpoint singularity).
    """
    if a == b:
        return 0.0 + 0.0j
    previous = None
    for level in range(2, spec.max_level + 1):
        x, w = segment_nodes(a, b, level)
        if x.size > spec.max_nodes:
            break
        fv = np.asarray(f(x))
        bad = ~np.isfinite(fv)
        if bad.any():
            if np.abs(w[bad]).max() > 1e-13 * np.abs(w).max():
                raise QuadratureError(
                    f"non-finite integrand at a node with significant weight "
                    f"on segment {a} -> {b}"
                )
            fv = np.where(bad, 0.0, fv)
        total = complex(np.sum(w * fv))
        if previous is not None:
            err = abs(total - previous)
            if err <= spec.rel_tol * max(abs(total), 1e-300):
                return total
        previous = total
    raise QuadratureError(
        f"tanh-sinh failed to converge on segment {a} -> {b} "
        f"within {spec.max_level} levels"
    )


# ---------------------------------------------------------------------------
# Dormand-Prince 5(4) for 2x2 linear complex systems  y' = A(x) y
# ---------------------------------------------------------------------------

_C2, _C3, _C4, _C5 = 0.2, 0.3, 0.8, 8.0 / 9.0
_A21 = 0.2
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
_A61, _A62, _A63, _A64, _A65 = (
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
)
_B1, _B3, _B4, _B5, _B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
# y5 - y4 error weights (7 stages, FSAL)
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71.0 / 57600.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
)

Matrix2 = tuple[complex, complex, complex, complex]


def rk45_linear2(
    afunc: Callable[[float], Matrix2],
    x0: float,
    y0: tuple[complex, complex],
    x1: float,
    spec: RkSpec = RkSpec(),
    on_step: Callable[[float, complex, complex], tuple[complex, complex]] | None = None,
) -> tuple[complex, complex]:
    """Integrate y' = A(x) y from x0 to x1 with the Dormand-Prince 5(4) pair.

    afunc(x) returns the row-major entries of A(x).  on_step, if given, is
    called after every accepted step and may rescale the state (the caller
    is responsible for any bookkeeping of removed factors).  Step control is
    the standard PI controller; x1 < x0 integrates leftward.
    """
    if x1 == x0:
        return y0
    y1, y2 = y0
    x = x0
    span = x1 - x0
    direction = 1.0 if span > 0 else -1.0
    h = span * 1e-3
    a11, a12, a21, a22 = afunc(x)
    k1a = a11 * y1 + a12 * y2
    k1b = a21 * y1 + a22 * y2
    err_prev = 1.0
    n_steps = 0
    while (x1 - x) * direction > 0:
        if abs(h) < 1e-14 * abs(span):
            raise StepSizeError(f"step underflow at x={x}")
        if (x + h - x1) * direction > 0:
            h = x1 - x
        ya = y1 + h * _A21 * k1a
        yb = y2 + h * _A21 * k1b
        a11, a12, a21, a22 = afunc(x + _C2 * h)
        k2a = a11 * ya + a12 * yb
        k2b = a21 * ya + a22 * yb
        ya = y1 + h * (_A31 * k1a + _A32 * k2a)
        yb = y2 + h * (_A31 * k1b + _A32 * k2b)
        a11, a12, a21, a22 = afunc(x + _C3 * h)
        k3a = a11 * ya + a12 * yb
        k3b = a21 * ya + a22 * yb
        ya = y1 + h * (_A41 * k1a + _A42 * k2a + _A43 * k3a)
        yb = y2 + h * (_A41 * k1b + _A42 * k2b + _A43 * k3b)
        a11, a12, a21, a22 = afunc(x + _C4 * h)
        k4a = a11 * ya + a12 * yb
        k4b = a21 * ya + a22 * yb
        ya = y1 + h * (_A51 * k1a + _A52 * k2a + _A53 * k3a + _A54 * k4a)
        yb = y2 + h * (_A51 * k1b + _A52 * k2b + _A53 * k3b + _A54 * k4b)
        a11, a12, a21, a22 = afunc(x + _C5 * h)
        k5a = a11 * ya + a12 * yb
        k5b = a21 * ya + a22 * yb
        ya = y1 + h * (_A61 * k1a + _A62 * k2a + _A63 * k3a + _A64 * k4a + _A65 * k5a)
        yb = y2 + h * (_A61 * k1b + _A62 * k2b + _A63 * k3b + _A64 * k4b + _A65 * k5b)
        xn = x + h
        a11, a12, a21, a22 = afunc(xn)
        k6a = a11 * ya + a12 * yb
        k6b = a21 * ya + a22 * yb
        y1n = y1 + h * (_B1 * k1a + _B3 * k3a + _B4 * k4a + _B5 * k5a + _B6 * k6a)
        y2n = y2 + h * (_B1 * k1b + _B3 * k3b + _B4 * k4b + _B5 * k5b + _B6 * k6b)
        k7a = a11 * y1n + a12 * y2n
        k7b = a21 * y1n + a22 * y2n
        e1 = h * (_E1 * k1a + _E3 * k3a + _E4 * k4a + _E5 * k5a + _E6 * k6a + _E7 * k7a)
        e2 = h * (_E1 * k1b + _E3 * k3b + _E4 * k4b + _E5 * k5b + _E6 * k6b + _E7 * k7b)
        sc1 = spec.abs_tol + spec.rel_tol * max(abs(y1), abs(y1n))
        sc2 = spec.abs_tol + spec.rel_tol * max(abs(y2), abs(y2n))
        err = max(abs(e1) / sc1, abs(e2) / sc2, 1e-30)
        if err <= 1.0:
            x, y1, y2 = xn, y1n, y2n
            if on_step is not None:
                y1, y2 = on_step(x, y1, y2)
                k7a = a11 * y1 + a12 * y2
                k7b = a21 * y1 + a22 * y2
            k1a, k1b = k7a, k7b
            fac = 0.9 * err**-0.17 * err_prev**0.03
            err_prev = err
        else:
            fac = max(0.2, 0.9 * err**-0.2)
        h *= min(5.0, max(0.2, fac))
        n_steps += 1
        if n_steps > spec.max_steps:
            raise StepSizeError(f"exceeded {spec.max_steps} steps at x={x}")
    return y1, y2


# ---------------------------------------------------------------------------
# complex Newton
# ---------------------------------------------------------------------------

def newton_complex(
    F: Callable[[complex], complex],
    dF: Callable[[complex], complex],
    seed: complex,
    tol: float = 1e-12,
    max_iter: int = 60,
) -> complex:
    """Newton iteration for a complex analytic F; returns z with |F(z)| <= tol."""
    z = complex(seed)
    scale = 1.0 + abs(z)
    for _ in range(max_iter):
        fz = F(z)
        if abs(fz) <= tol:
            return z
        dfz = dF(z)
        if dfz == 0:
            raise NewtonError(f"vanishing derivative at {z}")
        step = fz / dfz
        if abs(step) < 1e-17 * (1.0 + abs(z)):
            raise NewtonError(f"stagnation at {z} with |F|={abs(fz):.3e}")
        z -= step
        if abs(z) > 1e6 * scale:
            raise NewtonError(f"divergence from seed {seed}")
    raise NewtonError(f"no convergence from seed {seed} after {max_iter} iterations")


# ---------------------------------------------------------------------------
# winding number from phase samples
# ---------------------------------------------------------------------------

def winding(
    samples: Sequence[complex],
    ts: Sequence[float] | None = None,
    refine: Callable[[float], complex] | None = None,
    max_evals: int = 20000,
) -> int:
    """Winding number of a closed sampled loop around the origin.

    samples[i] = f(ts[i]) on a closed contour parametrized by ts in [0,1)
    (the wrap-around pair is implicit).  Whenever the phase increment between
    adjacent samples reaches pi/2 the refine callback is asked for the value
    at the midpoint parameter; without a callback such a gap is an error.
    """
    vals = [complex(v) for v in samples]
    if any(v == 0 for v in vals):
        raise WindingError("zero sample on contour")
    if ts is None:
        ts = [i / len(vals) for i in range(len(vals))]
    params = list(ts)
    evals = 0
    total = 0.0
    n = len(vals)
    for i in range(n):
        t0, v0 = params[i], vals[i]
        t1, v1 = params[(i + 1) % n], vals[(i + 1) % n]
        if i + 1 == n:
            t1 += 1.0
        stack = [(t0, v0, t1, v1)]
        while stack:
            ta, va, tb, vb = stack.pop()
            dphi = cmath.phase(vb / va)
            if abs(dphi) < 0.5 * math.pi:
                total += dphi
                continue
            if refine is None:
                raise WindingError(
                    f"phase increment {dphi:.3f} >= pi/2 between t={ta} and t={tb}"
                )
            if evals >= max_evals or tb - ta < 1e-12:
                raise WindingError("refinement exhausted; zero on or near contour")
            tm = 0.5 * (ta + tb)
            vm = complex(refine(tm % 1.0))
            evals += 1
            if vm == 0:
                raise WindingError(f"contour value vanished at t={tm}")
            stack.append((tm, vm, tb, vb))
            stack.append((ta, va, tm, vm))
    k = total / (2.0 * math.pi)
    if abs(k - round(k)) > 0.25:
        raise WindingError(f"non-integer winding {k}")
    return int(round(k))
