"""Direct eigenvalue solver for the 2x2 system h u' = i M(x, lambda) u.

No WKB input: the solution decaying at -infinity and the one decaying at
+infinity are integrated inward from truncation points +-L (each started on
the frozen eigenvector of M that is recessive on its half-line, which makes
it dominant in the direction of integration), renormalized on the fly to
tame the exponential dichotomy, and matched through the Wronskian

    W(lambda) = det(u_left(x_match)  u_right(x_match)).

Eigenvalues are the zeros of W.  They are located by the argument principle
on rectangle contours (adaptive phase sampling, recursive subdivision) and
polished by Newton with a finite-difference derivative; the final count is
always cross-checked against the contour winding number.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .numerics import RkSpec, WindingError, rk45_linear2, winding
from .potential import Potential

Box = tuple[float, float, float, float]  # re_lo, re_hi, im_lo, im_hi


class OracleError(RuntimeError):
    pass


class TruncationError(OracleError):
    """|V| at the truncation point is not small against Im lambda."""


class ContourError(OracleError):
    """A zero sits on (or hugs) the counting contour even after perturbation."""


class CountMismatchError(OracleError):
    """Located roots disagree with the argument-principle count."""


@dataclass
class RenormalizedState:
    """A unit-scaled solution vector with the removed factor's log tracked."""

    v: tuple[complex, complex]
    log_scale: complex
    x: float
    samples: list = field(default_factory=list)  # (x, v1, v2, log_scale)


@dataclass(frozen=True)
class SpectrumResult:
    h: float
    box: Box
    eigenvalues: tuple[tuple[complex, float], ...]  # (lambda, |W| residual)
    count: int
    L: float
    x_match: float
    residual_tol: float

    def to_json(self) -> dict:
        return {
            "h": self.h,
            "box": list(self.box),
            "count": self.count,
            "eigenvalues": [
                {"lambda": [lam.real, lam.imag], "residual": res}
                for lam, res in self.eigenvalues
            ],
            "L": self.L,
            "tolerances": {"residual": self.residual_tol},
        }


# ---------------------------------------------------------------------------
# one-sided integration
# ---------------------------------------------------------------------------

def _afunc(V: Potential, lam: complex, h: float):
    """(i/h) M(x, lambda) as a row-major tuple function of real x."""
    f = V.f_real
    d = -1j * lam / h
    inv_h = 1.0 / h

    def afunc(x: float):
        vh = f(x) * inv_h
        return (d, -vh, vh, -d)

    return afunc


def _start_vector(V: Potential, lam: complex, x0: float, side: str) -> tuple[complex, complex]:
    """Eigenvector of M(x0, lambda) for the mode recessive on the given side.

    The mode exponents are i*m/h with m = +-sqrt(lambda^2+V^2); the left
    solution needs Re(i*m) > 0 (decay toward -infinity), the right one
    Re(i*m) < 0.  Of the two parallel null-vector forms the better
    conditioned one is returned.
    """
    v = complex(V.f_real(x0))
    m = cmath.sqrt(lam * lam + v * v)
    if (1j * m).real == 0.0:
        # on the degenerate axis pick the sign via the imaginary part
        want_positive = side == "left"
        if ((1j * m).imag > 0) != want_positive:
            m = -m
    elif ((1j * m).real > 0) != (side == "left"):
        m = -m
    w_a = (lam - m, 1j * v)
    w_b = (1j * v, lam + m)
    norm_a = abs(w_a[0]) + abs(w_a[1])
    norm_b = abs(w_b[0]) + abs(w_b[1])
    w = w_a if norm_a >= norm_b else w_b
    scale = max(abs(w[0]), abs(w[1]))
    return (w[0] / scale, w[1] / scale)


def integrate_decaying(
    V: Potential,
    lam: complex,
    h: float,
    side: str,
    L: float,
    x_match: float,
    spec: RkSpec = RkSpec(),
    n_samples: int = 0,
    initial_scale: complex = 1.0,
) -> RenormalizedState:
    """Integrate the recessive solution from -+L to x_match, renormalizing.

    side "left" starts at -L with the solution decaying toward -infinity,
    side "right" starts at +L with the one decaying toward +infinity; both
    grow in the direction of integration, so the recessive character is
    numerically stable.  The state is rescaled to unit sup-norm whenever it
    leaves [0.5, 2], with the removed factor accumulated in log_scale.
    n_samples > 0 stores evenly spaced (x, v, log_scale) snapshots.
    """
    if side not in ("left", "right"):
        raise OracleError(f"side must be 'left' or 'right', got {side!r}")
    x0 = -L if side == "left" else L
    tail = abs(complex(V.f_real(x0)))
    if lam.imag <= 0:
        raise OracleError("oracle operates in the upper half lambda-plane")
    if tail >= 0.1 * abs(lam.imag):
        raise TruncationError(
            f"|V({x0})| = {tail:.3g} is not small against Im lambda = {lam.imag:.3g}"
        )
    w0 = _start_vector(V, lam, x0, side)
    y0 = (w0[0] * initial_scale, w0[1] * initial_scale)
    logs: list[float] = []
    samples: list = []
    checkpoints: list[float] = []
    if n_samples > 0:
        checkpoints = list(np.linspace(x0, x_match, n_samples + 1)[1:-1])
        if side == "right":
            checkpoints.sort(reverse=True)

    def on_step(x: float, y1: complex, y2: complex):
        r = max(abs(y1), abs(y2))
        if r > 2.0 or r < 0.5:
            y1, y2 = y1 / r, y2 / r
            logs.append(math.log(r))
        while checkpoints and (
            (side == "left" and x >= checkpoints[0])
            or (side == "right" and x <= checkpoints[0])
        ):
            checkpoints.pop(0)
            samples.append((x, y1, y2, complex(sum(logs))))
        return y1, y2

    y1, y2 = rk45_linear2(_afunc(V, lam, h), x0, y0, x_match, spec, on_step=on_step)
    return RenormalizedState(
        v=(y1, y2), log_scale=complex(sum(logs)), x=x_match, samples=samples
    )


def default_x_match(V: Potential) -> float:
    """The matching point: argmax of |V| (0 for even/odd potentials)."""
    if V.parity in ("even", "odd"):
        return 0.0
    xs = np.linspace(-30.0, 30.0, 4096)
    vals = np.abs(V.f_array(xs.astype(complex)).real)
    return float(xs[int(np.argmax(vals))])


def auto_truncation(V: Potential, threshold: float, cap: float = 40.0) -> float:
    """Smallest L with |V(+-L)| below threshold, capped at 40."""
    f = V.f_real
    for L in np.arange(1.0, cap + 0.5, 0.5):
        if abs(f(L)) < threshold and abs(f(-L)) < threshold:
            return float(L)
    raise TruncationError(
        f"|V| does not drop below {threshold:.3g} before the truncation cap {cap}"
    )


class WronskianMap:
    """Memoized W(lambda) for fixed potential, h, truncation and match point.

    Zeros of W are the eigenvalues.  Both matched states are normalized to
    unit sup-norm, so W is O(1) away from eigenvalues; the discarded
    positive scale factors cannot shift zeros or contour phases.
    """

    def __init__(
        self,
        V: Potential,
        h: float,
        L: float,
        x_match: float | None = None,
        spec: RkSpec = RkSpec(),
    ):
        self.V = V
        self.h = h
        self.L = L
        self.x_match = default_x_match(V) if x_match is None else x_match
        self.spec = spec
        self.cache: dict[complex, complex] = {}
        self.evals = 0

    def __call__(self, lam: complex) -> complex:
        lam = complex(lam)
        hit = self.cache.get(lam)
        if hit is not None:
            return hit
        left = integrate_decaying(
            self.V, lam, self.h, "left", self.L, self.x_match, self.spec
        )
        right = integrate_decaying(
            self.V, lam, self.h, "right", self.L, self.x_match, self.spec
        )
        l1, l2 = left.v
        r1, r2 = right.v
        nl = max(abs(l1), abs(l2))
        nr = max(abs(r1), abs(r2))
        w = (l1 * r2 - l2 * r1) / (nl * nr)
        self.cache[lam] = w
        self.evals += 1
        return w


def wronskian(
    V: Potential,
    lam: complex,
    h: float,
    L: float | None = None,
    x_match: float | None = None,
) -> complex:
    """Renormalized Wronskian of the left- and right-decaying solutions."""
    if L is None:
        L = auto_truncation(V, 1e-3 * abs(complex(lam).imag))
    return WronskianMap(V, h, L, x_match)(lam)


# ---------------------------------------------------------------------------
# argument-principle counting and root search
# ---------------------------------------------------------------------------

def _box_contour(box: Box, t: float) -> complex:
    """Counterclockwise rectangle boundary, t in [0,1) with corners at k/4."""
    re_lo, re_hi, im_lo, im_hi = box
    s, edge = math.modf(t * 4.0)
    edge = int(edge) % 4
    if edge == 0:
        return complex(re_lo + (re_hi - re_lo) * s, im_lo)
    if edge == 1:
        return complex(re_hi, im_lo + (im_hi - im_lo) * s)
    if edge == 2:
        return complex(re_hi - (re_hi - re_lo) * s, im_hi)
    return complex(re_lo, im_hi - (im_hi - im_lo) * s)


def _perturbed(box: Box, factor: float) -> Box:
    re_lo, re_hi, im_lo, im_hi = box
    dw = factor * (re_hi - re_lo)
    dh = factor * (im_hi - im_lo)
    return (re_lo - dw, re_hi + dw, im_lo - dh, im_hi + dh)


def _count_box(wmap: WronskianMap, box: Box, n0: int = 8) -> int:
    ts = [k / (4 * n0) for k in range(4 * n0)]
    vals = [wmap(_box_contour(box, t)) for t in ts]
    mags = sorted(abs(v) for v in vals)
    floor = 1e-6 * mags[-1]
    if mags[0] < floor or mags[0] == 0.0:
        raise WindingError("contour sample too close to a zero")
    return winding(vals, ts=ts, refine=lambda t: wmap(_box_contour(box, t)))


def count_zeros(
    V: Potential,
    h: float,
    box: Box,
    wmap: WronskianMap | None = None,
    perturb: bool = True,
) -> int:
    """Number of eigenvalues inside the rectangle, by winding of W.

    The contour is auto-perturbed once (a 1.3% outward inflation) if a zero
    sits on it; a second failure raises ContourError.  perturb=False keeps
    the contour exact (used during subdivision, where inflating a child box
    would double-count zeros sitting on the shared cut).
    """
    if box[0] >= box[1] or box[2] >= box[3]:
        return 0
    if wmap is None:
        wmap = _default_wmap(V, h, box)
    try:
        return _count_box(wmap, box)
    except WindingError as first:
        if not perturb:
            raise ContourError(f"zero on counting contour for box {box}: {first}") from first
        try:
            return _count_box(wmap, _perturbed(box, 0.013))
        except WindingError as exc:
            raise ContourError(f"zero on counting contour for box {box}: {exc}") from exc


def _default_wmap(V: Potential, h: float, box: Box) -> WronskianMap:
    # the truncation must serve the lowest-lying eigenvalues in the box:
    # their mode contamination decays slowest (rate 2*Im(lambda)/h), so key
    # the tail threshold off the box bottom
    threshold = max(5e-4 * box[2], 1e-8)
    return WronskianMap(V, h, auto_truncation(V, threshold))


def _polish(wmap: WronskianMap, seed: complex, scale: float, tol: float = 1e-9) -> complex:
    """Newton with central finite-difference derivative on the analytic W.

    Converges on step size (quadratic tail), not merely on |W| <= tol: near
    the edge of the spectrum W can be flat enough that |W| = 1e-9 still sits
    1e-6 away from the zero.  Iterations that wander outside 1.5x the seed
    scale abort immediately (wrong basin).
    """
    delta = 1e-7 * scale
    lam = complex(seed)
    for _ in range(16):
        w = wmap(lam)
        if abs(w) <= tol:
            # one quadratic cleanup step unless already at the floor
            dw = (wmap(lam + delta) - wmap(lam - delta)) / (2.0 * delta)
            if dw != 0:
                step = w / dw
                if abs(step) < 0.1 * scale and abs(wmap(lam - step)) <= abs(w):
                    lam -= step
            return lam
        dw = (wmap(lam + delta) - wmap(lam - delta)) / (2.0 * delta)
        if dw == 0:
            break
        step = w / dw
        lam -= step
        if abs(lam - seed) > 1.5 * scale:
            break
        if abs(step) < 1e-15 * (1.0 + abs(lam)):
            if abs(wmap(lam)) <= tol:
                return lam
            break
    raise OracleError(f"Wronskian polish failed from seed {seed}")


def _in_box(lam: complex, box: Box) -> bool:
    return box[0] <= lam.real <= box[1] and box[2] <= lam.imag <= box[3]


def _subdivide(wmap: WronskianMap, box: Box, depth: int, roots: list[complex], count: int | None = None):
    if count is None:
        count = count_zeros(wmap.V, wmap.h, box, wmap, perturb=False)
    if count == 0:
        return
    scale = max(box[1] - box[0], box[3] - box[2])
    if count == 1:
        center = complex(0.5 * (box[0] + box[1]), 0.5 * (box[2] + box[3]))
        try:
            root = _polish(wmap, center, scale)
        except OracleError:
            root = None
        if root is not None and _in_box(root, _perturbed(box, 0.05)):
            roots.append(root)
            return
        # Newton slid into a neighboring basin; shrink the box around the
        # zero until the center seed is inside the convergent one
    if depth > 60 or scale < 1e-12:
        raise OracleError(f"unresolved zero cluster in box {box} (count {count})")
    re_lo, re_hi, im_lo, im_hi = box
    for frac in (0.5, 0.537, 0.463, 0.581, 0.419, 0.533, 0.467):
        if re_hi - re_lo >= im_hi - im_lo:
            cut = re_lo + frac * (re_hi - re_lo)
            first: Box = (re_lo, cut, im_lo, im_hi)
            second: Box = (cut, re_hi, im_lo, im_hi)
        else:
            cut = im_lo + frac * (im_hi - im_lo)
            first = (re_lo, re_hi, im_lo, cut)
            second = (re_lo, re_hi, cut, im_hi)
        try:
            c1 = count_zeros(wmap.V, wmap.h, first, wmap, perturb=False)
            c2 = count_zeros(wmap.V, wmap.h, second, wmap, perturb=False)
        except ContourError:
            continue  # the cut line grazes a zero; move it
        if c1 + c2 != count:
            raise CountMismatchError(
                f"partition of {box} counts {c1}+{c2} != {count}"
            )
        _subdivide(wmap, first, depth + 1, roots, c1)
        _subdivide(wmap, second, depth + 1, roots, c2)
        return
    raise ContourError(f"could not find a clean cut for box {box}")


def find_eigenvalues(
    V: Potential,
    h: float,
    box: Box,
    seeds: list[complex] | None = None,
    wmap: WronskianMap | None = None,
    residual_tol: float = 1e-9,
) -> SpectrumResult:
    """All eigenvalues of the operator inside the rectangle, cross-checked.

    The box count comes from the argument principle.  Roots are located
    either from caller seeds (each polished on |W|, deduplicated, verified
    in-box) or, for any remainder, by recursive subdivision until each
    sub-box isolates one zero; a disagreement between the located roots and
    the contour count raises CountMismatchError.
    """
    if wmap is None:
        wmap = _default_wmap(V, h, box)
    total = count_zeros(V, h, box, wmap)
    scale = max(box[1] - box[0], box[3] - box[2])
    roots: list[complex] = []
    if seeds:
        for seed in seeds:
            try:
                root = _polish(wmap, complex(seed), scale, tol=residual_tol)
            except OracleError:
                continue
            if _in_box(root, box) and all(
                abs(root - r) > max(1e-12, 1e-9 * abs(root)) for r in roots
            ):
                roots.append(root)
    if len(roots) != total:
        roots = []
        _subdivide(wmap, box, 0, roots, total)
    if len(roots) != total:
        raise CountMismatchError(
            f"argument principle counts {total} zeros in {box}, located {len(roots)}"
        )
    roots.sort(key=lambda z: (z.imag, z.real))
    eigenvalues = tuple((z, abs(wmap(z))) for z in roots)
    return SpectrumResult(
        h=h,
        box=box,
        eigenvalues=eigenvalues,
        count=total,
        L=wmap.L,
        x_match=wmap.x_match,
        residual_tol=residual_tol,
    )


def verify_state_samples(
    V: Potential,
    lam: complex,
    h: float,
    state: RenormalizedState,
    side: str,
) -> float:
    """Max relative defect of the stored snapshots against fixed-step RK4.

    Re-integrates between consecutive snapshots with 64 classical RK4 steps
    (an independent scheme from the adaptive pair) and compares unit-scaled
    directions; returns the largest mismatch.
    """
    afunc = _afunc(V, lam, h)
    worst = 0.0
    samples = state.samples
    for (xa, a1, a2, _), (xb, b1, b2, _) in zip(samples, samples[1:]):
        n = 64
        step = (xb - xa) / n
        y1, y2 = a1, a2
        x = xa
        for _ in range(n):
            k1 = afunc(x)
            f1 = (k1[0] * y1 + k1[1] * y2, k1[2] * y1 + k1[3] * y2)
            km = afunc(x + 0.5 * step)
            u1, u2 = y1 + 0.5 * step * f1[0], y2 + 0.5 * step * f1[1]
            f2 = (km[0] * u1 + km[1] * u2, km[2] * u1 + km[3] * u2)
            u1, u2 = y1 + 0.5 * step * f2[0], y2 + 0.5 * step * f2[1]
            f3 = (km[0] * u1 + km[1] * u2, km[2] * u1 + km[3] * u2)
            ke = afunc(x + step)
            u1, u2 = y1 + step * f3[0], y2 + step * f3[1]
            f4 = (ke[0] * u1 + ke[1] * u2, ke[2] * u1 + ke[3] * u2)
            y1 = y1 + step / 6.0 * (f1[0] + 2 * f2[0] + 2 * f3[0] + f4[0])
            y2 = y2 + step / 6.0 * (f1[1] + 2 * f2[1] + 2 * f3[1] + f4[1])
            x += step
            r = max(abs(y1), abs(y2))
            if r > 2.0 or r < 0.5:
                y1, y2 = y1 / r, y2 / r
        # compare directions modulo scale: normalize both to the larger entry
        na = max(abs(y1), abs(y2))
        nb = max(abs(b1), abs(b2))
        ya, yb = (y1 / na, y2 / na), (b1 / nb, b2 / nb)
        phase = None
        for pa, pb in zip(ya, yb):
            if abs(pb) > 0.3:
                phase = pa / pb
                break
        defect = max(abs(ya[0] - phase * yb[0]), abs(ya[1] - phase * yb[1]))
        worst = max(worst, defect)
    return worst
