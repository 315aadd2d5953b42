"""Stokes-line tracing: level curves of Re z with z'(x) = i sqrt(V(x)^2 - mu^2).

Three Stokes lines emanate from every simple turning point, at angles given
by the local cubic model z ~ (x-x0)^(3/2); for real mu one family carries
the angles {0, 2pi/3, 4pi/3} and the other {pi/3, pi, 5pi/3}.  Lines are
traced by adaptive tangent stepping with a Newton projection back onto the
level set after every step, so the accumulated Re z drift stays at the
tolerance of the step integrator rather than growing with arc length.

Branch cuts follow the paper-side convention: each turning point carries its
cut along its Stokes line of angle 2pi/3 when that direction is in its
launch set, otherwise along the 5pi/3 one.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .potential import Potential
from .turning import TurningConfiguration, classify, continue_in_mu

LAUNCH_OFFSET = 1e-4
MERGE_RADIUS = 2e-3


class StokesError(RuntimeError):
    pass


class StepCollapseError(StokesError):
    """Step size collapsed away from any known turning point."""


@dataclass
class StokesLine:
    source: int  # index into the graph's turning points
    direction_index: int
    launch_angle: float
    vertices: list[complex]
    termination: str  # "turning_point" | "strip" | "max_len"
    target: int | None = None  # turning point reached, if any


@dataclass
class StokesGraph:
    mu: complex
    turning_points: tuple[complex, ...]
    lines: list[StokesLine]
    cuts: list[dict]  # {"point": index, "angle": float, "line": line index}
    bounded_links: list[dict]  # {"pair": (i, j), "connected": bool}
    kind: str

    def to_json(self) -> dict:
        pair = lambda z: [z.real, z.imag]
        return {
            "mu": pair(complex(self.mu)),
            "kind": self.kind,
            "points": [pair(p) for p in self.turning_points],
            "cuts": [
                {"point": c["point"], "angle": c["angle"], "line": c["line"]}
                for c in self.cuts
            ],
            "lines": [
                {
                    "source": ln.source,
                    "dir": ln.direction_index,
                    "vertices": [pair(v) for v in ln.vertices],
                    "termination": ln.termination,
                }
                for ln in self.lines
            ],
            "bounded": [
                {"pair": list(b["pair"]), "connected": b["connected"]}
                for b in self.bounded_links
            ],
        }


def _zprime(V: Potential, mu: complex):
    mu2 = mu * mu

    def f(x: complex) -> complex:
        v = V.f_scalar(x)
        return 1j * cmath.sqrt(v * v - mu2)

    return f


def launch_angles(V: Potential, mu: complex, x0: complex) -> list[float]:
    """The three Stokes directions at a simple turning point.

    Near x0, z - z(x0) = i*(2/3)sqrt(c)(x-x0)^(3/2) with c = (V^2)'(x0);
    Re z = 0 forces cos(arg(i sqrt(c)) + 3 phi/2) = 0, three directions
    spaced 2pi/3 apart.
    """
    v = V.f_scalar(x0)
    c = 2.0 * v * complex(V.derivative(x0))
    if c == 0:
        raise StokesError(f"degenerate turning point at {x0}")
    theta0 = cmath.phase(1j * cmath.sqrt(c))
    return sorted(
        ((0.5 * math.pi - theta0 + k * math.pi) / 1.5) % (2.0 * math.pi)
        for k in range(3)
    )


def trace_stokes(
    V: Potential,
    mu: complex,
    x0: complex,
    direction_index: int,
    max_len: float = 12.0,
    step_tol: float = 1e-8,
    others: tuple[complex, ...] = (),
) -> StokesLine:
    """Trace one Stokes line from the turning point x0.

    The tangent is +-i conj(f)/|f| (so that Re(z' tangent) = 0) with the
    sign carried by continuity from the launch direction; every step ends
    with a Newton projection along grad Re z.  Tracing stops on reaching
    max_len of arc, the strip boundary (normal termination, flagged), or
    another turning point; a step collapse anywhere else raises.
    """
    f = _zprime(V, mu)
    angles = launch_angles(V, mu, x0)
    phi = angles[direction_index % 3]
    x = x0 + LAUNCH_OFFSET * cmath.exp(1j * phi)
    tangent = cmath.exp(1j * phi)
    vertices = [x0, x]
    z_acc = 0.0 + 0.0j  # z relative to the launch point; Re stays ~ 0
    arclen = LAUNCH_OFFSET
    ds = 5e-3
    zp = _align(f(x), -1j * tangent.conjugate())
    termination = "max_len"
    target = None
    while arclen < max_len:
        if abs(x.imag) >= V.strip_halfwidth:
            termination = "strip"
            break
        hit = _near_turning_point(x, x0, others, arclen)
        if hit is not None:
            termination = "turning_point"
            target = hit
            vertices.append(others[hit])
            break
        if ds < 1e-12:
            raise StepCollapseError(f"step collapse at {x} (|z'| = {abs(zp):.3g})")
        t = _tangent_of(zp, tangent)
        x_mid = x + 0.5 * ds * t
        zp_mid = _align(f(x_mid), zp)
        if zp_mid == 0:
            ds *= 0.5
            continue
        t_mid = _tangent_of(zp_mid, t)
        rotation = abs(cmath.phase(t_mid / t))
        if rotation > 0.35:
            ds *= 0.5
            continue
        x_new = x + ds * t_mid
        zp_new = _align(f(x_new), zp_mid)
        if zp_new == 0:
            ds *= 0.5
            continue
        # near a terminating turning point |z'| varies like a square root;
        # rotation alone would keep ds large there and wreck the accumulation
        amp_change = abs(zp_new - zp) / max(abs(zp_mid), 1e-300)
        if amp_change > 0.25 and ds > 2e-5:
            ds *= 0.5
            continue
        # Simpson with full-magnitude aligned z' values at the chord
        # midpoint (the tangent midpoint is O(ds^2 curvature) off it and
        # would degrade the accumulation), then a Newton projection along
        # grad Re z back onto the level set
        zp_c = _align(f(0.5 * (x + x_new)), zp_mid)
        z_acc += (x_new - x) * (zp + 4.0 * zp_c + zp_new) / 6.0
        drift = z_acc.real
        correction = -drift * zp_new.conjugate() / (abs(zp_new) * abs(zp_new))
        x_new = x_new + correction
        z_acc += zp_new * correction
        zp_new = _align(f(x_new), zp_new)
        vertices.append(x_new)
        arclen += ds
        tangent = t_mid
        x, zp = x_new, zp_new
        if rotation < 0.05 and amp_change < 0.08:
            ds = min(ds * 1.4, 0.05)
    return StokesLine(
        source=-1,
        direction_index=direction_index,
        launch_angle=phi,
        vertices=vertices,
        termination=termination,
        target=target,
    )


def _align(zp: complex, reference: complex) -> complex:
    """zp with its (two-valued) sign chosen to match the reference direction."""
    if (zp * reference.conjugate()).real < 0:
        return -zp
    return zp


def _tangent_of(zp: complex, reference: complex) -> complex:
    """Unit level-curve tangent +-i conj(zp)/|zp| aligned with reference."""
    t = 1j * zp.conjugate() / abs(zp)
    if (t * reference.conjugate()).real < 0:
        t = -t
    return t


def _near_turning_point(x, x0, others, arclen) -> int | None:
    for i, p in enumerate(others):
        if p == x0 and arclen < 10 * LAUNCH_OFFSET:
            continue
        if abs(x - p) < MERGE_RADIUS and not (p == x0 and arclen < 0.1):
            return i
    return None


def _dz_exact(f, vertices) -> np.ndarray:
    """Cumulative z along a polyline by aligned per-segment Simpson."""
    pts = np.asarray(vertices, dtype=complex)
    refined = np.empty(2 * len(pts) - 1, dtype=complex)
    refined[0::2] = pts
    refined[1::2] = 0.5 * (pts[1:] + pts[:-1])
    vals = np.empty(len(refined), dtype=complex)
    prev = None
    for i, p in enumerate(refined):
        w = f(p)
        if prev is not None and (w * prev.conjugate()).real < 0:
            w = -w
        vals[i] = w
        if w != 0:
            prev = w
    dz = np.zeros(len(pts), dtype=complex)
    segments = (
        (vals[0:-2:2] + 4.0 * vals[1::2] + vals[2::2]) / 6.0 * np.diff(pts)
    )
    dz[1:] = np.cumsum(segments)
    return dz


def level_drift(V: Potential, mu: complex, line: StokesLine) -> float:
    """Max |Re z - Re z(source)| along the emitted polyline (independent

    recomputation by per-segment Simpson; the tracer itself accumulates with
    its own Simpson + level-set projection, so agreement here is two-route).
    The decorative endpoints (the source point and a reached turning point,
    where z' vanishes like a square root) are excluded: polynomial quadrature
    has no business across them and the level value there is exact anyway.
    """
    f = _zprime(V, mu)
    vertices = line.vertices[1:]
    if line.termination == "turning_point":
        vertices = vertices[:-1]
    if len(vertices) < 2:
        return 0.0
    dz = _dz_exact(f, vertices)
    return float(np.abs(dz.real).max())


def _tangent_step_ok(line: StokesLine) -> bool:
    return len(line.vertices) >= 2


def build_graph(
    V: Potential,
    mu: complex,
    cfg: TurningConfiguration | None = None,
    max_len: float = 12.0,
) -> StokesGraph:
    """Trace all turning points in all three directions and attach the cuts.

    For real mu inside a lobe the bounded Stokes line along R connects each
    lobe's turning-point pair; when mu is perturbed off the axis the
    connection breaks and the corresponding bounded_links entry reports
    connected = False.
    """
    mu = complex(mu)
    if cfg is None:
        anchor = abs(mu)
        cfg = classify(V, anchor)
        if mu != complex(anchor):
            cfg = continue_in_mu(V, cfg, mu)
    points = tuple(cfg.points)
    lines: list[StokesLine] = []
    for i, p in enumerate(points):
        for d in range(3):
            line = trace_stokes(V, mu, p, d, max_len=max_len, others=points)
            line.source = i
            lines.append(line)
    cuts = []
    for i, p in enumerate(points):
        angles = launch_angles(V, mu, p)
        prefer = 2.0 * math.pi / 3.0
        fallback = 5.0 * math.pi / 3.0
        dist = lambda a, b: abs((a - b + math.pi) % (2 * math.pi) - math.pi)
        if min(dist(a, prefer) for a in angles) < 0.3:
            angle = min(angles, key=lambda a: dist(a, prefer))
        else:
            angle = min(angles, key=lambda a: dist(a, fallback))
        line_idx = next(
            j
            for j, ln in enumerate(lines)
            if ln.source == i and dist(ln.launch_angle, angle) < 1e-9
        )
        cuts.append({"point": i, "angle": angle, "line": line_idx})
    expected_pairs = [(0, 1)] if cfg.kind == "single" else [(0, 1), (2, 3)]
    bounded = []
    for i, j in expected_pairs:
        connected = any(
            ln.termination == "turning_point"
            and {ln.source, ln.target} == {i, j}
            for ln in lines
        )
        bounded.append({"pair": (i, j), "connected": connected})
    return StokesGraph(
        mu=mu,
        turning_points=points,
        lines=lines,
        cuts=cuts,
        bounded_links=bounded,
        kind=cfg.kind,
    )


def z_profile(
    V: Potential,
    mu: complex,
    points: np.ndarray,
    anchor_index: int | None = None,
) -> np.ndarray:
    """z along a polyline of sample points, branch-aligned from an anchor.

    The branch of sqrt(V^2 - mu^2) is carried continuously along the points,
    starting at anchor_index (default: the midpoint) where the paper-side
    determination z' = i*(positive root) is imposed.  Returns z relative to
    the first point.
    """
    pts = np.asarray(points, dtype=complex)
    mu2 = mu * mu
    vals = 1j * np.sqrt(V.f_array(pts) ** 2 - mu2)
    m = len(pts) // 2 if anchor_index is None else anchor_index
    if (vals[m] / 1j).real < 0:
        vals = -vals
    for i in range(m + 1, len(pts)):
        if (vals[i] * vals[i - 1].conjugate()).real < 0:
            vals[i] = -vals[i]
    for i in range(m - 1, -1, -1):
        if (vals[i] * vals[i + 1].conjugate()).real < 0:
            vals[i] = -vals[i]
    z = np.zeros(len(pts), dtype=complex)
    z[1:] = np.cumsum(0.5 * (vals[1:] + vals[:-1]) * np.diff(pts))
    return z
