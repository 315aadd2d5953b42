"""Turning points: roots of V(x)^2 - mu^2 = 0 and their continuation in mu.

For real mu in the admissible window the roots are real and simple; exactly
two of them means the potential is a single lobe near mu, exactly four a
double lobe.  Away from real mu the roots are tracked individually by
predictor-corrector continuation, which keeps their identity (no reordering)
so that long paths such as half-circle rotations of mu can be followed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .numerics import NewtonError
from .potential import Potential, sup_abs

RESIDUAL_TOL = 1e-12
DEGENERACY_FRACTION = 1e-6


class TurningPointError(RuntimeError):
    pass


class RootCountError(TurningPointError):
    """Root count on the real axis is not 2 (single lobe) or 4 (double lobe)."""


class DegenerateRootError(TurningPointError):
    """|V'| at a root is below the degeneracy threshold."""


class RootCollisionError(TurningPointError):
    """Two continued roots approached each other beyond the safe separation."""


@dataclass(frozen=True)
class TurningConfiguration:
    """Classified turning points at a spectral coordinate mu (lambda = i*mu)."""

    mu: complex
    kind: str  # "single" | "double"
    points: tuple[complex, ...]  # ordered by Re at the real-mu anchor
    derivative_signs: tuple[int, ...]
    middle_sign: int | None = None  # sign of V(beta_l)*V(beta_r) for double lobes

    @property
    def alpha_l(self) -> complex:
        return self.points[0]

    @property
    def alpha_r(self) -> complex:
        return self.points[-1]

    @property
    def beta_l(self) -> complex:
        if self.kind != "double":
            raise AttributeError("beta_l only exists for double lobes")
        return self.points[1]

    @property
    def beta_r(self) -> complex:
        if self.kind != "double":
            raise AttributeError("beta_r only exists for double lobes")
        return self.points[2]


def _resolvent(V: Potential, mu: complex):
    """g(x) = V(x)^2 - mu^2 and g'(x) by central differences (complex-step on R)."""
    mu2 = mu * mu

    def g(x: complex) -> complex:
        v = V.f_scalar(x)
        return v * v - mu2

    def dg(x: complex) -> complex:
        v = V.f_scalar(x)
        return 2.0 * v * V.derivative(x)

    return g, dg


def _refine_root(V: Potential, mu: complex, seed: complex, scale: float) -> complex:
    # Newton runs to the machine floor of |V^2-mu^2| (not merely the 1e-12
    # guarantee): inverse-square-root action integrands are sensitive to the
    # endpoint position like sqrt(residual/|g'|).
    g, dg = _resolvent(V, mu)
    tol = RESIDUAL_TOL * (1.0 + abs(mu) ** 2)
    x = complex(seed)
    best_x, best_g = x, abs(g(x))
    for _ in range(80):
        gx = g(x)
        if abs(gx) < best_g:
            best_x, best_g = x, abs(gx)
        if gx == 0:
            return x
        d = dg(x)
        if abs(d) < 1e-14 * scale:
            raise DegenerateRootError(f"|dV^2/dx| ~ 0 near x={x}")
        step = gx / d
        x -= step
        if abs(step) < 4e-17 * (1.0 + abs(x)):
            gx = g(x)
            if abs(gx) < best_g:
                best_x, best_g = x, abs(gx)
            break
    if best_g <= tol:
        return best_x
    raise NewtonError(f"turning-point refinement stalled at x={x} for mu={mu}")


def classify(V: Potential, mu0: float, n_grid: int = 2048) -> TurningConfiguration:
    """Locate and classify the real roots of V^2 - mu0^2 near the lobes.

    Roots are found by sign-change bracketing on a dense grid over the region
    where |V| >= mu0/2, then polished by Newton.  Exactly two roots gives a
    single lobe, exactly four a double lobe (Klaus-Shaw style counting of the
    level crossings of V^2).
    """
    v0 = sup_abs(V)
    if not 0.0 < mu0 < v0:
        raise RootCountError(f"mu0={mu0} outside the admissible range (0, {v0:.6g})")
    wide = np.linspace(-40.0, 40.0, 4096)
    vw = V.f_array(wide.astype(complex)).real
    active = np.flatnonzero(np.abs(vw) >= 0.5 * mu0)
    if active.size == 0:
        raise RootCountError("potential never reaches mu0/2 on the scan grid")
    x_lo = wide[active[0]] - 1.0
    x_hi = wide[active[-1]] + 1.0
    xs = np.linspace(x_lo, x_hi, n_grid)
    zs = xs.astype(complex)
    g = (V.f_array(zs).real) ** 2 - mu0 * mu0
    dv = V.f_array(xs + 1e-20j).imag / 1e-20  # complex-step V' on the grid
    dscale = float(np.abs(dv).max())
    crossings = np.flatnonzero(np.sign(g[:-1]) * np.sign(g[1:]) < 0)
    roots = []
    for i in crossings:
        x = _refine_root(V, mu0, 0.5 * (xs[i] + xs[i + 1]), scale=2.0 * mu0 * dscale)
        roots.append(x.real)
    roots.sort()
    if len(roots) not in (2, 4):
        raise RootCountError(
            f"found {len(roots)} turning points at mu0={mu0}; expected 2 or 4"
        )
    dsigns = []
    for x in roots:
        d = complex(V.derivative(x)).real
        if abs(d) < DEGENERACY_FRACTION * dscale:
            raise DegenerateRootError(
                f"turning point x={x:.8g} is degenerate: |V'|={abs(d):.3g}"
            )
        dsigns.append(1 if d > 0 else -1)
    points = tuple(complex(x) for x in roots)
    if len(roots) == 2:
        return TurningConfiguration(complex(mu0), "single", points, tuple(dsigns))
    vb_l = complex(V.f_real(roots[1])).real
    vb_r = complex(V.f_real(roots[2])).real
    middle = 1 if vb_l * vb_r > 0 else -1
    return TurningConfiguration(complex(mu0), "double", points, tuple(dsigns), middle)


def continue_in_mu(
    V: Potential,
    cfg: TurningConfiguration,
    mu_target: complex,
    n_steps: int | None = None,
    step_cap: float | None = None,
) -> TurningConfiguration:
    """Continue every turning point along the straight path cfg.mu -> mu_target.

    Each step reseeds Newton at the previous root (predictor-corrector with a
    first-order predictor from dx/dmu = mu/(V*V')).  Root identity is kept;
    the separation between continued roots is monitored and a collision
    raises instead of silently merging tracks.
    """
    mu0, mu1 = complex(cfg.mu), complex(mu_target)
    if mu1 == mu0:
        return cfg
    if n_steps is None:
        cap = step_cap if step_cap is not None else max(0.05 * abs(mu0), 1e-3) / 16.0
        n_steps = max(1, math.ceil(abs(mu1 - mu0) / cap))
    points = list(cfg.points)
    seps = [
        abs(points[i] - points[j])
        for i in range(len(points))
        for j in range(i + 1, len(points))
    ]
    min_sep = min(seps)
    collision_floor = 1e-3 * min_sep
    dscale = max(abs(complex(V.derivative(x))) for x in points)
    for j in range(1, n_steps + 1):
        mu = mu0 + (mu1 - mu0) * (j / n_steps)
        dmu = (mu1 - mu0) / n_steps
        new_points = []
        for x in points:
            v = V.f_scalar(x)
            dv = complex(V.derivative(x))
            seed = x + mu * dmu / (v * dv) if v * dv != 0 else x
            try:
                new_points.append(_refine_root(V, mu, seed, scale=2.0 * abs(mu) * dscale))
            except NewtonError as exc:
                raise NewtonError(f"continuation failed at mu={mu}: {exc}") from exc
        for a in range(len(new_points)):
            for b in range(a + 1, len(new_points)):
                if abs(new_points[a] - new_points[b]) < collision_floor:
                    raise RootCollisionError(
                        f"turning points collided near mu={mu}: "
                        f"{new_points[a]:.6g} ~ {new_points[b]:.6g}"
                    )
        points = new_points
    return replace(cfg, mu=mu1, points=tuple(points))


def migration_path(
    V: Potential,
    mu0: float,
    total_angle: float,
    n_frames: int,
) -> list[tuple[complex, tuple[complex, ...]]]:
    """Turning points along the arc mu = mu0*exp(i*theta), theta in [0, total_angle].

    Returns per-frame (mu, points) pairs suitable for the migration figure.
    A zero angle returns the single classification frame.
    """
    cfg = classify(V, mu0)
    if total_angle == 0.0 or n_frames <= 1:
        return [(cfg.mu, cfg.points)]
    frames = [(cfg.mu, cfg.points)]
    for j in range(1, n_frames):
        theta = total_angle * j / (n_frames - 1)
        mu = mu0 * complex(math.cos(theta), math.sin(theta))
        cfg = continue_in_mu(V, cfg, mu)
        frames.append((cfg.mu, cfg.points))
    return frames


def conjugate_configuration(cfg: TurningConfiguration) -> TurningConfiguration:
    """The configuration at conj(mu): turning points conjugate pointwise."""
    return replace(
        cfg,
        mu=np.conj(cfg.mu),
        points=tuple(complex(np.conj(p)) for p in cfg.points),
    )
