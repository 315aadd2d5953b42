"""Action integrals between turning points with controlled square-root branches.

For a single lobe the action is I(mu) = int sqrt(V^2 - mu^2) between the two
turning points; a double lobe carries I_l, I_r over the outer lobes and the
barrier integral J = int sqrt(mu^2 - V^2) between the middle pair.  All
integrals run along the straight segment joining their turning points with
tanh-sinh quadrature (the integrand vanishes like a square root at the
endpoints, the mu-derivative integrand blows up like an inverse square root;
both are absorbed by the double-exponential map).

The branch of the square root is continuous along each segment (the argument
of V^2 - mu^2 is unwrapped outward from the segment midpoint) and a single
global sign is fixed at the midpoint: positive real part for the real-mu
anchor, or closest to a previously recorded anchor value when continuing in
mu.  On the real-mu anchor every action comes out real and positive.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import QuadratureError, QuadratureSpec, segment_nodes
from .potential import Potential
from .turning import TurningConfiguration, continue_in_mu


class ActionError(RuntimeError):
    pass


class BranchError(ActionError):
    """Branch tracking lost: midpoint value incompatible with the anchor."""


@dataclass(frozen=True)
class ActionSet:
    """Action values and mu-derivatives at a spectral coordinate mu.

    kind "single" populates I/dI; kind "double" populates I_l, I_r, J and the
    lobe derivatives.  branch_anchor records the midpoint square-root value
    chosen for each segment so that a computation can be reproduced or
    continued in mu.
    """

    mu: complex
    kind: str
    I: complex | None = None
    dI: complex | None = None
    I_l: complex | None = None
    I_r: complex | None = None
    J: complex | None = None
    dI_l: complex | None = None
    dI_r: complex | None = None
    branch_anchor: dict | None = None

    def to_json(self) -> dict:
        pair = lambda z: [z.real, z.imag]
        if self.kind == "single":
            return {"mu": pair(self.mu), "I": pair(self.I), "dI": pair(self.dI)}
        return {
            "mu": pair(self.mu),
            "Il": pair(self.I_l),
            "Ir": pair(self.I_r),
            "J": pair(self.J),
            "dI": [pair(self.dI_l), pair(self.dI_r)],
        }


def _pick_sign(mid_value: complex, anchor: complex | None) -> int:
    if anchor is None:
        return 1 if mid_value.real >= 0.0 else -1
    if abs(mid_value - anchor) <= abs(mid_value + anchor):
        return 1
    return -1


def _half_roots(f: np.ndarray) -> np.ndarray:
    """Branch-continuous sqrt along a half-segment ordered endpoint -> middle.

    The argument is unwrapped backward from the last element (the segment
    midpoint, where the integrand is cleanest), so roundoff noise where f
    vanishes at the turning point cannot flip the interior branch.  The
    branch is pinned to the principal square root at the middle; callers
    apply one global sign on top.
    """
    theta = np.unwrap(np.angle(f)[::-1])[::-1]
    return np.sqrt(np.abs(f)) * np.exp(0.5j * theta)


def _branch_integral(
    base,
    a: complex,
    b: complex,
    anchor: complex | None,
    spec: QuadratureSpec,
    inverse: bool = False,
) -> tuple[complex, complex]:
    """Integrate sqrt(base)^(+-1) along the segment [a,b], branch-controlled.

    base maps an ndarray of points to the quantity under the root; it is
    assumed to vanish like a simple zero at a and b (turning points), so the
    substitution x = endpoint + direction*s^2 makes both the sqrt and the
    inverse-sqrt integrand smooth at s = 0.  Returns (integral, midpoint
    root value); the midpoint value is the branch anchor to pass when
    continuing in mu.
    """
    a, b = complex(a), complex(b)
    m = 0.5 * (a + b)
    direction = (b - a) / abs(b - a)
    f_m = complex(np.asarray(base(np.array([m], dtype=complex)))[0])
    root_m = np.sqrt(np.abs(f_m)) * np.exp(0.5j * np.angle(f_m))
    sign = _pick_sign(complex(root_m), anchor)
    mid_val = sign * complex(root_m)
    s_l = np.sqrt(abs(m - a))
    s_r = np.sqrt(abs(b - m))

    def half(endpoint: complex, outward: complex, s_max: float, level: int) -> complex:
        s, w = segment_nodes(0.0, s_max, level)
        s = s.real
        x = endpoint + outward * s * s
        fv = np.asarray(base(x), dtype=complex)
        root = sign * _half_roots(fv)
        with np.errstate(divide="ignore", invalid="ignore"):
            vals = root if not inverse else 1.0 / root
            vals = vals * (2.0 * direction * s)
        bad = ~np.isfinite(vals)
        if inverse:
            # where s^2 drops below the subtraction granularity of base, fv
            # is pure roundoff (possibly denormal or exact zero) and 1/root
            # is off by orders of magnitude; the substituted integrand
            # 2s/sqrt(c s^2) is finite and continuous there, so extend it
            # from the nearest node above the noise floor
            bad |= np.abs(fv) < 1e-13 * np.abs(fv).max()
        if bad.any():
            good = np.flatnonzero(~bad)
            if good.size == 0:
                raise QuadratureError(
                    f"action integrand below the noise floor near {endpoint}"
                )
            nearest = good[np.searchsorted(good, np.flatnonzero(bad)).clip(max=good.size - 1)]
            vals[np.flatnonzero(bad)] = vals[nearest]
        return complex(np.sum(w * vals))

    # The inverse-square-root integrand sits on a noise floor set by the
    # turning-point residual (value error ~ sqrt(residual/|g'|), observed
    # ~1e-8 relative), so demanding better than that never converges.
    tol = spec.rel_tol if not inverse else max(spec.rel_tol, 1e-8)
    previous = None
    for level in range(3, spec.max_level + 1):
        if 2 * len(segment_nodes(0.0, 1.0, level)[0]) > spec.max_nodes:
            break
        total = half(a, direction, s_l, level) + half(b, -direction, s_r, level)
        if previous is not None and abs(total - previous) <= tol * max(
            abs(total), 1e-300
        ):
            return total, mid_val
        previous = total
    raise QuadratureError(f"action quadrature did not converge on {a} -> {b}")


def _check_strip(V: Potential, *points: complex):
    for p in points:
        if abs(complex(p).imag) >= V.strip_halfwidth:
            raise ActionError(
                f"integration endpoint {p} leaves the analyticity strip "
                f"|Im x| < {V.strip_halfwidth:.6g}"
            )


def _anchored(anchors: dict | None, key: str) -> complex | None:
    if anchors is None:
        return None
    return anchors.get(key)


def action_single(
    V: Potential,
    cfg: TurningConfiguration,
    mu: complex | None = None,
    spec: QuadratureSpec = QuadratureSpec(),
    anchors: dict | None = None,
) -> ActionSet:
    """I = int sqrt(V^2-mu^2) over the lobe and dI/dmu = -mu int (V^2-mu^2)^(-1/2).

    cfg must be a single-lobe configuration; when mu differs from cfg.mu the
    turning points are continued there first.  anchors may carry the
    branch_anchor of a nearby ActionSet to keep the branch continuous along a
    path in mu (steps should keep the midpoint argument motion below pi/4).
    """
    if cfg.kind != "single":
        raise ActionError("action_single needs a single-lobe configuration")
    if mu is None:
        mu = cfg.mu
    elif mu != cfg.mu:
        cfg = continue_in_mu(V, cfg, mu)
    a, b = cfg.alpha_l, cfg.alpha_r
    _check_strip(V, a, b)
    mu2 = mu * mu
    base = lambda x: V.f_array(x) ** 2 - mu2
    I, anchor_I = _branch_integral(base, a, b, _anchored(anchors, "I"), spec)
    dint, _ = _branch_integral(base, a, b, anchor_I, spec, inverse=True)
    return ActionSet(
        mu=complex(mu),
        kind="single",
        I=I,
        dI=-mu * dint,
        branch_anchor={"I": anchor_I},
    )


def action_double(
    V: Potential,
    cfg: TurningConfiguration,
    mu: complex | None = None,
    spec: QuadratureSpec = QuadratureSpec(),
    anchors: dict | None = None,
) -> ActionSet:
    """Lobe actions I_l, I_r, barrier integral J, and the lobe derivatives.

    I_l runs over [alpha_l, beta_l] and I_r over [beta_r, alpha_r] with
    integrand sqrt(V^2-mu^2); J runs over [beta_l, beta_r] with integrand
    sqrt(mu^2-V^2).  All three branches are anchored real-positive at real mu
    and continued by the midpoint-anchor rule for complex mu.
    """
    if cfg.kind != "double":
        raise ActionError("action_double needs a double-lobe configuration")
    if mu is None:
        mu = cfg.mu
    elif mu != cfg.mu:
        cfg = continue_in_mu(V, cfg, mu)
    al, bl, br, ar = cfg.points
    _check_strip(V, al, bl, br, ar)
    mu2 = mu * mu
    lobe = lambda x: V.f_array(x) ** 2 - mu2
    barrier = lambda x: mu2 - V.f_array(x) ** 2
    I_l, anc_l = _branch_integral(lobe, al, bl, _anchored(anchors, "Il"), spec)
    I_r, anc_r = _branch_integral(lobe, br, ar, _anchored(anchors, "Ir"), spec)
    J, anc_j = _branch_integral(barrier, bl, br, _anchored(anchors, "J"), spec)
    dl, _ = _branch_integral(lobe, al, bl, anc_l, spec, inverse=True)
    dr, _ = _branch_integral(lobe, br, ar, anc_r, spec, inverse=True)
    return ActionSet(
        mu=complex(mu),
        kind="double",
        I_l=I_l,
        I_r=I_r,
        J=J,
        dI_l=-mu * dl,
        dI_r=-mu * dr,
        branch_anchor={"Il": anc_l, "Ir": anc_r, "J": anc_j},
    )


def actions_at(
    V: Potential,
    cfg: TurningConfiguration,
    mu: complex | None = None,
    spec: QuadratureSpec = QuadratureSpec(),
    anchors: dict | None = None,
) -> ActionSet:
    """Dispatch to action_single or action_double by configuration kind."""
    if cfg.kind == "single":
        return action_single(V, cfg, mu, spec, anchors)
    return action_double(V, cfg, mu, spec, anchors)
