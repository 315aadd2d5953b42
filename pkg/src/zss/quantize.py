"""Bohr-Sommerfeld quantization and tunneling-splitting predictions.

Eigenvalue predictions come in three grades: the plain quantization roots
I(mu) = (k+1/2)*pi*h (single lobe, or one lobe of a symmetric double lobe),
the exponentially split pair around each double-lobe reference point, and the
roots of the full double-lobe quantization condition

    4 cos(I_l/h) cos(I_r/h) -+ exp(-2J/h) sin(I_l/h) sin(I_r/h) = 0

with the sign tied to V(beta_l) = +-V(beta_r) and all subleading symbols at
their leading-order values.  For even potentials the pair splits vertically
in the lambda plane (purely imaginary eigenvalues), for odd potentials
horizontally (no purely imaginary eigenvalues).
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

from .action import ActionSet, action_double, action_single, actions_at
from .numerics import NewtonError, QuadratureSpec, newton_complex
from .potential import Potential
from .turning import TurningConfiguration, classify, continue_in_mu

# exp(-J/h) underflows double precision past this point; report a hard zero
UNDERFLOW_EXPONENT = 700.0


class QuantizeError(RuntimeError):
    pass


class WindowEscapeError(QuantizeError):
    """Newton iterate left the configured mu window."""


@dataclass(frozen=True)
class EigenvaluePrediction:
    """A WKB eigenvalue record: reference point, predicted lambda(s), method."""

    k: int
    h: float
    mu_ref: complex
    lambdas: tuple[complex, ...]
    method: str  # SL-BS | DL-BS | DL-FULL-QC | DL-SPLIT-EVEN | DL-SPLIT-ODD
    gap: complex | None = None  # mu_plus - mu_minus for split pairs
    flags: tuple[str, ...] = ()

    def to_json(self) -> dict:
        pair = lambda z: [z.real, z.imag]
        return {
            "k": self.k,
            "h": self.h,
            "method": self.method,
            "mu_ref": pair(complex(self.mu_ref)),
            "lambda": [pair(complex(z)) for z in self.lambdas],
            "gap": pair(complex(self.gap)) if self.gap is not None else None,
            "flags": list(self.flags),
        }


# Newton drives |I - (k+1/2) pi h| to 1e-12, which needs the action values
# to sit well below that noise level
_BS_QUAD = QuadratureSpec(rel_tol=1e-13)


def _lobe_action(V: Potential, mu: float) -> ActionSet:
    return actions_at(V, classify(V, mu), spec=_BS_QUAD)


def _lobe_I(acts: ActionSet) -> tuple[float, float]:
    if acts.kind == "single":
        return acts.I.real, acts.dI.real
    return acts.I_l.real, acts.dI_l.real


def enumerate_indices(V: Potential, window: tuple[float, float], h: float) -> list[int]:
    """All k whose Bohr-Sommerfeld level (k+1/2)*pi*h falls inside the window.

    The lobe action is strictly decreasing in mu, so the admissible k are the
    integers with I(hi) < (k+1/2)*pi*h < I(lo), endpoints excluded.
    """
    lo, hi = window
    if not hi > lo:
        return []
    I_lo, _ = _lobe_I(_lobe_action(V, lo))
    I_hi, _ = _lobe_I(_lobe_action(V, hi))
    upper, lower = max(I_lo, I_hi), min(I_lo, I_hi)
    step = math.pi * h
    k_min = math.floor(lower / step - 0.5) + 1
    ks = []
    k = max(k_min, 0)
    while (k + 0.5) * step < upper:
        if (k + 0.5) * step > lower:
            ks.append(k)
        k += 1
    return ks


def _solve_bs(
    V: Potential,
    window: tuple[float, float],
    h: float,
    k: int,
    expect_kind: str,
    tol: float = 1e-12,
) -> tuple[float, ActionSet]:
    lo, hi = window
    target = (k + 0.5) * math.pi * h
    mu = 0.5 * (lo + hi)
    best = None
    for _ in range(40):
        acts = _lobe_action(V, mu)
        if acts.kind != expect_kind:
            raise QuantizeError(
                f"expected a {expect_kind}-lobe configuration at mu={mu}"
            )
        I, dI = _lobe_I(acts)
        F = I - target
        if best is None or abs(F) < best[0]:
            best = (abs(F), mu, acts)
        if abs(F) <= 0.01 * tol:
            break
        mu_next = mu - F / dI
        if not lo <= mu_next <= hi:
            raise WindowEscapeError(
                f"k={k}, h={h}: Newton iterate mu={mu_next:.8g} left ({lo}, {hi})"
            )
        if abs(mu_next - mu) < 1e-16 * (1.0 + abs(mu)):
            mu = mu_next
            break
        mu = mu_next
    if best[0] > tol:
        raise NewtonError(
            f"Bohr-Sommerfeld root for k={k} stalled at |F|={best[0]:.3e} > {tol}"
        )
    _, mu, acts = best
    margin = 1e-10 * (hi - lo)
    if not lo + margin < mu < hi - margin:
        raise WindowEscapeError(
            f"k={k}, h={h}: root mu={mu:.10g} sits on the window boundary"
        )
    return mu, acts


def solve_bs_single(
    V: Potential, window: tuple[float, float], h: float, k: int
) -> EigenvaluePrediction:
    """Root of I(mu) = (k+1/2)*pi*h for a single-lobe potential.

    Newton runs on the real axis (the root is real: the quantization function
    is injective near the window and conjugation-symmetric), seeded at the
    window midpoint, and converges to |I - (k+1/2) pi h| <= 1e-12.
    """
    mu, _ = _solve_bs(V, window, h, k, "single")
    return EigenvaluePrediction(
        k=k, h=h, mu_ref=mu, lambdas=(1j * mu,), method="SL-BS"
    )


def solve_bs_double(
    V: Potential, window: tuple[float, float], h: float, k: int
) -> EigenvaluePrediction:
    """Reference point mu_k for a symmetric (even or odd) double lobe.

    Requires I_l = I_r, i.e. parity "even" or "odd"; non-symmetric double
    lobes have no single reference condition and need solve_full_qc_double.
    """
    if V.parity not in ("even", "odd"):
        raise QuantizeError(
            "solve_bs_double needs a potential with parity 'even' or 'odd'; "
            "use solve_full_qc_double for non-symmetric double lobes"
        )
    mu, _ = _solve_bs(V, window, h, k, "double")
    return EigenvaluePrediction(
        k=k, h=h, mu_ref=mu, lambdas=(1j * mu,), method="DL-BS"
    )


def splitting_gap(J: float, dI: float, h: float) -> tuple[float, tuple[str, ...]]:
    """Leading-order half-splitting g = exp(-J/h) * h / (2 I'(mu_ref)).

    Returns (g, flags); exponents past the double-precision range yield an
    exact 0 with an "underflow" flag instead of extended precision.
    """
    if J / h > UNDERFLOW_EXPONENT:
        return 0.0, ("underflow",)
    return math.exp(-J / h) * h / (2.0 * dI), ()


def predict_splitting(
    V: Potential,
    window: tuple[float, float],
    h: float,
    k: int,
    parity: str | None = None,
) -> EigenvaluePrediction:
    """The exponentially split eigenvalue pair around i*mu_k for symmetric V.

    Even potentials split vertically: lambda+- = i*(mu_k +- g), both purely
    imaginary.  Odd potentials split horizontally: lambda+- = i*mu_k -+ i*i*g
    = i*mu_k +- g with equal imaginary parts.  g is the leading-order
    half-gap from splitting_gap; the O(h^2) correction is not computed.
    """
    parity = parity or V.parity
    if parity not in ("even", "odd"):
        raise QuantizeError("splitting prediction needs parity 'even' or 'odd'")
    mu, acts = _solve_bs(V, window, h, k, "double")
    J = acts.J.real
    g, flags = splitting_gap(J, acts.dI_l.real, h)
    if parity == "even":
        mu_plus, mu_minus = mu + g, mu - g
        lambdas = (1j * mu_plus, 1j * mu_minus)
        method = "DL-SPLIT-EVEN"
    else:
        mu_plus, mu_minus = mu - 1j * g, mu + 1j * g
        lambdas = (1j * mu_plus, 1j * mu_minus)
        method = "DL-SPLIT-ODD"
    return EigenvaluePrediction(
        k=k,
        h=h,
        mu_ref=mu,
        lambdas=lambdas,
        method=method,
        gap=mu_plus - mu_minus,
        flags=flags,
    )


class _FullQC:
    """The leading-order double-lobe quantization function G(mu) and dG/dmu.

    G(mu) = 4 cos(I_l/h) cos(I_r/h) -+ exp(-2J/h) sin(I_l/h) sin(I_r/h),
    "-" for V(beta_l) = +V(beta_r) (middle_sign +1), "+" otherwise.  dJ/dmu
    is taken by a central finite difference once at the seed and reused; the
    lobe derivatives come analytically from the action module.
    """

    def __init__(self, V: Potential, cfg: TurningConfiguration, h: float, seed: complex):
        self.V = V
        self.cfg = cfg
        self.h = h
        self.sign = -1.0 if cfg.middle_sign == 1 else 1.0
        base = action_double(V, cfg, complex(seed).real)
        self.anchors = base.branch_anchor
        delta = 1e-6
        Jp = self._actions(complex(seed).real + delta).J
        Jm = self._actions(complex(seed).real - delta).J
        self.dJ = (Jp - Jm) / (2.0 * delta)

    def _actions(self, mu: complex) -> ActionSet:
        cfg = continue_in_mu(self.V, self.cfg, mu)
        return action_double(self.V, cfg, anchors=self.anchors)

    def value_parts(self, mu: complex):
        acts = self._actions(mu)
        h = self.h
        cl, cr = cmath.cos(acts.I_l / h), cmath.cos(acts.I_r / h)
        sl, sr = cmath.sin(acts.I_l / h), cmath.sin(acts.I_r / h)
        expo = cmath.exp(-2.0 * acts.J / h) if acts.J.real / h < 0.5 * UNDERFLOW_EXPONENT else 0.0
        G = 4.0 * cl * cr + self.sign * expo * sl * sr
        dG = (
            -4.0 / h * (acts.dI_l * sl * cr + acts.dI_r * cl * sr)
            + self.sign * expo * (-2.0 * self.dJ / h) * sl * sr
            + self.sign * expo / h * (acts.dI_l * cl * sr + acts.dI_r * sl * cr)
        )
        return G, dG

    def __call__(self, mu: complex) -> complex:
        return self.value_parts(mu)[0]

    def derivative(self, mu: complex) -> complex:
        return self.value_parts(mu)[1]


def solve_full_qc_double(
    V: Potential,
    window: tuple[float, float],
    h: float,
    seed_mu: complex,
    seeds: tuple[complex, complex] | None = None,
) -> EigenvaluePrediction:
    """Both roots of the full double-lobe quantization condition near seed_mu.

    Without explicit seeds the pair is started at the splitting-formula
    offsets from the nearest reference point: mu_k +- g for middle_sign +1
    (eigenvalue pair on the real mu axis), mu_k +- i|g| for middle_sign -1
    (complex-conjugate pair).  Roots closer than 1e-3 of the predicted gap
    are treated as a duplicate-root collapse.
    """
    mu0 = complex(seed_mu).real
    cfg = classify(V, mu0)
    if cfg.kind != "double":
        raise QuantizeError("full quantization condition needs a double lobe")
    qc = _FullQC(V, cfg, h, mu0)
    acts = action_double(V, cfg)
    g, flags = splitting_gap(acts.J.real, acts.dI_l.real, h)
    if seeds is None:
        if g == 0.0:
            seeds = (complex(mu0), complex(mu0))
        elif cfg.middle_sign == 1:
            seeds = (mu0 + g, mu0 - g)
        else:
            seeds = (mu0 - 1j * g, mu0 + 1j * g)
    roots = []
    for seed in seeds:
        root = newton_complex(qc, qc.derivative, seed, tol=1e-12)
        roots.append(root)
    gap_scale = max(abs(2.0 * g), 1e-14)
    if g != 0.0 and abs(roots[0] - roots[1]) < 1e-3 * gap_scale:
        raise QuantizeError(
            f"full-QC roots collapsed: {roots[0]} ~ {roots[1]} (gap ~ {gap_scale:.3g})"
        )
    return EigenvaluePrediction(
        k=-1,
        h=h,
        mu_ref=mu0,
        lambdas=tuple(1j * r for r in roots),
        method="DL-FULL-QC",
        gap=roots[0] - roots[1],
        flags=flags,
    )
