import cmath
import math

import numpy as np
import pytest

from zss.potential import builtin_potential, parse_potential
from zss.turning import (
    RootCountError,
    TurningConfiguration,
    classify,
    conjugate_configuration,
    continue_in_mu,
    migration_path,
)

SECH = builtin_potential("sech-pulse")
DSECH = builtin_potential("double-sech")
DSECH_ODD = builtin_potential("double-sech", relative_sign=-1)

# brentq bracketing oracle on V^2 - mu^2 (20001-point grid, xtol 1e-15)
DSECH_ROOTS_02 = (-2.729646213039490, -1.129849560819374, 1.129849560819374, 2.729646213039490)
DSECH_ODD_ROOTS_02 = (-2.653024555363202, -1.445384223911613, 1.445384223911613, 2.653024555363202)


def residual(V, cfg):
    return max(abs(V(p) ** 2 - cfg.mu**2) for p in cfg.points)


class TestClassify:
    def test_sech_single_lobe_closed_form(self):
        cfg = classify(SECH, 0.5)
        assert cfg.kind == "single"
        a = math.acosh(2.0)
        assert abs(cfg.alpha_l + a) < 1e-12
        assert abs(cfg.alpha_r - a) < 1e-12
        assert cfg.derivative_signs == (1, -1)

    def test_double_sech_four_roots(self):
        cfg = classify(DSECH, 0.2)
        assert cfg.kind == "double"
        assert cfg.middle_sign == 1
        for got, want in zip(cfg.points, DSECH_ROOTS_02):
            assert abs(got - want) < 1e-10

    def test_odd_double_sech_middle_sign(self):
        cfg = classify(DSECH_ODD, 0.2)
        assert cfg.kind == "double"
        assert cfg.middle_sign == -1
        for got, want in zip(cfg.points, DSECH_ODD_ROOTS_02):
            assert abs(got - want) < 1e-10

    def test_mu_above_v0_rejected(self):
        with pytest.raises(RootCountError):
            classify(SECH, 1.2)

    def test_mu_nonpositive_rejected(self):
        with pytest.raises(RootCountError):
            classify(SECH, -0.1)

    def test_residual_invariant(self):
        for V, mu in [(SECH, 0.5), (SECH, 0.9), (DSECH, 0.2), (DSECH_ODD, 0.18)]:
            cfg = classify(V, mu)
            assert residual(V, cfg) <= 1e-12 * (1 + abs(mu) ** 2)

    def test_even_potential_symmetric_points(self):
        for V, mu in [(SECH, 0.3), (DSECH, 0.2)]:
            cfg = classify(V, mu)
            assert abs(cfg.alpha_l + cfg.alpha_r) < 1e-10
            if cfg.kind == "double":
                assert abs(cfg.beta_l + cfg.beta_r) < 1e-10


class TestContinueInMu:
    def test_sech_perturbed_mu_closed_form(self):
        cfg = classify(SECH, 0.5)
        mu = 0.5 + 0.01j
        moved = continue_in_mu(SECH, cfg, mu)
        # turning points of sech are -+acosh(1/mu) exactly
        expected_r = cmath.acosh(1.0 / mu)
        assert abs(moved.alpha_r - expected_r) < 1e-10
        assert abs(moved.alpha_l + expected_r) < 1e-10
        # migration in opposite vertical directions
        assert moved.alpha_l.imag > 0 > moved.alpha_r.imag
        assert residual(SECH, moved) <= 1e-12 * (1 + abs(mu) ** 2)

    def test_conjugate_path_gives_conjugate_points(self):
        cfg = classify(DSECH, 0.2)
        up = continue_in_mu(DSECH, cfg, 0.2 + 0.015j)
        down = continue_in_mu(DSECH, cfg, 0.2 - 0.015j)
        conj = conjugate_configuration(up)
        for a, b in zip(conj.points, down.points):
            assert abs(a - b) < 1e-9

    def test_identity_path(self):
        cfg = classify(SECH, 0.5)
        assert continue_in_mu(SECH, cfg, 0.5) is cfg

    def test_residuals_along_path(self):
        cfg = classify(DSECH, 0.2)
        for target in [0.2 + 0.01j, 0.21, 0.19 - 0.005j]:
            moved = continue_in_mu(DSECH, cfg, target)
            assert residual(DSECH, moved) <= 1e-12 * (1 + abs(target) ** 2)


class TestMigrationPath:
    def test_zero_angle_is_classify(self):
        frames = migration_path(SECH, 0.2, 0.0, 64)
        cfg = classify(SECH, 0.2)
        assert len(frames) == 1
        assert frames[0][1] == cfg.points

    def test_sech_half_turn_reaches_minus_mu(self):
        frames = migration_path(SECH, 0.2, math.pi, 64)
        assert len(frames) == 64
        mu_end, points_end = frames[-1]
        assert abs(mu_end + 0.2) < 1e-12
        # endpoints are turning points of mu=-0.2: sech(x) = -0.2 forces
        # cosh(x) = -5, i.e. the mu=+0.2 points lifted by one complex period
        # i*pi (sech(x+i*pi) = -sech(x)); the real-part pattern recovers
        start = sorted(p.real for p in frames[0][1])
        end = sorted(p.real for p in points_end)
        for a, b in zip(start, end):
            assert abs(a - b) < 1e-8
        for p in points_end:
            assert abs(abs(p.imag) - math.pi) < 1e-8
            assert abs(SECH.f_scalar(p) ** 2 - 0.04) < 1e-10

    def test_double_sech_half_turn_recovers_geometry(self):
        frames = migration_path(DSECH, 0.2, math.pi, 64)
        start = sorted(p.real for p in frames[0][1])
        end = sorted(p.real for p in frames[-1][1])
        # the real-part set recovers; each point lands one i*pi period away,
        # so the Stokes geometry at mu=-0.2 reproduces the original one
        for a, b in zip(start, end):
            assert abs(a - b) < 1e-8
        for p in frames[-1][1]:
            assert abs(abs(p.imag) - math.pi) < 1e-8
            assert abs(DSECH.f_scalar(p) ** 2 - 0.04) < 1e-10

    def test_frame_conjugation_symmetry(self):
        # rotating the other way traverses the conjugate path frame by frame
        up = migration_path(DSECH, 0.2, 0.5, 17)
        down = migration_path(DSECH, 0.2, -0.5, 17)
        for (mu_u, pts_u), (mu_d, pts_d) in zip(up, down):
            assert abs(np.conj(mu_u) - mu_d) < 1e-14
            for a, b in zip(pts_u, pts_d):
                assert abs(np.conj(a) - b) < 1e-8


class TestAccessors:
    def test_beta_requires_double(self):
        cfg = classify(SECH, 0.5)
        with pytest.raises(AttributeError):
            cfg.beta_l
