import math

import numpy as np
import pytest

from zss.oracle import (
    ContourError,
    OracleError,
    TruncationError,
    WronskianMap,
    auto_truncation,
    count_zeros,
    default_x_match,
    find_eigenvalues,
    integrate_decaying,
    verify_state_samples,
    wronskian,
)
from zss.potential import builtin_potential, parse_potential
from zss.quantize import predict_splitting

SECH = builtin_potential("sech-pulse")
DSECH = builtin_potential("double-sech")
DSECH_ODD = builtin_potential("double-sech", relative_sign=-1)
FREE = parse_potential("0*x")

EVEN_WINDOW = (0.14, 0.252)
ODD_WINDOW = (0.10, 0.235)


@pytest.fixture(scope="module")
def sy_wmap():
    # shared Wronskian cache for the h=0.2 Satsuma-Yajima runs
    return WronskianMap(SECH, 0.2, auto_truncation(SECH, 2.5e-5))


class TestIntegrateDecaying:
    def test_free_system_closed_form(self):
        # V = 0: the left solution is exp(mu (x+L)/h) times a constant vector
        h, mu, L = 0.2, 0.5, 20.0
        state = integrate_decaying(FREE, 1j * mu, h, "left", L, 0.0)
        v1, v2 = state.v
        assert abs(v2) == 0.0
        grown = state.log_scale.real + math.log(abs(v1))
        assert abs(grown - mu * L / h) < 1e-10 * (mu * L / h)

    def test_renormalized_state_bounded(self):
        state = integrate_decaying(SECH, 0.5j, 0.2, "left", 20.0, 0.0)
        assert 0.5 <= max(abs(state.v[0]), abs(state.v[1])) <= 2.0
        assert state.log_scale.real > 0  # growth was removed along the way

    def test_truncation_guard(self):
        with pytest.raises(TruncationError):
            integrate_decaying(SECH, 0.5j, 0.2, "left", 2.0, 0.0)

    def test_lower_half_plane_rejected(self):
        with pytest.raises(OracleError):
            integrate_decaying(SECH, -0.5j, 0.2, "left", 20.0, 0.0)

    @pytest.mark.parametrize("side", ["left", "right"])
    def test_ode_residual_on_spot_samples(self, side):
        lam = 0.5j
        state = integrate_decaying(SECH, lam, 0.2, side, 15.0, 0.0, n_samples=32)
        assert len(state.samples) >= 30
        defect = verify_state_samples(SECH, lam, 0.2, state, side)
        assert defect <= 1e-8


class TestWronskian:
    def test_vanishes_at_satsuma_yajima_eigenvalue(self, sy_wmap):
        assert abs(sy_wmap(0.5j)) <= 1e-8

    def test_bounded_away_between_eigenvalues(self, sy_wmap):
        assert abs(sy_wmap(0.4j)) > 0.1

    def test_reflection_symmetry_of_modulus(self, sy_wmap):
        for lam in (0.03 + 0.4j, 0.01 + 0.77j):
            assert abs(abs(sy_wmap(lam)) - abs(sy_wmap(-np.conj(lam)))) < 1e-10

    def test_scale_invariance_of_zero_set(self):
        # replacing the initial eigenvector by a nonzero multiple leaves the
        # renormalized |W| (hence the zero set) unchanged
        h, L = 0.2, 15.0
        for lam in (0.5j, 0.42j):
            states = []
            for scale in (1.0, 3.0 * np.exp(0.7j)):
                l = integrate_decaying(SECH, lam, h, "left", L, 0.0, initial_scale=scale)
                r = integrate_decaying(SECH, lam, h, "right", L, 0.0, initial_scale=scale)
                l1, l2 = l.v
                r1, r2 = r.v
                w = (l1 * r2 - l2 * r1) / (max(abs(l1), abs(l2)) * max(abs(r1), abs(r2)))
                states.append(w)
            assert abs(abs(states[0]) - abs(states[1])) < 1e-9

    def test_convenience_wrapper_picks_truncation(self):
        assert abs(wronskian(SECH, 0.5j, 0.2)) <= 1e-8


class TestCountZeros:
    def test_satsuma_yajima_count(self, sy_wmap):
        assert count_zeros(SECH, 0.2, (-0.05, 0.05, 0.05, 0.95), sy_wmap) == 5

    def test_gap_between_eigenvalues_counts_zero(self, sy_wmap):
        assert count_zeros(SECH, 0.2, (-0.05, 0.05, 0.42, 0.48), sy_wmap) == 0

    def test_empty_box(self, sy_wmap):
        assert count_zeros(SECH, 0.2, (0.05, 0.05, 0.1, 0.9), sy_wmap) == 0

    def test_partition_additivity(self, sy_wmap):
        box = (-0.05, 0.05, 0.05, 0.95)
        lower = (-0.05, 0.05, 0.05, 0.41)
        upper = (-0.05, 0.05, 0.41, 0.95)
        total = count_zeros(SECH, 0.2, box, sy_wmap)
        assert total == count_zeros(SECH, 0.2, lower, sy_wmap) + count_zeros(
            SECH, 0.2, upper, sy_wmap
        )

    def test_contour_through_zero_is_perturbed(self, sy_wmap):
        # the top edge passes exactly through the eigenvalue 0.5i
        n = count_zeros(SECH, 0.2, (-0.05, 0.05, 0.05, 0.5), sy_wmap)
        assert n in (2, 3)  # perturbed contour gives a definite nearby box


class TestFindEigenvalues:
    def test_sech_unseeded_subdivision(self):
        # N=2 Satsuma-Yajima: eigenvalues 0.25i and 0.75i at h = 0.5
        res = find_eigenvalues(SECH, 0.5, (-0.05, 0.05, 0.1, 0.9))
        assert res.count == 2
        lams = [z for z, _ in res.eigenvalues]
        assert abs(lams[0] - 0.25j) < 1e-8
        assert abs(lams[1] - 0.75j) < 1e-8
        assert all(r <= 1e-9 for _, r in res.eigenvalues)

    def test_sech_seeded_full_box(self, sy_wmap):
        seeds = [1j * (0.1 + 0.2 * k) for k in range(5)]
        res = find_eigenvalues(
            SECH, 0.2, (-0.05, 0.05, 0.05, 0.95), seeds=seeds, wmap=sy_wmap
        )
        assert res.count == 5
        for k, (lam, resid) in enumerate(res.eigenvalues):
            assert abs(lam - 1j * (0.1 + 0.2 * k)) < 1e-8
            assert resid <= 1e-9
            assert abs(lam.real) <= 1e-8  # purely imaginary spectrum

    def test_even_double_sech_pair_vertical(self):
        h = 0.18
        pred = predict_splitting(DSECH, EVEN_WINDOW, h, 0)
        mu = pred.mu_ref.real
        g = abs(pred.gap) / 2
        box = (-0.02, 0.02, mu - 4 * g, mu + 4 * g)
        res = find_eigenvalues(DSECH, h, box, seeds=list(pred.lambdas))
        assert res.count == 2
        lams = [z for z, _ in res.eigenvalues]
        for lam in lams:
            assert abs(lam.real) <= 1e-8
        gap = abs(lams[1] - lams[0])
        assert abs(gap - abs(pred.gap)) <= 3.0 * h * abs(pred.gap)

    def test_odd_double_sech_pair_horizontal(self):
        h = 0.15
        pred = predict_splitting(DSECH_ODD, ODD_WINDOW, h, 0)
        mu = pred.mu_ref.real
        g = abs(pred.gap) / 2
        box = (-4 * g, 4 * g, mu - 4 * g, mu + 4 * g)
        res = find_eigenvalues(DSECH_ODD, h, box, seeds=list(pred.lambdas))
        assert res.count == 2
        lams = sorted((z for z, _ in res.eigenvalues), key=lambda z: z.real)
        assert abs(lams[0].imag - lams[1].imag) <= 1e-8
        assert lams[1].real > 0 > lams[0].real
        assert abs(lams[0].real + lams[1].real) <= 1e-8  # reflection symmetry
        gap = abs(lams[1] - lams[0])
        assert abs(gap - abs(pred.gap)) <= 3.0 * h * abs(pred.gap)

    def test_truncation_convergence(self):
        # doubling L moves the h=0.2 eigenvalues by less than 1e-9
        lams = []
        for L in (15.0, 30.0):
            wm = WronskianMap(SECH, 0.2, L)
            res = find_eigenvalues(
                SECH, 0.2, (-0.03, 0.03, 0.45, 0.55), seeds=[0.5j], wmap=wm
            )
            lams.append(res.eigenvalues[0][0])
        assert abs(lams[0] - lams[1]) <= 1e-9


class TestHelpers:
    def test_default_x_match_symmetric(self):
        assert default_x_match(SECH) == 0.0
        assert default_x_match(DSECH_ODD) == 0.0

    def test_default_x_match_asymmetric(self):
        V = parse_potential("0.8*sech(x)*(1+0.3*tanh(x))")
        x = default_x_match(V)
        assert 0.1 < x < 0.5  # argmax of the tilted pulse sits right of 0

    def test_auto_truncation_monotone(self):
        assert auto_truncation(SECH, 1e-3) < auto_truncation(SECH, 1e-6)

    def test_auto_truncation_cap(self):
        with pytest.raises(TruncationError):
            auto_truncation(SECH, 1e-30)

    def test_spectrum_json_shape(self):
        res = find_eigenvalues(SECH, 0.5, (-0.05, 0.05, 0.1, 0.9))
        blob = res.to_json()
        assert blob["count"] == 2
        assert set(blob) == {"h", "box", "count", "eigenvalues", "L", "tolerances"}
