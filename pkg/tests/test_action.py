import math

import numpy as np
import pytest

from zss.action import ActionError, action_double, action_single, actions_at
from zss.potential import builtin_potential
from zss.turning import classify, conjugate_configuration, continue_in_mu

SECH = builtin_potential("sech-pulse")
DSECH = builtin_potential("double-sech")
DSECH_ODD = builtin_potential("double-sech", relative_sign=-1)

# frozen QUADPACK oracle values at mu = 0.2 (brentq roots to 1e-15, plain
# adaptive quad for I/J, QAWS with alg weight (-1/2,-1/2) for the derivative)
EVEN_02 = {"I": 0.196819438041, "J": 0.268254222691, "dI": -3.388140037209}
ODD_02 = {"I": 0.123773607101, "J": 0.455539851882, "dI": -2.997736887432}


class TestSingleLobe:
    def test_sech_closed_form_at_half(self):
        cfg = classify(SECH, 0.5)
        acts = action_single(SECH, cfg)
        # I(mu) = pi*(1-mu) for the sech pulse
        assert abs(acts.I - 0.5 * math.pi) < 1e-10
        assert abs(acts.dI + math.pi) < 2e-7
        assert abs(acts.I.imag) < 1e-12

    def test_sech_closed_form_on_grid(self):
        for mu in np.linspace(0.1, 0.9, 20):
            cfg = classify(SECH, float(mu))
            acts = action_single(SECH, cfg)
            assert abs(acts.I - math.pi * (1.0 - mu)) <= 1e-8

    def test_monotone_decreasing(self):
        mus = np.linspace(0.15, 0.85, 15)
        values = []
        for mu in mus:
            values.append(action_single(SECH, classify(SECH, float(mu))).I.real)
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_derivative_matches_finite_differences(self):
        delta = 1e-5
        for mu in (0.3, 0.5, 0.7):
            acts = action_single(SECH, classify(SECH, mu))
            Ip = action_single(SECH, classify(SECH, mu + delta)).I
            Im = action_single(SECH, classify(SECH, mu - delta)).I
            fd = (Ip - Im) / (2 * delta)
            assert abs(acts.dI - fd) <= 1e-6 * abs(acts.dI)

    def test_conjugation_symmetry(self):
        cfg = classify(SECH, 0.5)
        mu = 0.5 + 0.01j
        up = action_single(SECH, continue_in_mu(SECH, cfg, mu))
        down = action_single(SECH, continue_in_mu(SECH, cfg, np.conj(mu)))
        assert abs(np.conj(up.I) - down.I) < 1e-10 * (1 + abs(up.I))
        assert abs(np.conj(up.dI) - down.dI) < 1e-8 * (1 + abs(up.dI))

    def test_wrong_kind_rejected(self):
        cfg = classify(DSECH, 0.2)
        with pytest.raises(ActionError):
            action_single(DSECH, cfg)


class TestDoubleLobe:
    def test_even_frozen_values(self):
        acts = action_double(DSECH, classify(DSECH, 0.2))
        assert abs(acts.I_l - EVEN_02["I"]) < 1e-8
        assert abs(acts.J - EVEN_02["J"]) < 1e-8
        assert abs(acts.dI_l - EVEN_02["dI"]) < 3e-6

    def test_odd_frozen_values(self):
        acts = action_double(DSECH_ODD, classify(DSECH_ODD, 0.2))
        assert abs(acts.I_l - ODD_02["I"]) < 1e-8
        assert abs(acts.J - ODD_02["J"]) < 1e-8
        assert abs(acts.dI_l - ODD_02["dI"]) < 3e-6

    def test_symmetric_potentials_have_equal_lobes(self):
        for V in (DSECH, DSECH_ODD):
            acts = action_double(V, classify(V, 0.2))
            assert abs(acts.I_l - acts.I_r) <= 1e-10 * abs(acts.I_l)
            assert abs(acts.dI_l - acts.dI_r) <= 1e-8 * abs(acts.dI_l)

    def test_real_positive_at_real_mu(self):
        for V, mu in [(DSECH, 0.16), (DSECH, 0.22), (DSECH_ODD, 0.2)]:
            acts = action_double(V, classify(V, mu))
            for val in (acts.I_l, acts.I_r, acts.J):
                assert val.real > 0
                assert abs(val.imag) <= 1e-9 * abs(val)

    def test_lobe_action_monotone_decreasing(self):
        values = [
            action_double(DSECH, classify(DSECH, float(mu))).I_l.real
            for mu in np.linspace(0.15, 0.24, 10)
        ]
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_j_lower_bound_on_neighborhood(self):
        # Re J(mu) >= J(mu0)/2 for mu in a small disc around mu0
        cfg = classify(DSECH, 0.2)
        j0 = action_double(DSECH, cfg).J.real
        for ang in np.linspace(0, 2 * math.pi, 8, endpoint=False):
            mu = 0.2 + 0.01 * complex(math.cos(ang), math.sin(ang))
            acts = action_double(DSECH, continue_in_mu(DSECH, cfg, mu))
            assert acts.J.real >= 0.5 * j0

    def test_derivative_matches_finite_differences(self):
        delta = 1e-5
        acts = action_double(DSECH, classify(DSECH, 0.2))
        Ip = action_double(DSECH, classify(DSECH, 0.2 + delta)).I_l
        Im = action_double(DSECH, classify(DSECH, 0.2 - delta)).I_l
        fd = (Ip - Im) / (2 * delta)
        assert abs(acts.dI_l - fd) <= 1e-6 * abs(acts.dI_l)

    def test_conjugation_symmetry(self):
        cfg = classify(DSECH, 0.2)
        mu = 0.2 + 0.008j
        up = action_double(DSECH, continue_in_mu(DSECH, cfg, mu))
        down_cfg = conjugate_configuration(continue_in_mu(DSECH, cfg, mu))
        down = action_double(DSECH, down_cfg)
        for a, b in [(up.I_l, down.I_l), (up.I_r, down.I_r), (up.J, down.J)]:
            assert abs(np.conj(a) - b) < 1e-10 * (1 + abs(a))

    def test_branch_anchor_recorded(self):
        acts = action_double(DSECH, classify(DSECH, 0.2))
        assert set(acts.branch_anchor) == {"Il", "Ir", "J"}
        # anchors are the real-positive midpoint roots at real mu
        assert all(v.real > 0 for v in acts.branch_anchor.values())

    def test_anchor_continuity_in_mu(self):
        cfg = classify(DSECH, 0.2)
        acts0 = action_double(DSECH, cfg)
        mu = 0.2 + 0.005j
        acts1 = action_double(
            DSECH, continue_in_mu(DSECH, cfg, mu), anchors=acts0.branch_anchor
        )
        # small mu step: actions move by O(|dmu|*|dI|), no branch flip
        assert abs(acts1.I_l - acts0.I_l) < 0.1 * abs(acts0.I_l)
        assert abs(acts1.J - acts0.J) < 0.1 * abs(acts0.J)


class TestDispatch:
    def test_actions_at_dispatches(self):
        assert actions_at(SECH, classify(SECH, 0.5)).kind == "single"
        assert actions_at(DSECH, classify(DSECH, 0.2)).kind == "double"

    def test_json_shapes(self):
        single = actions_at(SECH, classify(SECH, 0.5)).to_json()
        assert set(single) == {"mu", "I", "dI"}
        double = actions_at(DSECH, classify(DSECH, 0.2)).to_json()
        assert set(double) == {"mu", "Il", "Ir", "J", "dI"}
