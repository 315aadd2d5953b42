import math

import numpy as np
import pytest

from zss.potential import builtin_potential
from zss.stokes import (
    StokesError,
    build_graph,
    launch_angles,
    level_drift,
    trace_stokes,
    z_profile,
)
from zss.turning import classify

SECH = builtin_potential("sech-pulse")
DSECH = builtin_potential("double-sech")

TWO_THIRDS = 2.0 * math.pi / 3.0
FIVE_THIRDS = 5.0 * math.pi / 3.0


def arclen(line):
    return sum(abs(b - a) for a, b in zip(line.vertices, line.vertices[1:]))


class TestLaunchAngles:
    def test_left_turning_point_directions(self):
        cfg = classify(SECH, 0.5)
        angles = launch_angles(SECH, 0.5, cfg.alpha_l)
        for got, want in zip(angles, [0.0, TWO_THIRDS, 2 * TWO_THIRDS]):
            assert abs(got - want) < 1e-9

    def test_right_turning_point_directions(self):
        cfg = classify(SECH, 0.5)
        angles = launch_angles(SECH, 0.5, cfg.alpha_r)
        for got, want in zip(angles, [math.pi / 3, math.pi, FIVE_THIRDS]):
            assert abs(got - want) < 1e-9

    def test_double_lobe_alternation(self):
        cfg = classify(DSECH, 0.2)
        first = [launch_angles(DSECH, 0.2, p)[0] for p in cfg.points]
        # alpha_l, beta_r launch at 0; beta_l, alpha_r at pi/3
        assert abs(first[0]) < 1e-9
        assert abs(first[1] - math.pi / 3) < 1e-9
        assert abs(first[2]) < 1e-9
        assert abs(first[3] - math.pi / 3) < 1e-9


class TestTraceStokes:
    def test_bounded_line_reaches_opposite_point(self):
        cfg = classify(SECH, 0.5)
        line = trace_stokes(SECH, 0.5, cfg.alpha_l, 0, others=cfg.points)
        assert line.termination == "turning_point"
        assert line.target == 1
        assert abs(line.vertices[-1] - cfg.alpha_r) < 1e-12
        # the bounded Stokes line lies on the real axis
        assert max(abs(v.imag) for v in line.vertices) < 1e-8

    def test_level_set_fidelity(self):
        cfg = classify(SECH, 0.5)
        for d in range(3):
            line = trace_stokes(SECH, 0.5, cfg.alpha_l, d, others=cfg.points)
            assert level_drift(SECH, 0.5, line) <= 1e-6 * (1.0 + arclen(line))

    def test_strip_exit_is_normal_termination(self):
        cfg = classify(SECH, 0.5)
        line = trace_stokes(SECH, 0.5, cfg.alpha_l, 1, others=cfg.points)
        assert line.termination == "strip"
        assert abs(line.vertices[-1].imag) >= 0.9 * SECH.strip_halfwidth


class TestBuildGraph:
    def test_single_lobe_topology(self):
        # four Stokes regions: one bounded line on R plus four unbounded ones
        g = build_graph(SECH, 0.2)
        assert g.kind == "single"
        assert len(g.lines) == 6
        assert g.bounded_links == [{"pair": (0, 1), "connected": True}]
        strip_exits = [ln for ln in g.lines if ln.termination == "strip"]
        assert len(strip_exits) == 4

    def test_perturbed_mu_breaks_bounded_line(self):
        g = build_graph(SECH, 0.2 + 0.01j)
        assert g.bounded_links == [{"pair": (0, 1), "connected": False}]

    def test_double_lobe_topology(self):
        g = build_graph(DSECH, 0.2)
        assert g.kind == "double"
        assert len(g.lines) == 12
        assert {"pair": (0, 1), "connected": True} in g.bounded_links
        assert {"pair": (2, 3), "connected": True} in g.bounded_links

    def test_perturbed_double_breaks_both(self):
        g = build_graph(DSECH, 0.2 + 0.02j)
        assert all(not b["connected"] for b in g.bounded_links)

    def test_cut_convention(self):
        # cuts at 2pi/3 on alpha_l, beta_r and at 5pi/3 on beta_l, alpha_r
        g = build_graph(DSECH, 0.2)
        angles = {c["point"]: c["angle"] for c in g.cuts}
        assert abs(angles[0] - TWO_THIRDS) < 1e-9
        assert abs(angles[1] - FIVE_THIRDS) < 1e-9
        assert abs(angles[2] - TWO_THIRDS) < 1e-9
        assert abs(angles[3] - FIVE_THIRDS) < 1e-9

    def test_all_lines_stay_on_level_sets(self):
        for V, mu in [(SECH, 0.2), (DSECH, 0.2), (DSECH, 0.2 + 0.02j)]:
            g = build_graph(V, mu)
            for ln in g.lines:
                assert level_drift(V, mu, ln) <= 1e-6 * (1.0 + arclen(ln))

    def test_json_schema(self):
        blob = build_graph(SECH, 0.2).to_json()
        assert set(blob) == {"mu", "kind", "points", "cuts", "lines", "bounded"}
        assert all(
            set(ln) == {"source", "dir", "vertices", "termination"}
            for ln in blob["lines"]
        )


class TestZProfile:
    def test_re_z_increases_downward_inside_lobe(self):
        # vertical probe through the left lobe of the double-sech pair
        xs = -2.0 + 1j * np.linspace(0.6, -0.6, 41)
        z = z_profile(DSECH, 0.2, xs)
        re = z.real
        assert all(b > a for a, b in zip(re, re[1:]))

    def test_re_z_increases_downward_single_lobe(self):
        xs = 0.0 + 1j * np.linspace(0.8, -0.8, 33)
        z = z_profile(SECH, 0.5, xs)
        re = z.real
        assert all(b > a for a, b in zip(re, re[1:]))

    def test_profile_starts_at_zero(self):
        xs = np.linspace(-1.0, 1.0, 11) + 0.3j
        z = z_profile(SECH, 0.5, xs)
        assert z[0] == 0.0
