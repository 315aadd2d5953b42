"""Acceptance gate: every headline claim at its pinned tolerance.

Each test prints its pass/fail line so a bare pytest run doubles as the
acceptance report.  The expensive splitting data is shared module-wide.

Known red: test_even_splitting_log_gap_slope. The fitted log-gap slope
mixes J with its drift along the h-dependent reference points (the k=0
reference moves from mu=0.175 to mu=0.212 across the pinned h list, carrying
J from 0.158 to 0.325), so no single -J(mu_k^dl) lies within 5% of it.  The
substantive splitting physics is covered by the pointwise gap checks in
test_even_splitting / test_odd_splitting.
"""
import pytest

from zss import verify


def _report(result):
    print(result.line())
    return result


@pytest.fixture(scope="module")
def even_rows():
    return verify._pmap(verify._splitting_case, [("even", h) for h in verify.SPLIT_H])


class TestAcceptance:
    def test_satsuma_yajima_exactness(self):
        # N in {4, 5, 10}: exactly N purely imaginary eigenvalues, oracle to
        # 1e-7 and quantization to 1e-10 against i*h*(N-k-1/2)
        res = _report(verify.check_satsuma_yajima())
        assert res.passed, res.details

    def test_oh2_agreement(self):
        # |lambda_oracle - lambda_wkb| / h^2 bounded within factor 2 of its
        # h=0.2 value as h halves to 0.05 (tilted single-lobe pulse)
        res = _report(verify.check_oh2_agreement())
        assert res.passed, res.details

    def test_single_lobe_spectrum_purely_imaginary(self):
        # every oracle eigenvalue in the window has |Re lambda| <= 1e-8
        res = _report(verify.check_single_lobe_imaginary())
        assert res.passed, res.details

    def test_even_splitting(self, even_rows):
        # exactly 2 eigenvalues near each reference point, vertical split,
        # gap matching exp(-J/h)*h/|I'| within C*h with fitted C <= 3
        res = _report(verify.check_even_splitting())
        assert res.passed, res.details

    def test_even_splitting_log_gap_slope(self, even_rows):
        # least-squares slope of log(oracle gap) vs 1/h within 5% of -J
        res = _report(verify.check_even_gap_slope(rows=even_rows))
        assert res.passed, res.details

    def test_odd_splitting(self):
        # horizontal split: equal imaginary parts, opposite real parts of
        # the formula magnitude, and no purely imaginary eigenvalue at all
        res = _report(verify.check_odd_splitting())
        assert res.passed, res.details

    def test_full_qc_consistency(self):
        # roots of the full quantization condition against the oracle pair
        # (recentered) and the splitting formula, within C*h on the gap scale
        res = _report(verify.check_full_qc_consistency())
        assert res.passed, res.details

    def test_property_suites(self):
        # action symmetry, sech closed form, derivative consistency, turning
        # conjugation, Stokes level fidelity, count additivity, reflection
        res = _report(verify.check_property_suites())
        assert res.passed, res.details
