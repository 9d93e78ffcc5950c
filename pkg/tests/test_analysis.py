import csv
import io
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wageshare import analysis
from wageshare.analysis import (
    ElasticityRecord,
    capital_elasticity,
    decompose_growth,
    decompose_pool,
    elasticity_table,
    figure_data_bytes,
    log_time_derivative,
    wage_share_elasticity,
)
from wageshare.dataio import ALL_COUNTRIES, POOL_COUNTRIES, PanelObservation
from wageshare.econometrics import FitResult
from wageshare.errors import ConfigurationError, DomainError, GapError

from oracles import fitted_log_wage, richardson


def _fit(alpha1, se=0.02, alpha0=0.0):
    return FitResult(alpha0, alpha1, 0.1, se, 1 / (1 + alpha1), se / (1 + alpha1) ** 2, 0.2, 10, "HC1")


def model_path(country, alpha0, alpha1, n, step, lam0=0.66, g_lam=-0.004, lnk0=4.5, g_k=0.02, g_a=0.012,
               curve=0.0):
    """Rows sampled every ``step`` time units from smooth paths that satisfy the fitted model exactly."""
    rows = []
    for i in range(n):
        t = i * step
        lam = lam0 * math.exp(g_lam * t + curve * math.sin(0.05 * t))
        lnk = lnk0 + g_k * t + curve * math.cos(0.03 * t)
        a = math.exp(g_a * t)
        hours = 1000.0
        lny = alpha0 + (1 - lam) * lnk + 0.5 * alpha1 * lam * (1 - lam) * lnk**2
        rows.append(PanelObservation(country, 1950 + i, hours * a * math.exp(lny), hours,
                                     hours * math.exp(lnk), a, lam))
    return rows


class TestElasticity:
    def test_k_one(self):
        assert wage_share_elasticity(0.6, 1.0, 0.3) == (1.0, 0.0, 1.0)

    def test_symmetric_share(self):
        for a1 in (0.0, 0.087, 0.9):
            _, _, net = wage_share_elasticity(0.5, 200.0, a1)
            assert net == pytest.approx(1 - 0.5 * math.log(200.0), rel=1e-14)

    def test_factored_form(self):
        lam, k, a1 = 0.62, 350.0, 0.087
        lnk = math.log(k)
        _, _, net = wage_share_elasticity(lam, k, a1)
        assert net == pytest.approx(1 - lam * lnk * (1 - 0.5 * a1 * (1 - 2 * lam) * lnk), rel=1e-14)

    @pytest.mark.parametrize("lam, k", [(0.0, 2.0), (1.0, 2.0), (0.5, 0.0), (0.5, -3.0)])
    def test_domain(self, lam, k):
        with pytest.raises(DomainError):
            wage_share_elasticity(lam, k, 0.1)

    def test_matches_derivative_of_fitted_log_wage(self):
        for lam in np.linspace(0.1, 0.9, 10):
            for k in np.geomspace(2.0, 2000.0, 10):
                lnk = math.log(k)

                def lnw(log_lam):
                    return fitted_log_wage(math.exp(log_lam), lnk, 1.3, 0.087, 0.2)

                fd = richardson(lnw, math.log(lam), 1e-4)
                assert abs(wage_share_elasticity(lam, k, 0.087)[2] - fd) < 1e-8

    def test_capital_elasticity_matches_derivative(self):
        for lam, lnk, a1 in [(0.6, 5.0, 0.087), (0.3, 2.0, 0.392), (0.7, 6.5, -0.2)]:
            fd = richardson(lambda x: fitted_log_wage(lam, x, 0.0, a1), lnk, 1e-4)
            assert capital_elasticity(lam, math.exp(lnk), a1) == pytest.approx(fd, abs=1e-9)

    @given(lam=st.floats(0.55, 0.70), lnk=st.floats(4.0, 7.0), a1=st.floats(0.0, 0.4))
    def test_signs_at_observed_magnitudes(self, lam, lnk, a1):
        direct, indirect, net = wage_share_elasticity(lam, math.exp(lnk), a1)
        assert direct == 1.0
        assert -indirect > 0 and -indirect > direct
        assert net < 0
        assert abs(net - (direct + indirect)) < 1e-12


def _two_country_panel():
    return model_path("US", 1.0, 0.087, 66, 1.0) + model_path("DK", 0.2, 0.392, 27, 1.0, lnk0=5.5)


class TestElasticityTable:
    def test_record_invariants(self):
        recs = elasticity_table(_two_country_panel(), {"US": _fit(0.087), "DK": _fit(0.392, 0.299)})
        assert [r.country for r in recs] == ["DK", "US"]
        for r in recs:
            assert r.mean_direct == 1.0
            assert abs(r.mean_net - (r.mean_direct + r.mean_indirect)) < 1e-12
            assert r.ci_low <= r.mean_net <= r.ci_high

    def test_endpoint_ci_equals_delta_for_linear_series(self):
        # net is affine in alpha1, so the endpoint band is exactly mean +/- 1.96 * se_mean
        rec = elasticity_table(_two_country_panel(), {"US": _fit(0.087), "DK": _fit(0.392)})[1]
        assert rec.ci_high - rec.mean_net == pytest.approx(1.96 * rec.se_mean, rel=1e-9)
        assert rec.mean_net - rec.ci_low == pytest.approx(1.96 * rec.se_mean, rel=1e-9)

    def test_ci_monotone_in_se(self):
        panel = _two_country_panel()
        widths = []
        for se in (0.0, 0.01, 0.02, 0.05, 0.3):
            r = elasticity_table(panel, {"US": _fit(0.087, se), "DK": _fit(0.392, se)})[1]
            widths.append(r.ci_high - r.ci_low)
        assert widths[0] == 0.0
        assert all(b >= a for a, b in zip(widths, widths[1:]))

    def test_missing_fit(self):
        with pytest.raises(ConfigurationError, match="DK"):
            elasticity_table(_two_country_panel(), {"US": _fit(0.087)})

    def test_fits_by_country(self):
        us, pool = _fit(0.087), _fit(0.392)
        fits = analysis.fits_by_country(us, pool)
        assert set(fits) == set(ALL_COUNTRIES)
        assert fits["US"] is us and all(fits[c] is pool for c in POOL_COUNTRIES)


class TestLogDerivative:
    def test_constant(self):
        assert set(log_time_derivative({y: 3.7 for y in range(2000, 2010)}).values()) == {0.0}

    def test_geometric(self):
        d = log_time_derivative({2000 + t: 2.0 * 1.03**t for t in range(12)})
        assert np.allclose(list(d.values()), math.log(1.03), rtol=0, atol=1e-14)

    def test_hand_five_points(self):
        d = log_time_derivative({2000: 1.0, 2001: 2.0, 2002: 4.0, 2003: 3.0, 2004: 6.0})
        ln = math.log
        expected = [ln(2), (ln(4) - ln(1)) / 2, (ln(3) - ln(2)) / 2, (ln(6) - ln(4)) / 2, ln(6) - ln(3)]
        assert list(d) == [2000, 2001, 2002, 2003, 2004]
        assert np.allclose(list(d.values()), expected, rtol=0, atol=1e-15)

    def test_unsorted_input(self):
        d = log_time_derivative({2002: 4.0, 2000: 1.0, 2001: 2.0})
        assert list(d) == [2000, 2001, 2002]

    def test_gap(self):
        with pytest.raises(GapError) as exc:
            log_time_derivative({2000: 1.0, 2001: 1.0, 2003: 1.0})
        assert exc.value.missing_years == (2002,)

    def test_non_positive(self):
        with pytest.raises(DomainError):
            log_time_derivative({2000: 1.0, 2001: 0.0, 2002: 1.0})

    def test_too_short(self):
        with pytest.raises(ValueError):
            log_time_derivative({2000: 1.0, 2001: 2.0})


class TestDecomposition:
    def test_invariants(self):
        d = decompose_growth(model_path("US", 1.0, 0.087, 66, 1.0, curve=0.2), 0.087)
        total = d.tfp_component + d.labor_share_component + d.capital_deepening_component
        assert d.residual == total - d.observed_growth
        assert d.labor_share_pct_of_observed == d.labor_share_component / d.observed_growth * 100
        assert d.n_years == 66

    def test_tfp_component_exact(self):
        d = decompose_growth(model_path("US", 1.0, 0.087, 30, 1.0), 0.087)
        assert d.tfp_component == pytest.approx(0.012, rel=1e-12)

    def test_closure_improves_with_finer_steps(self):
        # the same continuous path over 60 time units, sampled annually and every decade
        coarse = decompose_growth(model_path("US", 1.0, 0.2, 7, 10.0, curve=0.3), 0.2)
        fine = decompose_growth(model_path("US", 1.0, 0.2, 61, 1.0, curve=0.3), 0.2)
        coarse_rel = abs(coarse.residual / coarse.observed_growth)
        fine_rel = abs(fine.residual / fine.observed_growth)
        assert fine_rel < coarse_rel / 10
        assert fine_rel < 1e-3

    def test_one_country_only(self):
        with pytest.raises(ConfigurationError):
            decompose_growth(_two_country_panel(), 0.1)

    def test_gap_propagates(self):
        rows = model_path("US", 1.0, 0.087, 10, 1.0)
        del rows[4]
        with pytest.raises(GapError):
            decompose_growth(rows, 0.087)

    def test_pool_averages_country_years(self):
        a = model_path("AT", 0.2, 0.392, 27, 1.0, g_a=0.01)
        b = model_path("JP", 0.2, 0.392, 26, 1.0, g_a=0.02)
        pooled = decompose_pool(a + b, 0.392)
        assert pooled.country == "Others" and pooled.n_years == 53
        assert pooled.tfp_component == pytest.approx((27 * 0.01 + 26 * 0.02) / 53, rel=1e-12)

    def test_pool_needs_countries(self):
        with pytest.raises(ConfigurationError):
            decompose_pool(model_path("US", 1.0, 0.1, 10, 1.0), 0.1)


def _parse(data):
    return list(csv.reader(io.StringIO(data.decode("utf-8"))))


class TestFigureData:
    def _records(self, n=12):
        return [ElasticityRecord(c, 1.0, -2.0 - 0.1 * i, -1.0 - 0.1 * i, -1.1 - 0.1 * i, -0.9 - 0.1 * i)
                for i, c in enumerate(ALL_COUNTRIES[:n])]

    def test_figure2_shape_and_order(self):
        rows = _parse(figure_data_bytes(self._records()))
        assert rows[0] == ["country", "direct", "indirect", "net", "ci_low", "ci_high"]
        assert len(rows) == 13
        nets = [float(r[3]) for r in rows[1:]]
        assert nets == sorted(nets)

    def test_figure3_columns_and_order(self):
        recs = [decompose_pool(model_path("AT", 0.2, 0.4, 27, 1.0), 0.4),
                decompose_growth(model_path("US", 1.0, 0.1, 66, 1.0), 0.1),
                decompose_growth(model_path("AT", 0.2, 0.4, 27, 1.0), 0.4)]
        rows = _parse(figure_data_bytes(recs))
        assert rows[0] == ["country", "tfp", "labor_share", "capital", "observed", "residual"]
        assert [r[0] for r in rows[1:]] == ["US", "Others", "AT"]

    def test_nine_significant_digits(self):
        rows = _parse(figure_data_bytes([ElasticityRecord("US", 1.0, -1 / 3, 2 / 3, 0.5, 0.75)]))
        assert rows[1][2] == "-0.333333333"

    def test_deterministic(self, tmp_path):
        recs = self._records()
        analysis.emit_figure_data(recs, tmp_path / "a.csv")
        analysis.emit_figure_data(list(reversed(recs)), tmp_path / "b.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_empty(self):
        with pytest.raises(ValueError):
            figure_data_bytes([])

    def test_labor_share_series(self, tmp_path):
        analysis.emit_labor_share_series(model_path("US", 1.0, 0.1, 5, 1.0), tmp_path / "f1.csv")
        rows = _parse((tmp_path / "f1.csv").read_bytes())
        assert rows[0] == ["year", "labor_share"] and len(rows) == 6
