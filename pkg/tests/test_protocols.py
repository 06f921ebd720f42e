"""Source construction, both discrimination protocols, visibility, CHSH."""

import cmath
import math

import numpy as np
import pytest

from catbell import (
    CHSH_OPTIMAL_ANGLES,
    ChannelParams,
    ProtocolParams,
    build_analysis_state,
    build_source_state,
    chsh_s,
    compose_analysis_state,
    inner_product,
    protocol_report,
    protocol_usd2,
    protocol_usd4,
    success_prob,
    usd2_displacement,
    usd4_displacements,
    visibility,
)
from catbell.protocols import BEAM_1, BEAM_2, ENV_A, ENV_B, _usd2_prob, _usd4_prob
from conftest import channel_for, coherent_series

LINK_140 = ChannelParams(0.15, 70.0)
LINK_400 = ChannelParams(0.15, 200.0)
REF = ProtocolParams(100.0, 0.0028)


def test_source_state_collapses_at_zero_phase():
    state = build_source_state(ProtocolParams(3.0, 0.0))
    assert len(state.branches) == 2
    assert state.branches[0].amps == state.branches[1].amps
    assert math.isclose(state.squared_norm(), 1.0, rel_tol=1e-12)


def test_source_state_reference_amplitudes():
    state = build_source_state(REF)
    plus = 100.0 * cmath.exp(1j * 0.0028)
    minus = 100.0 * cmath.exp(-1j * 0.0028)
    assert abs(state.branches[0].amps[BEAM_1] - plus) < 1e-12
    assert abs(state.branches[0].amps[BEAM_2] - minus) < 1e-12
    assert abs(state.branches[1].amps[BEAM_1] - minus) < 1e-12
    assert math.isclose(state.squared_norm(), 1.0, rel_tol=1e-12)


def test_source_state_norm_against_series_grid():
    params = ProtocolParams(2.0, 0.17)
    state = build_source_state(params)
    grid = np.zeros((48, 48), dtype=complex)
    for b in state.branches:
        grid += b.coeff * np.outer(coherent_series(b.amps[BEAM_1], 48),
                                   coherent_series(b.amps[BEAM_2], 48))
    norm2 = float(np.vdot(grid, grid).real)
    assert abs(norm2 - state.squared_norm()) < 1e-8


def test_analysis_state_lossless_sign_pattern():
    params = ProtocolParams(2.0, 0.1, 0.0, 0.0)
    state = build_analysis_state(params, ChannelParams(0.0, 0.0))
    assert len(state.branches) == 8
    signs = [b.coeff.real * 8.0 for b in state.branches]
    assert signs == [1.0, -1.0, -1.0, 1.0, -1.0, 1.0, 1.0, -1.0]
    for b in state.branches:
        assert b.coeff.imag == 0.0
        assert b.amps[ENV_A] == 0j and b.amps[ENV_B] == 0j


def test_analysis_state_environment_amplitudes():
    params = ProtocolParams(5.0, 0.2, 0.3, 0.0)
    ch = channel_for(5.0, 3.0)
    state = build_analysis_state(params, ch)
    r = math.sqrt(1.0 - ch.transmittance)
    for b in state.branches:
        assert abs(abs(b.amps[ENV_A]) - r * 5.0) < 1e-12
        assert abs(abs(b.amps[ENV_B]) - r * 5.0) < 1e-12
        assert abs(b.amps[ENV_A] * b.amps[ENV_B] - (r * 5.0) ** 2) < 1e-10


def test_direct_equals_compositional_construction():
    # compare as physical states: branch bookkeeping may order nearly
    # cancelling pairs differently, so check the Hilbert-space distance
    rng = np.random.default_rng(31)
    for _ in range(6):
        params = ProtocolParams(
            alpha=rng.uniform(1.0, 8.0),
            phi=rng.uniform(0.05, 0.3),
            sigma1=rng.uniform(0.0, 2 * math.pi),
            sigma2=rng.uniform(0.0, 2 * math.pi),
        )
        ch = ChannelParams(0.2, rng.uniform(0.5, 10.0))
        direct = build_analysis_state(params, ch)
        composed = compose_analysis_state(params, ch)
        assert direct.modes == composed.modes
        dd = direct.squared_norm()
        cc = composed.squared_norm()
        dc = inner_product(direct, composed)
        assert abs(dd - cc) < 1e-12
        assert abs(dc.imag) < 1e-13
        assert abs(dd + cc - 2.0 * dc.real) < 1e-13


def test_usd4_reference_point():
    report = protocol_usd4(REF, LINK_140)
    assert abs(report.p_max - 1.97e-9) / 1.97e-9 < 0.02
    assert abs(report.p_min - 0.28e-9) / 0.28e-9 < 0.02
    assert abs(report.visibility - 0.75) < 0.005
    # frozen regression values
    assert math.isclose(report.p_max, 1.9741020491764506e-09, rel_tol=1e-9)
    assert math.isclose(report.p_min, 2.800491049799894e-10, rel_tol=1e-9)
    assert math.isclose(report.visibility, 0.751525886395324, rel_tol=1e-9)


def test_usd2_reference_point():
    report = protocol_usd2(REF, LINK_400)
    assert abs(report.p_max - 5.3e-9) / 5.3e-9 < 0.02
    assert abs(report.p_min - 0.83e-9) / 0.83e-9 < 0.02
    assert abs(report.visibility - 0.73) < 0.005
    assert abs(report.chsh_s - 2.067) < 0.005
    assert report.chsh_s > 2.0
    assert math.isclose(report.p_max, 5.31661060486151e-09, rel_tol=1e-9)
    assert math.isclose(report.p_min, 8.260633856868718e-10, rel_tol=1e-9)
    assert math.isclose(report.visibility, 0.7310411110998499, rel_tol=1e-9)
    assert math.isclose(report.chsh_s, 2.067696507939409, rel_tol=1e-9)


def test_zero_phase_detects_nothing():
    params = ProtocolParams(50.0, 0.0)
    for which, fn in (("usd2", protocol_usd2), ("usd4", protocol_usd4)):
        report = fn(params, LINK_140)
        assert report.p_success == 0.0
        assert report.p_max == 0.0
        assert success_prob(which, 10.0, 5.0, 0.0, math.pi) == 0.0


def test_pipeline_matches_closed_form():
    rng = np.random.default_rng(314)
    for i in range(30):
        ap = rng.uniform(0.5, 40.0)
        phi = rng.uniform(1e-3, 0.3)
        nl = rng.uniform(0.0, 1e4)
        s1, s2 = rng.uniform(0, 2 * math.pi, size=2)
        which = ("usd2", "usd4")[i % 2]
        alpha = math.sqrt(ap * ap + nl)
        params = ProtocolParams(alpha, phi, s1, s2)
        ch = channel_for(alpha, ap, loss_db_per_km=0.17)
        closed = success_prob(which, ap, nl, phi, s1 - s2)
        pipe = (_usd2_prob if which == "usd2" else _usd4_prob)(params, ch)
        if closed < 1e-280:
            continue  # both sides in denormal territory
        assert abs(pipe - closed) / closed < 1e-10


def test_visibility_reference_values():
    assert abs(visibility(9108.75, 0.0028) - 0.7515) < 1e-4
    assert abs(visibility(9990.0, 0.0028) - 0.7308) < 5e-4
    assert visibility(0.0, 0.7) == 1.0
    with pytest.raises(ValueError, match="non-negative"):
        visibility(-1.0, 0.1)


def test_visibility_quadratic_vs_exact_form():
    for nl in (10.0, 1e3, 9990.0):
        for phi in (1e-3, 0.01, 0.05):
            taylor = visibility(nl, phi)
            exact = visibility(nl, phi, exact=True)
            # log ratio is 4*n_lost*(phi^2 - sin^2 phi), bounded by 4*n_lost*phi^4/3
            assert abs(math.log(taylor) - math.log(exact)) <= 4.0 * nl * phi**4 / 3.0 + 1e-15


def test_visibility_independent_of_surviving_amplitude():
    nl, phi = 2500.0, 0.0028
    values = []
    for ap in (1.0, 3.0, 10.0, 30.0):
        alpha = math.sqrt(ap * ap + nl)
        ch = channel_for(alpha, ap)
        rep2 = protocol_usd2(ProtocolParams(alpha, phi), ch)
        rep4 = protocol_usd4(ProtocolParams(alpha, phi), ch)
        assert abs(rep2.visibility - rep4.visibility) < 1e-12
        values.append(rep2.visibility)
    for v in values[1:]:
        assert abs(v - values[0]) < 1e-12


def test_rate_report_identities():
    for which in ("usd2", "usd4"):
        for dsig in (0.3, 1.2, 2.9):
            params = ProtocolParams(60.0, 0.003, dsig, 0.0)
            report = protocol_report(params, LINK_400, which)
            vis = (report.p_max - report.p_min) / (report.p_max + report.p_min)
            assert abs(report.visibility - vis) < 1e-12
            assert abs(report.chsh_s - 2.0 * math.sqrt(2.0) * report.visibility) < 1e-12
            assert report.p_min <= report.p_success <= report.p_max


def test_chsh_values():
    assert math.isclose(chsh_s(1.0), 2.0 * math.sqrt(2.0), rel_tol=1e-12)
    assert abs(chsh_s(1.0 / math.sqrt(2.0)) - 2.0) < 1e-12
    assert abs(chsh_s(0.7308) - 2.067) < 5e-4
    # default pattern is the maximum over analyzer angles
    rng = np.random.default_rng(5)
    best = chsh_s(0.9)
    for _ in range(500):
        angles = tuple(rng.uniform(0, 2 * math.pi, size=4))
        assert chsh_s(0.9, angles) <= best + 1e-9


def test_displacements_null_their_target_families():
    ap, phi = 2.4, 0.19
    left, right = usd4_displacements(ap, phi)
    scale = ap / math.sqrt(2.0)
    assert abs(1j * scale * cmath.exp(-2j * phi) + left) < 1e-14
    assert abs(1j * scale * cmath.exp(2j * phi) + right) < 1e-14
    assert usd2_displacement(ap) == -1j * ap
    assert abs(1j * ap + usd2_displacement(ap)) == 0.0


def test_click_model_deviation_small_and_shrinking():
    ch = ChannelParams(0.0, 0.0)

    def rel_dev(ap):
        params = ProtocolParams(ap, 0.1, math.pi, 0.0)
        default = _usd2_prob(params, ch, click_model=False)
        click = _usd2_prob(params, ch, click_model=True)
        return abs(click - default) / default

    bound = 4.0 * (0.5 * math.sin(0.1)) ** 2
    assert rel_dev(0.5) < bound
    assert rel_dev(0.15) < rel_dev(0.5)


def test_params_validation():
    with pytest.raises(ValueError, match="alpha"):
        ProtocolParams(0.0, 0.1)
    with pytest.warns(UserWarning, match="small-phase"):
        ProtocolParams(1.0, 1.0)


def test_unknown_protocol_rejected():
    with pytest.raises(ValueError, match="unknown protocol"):
        protocol_report(REF, LINK_140, "usd3")
    with pytest.raises(ValueError, match="unknown protocol"):
        success_prob("usd3", 1.0, 0.0, 0.1, 0.0)
