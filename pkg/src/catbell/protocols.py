"""Detection protocols for macroscopic phase-entangled coherent states.

A source emits two bright beams whose phases are anti-correlated: one beam
carries phase +phi while the other carries -phi, in superposition with the
reversed assignment.  Each beam travels through a lossy channel to an analysis
interferometer where a single photon imprints a further conditional phase of
+-phi (and a settable phase sigma on one path).  After post-selecting the
analysis photons, the two beams are left in a superposition of eight coherent
branches entangled with the channel environments.

Two unambiguous-state-discrimination protocols then reject the zero-phase
hypothesis by displacing the beams so that one branch family lands exactly on
vacuum and counting single photons in what remains:

* usd4 splits each beam 50/50, applies two different displacements, and
  requires a four-fold coincidence; its success probability scales as
  (|a'| sin phi)^8.
* usd2 displaces each beam once and requires a two-fold coincidence; its
  success probability scales as (|a'| sin phi)^4 and reaches farther for the
  same counting rate.

Each protocol is evaluated two ways: an operator pipeline built from the
branch algebra in states/optics, and a closed-form expression.  The two routes
must agree and the tests enforce that.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, replace
from itertools import combinations
from typing import TYPE_CHECKING

from .optics import BeamSplitterSpec, LossSpec, apply_beam_splitter, apply_displacement, apply_loss
from .states import (
    SuperposedState,
    add_mode,
    make_state,
    project_single_photon,
    project_vacuum,
)

if TYPE_CHECKING:
    from .experiment import ChannelParams

BEAM_1 = "beam1"
BEAM_2 = "beam2"
ENV_A = "env_a"
ENV_B = "env_b"
OUT_A3 = "out_a3"
OUT_A4 = "out_a4"
OUT_B3 = "out_b3"
OUT_B4 = "out_b4"
_VAC_A = "vac_a"
_VAC_B = "vac_b"

SQRT8 = 2.0 * math.sqrt(2.0)

# Analyzer phase pattern (a, b, a', b') that maximizes the CHSH combination.
CHSH_OPTIMAL_ANGLES = (0.0, math.pi / 4, math.pi / 2, 3 * math.pi / 4)

PROTOCOLS = ("usd2", "usd4")


@dataclass(frozen=True)
class ProtocolParams:
    """Source amplitude alpha > 0, conditional phase phi, analyzer phases sigma1/sigma2."""

    alpha: float
    phi: float
    sigma1: float = 0.0
    sigma2: float = 0.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if abs(self.phi) >= math.pi / 4:
            warnings.warn(
                f"phi = {self.phi} is outside the small-phase protocol regime (|phi| < pi/4)",
                stacklevel=2,
            )


@dataclass(frozen=True)
class RateReport:
    """Detection probabilities at the configured and extremal analyzer settings.

    p_max and p_min are evaluated at analyzer phase difference pi and 0;
    visibility = (p_max - p_min) / (p_max + p_min) and chsh_s = 2*sqrt(2) times
    that visibility (the CHSH value at the optimal analyzer pattern).
    """

    p_success: float
    p_max: float
    p_min: float
    visibility: float
    chsh_s: float


def _attenuation(params: ProtocolParams, channel: "ChannelParams") -> tuple[float, float]:
    """Surviving amplitude |a'| and mean photons lost per beam for this link."""
    eta = channel.transmittance
    alpha_prime = params.alpha * math.sqrt(eta)
    n_lost = params.alpha**2 - alpha_prime**2
    return alpha_prime, n_lost


def build_source_state(params: ProtocolParams) -> SuperposedState:
    """Normalized two-branch source state with anti-correlated phases +-phi.

    The branches are |alpha e^{i phi}, alpha e^{-i phi}> and the phase-swapped
    partner with equal weight.  At phi = 0 the branches coincide and the state
    reduces to a norm-1 product state.
    """
    a = params.alpha
    plus = a * cmath.exp(1j * params.phi)
    minus = a * cmath.exp(-1j * params.phi)
    raw = make_state(
        (BEAM_1, BEAM_2),
        [
            (0.5, {BEAM_1: plus, BEAM_2: minus}),
            (0.5, {BEAM_1: minus, BEAM_2: plus}),
        ],
    )
    norm = math.sqrt(raw.squared_norm())
    return make_state(
        raw.modes,
        [(b.coeff / norm, b.amps) for b in raw.branches],
    )


def build_analysis_state(params: ProtocolParams, channel: "ChannelParams") -> SuperposedState:
    """Eight-branch state of both beams after loss and both analysis interferometers.

    Modes are (beam1, beam2, env_a, env_b).  Beam amplitudes are
    i|a'| e^{i(s+t)phi} where s is the source phase sign and t the analysis
    photon's conditional sign; environment amplitudes keep the source sign
    only.  The coefficient of each branch is +-(phase factor)/8 with phase
    factors 1, e^{i sigma1}, e^{i sigma2}, or e^{i(sigma1+sigma2)} according to
    which analysis photons took the sigma path.
    """
    alpha_prime, _ = _attenuation(params, channel)
    r_env = params.alpha * math.sqrt(1.0 - channel.transmittance)
    phi = params.phi

    def beam(net: int) -> complex:
        return 1j * alpha_prime * cmath.exp(1j * net * phi)

    def env(sign: int) -> complex:
        return r_env * cmath.exp(1j * sign * phi)

    e1 = cmath.exp(1j * params.sigma1)
    e2 = cmath.exp(1j * params.sigma2)
    e12 = cmath.exp(1j * (params.sigma1 + params.sigma2))
    # (coefficient, beam1 net phase, beam2 net phase, source sign on env_a)
    rows = [
        (e2, +2, -2, +1),
        (-1.0, +2, 0, +1),
        (-e12, 0, -2, +1),
        (e1, 0, 0, +1),
        (-e2, 0, 0, -1),
        (1.0, 0, +2, -1),
        (e12, -2, 0, -1),
        (-e1, -2, +2, -1),
    ]
    branches = [
        (
            c / 8.0,
            {BEAM_1: beam(n1), BEAM_2: beam(n2), ENV_A: env(s), ENV_B: env(-s)},
        )
        for c, n1, n2, s in rows
    ]
    return make_state((BEAM_1, BEAM_2, ENV_A, ENV_B), branches)


def compose_analysis_state(params: ProtocolParams, channel: "ChannelParams") -> SuperposedState:
    """Build the eight-branch analysis state compositionally.

    Each source term (sign s = +-1 on the conditional phase) is taken through
    channel loss on both beams and then split at the two analysis
    interferometers.  The photon at the first site is the one that imprinted
    the source phase, so its two path amplitudes inherit the source sign:
    (-s or +s e^{i sigma1})/2; the second site splits identically for both
    terms with (+1 or -e^{i sigma2})/2.  Agrees with build_analysis_state
    branch for branch; kept as an independent check of the transcribed
    eight-branch table.
    """
    a = params.alpha
    eta = channel.transmittance
    merged: list[tuple[complex, dict]] = []
    for s in (1.0, -1.0):
        term = make_state(
            (BEAM_1, BEAM_2),
            [(0.5, {BEAM_1: a * cmath.exp(1j * s * params.phi),
                    BEAM_2: a * cmath.exp(-1j * s * params.phi)})],
        )
        term = apply_loss(term, LossSpec(eta, BEAM_1, ENV_A))
        term = apply_loss(term, LossSpec(eta, BEAM_2, ENV_B))
        term = _analysis_split(term, BEAM_1, params.phi,
                               -s, s * cmath.exp(1j * params.sigma1))
        term = _analysis_split(term, BEAM_2, params.phi,
                               1.0, -cmath.exp(1j * params.sigma2))
        merged.extend((b.coeff, b.amps) for b in term.branches)
    return make_state((BEAM_1, BEAM_2, ENV_A, ENV_B), merged)


def _analysis_split(state, beam, phi, coeff_plus, coeff_minus):
    """Split every branch over the analysis photon's two conditional phases."""
    rot_plus = 1j * cmath.exp(1j * phi)
    rot_minus = 1j * cmath.exp(-1j * phi)
    branches = []
    for b in state.branches:
        nu = b.amps[beam]
        for coeff, rot in ((coeff_plus, rot_plus), (coeff_minus, rot_minus)):
            amps = dict(b.amps)
            amps[beam] = rot * nu
            branches.append((b.coeff * coeff / 2.0, amps))
    return make_state(state.modes, branches)


def usd4_displacements(alpha_prime: float, phi: float) -> tuple[complex, complex]:
    """Displacements (left, right) that send the +-2 phi branch families to vacuum.

    After the 50/50 split each beam's branch amplitudes are i(|a'|/sqrt 2)
    e^{i net phi}; the left displacement nulls the net -2 phi family and the
    right one nulls the net +2 phi family.
    """
    scale = alpha_prime / math.sqrt(2.0)
    left = complex(-scale * math.sin(2 * phi), -scale * math.cos(2 * phi))
    right = complex(scale * math.sin(2 * phi), -scale * math.cos(2 * phi))
    return left, right


def usd2_displacement(alpha_prime: float) -> complex:
    """Displacement -i|a'| that sends the zero-net-phase amplitude i|a'| to vacuum."""
    return complex(0.0, -alpha_prime)


def _detect(state: SuperposedState, detector_modes: tuple[str, ...], click_model: bool) -> float:
    """Probability that every detector mode registers.

    Default model projects each mode on the one-photon state.  The click model
    asks only for at least one photon per detector and is evaluated exactly by
    inclusion-exclusion over vacuum projections; it differs from the default
    by O(|nu|^4) in the detector amplitudes.
    """
    if not click_model:
        for mode in detector_modes:
            state = project_single_photon(state, mode)
        return state.squared_norm()
    total = 0.0
    for size in range(len(detector_modes) + 1):
        for subset in combinations(detector_modes, size):
            projected = state
            for mode in subset:
                projected = project_vacuum(projected, mode)
            total += (-1.0) ** size * projected.squared_norm()
    return total


def _usd4_prob(params: ProtocolParams, channel: "ChannelParams",
               click_model: bool = False, displacement_phase: bool = True) -> float:
    state = build_analysis_state(params, channel)
    state = add_mode(state, _VAC_A)
    state = add_mode(state, _VAC_B)
    state = apply_beam_splitter(state, BeamSplitterSpec(0.5, _VAC_A, BEAM_1, OUT_A3, OUT_A4))
    state = apply_beam_splitter(state, BeamSplitterSpec(0.5, _VAC_B, BEAM_2, OUT_B3, OUT_B4))
    alpha_prime, _ = _attenuation(params, channel)
    left, right = usd4_displacements(alpha_prime, params.phi)
    for mode in (OUT_A3, OUT_B3):
        state = apply_displacement(state, mode, left, include_phase=displacement_phase)
    for mode in (OUT_A4, OUT_B4):
        state = apply_displacement(state, mode, right, include_phase=displacement_phase)
    return _detect(state, (OUT_A3, OUT_A4, OUT_B3, OUT_B4), click_model)


def _usd2_prob(params: ProtocolParams, channel: "ChannelParams",
               click_model: bool = False, displacement_phase: bool = True) -> float:
    state = build_analysis_state(params, channel)
    alpha_prime, _ = _attenuation(params, channel)
    tau = usd2_displacement(alpha_prime)
    state = apply_displacement(state, BEAM_1, tau, include_phase=displacement_phase)
    state = apply_displacement(state, BEAM_2, tau, include_phase=displacement_phase)
    return _detect(state, (BEAM_1, BEAM_2), click_model)


def _report(prob_fn, params, channel, click_model, displacement_phase) -> RateReport:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        at_pi = replace(params, sigma1=math.pi, sigma2=0.0)
        at_zero = replace(params, sigma1=0.0, sigma2=0.0)
    p_success = prob_fn(params, channel, click_model, displacement_phase)
    p_max = prob_fn(at_pi, channel, click_model, displacement_phase)
    p_min = prob_fn(at_zero, channel, click_model, displacement_phase)
    total = p_max + p_min
    vis = (p_max - p_min) / total if total > 0 else 0.0
    return RateReport(p_success, p_max, p_min, vis, SQRT8 * vis)


def protocol_usd4(params: ProtocolParams, channel: "ChannelParams",
                  click_model: bool = False, displacement_phase: bool = True) -> RateReport:
    """Four-fold displaced-photon-counting protocol, evaluated by the operator pipeline."""
    return _report(_usd4_prob, params, channel, click_model, displacement_phase)


def protocol_usd2(params: ProtocolParams, channel: "ChannelParams",
                  click_model: bool = False, displacement_phase: bool = True) -> RateReport:
    """Two-fold displaced-photon-counting protocol, evaluated by the operator pipeline."""
    return _report(_usd2_prob, params, channel, click_model, displacement_phase)


def protocol_report(params: ProtocolParams, channel: "ChannelParams", which: str,
                    click_model: bool = False) -> RateReport:
    """Dispatch to protocol_usd2 or protocol_usd4 by name."""
    if which == "usd2":
        return protocol_usd2(params, channel, click_model)
    if which == "usd4":
        return protocol_usd4(params, channel, click_model)
    raise ValueError(f"unknown protocol {which!r}, expected one of {PROTOCOLS}")


def visibility(n_lost: float, phi: float, exact: bool = False) -> float:
    """Interference visibility after losing n_lost photons per beam.

    The quadratic form exp(-4 * n_lost * phi^2) is the small-phi standard; with
    exact=True the sin^2 phi form carried by the environment overlaps is used.
    The two differ at O(phi^4).
    """
    if n_lost < 0:
        raise ValueError(f"n_lost must be non-negative, got {n_lost}")
    arg = math.sin(phi) ** 2 if exact else phi * phi
    return math.exp(-4.0 * n_lost * arg)


def _closed_form(power: int, alpha_prime: float, n_lost: float, phi: float,
                 delta_sigma: float, exact_visibility: bool = True) -> float:
    u = (alpha_prime * math.sin(phi)) ** 2
    vis = visibility(n_lost, phi, exact=exact_visibility)
    return u**power * math.exp(-8.0 * u) / 2.0 * (1.0 - vis * math.cos(delta_sigma))


def usd4_success_prob(alpha_prime: float, n_lost: float, phi: float, delta_sigma: float,
                      exact_visibility: bool = True) -> float:
    """Closed-form four-fold success probability at analyzer phase difference delta_sigma."""
    return _closed_form(4, alpha_prime, n_lost, phi, delta_sigma, exact_visibility)


def usd2_success_prob(alpha_prime: float, n_lost: float, phi: float, delta_sigma: float,
                      exact_visibility: bool = True) -> float:
    """Closed-form two-fold success probability at analyzer phase difference delta_sigma."""
    return _closed_form(2, alpha_prime, n_lost, phi, delta_sigma, exact_visibility)


def success_prob(which: str, alpha_prime: float, n_lost: float, phi: float,
                 delta_sigma: float, exact_visibility: bool = True) -> float:
    """Closed-form success probability for either protocol."""
    if which == "usd2":
        return usd2_success_prob(alpha_prime, n_lost, phi, delta_sigma, exact_visibility)
    if which == "usd4":
        return usd4_success_prob(alpha_prime, n_lost, phi, delta_sigma, exact_visibility)
    raise ValueError(f"unknown protocol {which!r}, expected one of {PROTOCOLS}")


def chsh_s(vis: float, angles: tuple[float, float, float, float] = CHSH_OPTIMAL_ANGLES) -> float:
    """CHSH combination for a cosine fringe of the given visibility.

    angles = (a, b, a_prime, b_prime) are the analyzer phases; the correlation
    at settings (x, y) is vis * cos(x - y) and

        S = vis * |cos(a-b) - cos(a-b') + cos(a'-b) + cos(a'-b')|

    which reaches 2*sqrt(2)*vis at the default pattern.
    """
    a, b, a2, b2 = angles
    return vis * abs(
        math.cos(a - b) - math.cos(a - b2) + math.cos(a2 - b) + math.cos(a2 - b2)
    )
