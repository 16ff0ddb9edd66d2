"""Recover source parameters from measurable count rates.

The herald detector is the only place an HPS can be characterized without
touching the quantum channel.  Two observables are used here:

* the herald count rate, which after correcting for detector deadtime
  gives the per-pulse herald mean ``beta * mu``;
* the heralded g2(0), which fixes ``mu`` itself because multi-pair
  emission grows with mu.

Combining the two with an independently measured herald-arm loss ``beta``
yields two estimates of mu that should agree; a large mismatch indicates
a miscalibrated loss budget or a saturated detector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import DetectorSpec, SourceSpec, Transmittance, _as_transmittance

__all__ = [
    "SaturationError",
    "CalibrationError",
    "InfeasibleError",
    "ConvergenceError",
    "MeasuredCounts",
    "CalibrationResult",
    "beta_mu_from_rate",
    "mu_from_g2",
    "calibrate_source",
    "solve_channel_loss",
]

# calibrate_source mismatch thresholds: warn above the first, fail above the second
MISMATCH_WARN = 0.10
MISMATCH_FAIL = 0.50


class SaturationError(ValueError):
    """Observed rate is too close to the deadtime-limited maximum to correct."""


class CalibrationError(ValueError):
    """Independent mu estimates disagree beyond the failure threshold."""


class InfeasibleError(ValueError):
    """A measured probability exceeds what any channel loss can produce."""


class ConvergenceError(RuntimeError):
    """An iterative solver exhausted its iteration budget."""


@dataclass(frozen=True)
class MeasuredCounts:
    """Herald-detector observables for one operating point."""

    herald_rate_hz: float
    detector: DetectorSpec
    g2: float | None = None

    def __post_init__(self) -> None:
        r = self.herald_rate_hz
        if not (isinstance(r, (int, float)) and math.isfinite(r) and r >= 0.0):
            raise ValueError(f"herald_rate_hz must be finite and >= 0, got {r!r}")
        object.__setattr__(self, "herald_rate_hz", float(r))
        if not isinstance(self.detector, DetectorSpec):
            raise ValueError("detector must be a DetectorSpec")
        # beyond this the deadtime correction diverges
        if self.herald_rate_hz * self.detector.deadtime_s >= 1.0:
            raise SaturationError(
                f"herald_rate_hz * deadtime_s = "
                f"{self.herald_rate_hz * self.detector.deadtime_s:.6g} >= 1; "
                "the detector spends all its time dead")
        if self.g2 is not None:
            g = self.g2
            if not (isinstance(g, (int, float)) and math.isfinite(g) and 0.0 <= g < 1.0):
                raise ValueError(f"g2 must be in [0, 1) for a heralded source, got {g!r}")
            object.__setattr__(self, "g2", float(g))


def beta_mu_from_rate(measured: MeasuredCounts) -> float:
    """Deadtime-corrected per-pulse herald mean from the observed rate.

    Each detection blinds the detector for ``deadtime_s``, so the live
    fraction is ``1 - r * deadtime_s`` and the corrected mean is
    ``r / ((1 - r * deadtime_s) * pulse_rate_hz)``.

    Raises :class:`SaturationError` when the live fraction is not positive
    or when the corrected value reaches one herald per pulse, which a
    threshold detector cannot produce.
    """
    r = measured.herald_rate_hz
    det = measured.detector
    live = 1.0 - r * det.deadtime_s
    if live <= 0.0:
        raise SaturationError(
            f"observed rate {r:.6g} Hz reaches the deadtime limit "
            f"{1.0 / det.deadtime_s:.6g} Hz")
    beta_mu = r / (live * det.pulse_rate_hz)
    if beta_mu >= 1.0:
        raise SaturationError(
            f"deadtime correction implies {beta_mu:.6g} heralds per pulse; "
            "a threshold detector saturates below 1")
    return beta_mu


def mu_from_g2(g2: float, beta_mu: float) -> float:
    """Mean pair number from the heralded g2(0) and the herald mean.

    Inverts the g2 prediction for Poisson pairs.  With
    ``s = beta*mu + g2 / (1 - g2)`` the solution is
    ``mu = -1 + sqrt(1 + s)``, written below in a form that does not
    cancel for small s.  Monotonically increasing in g2.
    """
    if not (isinstance(g2, (int, float)) and math.isfinite(g2) and 0.0 <= g2 < 1.0):
        raise ValueError(f"g2 must be in [0, 1), got {g2!r}")
    if not (isinstance(beta_mu, (int, float)) and math.isfinite(beta_mu) and beta_mu >= 0.0):
        raise ValueError(f"beta_mu must be finite and >= 0, got {beta_mu!r}")
    s = beta_mu + g2 / (1.0 - g2)
    return s / (1.0 + math.sqrt(1.0 + s))


@dataclass(frozen=True)
class CalibrationResult:
    """Calibrated source plus the evidence behind it."""

    source: SourceSpec
    beta_mu: float
    mu_from_rate: float
    mu_from_g2: float | None
    mismatch: float | None
    warning: str | None


def calibrate_source(
    measured: MeasuredCounts,
    beta: Transmittance | float,
    alpha_s: Transmittance | float = 1.0,
) -> CalibrationResult:
    """Build an HPS spec from count-rate observables and a known beta.

    ``mu`` is taken from the deadtime-corrected rate.  When the
    measurement includes g2, an independent mu estimate is derived from
    it; a relative mismatch above 10% produces a warning string and above
    50% raises :class:`CalibrationError`.  ``alpha_s`` defaults to 1 and
    should be replaced with the measured signal-arm loss before link
    analysis.
    """
    beta = _as_transmittance(beta)
    beta_mu = beta_mu_from_rate(measured)
    mu_rate = beta_mu / beta.value
    mu_g2 = None
    mismatch = None
    warning = None
    if measured.g2 is not None:
        mu_g2 = mu_from_g2(measured.g2, beta_mu)
        if mu_rate > 0.0:
            mismatch = abs(mu_g2 - mu_rate) / mu_rate
            if mismatch > MISMATCH_FAIL:
                raise CalibrationError(
                    f"mu from rate ({mu_rate:.4g}) and from g2 ({mu_g2:.4g}) "
                    f"disagree by {mismatch:.0%}; check beta and deadtime")
            if mismatch > MISMATCH_WARN:
                warning = (f"mu estimates disagree by {mismatch:.1%} "
                           f"(rate: {mu_rate:.4g}, g2: {mu_g2:.4g})")
    source = SourceSpec.hps(mu_rate, _as_transmittance(alpha_s), beta)
    return CalibrationResult(source, beta_mu, mu_rate, mu_g2, mismatch, warning)


def solve_channel_loss(measured_p_cond: float, source: SourceSpec,
                       tol: float = 1e-12, max_iter: int = 200) -> float:
    """Receiver-path transmittance that reproduces a measured P(click|herald).

    The conditional detection probability is strictly increasing in the
    receiver-path transmittance, so plain bisection on (0, 1] converges
    unconditionally.  Raises :class:`InfeasibleError` when the target
    exceeds the lossless-channel value (the heralding efficiency) and
    :class:`ConvergenceError` if the bracket fails to shrink to ``tol``
    within ``max_iter`` iterations.
    """
    from .core import _conditional_detection, heralding_efficiency

    if not (isinstance(measured_p_cond, (int, float)) and math.isfinite(measured_p_cond)
            and 0.0 < measured_p_cond <= 1.0):
        raise ValueError(f"measured_p_cond must be in (0, 1], got {measured_p_cond!r}")
    ceiling = heralding_efficiency(source)
    if measured_p_cond > ceiling:
        raise InfeasibleError(
            f"measured_p_cond {measured_p_cond:.6g} exceeds the lossless-channel "
            f"value {ceiling:.6g}")
    mu, beta, a_s = source.mu, source.beta.value, source.alpha_s.value

    def shortfall(x: float) -> float:
        return _conditional_detection(mu, beta, a_s * x) - measured_p_cond

    lo, hi = 0.0, 1.0
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if shortfall(mid) < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol:
            return 0.5 * (lo + hi)
    raise ConvergenceError(
        f"bisection did not reach tol={tol} in {max_iter} iterations")
