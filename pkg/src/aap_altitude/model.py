"""Closed-form link budget, sum rate and energy model of a hovering access point.

Unit conventions used throughout:

* dBm values convert to watts as ``10 ** (x / 10) * 1e-3``.
* The noise variance seen by one user is the noise PSD times the per-user
  bandwidth, ``sigma2_w = psd_w_per_hz * bandwidth_hz``.
* Rates are expressed in bits per Hz delivered over the hover time, so the
  sum rate has units of bits/Hz and efficiency has units of bits/(J*Hz).

All functions accept either Python floats or numpy arrays for the altitude
argument and broadcast accordingly.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateEnergy, DomainError, Infeasible, InvalidParams

LN2 = math.log(2.0)


def dbm_to_watt(x_dbm):
    return 10.0 ** (x_dbm / 10.0) * 1e-3


@dataclass(frozen=True)
class EnergyConstants:
    """Affine rotor model: climb energy ``alpha_cl*h + beta_cl`` (J) and hover
    power ``alpha_ho*h + beta_ho`` (W)."""

    alpha_cl: float
    beta_cl: float
    alpha_ho: float
    beta_ho: float

    def __post_init__(self):
        for name in ("alpha_cl", "beta_cl", "alpha_ho", "beta_ho"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidParams(f"energy.{name}", "must be finite")
        if self.alpha_cl < 0:
            raise InvalidParams("energy.alpha_cl", "must be >= 0")
        if self.alpha_ho < 0:
            raise InvalidParams("energy.alpha_ho", "must be >= 0")

    @classmethod
    def zero(cls) -> "EnergyConstants":
        return cls(0.0, 0.0, 0.0, 0.0)

    @property
    def is_zero(self) -> bool:
        return not (self.alpha_cl or self.beta_cl or self.alpha_ho or self.beta_ho)


# Fitted quadrotor constants (Intel Aero field data).
REFERENCE_ENERGY = EnergyConstants(alpha_cl=315.0, beta_cl=-211.261, alpha_ho=4.917, beta_ho=275.204)


@dataclass(frozen=True)
class ScenarioParams:
    h0: float
    p_t_dbm: float
    p_h_w: float
    bandwidth_hz: float
    noise_psd_dbm_hz: float
    phi_deg: float
    rho_ue: float
    hover_time_s: float
    r0_bps: float
    h_min_m: float
    h_max_m: float
    energy: EnergyConstants = field(default_factory=lambda: REFERENCE_ENERGY)

    def __post_init__(self):
        for f in dataclasses.fields(self):
            if f.name == "energy":
                continue
            value = getattr(self, f.name)
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise InvalidParams(f.name, f"expected a number, got {value!r}")
            if not math.isfinite(value):
                raise InvalidParams(f.name, "must be finite")
        if not isinstance(self.energy, EnergyConstants):
            raise InvalidParams("energy", "expected EnergyConstants")
        positive = ("h0", "bandwidth_hz", "rho_ue", "hover_time_s")
        for name in positive:
            if getattr(self, name) <= 0:
                raise InvalidParams(name, "must be > 0")
        if self.p_h_w < 0:
            raise InvalidParams("p_h_w", "must be >= 0")
        if self.r0_bps < 0:
            raise InvalidParams("r0_bps", "must be >= 0")
        if not 0 < self.phi_deg < 90:
            raise InvalidParams("phi_deg", "must lie strictly between 0 and 90 degrees")
        if self.h_min_m < 1:
            raise InvalidParams("h_min_m", "must be >= 1 m")
        if self.h_min_m >= self.h_max_m:
            raise InvalidParams("h_max_m", "must exceed h_min_m")
        e = self.energy
        if e.alpha_cl * self.h_min_m + e.beta_cl < 0:
            raise InvalidParams("energy.beta_cl", "climb energy is negative at h_min_m")
        # Energy is nondecreasing in h, so positivity at h_min covers the interval.
        total = energy_breakdown(e, dbm_to_watt(self.p_t_dbm), self.p_h_w, self.hover_time_s, self.h_min_m)[3]
        if total <= 0:
            raise InvalidParams("energy", "total energy must be positive on [h_min_m, h_max_m]")

    @property
    def cot_phi(self) -> float:
        return 1.0 / math.tan(math.radians(self.phi_deg))

    def without_rotor_energy(self) -> "ScenarioParams":
        return dataclasses.replace(self, energy=EnergyConstants.zero())

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, raw: dict) -> "ScenarioParams":
        """Build from a JSON-style mapping with exactly the dataclass field
        names; unknown or missing keys raise :class:`InvalidParams`."""
        if not isinstance(raw, dict):
            raise InvalidParams("", "expected an object")
        names = [f.name for f in dataclasses.fields(cls)]
        for key in raw:
            if key not in names:
                raise InvalidParams(key, "unknown key")
        for name in names:
            if name not in raw:
                raise InvalidParams(name, "missing required key")
        energy_raw = raw["energy"]
        if not isinstance(energy_raw, dict):
            raise InvalidParams("energy", "expected an object")
        energy_names = [f.name for f in dataclasses.fields(EnergyConstants)]
        for key in energy_raw:
            if key not in energy_names:
                raise InvalidParams(f"energy.{key}", "unknown key")
        for name in energy_names:
            if name not in energy_raw:
                raise InvalidParams(f"energy.{name}", "missing required key")
            v = energy_raw[name]
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise InvalidParams(f"energy.{name}", f"expected a number, got {v!r}")
        energy = EnergyConstants(**{k: float(energy_raw[k]) for k in energy_names})
        values = {}
        for name in names:
            if name == "energy":
                continue
            v = raw[name]
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise InvalidParams(name, f"expected a number, got {v!r}")
            values[name] = float(v)
        return cls(energy=energy, **values)


def default_scenario(**overrides) -> ScenarioParams:
    """Numerical-evaluation scenario of the reference study.

    ``h_max_m`` is not given there; 120 m is the usual drone ceiling and sits
    above the rate cap, so it never binds for these values.
    """
    base = dict(
        h0=1.42e-4,
        p_t_dbm=10.0,
        p_h_w=5.0,
        bandwidth_hz=20e6,
        noise_psd_dbm_hz=-169.0,
        phi_deg=43.0,
        rho_ue=0.005,
        hover_time_s=400.0,
        r0_bps=20e6,
        h_min_m=10.0,
        h_max_m=120.0,
        energy=REFERENCE_ENERGY,
    )
    base.update(overrides)
    return ScenarioParams(**base)


@dataclass(frozen=True)
class DerivedCoefficients:
    sigma2_w: float
    p_t_w: float
    beta: float
    c_rate: float
    h_cap_rate: float
    h_lo: float
    h_hi: float


def rate_cap(beta, r0_bps, bandwidth_hz):
    """Highest altitude at which the edge user still gets ``r0_bps``."""
    if r0_bps <= 0:
        return math.inf
    return (beta / math.expm1(r0_bps / bandwidth_hz * LN2)) ** 0.25


def derive_coefficients(params: ScenarioParams) -> DerivedCoefficients:
    sin_phi = math.sin(math.radians(params.phi_deg))
    cot2 = params.cot_phi**2
    sigma2_w = dbm_to_watt(params.noise_psd_dbm_hz) * params.bandwidth_hz
    p_t_w = dbm_to_watt(params.p_t_dbm)
    beta = p_t_w * params.h0 * sin_phi**2 / (math.pi * params.rho_ue * cot2 * sigma2_w)
    c_rate = params.hover_time_s * params.rho_ue * math.pi * cot2
    if not (beta > 0 and math.isfinite(beta)):
        raise InvalidParams("h0", f"SNR coefficient is not a positive finite number ({beta!r})")
    h_cap = rate_cap(beta, params.r0_bps, params.bandwidth_hz)
    h_hi = min(params.h_max_m, h_cap)
    if h_hi < params.h_min_m:
        raise Infeasible(
            f"rate floor {params.r0_bps:g} bps caps altitude at {h_cap:.6g} m, below h_min_m={params.h_min_m:g}"
        )
    return DerivedCoefficients(
        sigma2_w=sigma2_w,
        p_t_w=p_t_w,
        beta=beta,
        c_rate=c_rate,
        h_cap_rate=h_cap,
        h_lo=params.h_min_m,
        h_hi=h_hi,
    )


def los_gain(r, h_a, h0):
    return h0 / (np.square(r) + np.square(h_a))


def coverage(params: ScenarioParams, h_a):
    """Coverage radius (m) and real-valued user count under the AAP."""
    r_bar = h_a * params.cot_phi
    return r_bar, params.rho_ue * math.pi * np.square(r_bar)


def edge_snr(coeffs: DerivedCoefficients, h_a):
    return coeffs.beta / np.power(h_a, 4)


def edge_rate_bps(coeffs: DerivedCoefficients, params: ScenarioParams, h_a):
    """Per-user rate of the edge user in bit/s, the left side of the rate floor."""
    return params.bandwidth_hz * np.log2(1.0 + edge_snr(coeffs, h_a))


def sum_rate(coeffs: DerivedCoefficients, h_a):
    """Sum over covered users of the edge-user bits/Hz delivered in the hover time."""
    return coeffs.c_rate * np.square(h_a) * np.log1p(edge_snr(coeffs, h_a)) / LN2


def sum_rate_derivative(coeffs: DerivedCoefficients, h_a):
    h4 = np.power(h_a, 4)
    b = coeffs.beta
    return coeffs.c_rate * (2.0 * h_a * np.log1p(b / h4) / LN2 - 4.0 * b * h_a / (LN2 * (b + h4)))


def energy_breakdown(constants: EnergyConstants, p_t_w, p_h_w, hover_time_s, h_a):
    """Return ``(e_cl, e_ho, e_c, e_total)`` in joules."""
    e_cl = constants.alpha_cl * h_a + constants.beta_cl
    e_ho = (constants.alpha_ho * h_a + constants.beta_ho) * hover_time_s
    e_c = (p_t_w + p_h_w) * hover_time_s
    return e_cl, e_ho, e_c, e_cl + e_ho + e_c


def energy(params: ScenarioParams, h_a):
    return energy_breakdown(params.energy, dbm_to_watt(params.p_t_dbm), params.p_h_w, params.hover_time_s, h_a)


def total_energy(params: ScenarioParams, h_a):
    return energy(params, h_a)[3]


def energy_slope(params: ScenarioParams) -> float:
    """d E_total / d h, constant because the model is affine."""
    return params.energy.alpha_cl + params.energy.alpha_ho * params.hover_time_s


def gee(params: ScenarioParams, coeffs: DerivedCoefficients, h_a):
    e_total = total_energy(params, h_a)
    if np.any(np.asarray(e_total) <= 0):
        raise DegenerateEnergy("total energy must be positive")
    return sum_rate(coeffs, h_a) / e_total


def r1(coeffs: DerivedCoefficients, h_a):
    return coeffs.c_rate * np.square(h_a) * np.log2(coeffs.beta + np.power(h_a, 4))


def r2(coeffs: DerivedCoefficients, params: ScenarioParams, h_a, l):
    return coeffs.c_rate * np.square(h_a) * 4.0 * np.log2(h_a) + l * total_energy(params, h_a)


def monotone_decomposition(coeffs: DerivedCoefficients, params: ScenarioParams, h_a, l):
    """Split ``sum_rate(h) - l*E(h)`` into ``r1(h) - r2(h, l)``, both
    nondecreasing in ``h`` for ``h >= 1`` and ``l >= 0``."""
    if np.any(np.asarray(h_a) < 1):
        raise DomainError("monotone decomposition requires h_a >= 1 m")
    if l < 0:
        raise DomainError("monotone decomposition requires l >= 0")
    return r1(coeffs, h_a), r2(coeffs, params, h_a, l)
