"""Bundled component library: digital, analog-electrical, and analog-optical
parts with aggressive and conservative optical scaling profiles.

Absolute per-action energies are starting points assembled from typical
published ranges for each device class (noted per entry); the calibration
path exists precisely because they are not ground truth. Storage energies
are held fixed across profiles; optical and mixed-signal parts scale.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .spec_model import ComponentSpec


class CalibrationError(Exception):
    """Calibration cannot reproduce the reference breakdown.

    kind is "ZeroCount" when a referenced component has no energy
    contribution under the evaluated mapping, or "UnknownComponent" when
    the reference names a part the library lacks.
    """

    def __init__(self, kind: str, component: str, message: str):
        self.kind = kind
        self.component = component
        super().__init__(f"{kind} [{component}]: {message}")


@dataclass(frozen=True)
class ScalingProfile:
    """Energy scale factors per component class plus laser efficiency."""

    name: str
    multipliers: dict[str, float]
    laser_wall_plug_efficiency: float

    def factor(self, cls: str) -> float:
        return self.multipliers.get(cls, 1.0)


AGGRESSIVE = ScalingProfile(
    name="aggressive",
    multipliers={"storage": 1.0, "compute": 0.25, "converter": 0.25,
                 "network": 0.25, "source": 0.25},
    laser_wall_plug_efficiency=0.25,
)

CONSERVATIVE = ScalingProfile(
    name="conservative",
    multipliers={"storage": 1.0, "compute": 2.0, "converter": 2.0,
                 "network": 2.0, "source": 2.0},
    laser_wall_plug_efficiency=0.15,
)

PROFILES = {p.name: p for p in (AGGRESSIVE, CONSERVATIVE)}


@dataclass(frozen=True)
class LaserModel:
    """Continuous-wave off-chip laser: optical output divided by wall-plug
    efficiency gives electrical draw, paid for the full run latency."""

    optical_power_per_wavelength_mw: float
    wavelengths: int
    wall_plug_efficiency: float

    def wall_power_mw(self) -> float:
        return (self.optical_power_per_wavelength_mw * self.wavelengths
                / self.wall_plug_efficiency)

    def energy_pj(self, latency_s: float) -> float:
        return self.wall_power_mw() * latency_s * 1e9


# One laser per accelerator: 16 wavelengths at 0.5 mW optical each.
LASER_OPTICAL_MW = 0.5
LASER_WAVELENGTHS = 16


def _base_components() -> list[ComponentSpec]:
    # Energies in pJ per 8-bit value, static power in mW per instance,
    # area in um^2 per instance.
    return [
        # Off-chip DRAM, ~16 pJ/bit at value granularity.
        ComponentSpec("dram", "storage", "DE", "DE",
                      {"read": 128.0, "write": 128.0, "update": 136.0},
                      static_power_mw=0.0, area_um2=0.0,
                      capacity_bits=8 << 30, bandwidth=32.0),
        # Multi-megabit on-chip SRAM, sub-pJ per value.
        ComponentSpec("global_buffer_sram", "storage", "DE", "DE",
                      {"read": 0.72, "write": 0.64, "update": 0.80},
                      static_power_mw=2.0, area_um2=6.0e6,
                      capacity_bits=1 << 24, bandwidth=64.0),
        # Distributed per-lane register/capacitor stations; bandwidth is the
        # aggregate of the lanes behind the single modeled instance.
        ComponentSpec("register", "storage", "AE", "AE",
                      {"read": 0.04, "write": 0.035, "update": 0.045},
                      static_power_mw=0.05, area_um2=1.2e4,
                      capacity_bits=8192, bandwidth=2048.0),
        # Mixed-signal converters at GS/s rates.
        ComponentSpec("dac", "converter", "DE", "AE", {"convert": 1.6},
                      static_power_mw=0.1, area_um2=3.0e3, bandwidth=1.0),
        ComponentSpec("adc", "converter", "AE", "DE", {"convert": 4.0},
                      static_power_mw=0.15, area_um2=4.2e3, bandwidth=1.0),
        # Electro-optic modulation, per-value drive energy.
        ComponentSpec("mzm_modulator", "converter", "AE", "AO",
                      {"convert": 6.4},
                      static_power_mw=0.02, area_um2=9.0e3, bandwidth=1.0),
        # Photodetector plus transimpedance readout.
        ComponentSpec("photodiode", "converter", "AO", "AE",
                      {"convert": 4.8},
                      static_power_mw=0.01, area_um2=600.0, bandwidth=2.0),
        # Passive optics: no per-action energy, thermal tuning as static.
        ComponentSpec("microring", "network", "AO", "AO", {},
                      static_power_mw=0.02, area_um2=80.0),
        ComponentSpec("star_coupler", "network", "AO", "AO", {},
                      static_power_mw=0.0, area_um2=500.0),
        ComponentSpec("laser", "source", "AO", "AO", {},
                      static_power_mw=0.0, area_um2=0.0),
        ComponentSpec("digital_mac", "compute", "DE", "DE",
                      {"compute": 0.25}, area_um2=800.0),
        # The optical MAC itself is nearly free; its cost lives in the
        # laser, modulators, and readout.
        ComponentSpec("analog_mac", "compute", "AO", "AO",
                      {"compute": 0.008}, area_um2=300.0),
    ]


def resolve_profile(profile) -> ScalingProfile:
    if isinstance(profile, ScalingProfile):
        return profile
    try:
        return PROFILES[profile]
    except KeyError:
        raise KeyError(f"unknown scaling profile {profile!r}") from None


def builtin_components(profile="aggressive") -> dict[str, ComponentSpec]:
    """The bundled library under one scaling profile, keyed by name."""

    prof = resolve_profile(profile)
    out: dict[str, ComponentSpec] = {}
    for base in _base_components():
        f = prof.factor(base.cls)
        comp = replace(
            base,
            energy_per_action={a: e * f for a, e in base.energy_per_action.items()},
            static_power_mw=base.static_power_mw * f,
        )
        if base.name == "laser":
            laser = LaserModel(LASER_OPTICAL_MW, LASER_WAVELENGTHS,
                               prof.laser_wall_plug_efficiency)
            comp = replace(comp, static_power_mw=laser.wall_power_mw())
        out[comp.name] = comp
    return out


# ----------------------------------------------------------------------------
# Calibration
# ----------------------------------------------------------------------------


def calibration_factors(reference_fractions: dict[str, float],
                        contributions: dict[str, float]) -> dict[str, float]:
    """Per-component scale factors k such that scaling each component's
    contribution by k[c] reproduces the reference fractions while keeping
    the total unchanged: k[c] = fraction[c] * total / contribution[c]."""

    s = sum(reference_fractions.values())
    if abs(s - 1.0) > 1e-6:
        raise CalibrationError("BadFractions", "*",
                               f"fractions sum to {s}, expected 1")
    total = sum(contributions.get(c, 0.0) for c in reference_fractions)
    factors = {}
    for c, frac in reference_fractions.items():
        got = contributions.get(c)
        if got is None:
            raise CalibrationError("UnknownComponent", c,
                                   "reference names a component the "
                                   "evaluation never touched")
        if got == 0.0:
            raise CalibrationError(
                "ZeroCount", c,
                "component has zero energy under the evaluated mapping; "
                "its fraction cannot be matched by scaling")
        factors[c] = frac * total / got
    return factors


def scale_library(base: dict[str, ComponentSpec],
                  factors: dict[str, float]) -> dict[str, ComponentSpec]:
    """Apply per-component energy scale factors (actions and static)."""

    out = dict(base)
    for name, k in factors.items():
        if name not in out:
            raise CalibrationError("UnknownComponent", name,
                                   "not in the base library")
        c = out[name]
        out[name] = replace(
            c,
            energy_per_action={a: e * k for a, e in c.energy_per_action.items()},
            static_power_mw=c.static_power_mw * k,
        )
    return out


def calibrate(reference_breakdown: dict[str, float],
              base: dict[str, ComponentSpec]) -> dict[str, ComponentSpec]:
    """Scale `base` so the bundled accelerator running the bundled first
    workload reproduces the reference fractions. The heavy lifting lives in
    experiments.breakdown_contributions; this wrapper exists so the library
    can be calibrated without touching the experiment drivers directly."""

    from .experiments import breakdown_contributions

    total = sum(reference_breakdown.values())
    if total <= 0:
        raise CalibrationError("BadFractions", "*",
                               "reference breakdown has no energy")
    fractions = {c: v / total for c, v in reference_breakdown.items()}
    contributions = breakdown_contributions(base)
    factors = calibration_factors(fractions, contributions)
    return scale_library(base, factors)
