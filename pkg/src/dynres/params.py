"""Physical parameters and operating-regime checks.

Rates are stored in angular-frequency units with the cavity hopping rate g
as the natural scale (g = 1 by convention); output times elsewhere in the
package are reported in units of 2*pi/g.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import ConfigError
from .states import Cat, Coherent, DisplacedSqueezed, Fock, InputState

_CONSISTENCY_RTOL = 1e-9


@dataclass(frozen=True)
class SystemParams:
    """All physical rates of the two-cavity / mirror system.

    g: cavity-cavity hopping rate.
    delta_omega: half the bare cavity frequency splitting.
    omega_m: mechanical frequency.
    kappa0: optomechanical coupling rate per zero-point displacement.
    b0: dimensionless equilibrium offset of the mirror (zero-point units).
    gamma1, gamma2, gamma_m: decay rates (default 0).
    n_bar: mean photon number initially in cavity 1.

    Invariant: delta_omega = 2 * kappa0 * b0 (the splitting is produced by
    the mirror offset), enforced to 1e-9 relative.
    """

    g: float
    delta_omega: float
    omega_m: float
    kappa0: float
    b0: float
    gamma1: float = 0.0
    gamma2: float = 0.0
    gamma_m: float = 0.0
    n_bar: float = 0.0

    def __post_init__(self):
        for name in ("omega_m", "b0"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v}")
        # g = 0 decouples the cavities (smoke checks); kappa0 = 0 (and with
        # it delta_omega = 0) decouples the mirror (exact-propagation cross
        # checks).
        for name in ("g", "delta_omega", "kappa0", "gamma1", "gamma2", "gamma_m", "n_bar"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be nonnegative and finite, got {v}")
        # With the mirror decoupled (kappa0 = 0) a nonzero delta_omega acts
        # as a frozen detuning, which the exact-propagation checks rely on.
        if self.kappa0 > 0.0:
            tol = _CONSISTENCY_RTOL * max(self.delta_omega, self.g)
            if abs(self.delta_omega - 2.0 * self.kappa0 * self.b0) > tol:
                raise ValueError(
                    "inconsistent parameters: delta_omega != 2*kappa0*b0"
                )

    @property
    def lossless(self) -> bool:
        return self.gamma1 == 0.0 and self.gamma2 == 0.0 and self.gamma_m == 0.0


def n_threshold(p: SystemParams) -> float:
    """Minimum photon number for the mirror to reach the resonance point."""
    if p.kappa0 == 0.0:
        return math.inf
    return p.omega_m * p.b0 / (2.0 * p.kappa0)


def from_dimensionless(
    g: float,
    r_wc: float,
    r_sm: float,
    n_ratio: float,
    n_bar: float,
    gamma1: float = 0.0,
    gamma2: float = 0.0,
    gamma_m: float = 0.0,
) -> SystemParams:
    """Build SystemParams from the dimensionless ratios that fix the dynamics.

    r_wc = g/delta_omega, r_sm = omega_m/g, n_ratio = n_bar/n_thr.  The
    (kappa0, b0) split is not observable on its own; it is fixed so that
    both delta_omega = 2*kappa0*b0 and n_thr = omega_m*b0/(2*kappa0) hold
    exactly.
    """
    for name, v in (("g", g), ("r_wc", r_wc), ("r_sm", r_sm), ("n_ratio", n_ratio), ("n_bar", n_bar)):
        if not (math.isfinite(v) and v > 0):
            raise ValueError(f"{name} must be positive and finite, got {v}")
    delta_omega = g / r_wc
    omega_m = g * r_sm
    n_thr = n_bar / n_ratio
    kappa0 = math.sqrt(omega_m * delta_omega / (4.0 * n_thr))
    b0 = math.sqrt(delta_omega * n_thr / omega_m)
    return SystemParams(
        g=g,
        delta_omega=delta_omega,
        omega_m=omega_m,
        kappa0=kappa0,
        b0=b0,
        gamma1=gamma1,
        gamma2=gamma2,
        gamma_m=gamma_m,
        n_bar=n_bar,
    )


def adiabaticity_nu(p: SystemParams) -> float:
    """Smallness parameter of the instantaneous-eigenmode treatment,
    (1/8)(n_bar/n_thr)(omega_m * delta_omega / g^2)."""
    return 0.125 * (p.n_bar / n_threshold(p)) * (p.omega_m * p.delta_omega / p.g**2)


def hal_displaced_squeezed(alpha: complex, eta: complex) -> float:
    """Ratio of photon-number-difference spread to its mean for D(alpha)S(eta)|0>.

    Small values mean the mirror can be treated classically.  alpha = 0 is
    allowed for r > 0; the vacuum (alpha = eta = 0) has no meaningful ratio.
    """
    if not (cmath.isfinite(complex(alpha)) and cmath.isfinite(complex(eta))):
        raise ValueError("alpha and eta must be finite")
    a = abs(alpha)
    r = abs(eta)
    if a == 0.0 and r == 0.0:
        raise ValueError("vacuum state has zero mean photon-number difference")
    dphi = cmath.phase(complex(eta)) - 2.0 * cmath.phase(complex(alpha)) if alpha != 0 else 0.0
    num = math.sqrt(
        a * a * (math.cosh(2 * r) - math.sinh(2 * r) * math.cos(dphi)) + 0.5 * math.sinh(2 * r) ** 2
    )
    den = a * a + math.sinh(r) ** 2
    return num / den


def hal_cat(alpha: complex, parity: int) -> tuple[float, float]:
    """(spread, mean) pair for a cat state; classical-mirror treatment wants
    spread << mean.  Returns (1 pm 2|a|^2 e^{-2|a|^2}, |a|)."""
    if parity not in (+1, -1):
        raise ValueError("parity must be +1 or -1")
    x = abs(alpha) ** 2
    return 1.0 + parity * 2.0 * x * math.exp(-2.0 * x), abs(alpha)


def hal_fock(n: int) -> float:
    """Number-difference spread over mean for |n> against vacuum: exactly 0."""
    if n < 1:
        raise ValueError("n must be >= 1 (vacuum has zero mean photon-number difference)")
    return 0.0


@dataclass(frozen=True)
class RegimeThresholds:
    weak_coupling: float = 0.1
    slow_mechanics: float = 0.1
    adiabatic: float = 0.1
    hal: float = 0.1


@dataclass(frozen=True)
class RegimeReport:
    """Summary of the operating-regime conditions for a planned run."""

    weak_coupling_ratio: float  # g / delta_omega
    slow_mech_ratio: float  # omega_m / g
    nu: float  # adiabaticity parameter
    n_ratio: float  # n_bar / n_thr
    hal_metric: Optional[float]
    pass_flags: dict = field(default_factory=dict)

    @property
    def all_pass(self) -> bool:
        return all(self.pass_flags.values())

    def to_dict(self) -> dict:
        return {
            "weak_coupling_ratio": self.weak_coupling_ratio,
            "slow_mech_ratio": self.slow_mech_ratio,
            "nu": self.nu,
            "n_ratio": self.n_ratio,
            "hal_metric": self.hal_metric,
            "pass_flags": dict(self.pass_flags),
            "all_pass": self.all_pass,
        }


def regime_report(
    p: SystemParams,
    state: InputState,
    thresholds: RegimeThresholds = RegimeThresholds(),
) -> RegimeReport:
    """Evaluate weak-coupling, slow-mechanics, adiabaticity, threshold and
    classical-mirror conditions for the given parameters and input state.

    A sub-threshold n_bar (no resonance reachable) is flagged, not rejected;
    likewise a large state-dependent metric only clears the corresponding
    flag.
    """
    wc = p.g / p.delta_omega
    sm = p.omega_m / p.g
    nu = adiabaticity_nu(p)
    n_ratio = p.n_bar / n_threshold(p)
    if isinstance(state, Fock):
        hal = hal_fock(state.n)
    elif isinstance(state, Cat):
        lhs, rhs = hal_cat(state.alpha, state.parity)
        hal = lhs / rhs if rhs > 0 else math.inf
    elif isinstance(state, Coherent):
        hal = hal_displaced_squeezed(state.alpha, 0.0)
    elif isinstance(state, DisplacedSqueezed):
        hal = hal_displaced_squeezed(state.alpha, state.eta)
    else:
        raise TypeError(f"unsupported state: {state!r}")
    flags = {
        "weak_coupling": wc <= thresholds.weak_coupling,
        "slow_mechanics": sm <= thresholds.slow_mechanics,
        "adiabatic": nu <= thresholds.adiabatic,
        "above_threshold": n_ratio > 1.0,
        "high_amplitude": hal <= thresholds.hal,
    }
    return RegimeReport(
        weak_coupling_ratio=wc,
        slow_mech_ratio=sm,
        nu=nu,
        n_ratio=n_ratio,
        hal_metric=hal,
        pass_flags=flags,
    )


def load_params(source) -> SystemParams:
    """Load SystemParams from a JSON file path or an already-parsed dict.

    Keys: g, ratio_g_over_dw, ratio_wm_over_g, n_ratio, n_bar, and optional
    gammas {gamma1, gamma2, gamma_m}.  Unknown keys are rejected.
    """
    if isinstance(source, (str, Path)):
        try:
            data = json.loads(Path(source).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read parameter file {source}: {exc}") from exc
    else:
        data = dict(source)
    allowed = {"g", "ratio_g_over_dw", "ratio_wm_over_g", "n_ratio", "n_bar", "gammas", "thresholds"}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown parameter keys: {sorted(unknown)}")
    gammas = data.get("gammas", {})
    if not isinstance(gammas, dict) or set(gammas) - {"gamma1", "gamma2", "gamma_m"}:
        raise ConfigError("gammas must be a dict with keys gamma1, gamma2, gamma_m")
    try:
        return from_dimensionless(
            g=float(data.get("g", 1.0)),
            r_wc=float(data["ratio_g_over_dw"]),
            r_sm=float(data["ratio_wm_over_g"]),
            n_ratio=float(data["n_ratio"]),
            n_bar=float(data["n_bar"]),
            gamma1=float(gammas.get("gamma1", 0.0)),
            gamma2=float(gammas.get("gamma2", 0.0)),
            gamma_m=float(gammas.get("gamma_m", 0.0)),
        )
    except KeyError as exc:
        raise ConfigError(f"missing parameter key: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_thresholds(data: dict) -> RegimeThresholds:
    allowed = {"weak_coupling", "slow_mechanics", "adiabatic", "hal"}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown threshold keys: {sorted(unknown)}")
    return RegimeThresholds(**{k: float(v) for k, v in data.items()})
