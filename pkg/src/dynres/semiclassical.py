"""Direct mean-field integration of the cavity-pair / mirror dynamics.

The state is the 2x2 transmittance matrix T(t) obeying i dT/dt = M(t) T with

    M(t) = [[omega(t) - i*gamma1, g], [g, -omega(t) - i*gamma2]],

self-consistently coupled to the mirror amplitude b(t) through

    i db/dt = (omega_m - i*gamma_m) b - kappa0 <dn(t)>,
    <dn> = n_bar (|T11|^2 - |T21|^2),
    omega(t) = delta_omega (1 - Re b(t) / b0).

Initial conditions are T(0) = I, b(0) = 0 (all photons in cavity 1 against
vacuum, mirror at rest). The heavy lifting lives in the compiled stepper of
``_kernel``; this module provides the user-facing dataclasses, trajectory
assembly, crossing detection, and CSV export.
"""

import csv
import dataclasses
import math

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from . import IntegrationError
from . import _kernel
from .params import SystemParams


@dataclasses.dataclass(frozen=True)
class IntegratorControls:
    """Tolerances and quality gates for the adaptive stepper."""

    rtol: float = 1e-10
    atol: float = 1e-12
    unitarity_tol: float = 1e-9
    n_samples: int = 2000

    def __post_init__(self):
        if self.rtol <= 0 or self.atol <= 0:
            raise ValueError("tolerances must be positive")
        if self.n_samples < 2:
            raise ValueError("need at least two sample points")


@dataclasses.dataclass(frozen=True)
class OscillatorState:
    """Mirror amplitude in zero-point units."""

    b: complex


@dataclasses.dataclass(frozen=True)
class Transmittance:
    """Elements of the 2x2 linear input-output map for the mode operators."""

    t11: complex
    t12: complex
    t21: complex
    t22: complex

    def as_matrix(self):
        return np.array([[self.t11, self.t12], [self.t21, self.t22]])

    def unitarity_defect(self):
        """max-norm of T^dag T - I (zero for lossless dynamics)."""
        m = self.as_matrix()
        return float(np.max(np.abs(m.conj().T @ m - np.eye(2))))


@dataclasses.dataclass(frozen=True)
class TrajectoryPoint:
    t: float
    b: OscillatorState
    T: Transmittance
    omega_t: float
    n1: float
    n2: float
    xi: float


@dataclasses.dataclass(frozen=True)
class Trajectory:
    points: tuple
    params: SystemParams
    controls: IntegratorControls
    n_accepted: int
    n_rejected: int

    def __post_init__(self):
        ts = [pt.t for pt in self.points]
        if any(t2 <= t1 for t1, t2 in zip(ts, ts[1:])):
            raise ValueError("trajectory times must be strictly increasing")

    @property
    def times(self):
        return np.array([pt.t for pt in self.points])

    @property
    def t21(self):
        return np.array([pt.T.t21 for pt in self.points])

    @property
    def b_values(self):
        return np.array([pt.b.b for pt in self.points])

    @property
    def xi(self):
        return np.array([pt.xi for pt in self.points])

    def max_unitarity_defect(self):
        return max(pt.T.unitarity_defect() for pt in self.points)


def drift(t, b, T, p):
    """Right-hand sides (db/dt, dT/dt) of the coupled mean-field equations."""
    omega = p.delta_omega * (1.0 - b.b.real / p.b0)
    m = np.array(
        [
            [omega - 1j * p.gamma1, p.g],
            [p.g, -omega - 1j * p.gamma2],
        ]
    )
    tm = T.as_matrix()
    dn = p.n_bar * (abs(T.t11) ** 2 - abs(T.t21) ** 2)
    db_dt = -1j * ((p.omega_m - 1j * p.gamma_m) * b.b - p.kappa0 * dn)
    dT_dt = -1j * (m @ tm)
    return db_dt, dT_dt


def populations(T, n_bar):
    """Mean photon numbers (n1, n2) given all n_bar photons start in cavity 1."""
    return n_bar * abs(T.t11) ** 2, n_bar * abs(T.t21) ** 2


def integrate(p, t_end, ctrl=None, t_samples=None, sign=1.0, initial=None):
    """Integrate from t=0 with T(0)=I, b(0)=0 up to t_end.

    ``t_samples`` overrides the default uniform grid (must start at 0 and be
    strictly increasing). ``sign=-1`` integrates the generator-negated
    dynamics, used for time-reversal consistency checks. ``initial`` replaces
    the default initial condition with a (Transmittance, OscillatorState, xi)
    triple, e.g. to continue from the end of another trajectory. Raises
    IntegrationError (carrying the partial trajectory) on step-size
    underflow.
    """
    if ctrl is None:
        ctrl = IntegratorControls()
    if t_samples is None:
        if t_end <= 0:
            raise ValueError("t_end must be positive")
        t_samples = np.linspace(0.0, t_end, ctrl.n_samples)
    else:
        t_samples = np.asarray(t_samples, dtype=float)
        if t_samples[0] != 0.0 or np.any(np.diff(t_samples) <= 0):
            raise ValueError("t_samples must start at 0 and increase strictly")
    if initial is None:
        T0 = Transmittance(1.0 + 0.0j, 0.0j, 0.0j, 1.0 + 0.0j)
        b0_state, xi0 = OscillatorState(0.0j), 0.0
    else:
        T0, b0_state, xi0 = initial
    h0 = min(0.05 / math.hypot(p.delta_omega, p.g), t_samples[-1] / 100.0)
    t_arr, b_arr, xi_arr, n_acc, n_rej, status, last = _kernel.run(
        t_samples,
        complex(T0.t11),
        complex(T0.t12),
        complex(T0.t21),
        complex(T0.t22),
        complex(b0_state.b),
        float(xi0),
        float(sign),
        p.g,
        p.delta_omega,
        p.omega_m,
        p.kappa0,
        p.b0,
        p.gamma1,
        p.gamma2,
        p.gamma_m,
        p.n_bar,
        ctrl.rtol,
        ctrl.atol,
        h0,
    )
    points = _assemble_points(t_samples[: last + 1], t_arr, b_arr, xi_arr, p, last)
    traj = Trajectory(points=points, params=p, controls=ctrl, n_accepted=n_acc, n_rejected=n_rej)
    if status != _kernel.STATUS_OK:
        err = IntegrationError("step size underflow during integration")
        err.partial = traj
        raise err
    return traj


def _assemble_points(times, t_arr, b_arr, xi_arr, p, last):
    points = []
    for k in range(last + 1):
        T = Transmittance(t_arr[k, 0], t_arr[k, 1], t_arr[k, 2], t_arr[k, 3])
        n1, n2 = populations(T, p.n_bar)
        omega = p.delta_omega * (1.0 - b_arr[k].real / p.b0)
        points.append(
            TrajectoryPoint(
                t=float(times[k]),
                b=OscillatorState(complex(b_arr[k])),
                T=T,
                omega_t=float(omega),
                n1=float(n1),
                n2=float(n2),
                xi=float(xi_arr[k]),
            )
        )
    return tuple(points)


def resonance_crossings(traj):
    """Times where the mirror displacement Re b crosses b0 (cavities resonant).

    Roots of Re b(t) - b0 are bracketed on the sample grid and refined on a
    cubic spline to relative accuracy 1e-6.
    """
    if not traj.points:
        raise ValueError("trajectory is empty")
    t = traj.times
    f = np.real(traj.b_values) - traj.params.b0
    if len(t) < 4:
        return []
    spline = CubicSpline(t, f)
    out = []
    for k in range(len(t) - 1):
        a, bt = f[k], f[k + 1]
        if a == 0.0:
            out.append(float(t[k]))
        elif a * bt < 0.0:
            out.append(float(brentq(spline, t[k], t[k + 1], xtol=1e-6 * max(t[k + 1], 1e-30))))
    if f[-1] == 0.0:
        out.append(float(t[-1]))
    return out


def unwrapped_theta(traj):
    """Continuous arg(T21) along a trajectory.

    T21 rotates at ~epsilon(t), far faster than any affordable sample grid, so
    the accumulated eigenphase xi is divided out before unwrapping and
    restored afterwards: theta = -xi + unwrap(arg(T21 e^{+i xi})).
    """
    t21 = traj.t21
    xi = traj.xi
    slow = np.unwrap(np.angle(t21 * np.exp(1j * xi)))
    return -xi + slow


CSV_COLUMNS = (
    "t_over_2pi_g",
    "re_b_over_b0",
    "im_b_over_b0",
    "omega_over_dw",
    "n1_over_nbar",
    "n2_over_nbar",
    "abs_T21",
    "arg_T21",
    "xi",
)


def trajectory_rows(traj):
    """CSV rows (after the header) for a trajectory."""
    p = traj.params
    theta = unwrapped_theta(traj)
    nbar = p.n_bar if p.n_bar > 0 else 1.0
    rows = []
    for pt, th in zip(traj.points, theta):
        rows.append(
            [
                pt.t * p.g / (2.0 * math.pi),
                pt.b.b.real / p.b0,
                pt.b.b.imag / p.b0,
                pt.omega_t / p.delta_omega,
                pt.n1 / nbar,
                pt.n2 / nbar,
                abs(pt.T.t21),
                th,
                pt.xi,
            ]
        )
    return rows


def write_trajectory_csv(traj, path):
    """Write a trajectory in the standard CSV schema (17 significant digits)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for row in trajectory_rows(traj):
            writer.writerow([format(x, ".17g") for x in row])
