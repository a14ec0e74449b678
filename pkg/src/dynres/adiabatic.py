"""Closed-form solution in the instantaneous eigenframe of the cavity pair.

When the mixing between the cavities follows the eigenframe adiabatically,
the transmittance matrix has an explicit form in terms of the instantaneous
mixing amplitudes s, c and the accumulated eigenphase xi = int_0^t eps dtau,
with eps = sqrt(omega^2 + g^2). The mirror then obeys a scalar
self-consistent equation in which the eigenmode populations are conserved,
so the full dynamics reduces to one complex ODE plus quadrature.
"""

import csv
import dataclasses
import math

import numpy as np
from scipy.integrate import solve_ivp

from .semiclassical import CSV_COLUMNS, IntegratorControls, Transmittance


@dataclasses.dataclass(frozen=True)
class EigenFrame:
    """Instantaneous eigen-structure of the 2x2 cavity generator."""

    omega: float
    epsilon: float
    s: float
    c: float
    lambda_plus: complex
    lambda_minus: complex


def eigenframe(omega, g, gamma1=0.0, gamma2=0.0):
    """Instantaneous eigenframe at splitting omega and hopping g.

    The mixing amplitudes are the principal (non-negative) square roots
    c = sqrt((1 + omega/eps)/2), s = sqrt((1 - omega/eps)/2); the sign
    structure of the dynamics lives entirely in the e^{+-i xi} phases. Equal
    cavity damping shifts both eigenvalues by -i*gamma; unequal damping has
    no closed-form eigenframe here and is rejected.
    """
    if g <= 0:
        raise ValueError("hopping rate g must be positive")
    if gamma1 != gamma2:
        raise ValueError(
            "closed-form eigenframe requires equal cavity damping; "
            "use the direct integrator for gamma1 != gamma2"
        )
    eps = math.hypot(omega, g)
    c = math.sqrt(0.5 * (1.0 + omega / eps))
    s = math.sqrt(0.5 * (1.0 - omega / eps))
    gam = -0.5j * (gamma1 + gamma2)
    return EigenFrame(
        omega=float(omega),
        epsilon=eps,
        s=s,
        c=c,
        lambda_plus=eps + gam,
        lambda_minus=-eps + gam,
    )


def verify_diagonalization(frame):
    """max-norm defect of W^{-1} M W against diag(lambda+, lambda-).

    Reconstructs g from the frame (g^2 = eps^2 - omega^2) and the common
    damping from Im(lambda+), so the check is independent of the eigenframe
    construction path.
    """
    g = math.sqrt(max(frame.epsilon**2 - frame.omega**2, 0.0))
    gam = -frame.lambda_plus.imag
    m = np.array(
        [
            [frame.omega - 1j * gam, g],
            [g, -frame.omega - 1j * gam],
        ]
    )
    w = np.array([[frame.c, -frame.s], [frame.s, frame.c]])
    d = np.linalg.inv(w) @ m @ w - np.diag([frame.lambda_plus, frame.lambda_minus])
    return float(np.max(np.abs(d)))


def closed_form_T(frame0, frame_t, xi):
    """Transmittance between the initial and current eigenframes at phase xi.

    T22 = conj(T11) = s c0' ... explicitly:
    T22 = s(t)s(0)e^{-i xi} + c(t)c(0)e^{+i xi},
    T21 = -conj(T12) = s(t)c(0)e^{-i xi} - c(t)s(0)e^{+i xi};
    unitary by construction for real mixing amplitudes.
    """
    em = np.exp(-1j * xi)
    ep = np.exp(1j * xi)
    t22 = frame_t.s * frame0.s * em + frame_t.c * frame0.c * ep
    t21 = frame_t.s * frame0.c * em - frame_t.c * frame0.s * ep
    return Transmittance(np.conj(t22), -np.conj(t21), t21, t22)


def t21_magnitude(frame0, frame_t, xi):
    """|T21| straight from the mixing amplitudes and cos(2 xi)."""
    s0, c0 = frame0.s, frame0.c
    st, ct = frame_t.s, frame_t.c
    val = (
        st * st * c0 * c0
        + ct * ct * s0 * s0
        - 2.0 * st * ct * s0 * c0 * math.cos(2.0 * xi)
    )
    return math.sqrt(max(val, 0.0))


def theta_phase(frame0, frames, xi_series):
    """Unwrapped arg(T21) along a sampled eigenframe path.

    The samples must be dense enough that the phase advances by less than
    pi/2 between neighbours; a larger wrapped increment means the branch
    tracking is ambiguous and a ValueError is raised. The companion tangent
    relation tan(theta) = [(c s0 + s c0)/(c s0 - s c0)] tan(xi) holds modulo
    pi and is exercised in the tests, but quadrant-correct unwrapping needs
    the complex T21 itself.
    """
    xi_series = np.asarray(xi_series, dtype=float)
    st = np.array([f.s for f in frames])
    ct = np.array([f.c for f in frames])
    t21 = frame0.c * st * np.exp(-1j * xi_series) - frame0.s * ct * np.exp(1j * xi_series)
    raw = np.angle(t21)
    d = np.diff(raw)
    d = (d + np.pi) % (2.0 * np.pi) - np.pi
    if d.size and np.max(np.abs(d)) >= 0.5 * np.pi:
        raise ValueError(
            "phase advances by >= pi/2 between samples; increase the "
            "sampling density to unwrap theta"
        )
    return raw[0] + np.concatenate(([0.0], np.cumsum(d)))


def adiabatic_oscillator_rhs(b, p, frame0):
    """db/dt of the reduced mirror equation with conserved eigenmode weights.

    The radiation-pressure term is kappa0 * (omega/eps at the current b)
    times the conserved population difference n_bar * (omega/eps at t=0);
    the counter-rotating eigenmode cross terms are dropped.
    """
    omega = p.delta_omega * (1.0 - b.real / p.b0)
    eps = math.hypot(omega, p.g)
    dn0 = p.n_bar * frame0.omega / frame0.epsilon
    return -1j * p.omega_m * b + 1j * p.kappa0 * (omega / eps) * dn0


@dataclasses.dataclass(frozen=True)
class AdiabaticSolution:
    """Closed-form trajectory: mirror path, eigenphase, T and theta per sample."""

    times: np.ndarray
    b: np.ndarray
    xi: np.ndarray
    theta: np.ndarray
    T_closed: tuple
    params: object

    @property
    def t21(self):
        return np.array([T.t21 for T in self.T_closed])

    def as_rows(self):
        p = self.params
        nbar = p.n_bar if p.n_bar > 0 else 1.0
        rows = []
        for k in range(len(self.times)):
            T = self.T_closed[k]
            n1 = p.n_bar * abs(T.t11) ** 2
            n2 = p.n_bar * abs(T.t21) ** 2
            omega = p.delta_omega * (1.0 - self.b[k].real / p.b0)
            rows.append(
                [
                    self.times[k] * p.g / (2.0 * math.pi),
                    self.b[k].real / p.b0,
                    self.b[k].imag / p.b0,
                    omega / p.delta_omega,
                    n1 / nbar,
                    n2 / nbar,
                    abs(T.t21),
                    math.atan2(T.t21.imag, T.t21.real),
                    self.xi[k],
                    self.theta[k],
                    abs(T.t21),
                ]
            )
        return rows


ADIABATIC_CSV_COLUMNS = CSV_COLUMNS + ("theta", "abs_T21_closed")


def write_adiabatic_csv(sol, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ADIABATIC_CSV_COLUMNS)
        for row in sol.as_rows():
            writer.writerow([format(x, ".17g") for x in row])


def adiabatic_trajectory(p, t_end, ctrl=None, t_samples=None):
    """Integrate the reduced mirror ODE and assemble the closed-form T.

    The eigenphase xi rides along as an extra quadrature state of the same
    integrator. theta is unwrapped with the help of the exact xi: the product
    T21 * e^{+i xi} only moves on the transfer timescale away from the
    near-zeros of |T21|, so its angle unwraps safely on the sample grid; the
    residual fast rotation -xi is restored afterwards.
    """
    if not p.lossless:
        raise ValueError("closed-form trajectory requires gamma1 = gamma2 = gamma_m = 0")
    if ctrl is None:
        ctrl = IntegratorControls()
    if t_samples is None:
        if t_end <= 0:
            raise ValueError("t_end must be positive")
        t_samples = np.linspace(0.0, t_end, ctrl.n_samples)
    else:
        t_samples = np.asarray(t_samples, dtype=float)
    frame0 = eigenframe(p.delta_omega, p.g)
    dn0 = p.n_bar * frame0.omega / frame0.epsilon

    def rhs(_, y):
        b = y[0] + 1j * y[1]
        omega = p.delta_omega * (1.0 - b.real / p.b0)
        eps = math.hypot(omega, p.g)
        db = -1j * p.omega_m * b + 1j * p.kappa0 * (omega / eps) * dn0
        return [db.real, db.imag, eps]

    sol = solve_ivp(
        rhs,
        (t_samples[0], t_samples[-1]),
        [0.0, 0.0, 0.0],
        method="DOP853",
        t_eval=t_samples,
        rtol=ctrl.rtol,
        atol=ctrl.atol,
    )
    if not sol.success:
        raise RuntimeError("reduced mirror integration failed: " + sol.message)
    b = sol.y[0] + 1j * sol.y[1]
    xi = sol.y[2]
    omega = p.delta_omega * (1.0 - b.real / p.b0)
    frames = [eigenframe(w, p.g) for w in omega]
    T_closed = tuple(closed_form_T(frame0, f, x) for f, x in zip(frames, xi))
    t21 = np.array([T.t21 for T in T_closed])
    slow = np.unwrap(np.angle(t21 * np.exp(1j * xi)))
    theta = -xi + slow
    return AdiabaticSolution(
        times=t_samples, b=b, xi=xi, theta=theta, T_closed=T_closed, params=p
    )
