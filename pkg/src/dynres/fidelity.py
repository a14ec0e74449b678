"""Transfer fidelities for all supported input-state families.

Given the transmittance element T21 (and its continuous phase theta), the
probability that cavity 2 holds the transferred state is available in closed
form for Fock, coherent, Schroedinger-cat and displaced-squeezed inputs. Two
targets are supported everywhere: the *fixed* target is the input state
relocated to cavity 2; the *moving* target additionally carries the
accumulated photon-number phase theta (removable with a phase shifter), so
it depends only on |T21|.

Cat-state and Gaussian expressions involve exp(|alpha|^2) factors that
overflow double precision near |alpha|^2 ~ 400; every formula here is
evaluated in the log domain.
"""

import cmath
import csv
import dataclasses
import math

import numpy as np

from .states import Cat, Coherent, DisplacedSqueezed, Fock


def fidelity_fock(t21, n):
    """(F_fix, F_mov) for an n-photon input; both equal |T21|^(2n)."""
    if n < 0:
        raise ValueError("photon number must be non-negative")
    if n == 0:
        return 1.0, 1.0
    f = abs(t21) ** (2 * n)
    return f, f


def _log_abs_cat_branch(u, parity):
    """log|e^u + parity*e^{-u}| for complex u, stable for large |Re u|."""
    if u.real < 0:
        u = -u  # cosh even, |sinh| even in u: magnitude unchanged
    # factor out e^u: |e^u (1 + parity e^{-2u})|
    w = 2.0 * u
    if parity < 0 and abs(w) < 1e-4:
        # 1 - e^{-2u} = 2u(1 - u + (2/3)u^2 - (1/3)u^3 + ...)
        rest = 2.0 * u * (1.0 - u + (2.0 / 3.0) * u * u - (1.0 / 3.0) * u**3)
    else:
        rest = 1.0 + parity * cmath.exp(-w)
    if rest == 0:
        return -math.inf
    return u.real + math.log(abs(rest))


def fidelity_cat(t21, theta, alpha, parity):
    """(F_fix, F_mov) for a cat input N(|alpha> + parity |-alpha>).

    F_fix = |(e^{x T21} + p e^{-x T21}) / (e^x + p e^{-x})|^2 with
    x = |alpha|^2; F_mov replaces T21 by |T21|. theta is accepted for API
    uniformity with the other families (the moving target's phase is already
    absorbed into |T21|).
    """
    del theta
    x = abs(alpha) ** 2
    if parity not in (1, -1):
        raise ValueError("parity must be +1 or -1")
    if parity == -1 and x == 0:
        raise ValueError("odd cat at alpha = 0 has singular normalization")
    if x == 0:
        return 1.0, 1.0
    if parity < 0 and x < 1e-4:
        log_den = math.log(2.0 * x * (1.0 - x + (2.0 / 3.0) * x * x)) - x
    else:
        log_den = x + math.log1p(parity * math.exp(-2.0 * x))
    f_fix = math.exp(2.0 * (_log_abs_cat_branch(x * complex(t21), parity) - log_den))
    f_mov = math.exp(2.0 * (_log_abs_cat_branch(complex(x * abs(t21)), parity) - log_den))
    return min(f_fix, 1.0), min(f_mov, 1.0)


def fidelity_coherent(t21, theta, alpha):
    """(F_fix, F_mov) for a coherent input |alpha>.

    F_fix = exp(-2|alpha|^2 (1 - |T21| cos theta)),
    F_mov = exp(-2|alpha|^2 (1 - |T21|)).
    """
    x = abs(alpha) ** 2
    a = abs(t21)
    return (
        math.exp(-2.0 * x * (1.0 - a * math.cos(theta))),
        math.exp(-2.0 * x * (1.0 - a)),
    )


def ds_transform(t21, theta, alpha, eta):
    """Gaussian parameters of the transferred displaced-squeezed state.

    Returns (alpha', eta', beta', log_C): the cavity-2 state is, up to the
    weight C = exp(log_C), the displaced squeezed state |alpha', eta'> with

        r'     = arctanh(|T21|^2 tanh r),  phi_eta' = phi_eta + 2 theta,
        beta   = e^{i phi_eta} conj(alpha) T21 (1-|T21|^2) tanh r cosh r',
        beta'  = beta cosh r' - conj(beta) e^{i phi_eta'} sinh r',
        alpha' = T21 alpha + beta'.

    C is returned as a logarithm because its exponents scale with |alpha|^2.
    """
    if abs(t21) > 1.0 + 1e-12:
        raise ValueError("|T21| must not exceed 1")
    a2 = min(abs(t21), 1.0) ** 2
    r = abs(eta)
    phi_eta = cmath.phase(eta) if r > 0 else 0.0
    phi_alpha = cmath.phase(alpha) if alpha != 0 else 0.0
    th = math.tanh(r)
    rp = math.atanh(a2 * th)
    phi_eta_p = phi_eta + 2.0 * theta
    eta_p = rp * cmath.exp(1j * phi_eta_p)
    chp, shp = math.cosh(rp), math.sinh(rp)
    beta = cmath.exp(1j * phi_eta) * np.conj(alpha) * t21 * (1.0 - a2) * th * chp
    beta_p = beta * chp - np.conj(beta) * cmath.exp(1j * phi_eta_p) * shp
    alpha_p = t21 * alpha + beta_p
    x = abs(alpha) ** 2
    dphi = phi_eta - 2.0 * phi_alpha
    cd = math.cos(dphi)
    one_m = 1.0 - a2
    log_c = (
        math.log(chp / math.cosh(r))
        - x * one_m
        - x * one_m * one_m * th * cd
        - x * a2 * one_m * one_m * th * th * chp * shp * cd
        + x * a2 * one_m * one_m * th * th * chp * chp
    )
    return alpha_p, eta_p, beta_p, log_c


def ds_inner_product(alpha1, eta1, alpha2, eta2):
    """Overlap <alpha1, eta1 | alpha2, eta2> of displaced squeezed states."""
    lg, ph = _log_ds_inner(alpha1, eta1, alpha2, eta2)
    return cmath.exp(lg + 1j * ph)


def _log_ds_inner(alpha1, eta1, alpha2, eta2):
    """(log|overlap|, arg overlap) — the stable primitive behind the overlap."""
    r1, r2 = abs(eta1), abs(eta2)
    p1 = cmath.phase(eta1) if r1 > 0 else 0.0
    p2 = cmath.phase(eta2) if r2 > 0 else 0.0
    sigma = math.cosh(r2) * math.cosh(r1) - cmath.exp(1j * (p2 - p1)) * math.sinh(
        r2
    ) * math.sinh(r1)
    eta21 = (alpha2 - alpha1) * math.cosh(r2) + (
        np.conj(alpha2) - np.conj(alpha1)
    ) * cmath.exp(1j * p2) * math.sinh(r2)
    eta12 = (alpha1 - alpha2) * math.cosh(r1) + (
        np.conj(alpha1) - np.conj(alpha2)
    ) * cmath.exp(1j * p1) * math.sinh(r1)
    ex = eta21 * np.conj(eta12) / (2.0 * sigma)
    skew = 0.5 * (alpha2 * np.conj(alpha1) - np.conj(alpha2) * alpha1)
    log_mag = -0.5 * math.log(abs(sigma)) + ex.real
    phase = -0.5 * cmath.phase(sigma) + ex.imag + skew.imag
    return log_mag, phase


def fidelity_ds(t21, theta, alpha, eta):
    """(F_fix, F_mov) for a displaced-squeezed input D(alpha)S(eta)|0>.

    F = C |<target | alpha', eta'>|^2 with the fixed target (alpha, eta) and
    the moving target (alpha e^{i theta}, eta e^{2 i theta}).
    """
    alpha_p, eta_p, _, log_c = ds_transform(t21, theta, alpha, eta)
    lg_fix, _ = _log_ds_inner(alpha, eta, alpha_p, eta_p)
    lg_mov, _ = _log_ds_inner(
        alpha * cmath.exp(1j * theta), eta * cmath.exp(2j * theta), alpha_p, eta_p
    )
    f_fix = math.exp(log_c + 2.0 * lg_fix)
    f_mov = math.exp(log_c + 2.0 * lg_mov)
    return min(f_fix, 1.0), min(f_mov, 1.0)


def fidelity_point(t21, theta, state):
    """Dispatch one (T21, theta) sample to the family-specific formula."""
    if isinstance(state, Fock):
        return fidelity_fock(t21, state.n)
    if isinstance(state, Coherent):
        return fidelity_coherent(t21, theta, state.alpha)
    if isinstance(state, Cat):
        return fidelity_cat(t21, theta, state.alpha, state.parity)
    if isinstance(state, DisplacedSqueezed):
        return fidelity_ds(t21, theta, state.alpha, state.eta)
    raise TypeError(f"unsupported input state: {state!r}")


@dataclasses.dataclass(frozen=True)
class FidelityTrace:
    """Per-sample fidelities along a trajectory."""

    times: np.ndarray
    abs_t21: np.ndarray
    theta: np.ndarray
    f_fix: np.ndarray
    f_mov: np.ndarray
    g: float

    def peak_mov(self):
        return float(np.max(self.f_mov))

    def peak_fix(self):
        return float(np.max(self.f_fix))


def fidelity_trace(traj, state):
    """Evaluate both fidelities along a direct or closed-form trajectory.

    The moving-target phase needs a continuous theta; for a direct
    trajectory it is unwrapped from arg(T21) with the accumulated eigenphase
    as a guide, while a closed-form solution already carries it.
    """
    if hasattr(traj, "T_closed"):
        times = np.asarray(traj.times, dtype=float)
        t21 = traj.t21
        theta = traj.theta
        g = traj.params.g
    else:
        from .semiclassical import unwrapped_theta

        times = traj.times
        t21 = traj.t21
        theta = unwrapped_theta(traj)
        g = traj.params.g
    f_fix = np.empty(len(times))
    f_mov = np.empty(len(times))
    for k in range(len(times)):
        f_fix[k], f_mov[k] = fidelity_point(complex(t21[k]), float(theta[k]), state)
    return FidelityTrace(
        times=times, abs_t21=np.abs(t21), theta=theta, f_fix=f_fix, f_mov=f_mov, g=g
    )


FIDELITY_CSV_COLUMNS = ("t_over_2pi_g", "abs_T21", "theta", "F_fix", "F_mov")


def write_fidelity_csv(trace, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(FIDELITY_CSV_COLUMNS)
        for k in range(len(trace.times)):
            row = [
                trace.times[k] * trace.g / (2.0 * math.pi),
                trace.abs_t21[k],
                trace.theta[k],
                trace.f_fix[k],
                trace.f_mov[k],
            ]
            writer.writerow([format(x, ".17g") for x in row])
