"""Low-level time stepper for the coupled transmittance/mirror equations.

The 2x2 transmittance block is advanced with piecewise closed-form matrix
exponentials of a fourth-order two-point Gauss (Magnus) average of the
generator, so that with zero damping every step is unitary to machine
precision; the mirror amplitude is advanced with the exact variation-of-
constants formula using Gauss quadrature of the radiation-pressure drive.
Step size adapts by step doubling.
"""

import math

import numpy as np
from numba import njit

SQRT3 = math.sqrt(3.0)
C1 = 0.5 - SQRT3 / 6.0
C2 = 0.5 + SQRT3 / 6.0

STATUS_OK = 0
STATUS_UNDERFLOW = 1


@njit(cache=True)
def _u2(hx, hy, hz):
    """exp(-i (hx sx + hy sy + hz sz)) for real hx, hy, hz (exactly unitary)."""
    phi = math.sqrt(hx * hx + hy * hy + hz * hz)
    if phi < 1e-12:
        c = 1.0 - 0.5 * phi * phi
        s = 1.0 - phi * phi / 6.0
    else:
        c = math.cos(phi)
        s = math.sin(phi) / phi
    e11 = c - 1j * s * hz
    e22 = c + 1j * s * hz
    e12 = -1j * s * (hx - 1j * hy)
    e21 = -1j * s * (hx + 1j * hy)
    return e11, e12, e21, e22


@njit(cache=True)
def _exp2(a, vx, vy, vz):
    """exp(a I + vx sx + vy sy + vz sz) for complex coefficients."""
    s2 = vx * vx + vy * vy + vz * vz
    s = np.sqrt(s2)
    if abs(s) < 1e-12:
        ch = 1.0 + 0.5 * s2
        sh = 1.0 + s2 / 6.0
    else:
        es = np.exp(s)
        ies = 1.0 / es
        ch = 0.5 * (es + ies)
        sh = 0.5 * (es - ies) / s
    ea = np.exp(a)
    e11 = ea * (ch + sh * vz)
    e22 = ea * (ch - sh * vz)
    e12 = ea * sh * (vx - 1j * vy)
    e21 = ea * sh * (vx + 1j * vy)
    return e11, e12, e21, e22


@njit(cache=True)
def _node_prop(w, tau, sign, g, g1, g2):
    """Single-exponential propagator over [0, tau] with frozen omega = w."""
    if g1 == 0.0 and g2 == 0.0:
        return _u2(sign * tau * g, 0.0, sign * tau * w)
    a = -tau * 0.5 * (g1 + g2)
    vz = -1j * sign * tau * (w - 1j * 0.5 * (g1 - g2))
    vx = -1j * sign * tau * g
    return _exp2(a, vx, 0.0 * 1j, vz)


@njit(cache=True)
def _dn(e11, e12, e21, e22, t11, t21, nbar):
    """nbar (|T11|^2 - |T21|^2) after applying the 2x2 propagator E."""
    a = e11 * t11 + e12 * t21
    b = e21 * t11 + e22 * t21
    return nbar * ((a.real * a.real + a.imag * a.imag) - (b.real * b.real + b.imag * b.imag))


@njit(cache=True)
def _e1(z):
    """(exp(z) - 1)/z with a series branch near z = 0."""
    if abs(z) < 1e-6:
        return 1.0 + z * (0.5 + z * (1.0 / 6.0 + z / 24.0))
    return (np.exp(z) - 1.0) / z


@njit(cache=True)
def _bk(tau, mue, q):
    """int_0^tau exp(-i mue (tau - s)) exp(i q s) ds."""
    z = 1j * (q + mue) * tau
    return tau * np.exp(-1j * mue * tau) * _e1(z)


@njit(cache=True)
def _b_analytic(tau, b, mue, sign, k0, a_c, b_c, c_c, q):
    """Mirror amplitude at tau under drive a + b cos(q s) + c sin(q s)."""
    k0t = _bk(tau, mue, 0.0)
    kp = _bk(tau, mue, q)
    km = _bk(tau, mue, -q)
    kc = 0.5 * (kp + km)
    ks = -0.5j * (kp - km)
    drive = a_c * k0t + b_c * kc + c_c * ks
    return np.exp(-1j * mue * tau) * b + 1j * sign * k0 * drive


@njit(cache=True)
def _forced_b(tau, b, k0, dn1, dn2, h, mu, sign):
    """Mirror amplitude at time tau by variation of constants, with the
    radiation-pressure drive taken linear through the Gauss nodes of [0, h]
    (values dn1, dn2) and the forced integral done by Gauss-2 on [0, tau]."""
    slope = (dn2 - dn1) / ((C2 - C1) * h)
    tau1 = tau * C1
    tau2 = tau * C2
    f1 = dn1 + (tau1 - C1 * h) * slope
    f2 = dn1 + (tau2 - C1 * h) * slope
    k1 = np.exp(-1j * sign * mu * (tau - tau1))
    k2 = np.exp(-1j * sign * mu * (tau - tau2))
    integral = 0.5 * tau * (k1 * f1 + k2 * f2)
    return np.exp(-1j * sign * mu * tau) * b + 1j * sign * k0 * integral


@njit(cache=True)
def _step(t11, t12, t21, t22, b, xi, h, sign, g, dw, wm, k0, b0, g1, g2, gm, nbar):
    """One Magnus step of size h; returns the advanced (T, b, xi)."""
    mu = wm - 1j * gm
    dn0 = nbar * (
        (t11.real * t11.real + t11.imag * t11.imag)
        - (t21.real * t21.real + t21.imag * t21.imag)
    )
    beq = k0 * dn0 / mu
    # frozen-force predictor for the mirror at the Gauss nodes' midpoints
    bm1 = beq + (b - beq) * np.exp(-1j * sign * mu * (0.5 * C1 * h))
    bm2 = beq + (b - beq) * np.exp(-1j * sign * mu * (0.5 * C2 * h))
    w_m1 = dw * (1.0 - bm1.real / b0)
    w_m2 = dw * (1.0 - bm2.real / b0)
    e11, e12, e21, e22 = _node_prop(w_m1, C1 * h, sign, g, g1, g2)
    dn1 = _dn(e11, e12, e21, e22, t11, t21, nbar)
    e11, e12, e21, e22 = _node_prop(w_m2, C2 * h, sign, g, g1, g2)
    dn2 = _dn(e11, e12, e21, e22, t11, t21, nbar)
    # corrected mirror positions at node midpoints, then refreshed node forces
    bm1 = _forced_b(0.5 * C1 * h, b, k0, dn1, dn2, h, mu, sign)
    bm2 = _forced_b(0.5 * C2 * h, b, k0, dn1, dn2, h, mu, sign)
    w_m1 = dw * (1.0 - bm1.real / b0)
    w_m2 = dw * (1.0 - bm2.real / b0)
    e11, e12, e21, e22 = _node_prop(w_m1, C1 * h, sign, g, g1, g2)
    dn1 = _dn(e11, e12, e21, e22, t11, t21, nbar)
    e11, e12, e21, e22 = _node_prop(w_m2, C2 * h, sign, g, g1, g2)
    dn2 = _dn(e11, e12, e21, e22, t11, t21, nbar)
    # corrected mirror at the Gauss nodes themselves -> generator frequencies
    b1 = _forced_b(C1 * h, b, k0, dn1, dn2, h, mu, sign)
    b2 = _forced_b(C2 * h, b, k0, dn1, dn2, h, mu, sign)
    w1 = dw * (1.0 - b1.real / b0)
    w2 = dw * (1.0 - b2.real / b0)
    # fourth-order Magnus exponential for the full step
    wbar = 0.5 * (w1 + w2)
    kap = SQRT3 * h * h / 6.0 * (w2 - w1) * g
    if g1 == 0.0 and g2 == 0.0:
        e11, e12, e21, e22 = _u2(sign * h * g, kap, sign * h * wbar)
    else:
        a = -h * 0.5 * (g1 + g2)
        vz = -1j * sign * h * (wbar - 1j * 0.5 * (g1 - g2))
        vx = -1j * sign * h * g
        vy = -1j * kap
        e11, e12, e21, e22 = _exp2(a, vx, vy, vz)
    n11 = e11 * t11 + e12 * t21
    n21 = e21 * t11 + e22 * t21
    n12 = e11 * t12 + e12 * t22
    n22 = e21 * t12 + e22 * t22
    nb = _forced_b(h, b, k0, dn1, dn2, h, mu, sign)
    eps1 = math.sqrt(w1 * w1 + g * g)
    eps2 = math.sqrt(w2 * w2 + g * g)
    nxi = xi + sign * 0.5 * h * (eps1 + eps2)
    return n11, n12, n21, n22, nb, nxi


@njit(cache=True)
def _step_fast(t11, t12, t21, t22, b, xi, h, sign, g, dw, wm, k0, b0, gm, nbar):
    """One Magnus step for the lossless-cavity case (gamma1 = gamma2 = 0).

    With the generator frozen over the step, the radiation-pressure drive is
    exactly a + b cos(2 eps s) + c sin(2 eps s) in the step-local time s (a
    Bloch rotation of the first T column about the mixing axis), so the
    mirror update integrates in closed form; the frozen frequency is
    refreshed once from the predicted midpoint.
    """
    mue = sign * (wm - 1j * gm)
    rx = 2.0 * (t11.real * t21.real + t11.imag * t21.imag)
    ry = 2.0 * (t11.real * t21.imag - t11.imag * t21.real)
    rz = (t11.real * t11.real + t11.imag * t11.imag) - (
        t21.real * t21.real + t21.imag * t21.imag
    )
    w = dw * (1.0 - b.real / b0)
    eps = math.sqrt(w * w + g * g)
    a_c = nbar * (w / (eps * eps)) * (g * rx + w * rz)
    b_c = nbar * rz - a_c
    c_c = sign * nbar * (g / eps) * ry
    q = 2.0 * eps
    bm = _b_analytic(0.5 * h, b, mue, sign, k0, a_c, b_c, c_c, q)
    w = dw * (1.0 - bm.real / b0)
    eps = math.sqrt(w * w + g * g)
    a_c = nbar * (w / (eps * eps)) * (g * rx + w * rz)
    b_c = nbar * rz - a_c
    c_c = sign * nbar * (g / eps) * ry
    q = 2.0 * eps
    b1 = _b_analytic(C1 * h, b, mue, sign, k0, a_c, b_c, c_c, q)
    b2 = _b_analytic(C2 * h, b, mue, sign, k0, a_c, b_c, c_c, q)
    w1 = dw * (1.0 - b1.real / b0)
    w2 = dw * (1.0 - b2.real / b0)
    wbar = 0.5 * (w1 + w2)
    kap = SQRT3 * h * h / 6.0 * (w2 - w1) * g
    e11, e12, e21, e22 = _u2(sign * h * g, kap, sign * h * wbar)
    n11 = e11 * t11 + e12 * t21
    n21 = e21 * t11 + e22 * t21
    n12 = e11 * t12 + e12 * t22
    n22 = e21 * t12 + e22 * t22
    nb = _b_analytic(h, b, mue, sign, k0, a_c, b_c, c_c, q)
    eps1 = math.sqrt(w1 * w1 + g * g)
    eps2 = math.sqrt(w2 * w2 + g * g)
    nxi = xi + sign * 0.5 * h * (eps1 + eps2)
    return n11, n12, n21, n22, nb, nxi


@njit(cache=True)
def run(
    t_samples,
    t11,
    t12,
    t21,
    t22,
    b,
    xi,
    sign,
    g,
    dw,
    wm,
    k0,
    b0,
    g1,
    g2,
    gm,
    nbar,
    rtol,
    atol,
    h0,
):
    """Integrate from t_samples[0], recording the state at every sample time.

    Returns (T array (n,4), b array, xi array, accepted steps, rejected
    steps, status, index of last valid sample).
    """
    n = t_samples.shape[0]
    t_out = np.zeros((n, 4), dtype=np.complex128)
    b_out = np.zeros(n, dtype=np.complex128)
    xi_out = np.zeros(n, dtype=np.float64)
    t_out[0, 0] = t11
    t_out[0, 1] = t12
    t_out[0, 2] = t21
    t_out[0, 3] = t22
    b_out[0] = b
    xi_out[0] = xi
    t = t_samples[0]
    h = h0
    n_acc = 0
    n_rej = 0
    span = t_samples[n - 1] - t_samples[0]
    hmin = 1e-14 * max(abs(span), 1.0)
    lossless = g1 == 0.0 and g2 == 0.0
    for k in range(1, n):
        tk = t_samples[k]
        while t < tk:
            capped = False
            he = h
            if t + he > tk:
                he = tk - t
                capped = True
            if he < hmin:
                return t_out, b_out, xi_out, n_acc, n_rej, STATUS_UNDERFLOW, k - 1
            # full step followed by two half steps (step-doubling estimate)
            if lossless:
                f11, f12, f21, f22, fb, fxi = _step_fast(
                    t11, t12, t21, t22, b, xi, he, sign, g, dw, wm, k0, b0, gm, nbar
                )
                h11, h12, h21, h22, hb, hxi = _step_fast(
                    t11, t12, t21, t22, b, xi, 0.5 * he, sign, g, dw, wm, k0, b0, gm, nbar
                )
                h11, h12, h21, h22, hb, hxi = _step_fast(
                    h11, h12, h21, h22, hb, hxi, 0.5 * he, sign, g, dw, wm, k0, b0, gm, nbar
                )
            else:
                f11, f12, f21, f22, fb, fxi = _step(
                    t11, t12, t21, t22, b, xi, he, sign, g, dw, wm, k0, b0, g1, g2, gm, nbar
                )
                h11, h12, h21, h22, hb, hxi = _step(
                    t11, t12, t21, t22, b, xi, 0.5 * he, sign, g, dw, wm, k0, b0, g1, g2, gm, nbar
                )
                h11, h12, h21, h22, hb, hxi = _step(
                    h11, h12, h21, h22, hb, hxi, 0.5 * he, sign, g, dw, wm, k0, b0, g1, g2, gm, nbar
                )
            sc_t = atol + rtol
            err = abs(f11 - h11) / sc_t
            e = abs(f12 - h12) / sc_t
            if e > err:
                err = e
            e = abs(f21 - h21) / sc_t
            if e > err:
                err = e
            e = abs(f22 - h22) / sc_t
            if e > err:
                err = e
            e = abs(fb - hb) / (atol + rtol * abs(hb))
            if e > err:
                err = e
            if err <= 1.0:
                t11, t12, t21, t22, b, xi = h11, h12, h21, h22, hb, hxi
                t += he
                n_acc += 1
                if not capped:
                    fac = 5.0
                    if err > 1e-10:
                        fac = 0.9 * err ** (-0.2)
                        if fac > 5.0:
                            fac = 5.0
                        if fac < 0.2:
                            fac = 0.2
                    h = he * fac
            else:
                n_rej += 1
                fac = 0.9 * err ** (-0.2)
                if fac < 0.1:
                    fac = 0.1
                h = he * fac
        t_out[k, 0] = t11
        t_out[k, 1] = t12
        t_out[k, 2] = t21
        t_out[k, 3] = t22
        b_out[k] = b
        xi_out[k] = xi
    return t_out, b_out, xi_out, n_acc, n_rej, STATUS_OK, n - 1
