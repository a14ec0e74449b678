"""Closed-form transfer fidelities against a brute-force two-mode evaluator."""

import cmath
import math

import numpy as np
import pytest

from dynres import fidelity
from dynres.states import Cat, Coherent, DisplacedSqueezed, Fock

from twomode import brute_force_fidelities

# Brute-force value for D(0.93)S(1)|0> at |T21|^2 = 1/2, theta = 0,
# truncation dim 50 (agrees with dim 40 to < 1e-9).
DS_REGRESSION_F_FIX = 0.33115892745935904


def test_fock_fidelity_values():
    assert fidelity.fidelity_fock(0.6 + 0.0j, 0) == (1.0, 1.0)
    assert fidelity.fidelity_fock(0.6 + 0.0j, 1) == pytest.approx((0.36, 0.36))
    assert fidelity.fidelity_fock(1j, 3) == pytest.approx((1.0, 1.0))
    f_fix, f_mov = fidelity.fidelity_fock(0.5 * cmath.exp(0.7j), 2)
    assert f_fix == f_mov == pytest.approx(0.5**4)
    with pytest.raises(ValueError):
        fidelity.fidelity_fock(0.5, -1)


def test_fock_ignores_phase():
    for ph in (0.0, 0.3, -2.0):
        a = fidelity.fidelity_fock(0.8 * cmath.exp(1j * ph), 4)
        b = fidelity.fidelity_fock(0.8, 4)
        assert a == pytest.approx(b)


@pytest.mark.parametrize(
    "state,dim",
    [
        (Fock(3), 12),
        (Coherent(0.9), 25),
        (Coherent(1.2 * cmath.exp(0.4j)), 30),
        (Cat(alpha=1.1, parity=1), 28),
        (Cat(alpha=1.1, parity=-1), 28),
        (DisplacedSqueezed(alpha=0.8, eta=0.6), 35),
        (DisplacedSqueezed(alpha=0.7 * cmath.exp(1.1j), eta=0.5 * cmath.exp(-0.8j)), 35),
    ],
)
def test_closed_forms_match_brute_force(state, dim):
    for t21, theta in [
        (0.55 * cmath.exp(0.9j), 0.9),
        (0.95, 0.0),
        (0.7 * cmath.exp(-2.1j), -2.1),
        (0.999, 0.0),
    ]:
        want = brute_force_fidelities(t21, theta, state, dim)
        got = fidelity.fidelity_point(t21, theta, state)
        assert got[0] == pytest.approx(want[0], abs=1e-8)
        assert got[1] == pytest.approx(want[1], abs=1e-8)


def test_brute_force_insensitive_to_residual_gauge():
    # Only T21 is pinned by the physics; rotating the orthogonal complement
    # of the transfer matrix must not change either fidelity.
    state = Coherent(1.0)
    a = brute_force_fidelities(0.8 * cmath.exp(0.5j), 0.5, state, 25)
    b = brute_force_fidelities(0.8 * cmath.exp(0.5j), 0.5, state, 25, extra_phase=1.3)
    assert a == pytest.approx(b, abs=1e-10)


def test_unsqueezed_ds_equals_coherent():
    rng = np.random.default_rng(11)
    for _ in range(50):
        alpha = rng.uniform(0.1, 3.0) * cmath.exp(1j * rng.uniform(-np.pi, np.pi))
        t21 = rng.uniform(0.0, 1.0) * cmath.exp(1j * rng.uniform(-np.pi, np.pi))
        # theta is the continuous phase of T21: its argument plus full turns
        theta = cmath.phase(t21) + 2.0 * np.pi * rng.integers(-2, 3)
        ds = fidelity.fidelity_ds(t21, theta, alpha, 0.0)
        coh = fidelity.fidelity_coherent(t21, theta, alpha)
        assert ds[0] == pytest.approx(coh[0], abs=1e-12)
        assert ds[1] == pytest.approx(coh[1], abs=1e-12)


def test_moving_target_dominates_for_coherent_input():
    rng = np.random.default_rng(3)
    for _ in range(200):
        t21 = rng.uniform(0.0, 1.0) * cmath.exp(1j * rng.uniform(-np.pi, np.pi))
        theta = rng.uniform(-6.0, 6.0)
        f_fix, f_mov = fidelity.fidelity_coherent(t21, theta, rng.uniform(0.1, 4.0))
        assert f_mov >= f_fix - 1e-15


def test_perfect_transfer_is_unit_fidelity():
    # |T21| = 1 with the moving target recovers the input exactly for every
    # family; the fixed target still pays the theta phase.
    for state in (Fock(5), Coherent(2.0), Cat(alpha=1.5, parity=-1),
                  DisplacedSqueezed(alpha=1.0, eta=0.7)):
        _, f_mov = fidelity.fidelity_point(cmath.exp(0.4j), 0.4, state)
        assert f_mov == pytest.approx(1.0, abs=1e-12)


def test_log_domain_survives_large_amplitudes():
    # |alpha|^2 = 400 overflows exp() if evaluated naively.
    alpha = 20.0
    f_fix, f_mov = fidelity.fidelity_coherent(0.999, 1e-3, alpha)
    assert 0.0 < f_mov < 1.0
    assert math.isfinite(f_fix)
    f_fix, f_mov = fidelity.fidelity_cat(0.999, 0.0, alpha, 1)
    assert 0.0 < f_mov < 1.0
    f_fix, f_mov = fidelity.fidelity_ds(0.999, 0.0, alpha, 0.5)
    assert 0.0 < f_mov < 1.0


def test_cat_rejects_vacuum_odd_parity():
    with pytest.raises(ValueError):
        fidelity.fidelity_cat(0.5, 0.0, 0.0, -1)
    with pytest.raises(ValueError):
        fidelity.fidelity_cat(0.5, 0.0, 1.0, 0)


def test_ds_regression_value():
    # Pinned against the brute-force evaluator; see DS_REGRESSION_F_FIX.
    f_fix, f_mov = fidelity.fidelity_ds(math.sqrt(0.5), 0.0, 0.93, 1.0)
    assert f_fix == pytest.approx(DS_REGRESSION_F_FIX, abs=1e-9)
    assert f_mov == pytest.approx(f_fix, abs=1e-15)  # theta = 0


def test_fidelity_point_rejects_unknown_state():
    with pytest.raises(TypeError):
        fidelity.fidelity_point(0.5, 0.0, object())


def test_fidelity_trace_csv(tmp_path):
    from conftest import toy_params
    from dynres import semiclassical

    p = toy_params()
    traj = semiclassical.integrate(p, 5.0, t_samples=np.linspace(0, 5, 40))
    trace = fidelity.fidelity_trace(traj, Coherent(1.0))
    assert trace.peak_mov() >= trace.peak_fix() - 1e-15
    path = tmp_path / "fid.csv"
    fidelity.write_fidelity_csv(trace, path)
    rows = path.read_text().strip().split("\n")
    assert rows[0] == ",".join(fidelity.FIDELITY_CSV_COLUMNS)
    assert len(rows) == 41
