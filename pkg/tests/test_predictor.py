"""Delay compensation: control history bookkeeping, predictor tables against
closed-form kernels, the discrete predictor dynamics, and exact inversion."""

import numpy as np
import pytest

from homctl import ControlHistory, LinearPlant, build_tables, invert, predict
from homctl.linalg import expm, zoh_integral


def _osc(delay):
    return LinearPlant([[0.0, 1.0], [-1.0, 0.0]], [[0.0], [1.0]], delay=delay)


# ---------------------------------------------------------------------------
# control history


def test_history_zero_prehistory_reads_zero():
    hist = ControlHistory(h=0.1, tau=0.3, m=1)
    assert hist.N == 3
    for j in (1, 2, 3):
        np.testing.assert_array_equal(hist.recent(j), [0.0])


def test_history_prehistory_order_is_chronological():
    # phi rows are earliest-first, so recent(1) is the last row
    phi = np.array([[1.0], [2.0], [3.0]])
    hist = ControlHistory(h=0.1, tau=0.3, m=1, phi=phi)
    np.testing.assert_array_equal(hist.recent(1), [3.0])
    np.testing.assert_array_equal(hist.recent(3), [1.0])


def test_history_push_rotates():
    hist = ControlHistory(h=0.1, tau=0.2, m=1, phi=np.array([[1.0], [2.0]]))
    hist.push([7.0])
    np.testing.assert_array_equal(hist.recent(1), [7.0])
    np.testing.assert_array_equal(hist.recent(2), [2.0])


def test_history_stacked_matches_recent():
    phi = np.array([[1.0, 10.0], [2.0, 20.0], [3.0, 30.0]])
    hist = ControlHistory(h=0.5, tau=1.5, m=2, phi=phi)
    stacked = hist.stacked()
    for j in (1, 2, 3):
        np.testing.assert_array_equal(stacked[j - 1], hist.recent(j))


def test_history_lookback_bounds():
    hist = ControlHistory(h=0.1, tau=0.2, m=1)
    with pytest.raises(ValueError):
        hist.recent(0)
    with pytest.raises(ValueError):
        hist.recent(3)


def test_history_validates_phi_shape_and_values():
    with pytest.raises(ValueError):
        ControlHistory(h=0.1, tau=0.3, m=1, phi=np.zeros((2, 1)))
    with pytest.raises(ValueError):
        ControlHistory(h=0.1, tau=0.1, m=1, phi=np.array([[np.nan]]))


def test_history_off_grid_delay_raises():
    with pytest.raises(ValueError):
        ControlHistory(h=0.1, tau=0.25, m=1)


# ---------------------------------------------------------------------------
# tables


def test_tables_zero_delay_is_identity():
    tables = build_tables(_osc(0.0), h=0.01)
    assert tables.N == 0
    np.testing.assert_array_equal(tables.E, np.eye(2))


def test_tables_kernels_match_closed_form():
    # Phi_j = A^{-1} (e^{j h A} - e^{(j-1) h A}) B for invertible A
    plant = _osc(0.5)
    h = 0.1
    tables = build_tables(plant, h)
    A, B = plant.A, plant.B
    Ainv = np.linalg.inv(A)
    for j in range(1, tables.N + 1):
        expected = Ainv @ (expm(A * j * h) - expm(A * (j - 1) * h)) @ B
        np.testing.assert_allclose(tables.kernels[j - 1], expected, atol=1e-12)
    np.testing.assert_allclose(tables.E, expm(A * 0.5), atol=1e-13)


def test_tables_kernel_sum_is_delay_integral():
    # sum_j Phi_j = int_0^tau e^{A s} B ds
    plant = _osc(0.5)
    tables = build_tables(plant, h=0.01)
    total = tables.kernels.sum(axis=0)
    np.testing.assert_allclose(total, zoh_integral(plant.A, plant.B, 0.5), atol=1e-10)


def test_tables_off_grid_delay_raises():
    with pytest.raises(ValueError):
        build_tables(_osc(0.505), h=0.01)


# ---------------------------------------------------------------------------
# predictor identities


def _propagate(plant, h, x0, inputs):
    """Raw delayed dynamics x_{k+1} = F x_k + Gamma u_{k-N} with zero prehistory."""
    F = expm(plant.A * h)
    Gamma = zoh_integral(plant.A, plant.B, h)
    N = int(round(plant.delay / h))
    xs = [np.asarray(x0, dtype=float)]
    for k in range(len(inputs)):
        u_eff = inputs[k - N] if k - N >= 0 else np.zeros(plant.m)
        xs.append(F @ xs[-1] + Gamma @ u_eff)
    return np.array(xs)


def test_predictor_discrete_dynamics_and_shift_identity(rng):
    # y_{k+1} = F y_k + Gamma u_k, and y_k equals x_{k+N} exactly
    plant = _osc(0.5)
    h = 0.1
    N = 5
    tables = build_tables(plant, h)
    F = expm(plant.A * h)
    Gamma = zoh_integral(plant.A, plant.B, h)

    inputs = rng.normal(size=(30, 1))
    xs = _propagate(plant, h, [0.3, -0.2], inputs)

    hist = ControlHistory(h=h, tau=plant.delay, m=1)
    y_prev = None
    for k in range(len(inputs)):
        y_k = predict(tables, xs[k], hist)
        if k + N < len(xs):
            np.testing.assert_allclose(y_k, xs[k + N], atol=1e-9)
        if y_prev is not None:
            np.testing.assert_allclose(y_k, F @ y_prev + Gamma @ inputs[k - 1], atol=1e-9)
        hist.push(inputs[k])
        y_prev = y_k


def test_predict_constant_history_closed_form(rng):
    # with u identically ubar: y = e^{A tau} x + (int_0^tau e^{As} B ds) ubar
    plant = _osc(0.4)
    tables = build_tables(plant, h=0.02)
    for _ in range(20):
        x = rng.normal(size=2)
        ubar = rng.normal(size=1)
        hist = ControlHistory(h=0.02, tau=0.4, m=1, phi=np.tile(ubar, (tables.N, 1)))
        expected = expm(plant.A * 0.4) @ x + zoh_integral(plant.A, plant.B, 0.4) @ ubar
        np.testing.assert_allclose(predict(tables, x, hist), expected, atol=1e-10)


def test_predict_invert_round_trip_200_cases(rng):
    plants = [_osc(0.5), _osc(0.3), LinearPlant(rng.normal(size=(3, 3)) * 0.5, rng.normal(size=(3, 2)), delay=0.2)]
    tables_list = [build_tables(p, h=0.1) for p in plants]
    for _ in range(200):
        i = int(rng.integers(len(plants)))
        plant, tables = plants[i], tables_list[i]
        x = rng.normal(size=plant.n) * 10.0 ** rng.integers(-3, 3)
        phi = rng.normal(size=(tables.N, plant.m))
        hist = ControlHistory(h=0.1, tau=plant.delay, m=plant.m, phi=phi)
        y = predict(tables, x, hist)
        np.testing.assert_allclose(invert(tables, y, hist), x, rtol=1e-9, atol=1e-10)


def test_zero_delay_predict_and_invert_are_identity(rng):
    tables = build_tables(_osc(0.0), h=0.01)
    hist = ControlHistory(h=0.01, tau=0.0, m=1)
    x = rng.normal(size=2)
    np.testing.assert_array_equal(predict(tables, x, hist), x)
    np.testing.assert_allclose(invert(tables, x, hist), x, atol=1e-14)


def test_predict_validates_compatibility():
    tables = build_tables(_osc(0.5), h=0.1)
    wrong_hist = ControlHistory(h=0.1, tau=0.4, m=1)
    with pytest.raises(ValueError):
        predict(tables, [1.0, 0.0], wrong_hist)
    with pytest.raises(ValueError):
        predict(tables, [1.0, 0.0, 0.0], ControlHistory(h=0.1, tau=0.5, m=1))
