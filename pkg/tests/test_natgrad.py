import numpy as np
import pytest

from qbmgeo import (
    EUCLIDEAN,
    FISHER_BURES,
    KUBO_MORI,
    GroundEnergyLoss,
    ParamHamiltonian,
    RelativeEntropyLoss,
    ShotConfig,
    TrainConfig,
    expectation,
    grad_ground_energy,
    grad_rel_entropy,
    natgrad_step,
    pauli_to_matrix,
    relative_entropy,
    thermal_state,
    train,
)

Z = pauli_to_matrix("Z")
X = pauli_to_matrix("X")


def fd_gradient(loss_fn, theta, step=1e-5):
    grad = np.empty(len(theta))
    for j in range(len(theta)):
        up = np.array(theta, dtype=float)
        up[j] += step
        down = np.array(theta, dtype=float)
        down[j] -= step
        grad[j] = (loss_fn(up) - loss_fn(down)) / (2 * step)
    return grad


def test_ground_energy_gradient_worked_values():
    h = ParamHamiltonian(["Z"], [0.0])
    np.testing.assert_allclose(grad_ground_energy(h, Z), [-1.0], atol=1e-12)
    np.testing.assert_allclose(grad_ground_energy(h, X), [0.0], atol=1e-12)


def test_ground_energy_gradient_finite_differences():
    h = ParamHamiltonian(["Z", "X"], [1.0, 0.5])
    obs = Z + 0.3 * X

    def loss(theta):
        return expectation(obs, thermal_state(h.with_theta(theta)).rho)

    np.testing.assert_allclose(grad_ground_energy(h, obs), fd_gradient(loss, h.theta), atol=1e-6)


def test_rel_entropy_gradient_worked_values():
    h = ParamHamiltonian(["Z"], [0.0])
    ket0 = np.diag([1.0, 0.0]).astype(complex)
    np.testing.assert_allclose(grad_rel_entropy(h, ket0), [1.0], atol=1e-12)
    h2 = ParamHamiltonian(["Z"], [np.log(2)])
    np.testing.assert_allclose(grad_rel_entropy(h2, np.eye(2) / 2), [0.6], atol=1e-12)


def test_rel_entropy_gradient_vanishes_at_match():
    h = ParamHamiltonian(["Z", "X"], [0.7, -0.2])
    omega = thermal_state(h).rho
    np.testing.assert_allclose(grad_rel_entropy(h, omega), np.zeros(2), atol=1e-12)


def test_rel_entropy_gradient_finite_differences():
    target = thermal_state(ParamHamiltonian(["Z", "X"], [0.8, -0.3])).rho
    h = ParamHamiltonian(["Z", "X"], [0.2, 0.1])

    def loss(theta):
        inst = h.with_theta(theta)
        return relative_entropy(target, thermal_state(inst), inst)

    np.testing.assert_allclose(grad_rel_entropy(h, target), fd_gradient(loss, h.theta), atol=1e-6)


def test_gradients_match_finite_differences_random(instance_battery):
    rng = np.random.default_rng(8)
    for h in instance_battery[:6]:
        m = rng.normal(size=(h.dim, h.dim)) + 1j * rng.normal(size=(h.dim, h.dim))
        obs = (m + m.conj().T) / 2

        def ge_loss(theta):
            return expectation(obs, thermal_state(h.with_theta(theta)).rho)

        np.testing.assert_allclose(grad_ground_energy(h, obs), fd_gradient(ge_loss, h.theta), atol=1e-6)


def test_moment_matching_iff_zero_gradient():
    h = ParamHamiltonian(["Z", "X"], [0.4, 0.6])
    ts = thermal_state(h)
    omega = thermal_state(ParamHamiltonian(["Z", "X"], [0.1, -0.2])).rho
    grad = grad_rel_entropy(h, omega, ts)
    moments = np.array([
        expectation(g, omega) - expectation(g, ts.rho) for g in h.term_matrices()
    ])
    np.testing.assert_allclose(grad, moments, atol=1e-12)
    assert np.max(np.abs(grad)) > 1e-8  # mismatched moments -> nonzero gradient


def test_natgrad_step_worked_example():
    np.testing.assert_allclose(natgrad_step([0.0], [-1.0], [[1.0]], eta=0.1), [0.4], atol=1e-15)


def test_natgrad_step_stationary():
    theta = np.array([0.3, -0.1])
    np.testing.assert_array_equal(natgrad_step(theta, np.zeros(2), np.eye(2), 0.1), theta)


def test_natgrad_step_euclidean_preconditioner_bitwise():
    # pinv(metric) = I/4 makes the step exactly theta - eta * grad
    theta = np.array([0.37, -0.21, 0.09])
    grad = np.array([0.013, -0.41, 0.77])
    eta = 0.05
    stepped = natgrad_step(theta, grad, 4.0 * np.eye(3), eta)
    np.testing.assert_array_equal(stepped, theta - eta * grad)


def test_train_ground_energy_single_qubit():
    h = ParamHamiltonian(["Z"], [0.0])
    for metric in (FISHER_BURES, KUBO_MORI):
        cfg = TrainConfig(eta=0.05, metric=metric, max_iters=500, grad_tol=1e-4)
        trace = train(h, GroundEnergyLoss(Z), cfg)
        assert trace.final_loss <= -0.999
        losses = trace.losses()
        assert np.all(np.diff(losses) < 0)
        assert trace.records[-1].grad_norm <= 1e-4
        assert trace.stop_reason == "grad_tol"


def test_train_generative_two_parameters():
    target = np.array([0.8, -0.3])
    omega = thermal_state(ParamHamiltonian(["Z", "X"], target)).rho
    h = ParamHamiltonian(["Z", "X"], [0.0, 0.0])
    cfg = TrainConfig(eta=0.25, metric=KUBO_MORI, max_iters=2000, grad_tol=1e-10)
    trace = train(h, RelativeEntropyLoss(omega), cfg)
    assert np.max(np.abs(trace.final_theta - target)) <= 1e-3
    assert np.all(np.diff(trace.losses()) <= 1e-12)  # non-increasing at this step size


def test_trace_record_count_contracts():
    h = ParamHamiltonian(["Z"], [0.0])
    cfg = TrainConfig(eta=0.05, metric=FISHER_BURES, max_iters=1)
    trace = train(h, GroundEnergyLoss(Z), cfg)
    assert len(trace.records) == 2
    assert trace.stop_reason == "max_iters"
    # stationary start: gradient vanishes at the initial point
    cfg2 = TrainConfig(eta=0.05, metric=FISHER_BURES, max_iters=50, grad_tol=1e-6)
    trace2 = train(ParamHamiltonian(["Z"], [0.0]), GroundEnergyLoss(X), cfg2)
    assert len(trace2.records) == 1 and trace2.stop_reason == "grad_tol"


def test_train_euclidean_is_plain_descent():
    h = ParamHamiltonian(["Z"], [0.0])
    cfg = TrainConfig(eta=0.1, metric=EUCLIDEAN, max_iters=3, grad_tol=0.0)
    trace = train(h, GroundEnergyLoss(Z), cfg)
    # first step from 0: grad = -1, so theta_1 = 0.1 exactly
    assert trace.records[1].theta[0] == 0.1
    assert trace.records[1].metric_min_eig == 4.0
    assert trace.records[1].metric_cond == 1.0


def test_train_shot_mode_deterministic():
    h = ParamHamiltonian(["Z"], [0.0])
    shots = ShotConfig(epsilon=0.25, delta=0.2, master_seed=31)
    cfg = TrainConfig(eta=0.05, metric=FISHER_BURES, max_iters=4, grad_tol=0.0, shots=shots)
    loss = GroundEnergyLoss.from_pauli(["Z"], [1.0])
    t1 = train(h, loss, cfg)
    t2 = train(h, loss, cfg)
    np.testing.assert_array_equal(t1.final_theta, t2.final_theta)
    assert t1.final_loss < 0  # heads downhill even with noisy estimates


def test_train_shot_mode_relative_entropy():
    omega = thermal_state(ParamHamiltonian(["Z"], [0.5])).rho
    h = ParamHamiltonian(["Z"], [0.0])
    shots = ShotConfig(epsilon=0.1, delta=0.1, master_seed=32)
    cfg = TrainConfig(eta=0.2, metric=KUBO_MORI, max_iters=15, grad_tol=1e-3, shots=shots)
    trace = train(h, RelativeEntropyLoss(omega), cfg)
    assert abs(trace.final_theta[0] - 0.5) <= 0.2


def test_trace_csv_round_trip(tmp_path):
    h = ParamHamiltonian(["Z", "X"], [0.0, 0.0])
    cfg = TrainConfig(eta=0.1, metric=FISHER_BURES, max_iters=3, grad_tol=0.0)
    omega = thermal_state(ParamHamiltonian(["Z", "X"], [0.4, 0.1])).rho
    trace = train(h, RelativeEntropyLoss(omega), cfg)
    path = tmp_path / "trace.csv"
    trace.to_csv(path)
    lines = path.read_text().strip().split("\n")
    assert lines[0] == "iter,loss,grad_norm,metric_min_eig,metric_cond,theta_0,theta_1"
    assert len(lines) == len(trace.records) + 1
    last = lines[-1].split(",")
    assert float(last[1]) == trace.final_loss  # 17g strings round-trip exactly


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(eta=0.0)
    with pytest.raises(ValueError):
        TrainConfig(eta=0.1, max_iters=0)
    with pytest.raises(ValueError):
        TrainConfig(eta=0.1, metric="manhattan")
