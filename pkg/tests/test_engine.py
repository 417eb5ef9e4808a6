import math

import numpy as np
import pytest

from qpf.engine import (
    DeviceModel,
    DriveTerm,
    SolverSettings,
    basis_state,
    build_drive_hamiltonian,
    build_static_hamiltonian,
    check_density_matrix,
    collapse_ops,
    evolve,
    ground_state,
    hz_to_rad_per_ns,
    ladder_ops,
    lindblad_rhs,
    reduced_populations,
)
from qpf.engine.hamiltonian import commutator_superop, dissipator_superop
from qpf.errors import InvalidArgumentError, SolverError
from qpf.pulses import Waveform

W5 = 2 * math.pi * 5.0  # 5 GHz in rad/ns


def qubit(levels=2, t1=None, t2=None, kappa=1.0, omega=W5, alpha=-1.2):
    return DeviceModel([omega], [alpha], levels, [t1], [t2], [kappa])


def constant_drive(transmon, carrier, ox, oy, start, duration, rate=1.0):
    n = int(round(duration * rate))
    return DriveTerm(transmon, carrier, Waveform(np.full(n, ox), np.full(n, oy), start, rate))


def random_density(dim, rng):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


# operators


def test_ladder_d2():
    b, bd = ladder_ops(2)
    np.testing.assert_array_equal(b, [[0, 1], [0, 0]])
    np.testing.assert_array_equal(bd, b.T)


def test_ladder_d3_and_number():
    b, bd = ladder_ops(3)
    assert b[1, 2] == pytest.approx(math.sqrt(2))
    assert np.count_nonzero(b) == 2
    np.testing.assert_allclose(bd @ b, np.diag([0, 1, 2]), atol=1e-15)


def test_ladder_rejects_one_level():
    with pytest.raises(InvalidArgumentError):
        ladder_ops(1)


def test_static_two_level_limit():
    h = build_static_hamiltonian(qubit(2, alpha=-3.0))
    np.testing.assert_allclose(h, np.diag([0, W5]), atol=1e-12)


def test_static_duffing_spectrum():
    alpha = -2 * math.pi * 0.2
    h = build_static_hamiltonian(qubit(3, alpha=alpha))
    np.testing.assert_allclose(np.linalg.eigvalsh(h), [0, W5, 2 * W5 + alpha], atol=1e-12)


def test_coupled_splitting_is_two_g():
    g = 2 * math.pi * 0.002
    model = DeviceModel([W5, W5], [0, 0], 2, couplings={(0, 1): g})
    h = build_static_hamiltonian(model)
    np.testing.assert_allclose(h, h.conj().T, atol=0)
    # single-excitation block in the |01>, |10> basis, diagonalized by hand
    block = h[np.ix_([1, 2], [1, 2])]
    np.testing.assert_allclose(block, [[W5, g], [g, W5]], atol=1e-12)
    evals = np.linalg.eigvalsh(block)
    assert evals[1] - evals[0] == pytest.approx(2 * g, rel=1e-12)


def test_coupling_is_symmetric_in_index_order():
    g = 0.01
    a = DeviceModel([W5, 5.3], [0, 0], 3, couplings={(0, 1): g})
    b = DeviceModel([W5, 5.3], [0, 0], 3, couplings={(1, 0): g})
    np.testing.assert_array_equal(build_static_hamiltonian(a), build_static_hamiltonian(b))


def test_model_validation():
    with pytest.raises(InvalidArgumentError):
        DeviceModel([W5], [0], 1)
    with pytest.raises(InvalidArgumentError):
        DeviceModel([W5], [0], 2, t1=[-1.0])
    with pytest.raises(InvalidArgumentError):
        DeviceModel([W5], [0], 2, couplings={(0, 1): 0.1})
    with pytest.raises(InvalidArgumentError):
        DeviceModel([W5, W5], [0], 2)


def test_drive_hamiltonian():
    model = qubit(2, kappa=0.3)
    assert not np.any(build_drive_hamiltonian(model, [], 0.0))
    zero = constant_drive(0, W5, 0.0, 0.0, 0, 10)
    assert not np.any(build_drive_hamiltonian(model, [zero], 1.0))
    drive = constant_drive(0, W5, 0.4, 0.9, 0, 10)
    h = build_drive_hamiltonian(model, [drive], 0.0)
    np.testing.assert_allclose(h, 0.3 * 0.4 * np.array([[0, 1], [1, 0]]), atol=1e-15)
    h = build_drive_hamiltonian(model, [drive], 0.37)
    assert h[0, 0] == h[1, 1] == 0
    expected = 0.3 * (0.4 * math.cos(W5 * 0.37) + 0.9 * math.sin(W5 * 0.37))
    assert h[0, 1] == pytest.approx(expected)
    # outside the waveform the term is zero
    assert not np.any(build_drive_hamiltonian(model, [drive], 10.0))


def test_zero_order_hold():
    wf = Waveform(np.array([1.0, 2.0, 3.0]), np.zeros(3), 5.0, 2.0)
    drive = DriveTerm(0, 1.0, wf)
    assert drive.amplitudes(4.99)[0] == 0
    assert drive.amplitudes(5.0)[0] == 1.0
    assert drive.amplitudes(5.49)[0] == 1.0
    assert drive.amplitudes(5.5)[0] == 2.0
    assert drive.amplitudes(6.49)[0] == 3.0
    assert drive.amplitudes(6.5)[0] == 0


def test_collapse_operators():
    assert collapse_ops(qubit(2)) == []
    ops = collapse_ops(qubit(2, t1=10000.0))
    assert len(ops) == 1
    a, gamma = ops[0]
    assert gamma == pytest.approx(2 * math.pi / 10000)
    np.testing.assert_array_equal(a, [[0, 1], [0, 0]])
    ops = collapse_ops(qubit(3, t1=100.0, t2=50.0))
    (a1, g1), (a2, g2) = ops
    assert np.count_nonzero(a1) == 1 and a1[0, 1] == 1
    np.testing.assert_array_equal(a2, np.diag([1, -1, 0]))
    assert g2 == pytest.approx(2 * math.pi / 50)


def test_collapse_embedding_two_transmons():
    model = DeviceModel([W5, W5], [0, 0], [2, 3], t1=[None, 100.0])
    (a, _), = collapse_ops(model)
    sm = np.zeros((3, 3))
    sm[0, 1] = 1
    np.testing.assert_array_equal(a, np.kron(np.eye(2), sm))


# master equation right-hand side


def test_rhs_maximally_mixed_is_stationary():
    model = qubit(3)
    assert np.max(np.abs(lindblad_rhs(model, [], 0.3, np.eye(3) / 3))) < 1e-12


def test_rhs_trace_zero_and_linear():
    rng = np.random.default_rng(5)
    model = DeviceModel([W5, 5.5], [-1.2, -1.3], [3, 2], t1=[50.0, 80.0], t2=[40.0, None], couplings={(0, 1): 0.05})
    drives = [constant_drive(0, W5, 0.2, -0.1, 0, 20)]
    r1, r2 = random_density(6, rng), random_density(6, rng)
    for rho in (r1, r2):
        assert abs(np.trace(lindblad_rhs(model, drives, 3.3, rho))) < 1e-12
    a, b = 0.3, -1.7
    lhs = lindblad_rhs(model, drives, 3.3, a * r1 + b * r2)
    rhs = a * lindblad_rhs(model, drives, 3.3, r1) + b * lindblad_rhs(model, drives, 3.3, r2)
    assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_rhs_amplitude_damping_by_hand():
    model = DeviceModel([0.0], [0.0], 2, t1=[1000.0])
    rho = np.diag([0.0, 1.0]).astype(complex)
    d = lindblad_rhs(model, [], 0.0, rho)
    gamma = 2 * math.pi / 1000
    assert d[1, 1].real == pytest.approx(-gamma)
    assert d[0, 0].real == pytest.approx(gamma)


def test_rhs_rejects_wrong_shape():
    with pytest.raises(InvalidArgumentError):
        lindblad_rhs(qubit(2), [], 0.0, np.eye(3))


def test_superoperators_match_matrix_form():
    rng = np.random.default_rng(1)
    model = DeviceModel([W5, 5.5], [-1.2, -1.3], [2, 3], t1=[50.0, 80.0], t2=[40.0, 30.0], couplings={(0, 1): 0.05})
    rho = random_density(6, rng)
    h = build_static_hamiltonian(model)
    generator = commutator_superop(h) + sum(dissipator_superop(a, g) for a, g in collapse_ops(model))
    vec = generator @ rho.reshape(-1)
    np.testing.assert_allclose(vec.reshape(6, 6), lindblad_rhs(model, [], 0.0, rho), atol=1e-12)


# integration


def test_idle_ground_state_is_constant():
    model = qubit(3)
    times = np.linspace(0, 50, 11)
    traj = evolve(model, [], (0, 50), ground_state(model), times)
    for rho in traj.states:
        np.testing.assert_allclose(rho, ground_state(model), atol=1e-14)


def test_rotating_rabi_matches_closed_form():
    # RWA solution: P1(t) = sin^2(kappa * A * t / 2)
    kappa, amplitude = 2 * math.pi * 0.02, 0.5
    model = qubit(2, kappa=kappa)
    drive = constant_drive(0, W5, amplitude, 0.0, 0.0, 50)
    times = np.linspace(0, 50, 26)
    traj = evolve(model, [drive], (0, 50), ground_state(model), times, SolverSettings(frame="rotating", max_step_ns=10))
    p1 = np.array([rho[1, 1].real for rho in traj.states])
    np.testing.assert_allclose(p1, np.sin(kappa * amplitude * times / 2) ** 2, atol=1e-8)
    assert p1[-1] >= 0.999


def test_rotating_phase_sets_rotation_axis():
    # a pi/2 pulse with phase pi/2 rotates about +y: |0> -> (|0> + |1>)/sqrt 2 up to sign of the x coherence
    kappa = 2 * math.pi * 0.02
    model = qubit(2, kappa=kappa)
    quarter = 0.25 / (0.02 * 25)  # kappa A T = pi/2 for T = 25 ns
    x = constant_drive(0, W5, quarter, 0.0, 0, 25)
    y = constant_drive(0, W5, 0.0, quarter, 0, 25)
    settings = SolverSettings(frame="rotating", max_step_ns=10)
    rx = evolve(model, [x], (0, 25), ground_state(model), [25], settings).final
    ry = evolve(model, [y], (0, 25), ground_state(model), [25], settings).final
    # exp(-i pi/4 X)|0> has coherence rho01 = i/2; exp(-i pi/4 Y)|0> has rho01 = 1/2
    assert rx[0, 1] == pytest.approx(0.5j, abs=1e-8)
    assert ry[0, 1] == pytest.approx(0.5, abs=1e-8)


def test_lab_frame_pi_pulse():
    # Rabi rate 25 MHz on a 5 GHz carrier; counter-rotating error ~ (Omega / omega)^2
    rabi = 2 * math.pi * 0.025
    model = qubit(2, kappa=rabi)
    duration = math.pi / rabi
    drive = constant_drive(0, W5, 1.0, 0.0, 0.0, 20)
    assert duration == pytest.approx(20)
    traj = evolve(model, [drive], (0, 20), ground_state(model), [20], SolverSettings())
    assert traj.final[1, 1].real >= 0.99


def test_lab_frame_matches_direct_integration():
    # reference: generic RK on the untransformed master equation, no frames,
    # no segment exponentials; short window since it must resolve 5 GHz
    from scipy.integrate import solve_ivp

    rng = np.random.default_rng(3)
    ghz = hz_to_rad_per_ns(1e9)
    model = DeviceModel([5.0 * ghz, 5.2 * ghz], [-0.2 * ghz] * 2, [3, 2], [300.0, None], [200.0, 500.0],
                        [0.03 * ghz] * 2, {(0, 1): 0.01 * ghz})
    drives = [
        DriveTerm(0, 5.01 * ghz, Waveform(rng.uniform(-1, 1, 2), rng.uniform(-1, 1, 2), 0.5, 1.0)),
        DriveTerm(1, 5.2 * ghz, Waveform(rng.uniform(-1, 1, 2), rng.uniform(-1, 1, 2), 1.0, 1.0)),
    ]
    dim = model.dimension
    psi = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    psi /= np.linalg.norm(psi)
    rho0 = np.outer(psi, psi.conj())
    ours = evolve(model, drives, (0, 3), rho0, [3.0], SolverSettings()).final

    def rhs(t, v):
        return lindblad_rhs(model, drives, t, v.reshape(dim, dim)).reshape(-1)

    y = rho0.reshape(-1)
    for a in np.arange(0, 3, 0.5):
        y = solve_ivp(rhs, (a, a + 0.5), y, method="DOP853", rtol=1e-10, atol=1e-12, max_step=0.05).y[:, -1]
    np.testing.assert_allclose(ours, y.reshape(dim, dim), atol=1e-7)


def test_lab_and_rotating_frames_agree_on_populations():
    rabi = 2 * math.pi * 0.01
    model = qubit(3, kappa=rabi, alpha=-2 * math.pi * 0.2)
    drive = constant_drive(0, W5, 0.7, 0.2, 5.0, 30)
    times = [10.0, 20.0, 35.0, 40.0]
    lab = evolve(model, [drive], (0, 40), ground_state(model), times, SolverSettings())
    rot = evolve(model, [drive], (0, 40), ground_state(model), times, SolverSettings(frame="rotating"))
    for a, b in zip(lab.states, rot.states):
        np.testing.assert_allclose(np.diag(a).real, np.diag(b).real, atol=5e-3)


def test_t1_decay_law():
    t1 = 2000.0
    model = qubit(2, t1=t1)
    times = np.linspace(0, 3000, 31)
    settings = SolverSettings(rtol=1e-8)
    traj = evolve(model, [], (0, 3000), basis_state(model, [1]), times, settings)
    p1 = np.array([rho[1, 1].real for rho in traj.states])
    expected = np.exp(-2 * math.pi / t1 * times)
    assert np.max(np.abs(p1 - expected) / expected) < 10 * settings.rtol


def test_t1_decay_law_while_driving_off_resonance_segments():
    # drive present on a far-away carrier forces the Runge-Kutta path
    t1 = 500.0
    model = DeviceModel([W5], [0.0], 2, t1=[t1], drive_couplings=[1e-9])
    drive = constant_drive(0, W5 + 3.0, 1.0, 0.0, 0.0, 200)
    times = np.linspace(0, 200, 21)
    traj = evolve(model, [drive], (0, 200), basis_state(model, [1]), times, SolverSettings(frame="rotating", max_step_ns=1))
    p1 = np.array([rho[1, 1].real for rho in traj.states])
    np.testing.assert_allclose(p1, np.exp(-2 * math.pi / t1 * times), rtol=1e-6)


def test_energy_and_purity_conserved_closed_system():
    model = DeviceModel([W5, 5.5 * 2 * math.pi], [-1.2, -1.3], 3, couplings={(0, 1): 0.1})
    rng = np.random.default_rng(3)
    psi = rng.normal(size=9) + 1j * rng.normal(size=9)
    psi /= np.linalg.norm(psi)
    rho0 = np.outer(psi, psi.conj())
    h = build_static_hamiltonian(model)
    traj = evolve(model, [], (0, 5), rho0, np.linspace(0, 5, 6), SolverSettings(max_step_ns=0.05))
    e0 = np.trace(h @ rho0).real
    for rho in traj.states:
        assert abs(np.trace(h @ rho).real - e0) < 1e-6 * np.linalg.norm(h, 2)
        assert abs(np.trace(rho @ rho).real - 1) < 1e-6


def test_self_convergence_under_tolerance_halving():
    model = DeviceModel([W5], [-1.2], 3, t1=[300.0], t2=[200.0], drive_couplings=[2 * math.pi * 0.02])
    rng = np.random.default_rng(9)
    n = 40
    drive = DriveTerm(0, W5 + 0.05, Waveform(rng.uniform(-1, 1, n), rng.uniform(-1, 1, n), 2.0, 1.0))
    loose = SolverSettings(rtol=1e-6, atol=1e-8, frame="rotating", max_step_ns=10)
    tight = SolverSettings(rtol=5e-7, atol=5e-9, frame="rotating", max_step_ns=10)
    a = evolve(model, [drive], (0, 50), ground_state(model), [50], loose).final
    b = evolve(model, [drive], (0, 50), ground_state(model), [50], tight).final
    assert np.max(np.abs(np.diag(a) - np.diag(b))) < 1e-6


def test_returned_states_are_valid_density_matrices():
    model = DeviceModel([W5], [-1.2], 3, t1=[300.0], t2=[200.0], drive_couplings=[2 * math.pi * 0.05])
    drive = constant_drive(0, W5, 0.8, 0.3, 0, 30)
    traj = evolve(model, [drive], (0, 40), ground_state(model), np.arange(0, 41, 2.0), SolverSettings(frame="rotating"))
    assert len(traj) == 21
    for rho in traj.states:
        assert check_density_matrix(rho) is None


def test_evolve_argument_validation():
    model = qubit(2)
    with pytest.raises(InvalidArgumentError):
        evolve(model, [], (0, 10), np.eye(3), [10])
    with pytest.raises(InvalidArgumentError):
        evolve(model, [], (10, 0), ground_state(model), [])
    with pytest.raises(InvalidArgumentError):
        evolve(model, [], (0, 10), ground_state(model), [5, 3])
    with pytest.raises(InvalidArgumentError):
        evolve(model, [], (0, 10), ground_state(model), [11])
    with pytest.raises(InvalidArgumentError):
        evolve(model, [constant_drive(1, W5, 1, 0, 0, 5)], (0, 10), ground_state(model), [10])


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_solver_failure_reports_time():
    # a non-finite generator makes the very first step fail
    model = qubit(2, kappa=1e300)
    drive = constant_drive(0, W5, 1.0, 0.0, 3.0, 5)
    with pytest.raises(SolverError) as info:
        evolve(model, [drive], (0, 10), ground_state(model), [10], SolverSettings())
    assert info.value.time == pytest.approx(3.0)


def test_reduced_populations():
    model = DeviceModel([W5, W5], [0, 0], [2, 3])
    rho = basis_state(model, [1, 2])
    np.testing.assert_array_equal(reduced_populations(rho, model.levels, 0), [0, 1])
    np.testing.assert_array_equal(reduced_populations(rho, model.levels, 1), [0, 0, 1])


def test_check_density_matrix_reports_violations():
    assert check_density_matrix(np.diag([0.5, 0.5])) is None
    assert "trace" in check_density_matrix(np.diag([0.5, 0.6]))
    assert "hermitian" in check_density_matrix(np.array([[0.5, 0.1], [0.0, 0.5]]))
    assert "negative" in check_density_matrix(np.diag([1.1, -0.1]))


def test_unit_conversion():
    assert hz_to_rad_per_ns(1e9) == pytest.approx(2 * math.pi)
