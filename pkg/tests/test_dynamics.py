import numpy as np
import pytest

from fluxlab.angular import AngularPotential, DecayClass, GevreyEnvelope
from fluxlab.dynamics import (ObservableSeries, WaveState, bound_check_thm1,
                              geometric_times, growth_fit_thm2,
                              heisenberg_check, mobility_edge_scan, moment_j,
                              moment_x, participation_width, prepare_state,
                              propagate, record_observables)
from fluxlab.flux import FluxProfile
from fluxlab.grid import build_grid
from fluxlab.spectral import (SpectralWindow, assemble_hamiltonian, diagonalize,
                              spectral_projection)


def coupled_system(j_max=4, n_r=150, r_max=10.0, upper=1.0, amp=0.3):
    profile = FluxProfile.power_law(1.0, 1.5)
    grid = build_grid(n_r, r_max)
    w = None
    if amp:
        env = GevreyEnvelope(a=1.0, zeta=1.0,
                             b=lambda r: np.sqrt(np.pi / 2) * amp * np.exp(-r / 2) * np.e)
        w = AngularPotential(
            w=lambda r, t: amp * np.exp(-r / 2) * np.cos(t),
            envelope=env, decay=DecayClass.stretched_exponential(0.5, 1.0))
    h = assemble_hamiltonian(profile, w, grid, j_max, m_max=3 if w else None)
    es = diagonalize(h, window_upper=upper, dense_limit=10_000)
    e0 = float(es.eigenvalues[0])
    window = SpectralWindow(e0=e0, E0=upper, delta0=0.1 * (upper - e0), c0=0.0)
    return h, spectral_projection(h, window, eigensystem=es)


def test_prepare_state_from_eigenvector_is_exact():
    h, p = coupled_system(amp=0.0)
    state = prepare_state(p, {"kind": "eigenvector", "index": 1})
    expected = p.basis[:, 1].reshape(len(h.channels), h.grid.n_r)
    assert np.max(np.abs(state.amplitudes - expected)) == 0.0
    assert state.norm2() == pytest.approx(1.0, abs=1e-12)


def test_prepare_state_orthogonal_seed_raises():
    h, p = coupled_system(amp=0.0)
    # j = -4 carries no spectral weight below E = 1 for this flux
    with pytest.raises(ValueError):
        prepare_state(p, {"kind": "channel_bump", "j": -4, "r0": 3.0,
                          "width_r": 0.5})


def test_prepare_state_gaussian_lies_in_window():
    h, p = coupled_system(amp=0.3)
    state = prepare_state(p, {"kind": "gaussian", "j0": 3.0, "r0": 2.5,
                              "width_j": 1.5, "width_r": 1.0})
    drift = p.apply(state.amplitudes) - state.amplitudes
    assert np.sqrt(h.grid.h * np.sum(np.abs(drift) ** 2)) < 1e-12
    assert state.norm2() == pytest.approx(1.0, abs=1e-12)


def test_propagate_identity_at_t0_and_stationary_eigenvector():
    h, p = coupled_system(amp=0.3)
    state = prepare_state(p, {"kind": "eigenvector", "index": 0})
    lam = p.eigenvalues[0]
    out = propagate(p, state, [0.0, 2.0])
    assert np.max(np.abs(out[0].amplitudes - state.amplitudes)) < 1e-14
    phase = np.exp(-1j * lam * 2.0)
    assert np.max(np.abs(out[1].amplitudes - phase * state.amplitudes)) < 1e-12
    assert np.max(np.abs(np.abs(out[1].amplitudes) - np.abs(state.amplitudes))) < 1e-12


def test_propagation_unitarity_and_time_reversal():
    h, p = coupled_system(amp=0.3)
    state = prepare_state(p, {"kind": "gaussian", "j0": 3.0, "r0": 2.5,
                              "width_j": 2.0, "width_r": 1.0})
    times = np.linspace(0.0, 50.0, 40)
    states = propagate(p, state, times)
    norms = np.array([s.norm2() for s in states])
    assert np.max(np.abs(norms - norms[0])) <= 1e-10
    back = propagate(p, states[-1], [0.0])[0]
    assert np.max(np.abs(back.amplitudes - state.amplitudes)) <= 1e-10


def test_channel_norms_conserved_for_radial_w():
    profile = FluxProfile.power_law(1.0, 1.5)
    grid = build_grid(150, 10.0)
    env = GevreyEnvelope(a=1.0, zeta=1.0, b=lambda r: np.exp(-r))
    w = AngularPotential(w=lambda r, t: 0.4 * np.exp(-r) * np.ones_like(t),
                         envelope=env, decay=DecayClass.none())
    h = assemble_hamiltonian(profile, w, grid, 4, m_max=2)
    assert h.is_block_diagonal
    es = diagonalize(h, window_upper=1.0)
    window = SpectralWindow(e0=float(es.eigenvalues[0]), E0=1.0, delta0=0.05, c0=0.0)
    p = spectral_projection(h, window, eigensystem=es)
    state = prepare_state(p, {"kind": "gaussian", "j0": 3.0, "r0": 2.5,
                              "width_j": 2.0, "width_r": 1.0})
    states = propagate(p, state, np.linspace(0.0, 100.0, 30))
    cn = np.stack([s.channel_norm2() for s in states])
    assert np.max(np.abs(cn - cn[0][None, :])) <= 1e-10


def test_moment_x_basics():
    grid = build_grid(50, 5.0)
    channels = np.array([0, 1])
    amp = np.zeros((2, 50), dtype=complex)
    amp[0, 10] = 1.0
    state = WaveState(grid, channels, amp, representation="flat")
    n2 = state.norm2()
    assert moment_x(state, 0.0) == pytest.approx(n2)
    r_star = grid.nodes[10]
    assert moment_x(state, 2.0) == pytest.approx(r_star ** 2 * n2)
    # two-node combination, hand-checkable
    amp2 = np.zeros((2, 50), dtype=complex)
    amp2[0, 10] = 1.0
    amp2[1, 20] = 2.0
    state2 = WaveState(grid, channels, amp2, representation="flat")
    expected = grid.h * (grid.nodes[10] ** 2 * 1.0 + grid.nodes[20] ** 2 * 4.0)
    assert moment_x(state2, 2.0) == pytest.approx(expected)


def test_moment_j_basics():
    grid = build_grid(30, 3.0)
    channels = np.array([-1, 0, 1])
    amp = np.zeros((3, 30), dtype=complex)
    amp[2, 5] = 1.0      # entirely in channel j = 1
    state = WaveState(grid, channels, amp, representation="flat")
    n2 = state.norm2()
    assert moment_j(state, 2.0) == pytest.approx(n2)
    assert moment_j(state, 0.0) == pytest.approx(n2)
    amp0 = np.zeros((3, 30), dtype=complex)
    amp0[1, 5] = 1.0     # entirely in channel j = 0
    state0 = WaveState(grid, channels, amp0, representation="flat")
    assert moment_j(state0, 1.5) == 0.0


def test_weighted_representation_moments_agree():
    h, p = coupled_system(amp=0.3)
    state = prepare_state(p, {"kind": "gaussian", "j0": 3.0, "r0": 2.5,
                              "width_j": 2.0, "width_r": 1.0})
    assert moment_x(state.to_weighted(), 1.5) == pytest.approx(
        moment_x(state, 1.5), rel=1e-12)


def test_heisenberg_zero_w_and_single_eigenvector():
    h, p = coupled_system(amp=0.0)
    state = prepare_state(p, {"kind": "gaussian", "j0": 3.0, "r0": 2.5,
                              "width_j": 2.0, "width_r": 1.0})
    states = propagate(p, state, np.linspace(0.0, 5.0, 21))
    report = heisenberg_check(states, h)
    assert report.max_residual < 1e-12

    hw, pw = coupled_system(amp=0.3)
    single = prepare_state(pw, {"kind": "eigenvector", "index": 0})
    states = propagate(pw, single, np.linspace(0.0, 5.0, 21))
    report = heisenberg_check(states, hw)
    assert report.max_residual < 1e-10


def test_heisenberg_residual_second_order_in_dt():
    h, p = coupled_system(amp=0.3)
    state = prepare_state(p, {"kind": "gaussian", "j0": 3.0, "r0": 2.5,
                              "width_j": 2.0, "width_r": 1.0})
    t_end = 4.0
    res = []
    for n in (33, 65):      # halving the step exactly
        states = propagate(p, state, np.linspace(0.0, t_end, n))
        res.append(heisenberg_check(states, h).max_residual)
    ratio = res[0] / res[1]
    assert 3.5 <= ratio <= 4.5


def test_heisenberg_requires_uniform_grid():
    h, p = coupled_system(amp=0.3)
    state = prepare_state(p, {"kind": "eigenvector", "index": 0})
    states = propagate(p, state, [0.0, 1.0, 3.0])
    with pytest.raises(ValueError):
        heisenberg_check(states, h)


def test_bound_check_thm1_single_eigenvector_constant_ratio():
    h, p = coupled_system(amp=0.3)
    state = prepare_state(p, {"kind": "eigenvector", "index": 0})
    states = propagate(p, state, geometric_times(1.0, 100.0, 16))
    series = record_observables(states, nu=1.5, beta=1.0)
    report = bound_check_thm1(series)
    assert report.passed
    assert report.sup_ratio == pytest.approx(report.ratios[0], rel=1e-9)


def test_bound_check_thm1_nu_zero_ratio_below_one():
    h, p = coupled_system(amp=0.3)
    state = prepare_state(p, {"kind": "gaussian", "j0": 3.0, "r0": 2.5,
                              "width_j": 2.0, "width_r": 1.0})
    states = propagate(p, state, geometric_times(1.0, 100.0, 16))
    series = record_observables(states, nu=0.0, beta=1.0)
    # at nu = 0 the x-moment is the squared norm, identically
    assert np.allclose(series.x_moment, series.norms, rtol=0, atol=1e-15)
    report = bound_check_thm1(series)
    assert report.sup_ratio <= 1.0 + 1e-12


def _synthetic_series(times, j_moment, beta=1.0):
    n = times.size
    return ObservableSeries(times=times, x_moment=np.ones(n), j_moment=j_moment,
                            norms=np.ones(n), channel_norm2=np.ones((n, 1)),
                            channels=np.array([1]), nu=1.0, beta=beta)


def test_growth_fit_exact_power_data():
    times = np.geomspace(1.0, 1000.0, 40)
    series = _synthetic_series(times, 5.0 + 2.0 * times ** 0.4)
    report = growth_fit_thm2(series, "power", zeta=1.0, sigma_plus=1.5, p=4.0,
                             baseline=5.0)
    assert report.fitted_exponent == pytest.approx(0.4, abs=1e-3)
    assert report.bound == pytest.approx(0.6)
    assert report.passed and report.reliable and not report.flat


def test_growth_fit_flat_series_passes_with_zero_exponent():
    times = np.geomspace(1.0, 1000.0, 30)
    series = _synthetic_series(times, np.full(30, 7.0))
    report = growth_fit_thm2(series, "power", zeta=1.0, sigma_plus=1.5, p=4.0)
    assert report.flat
    assert report.fitted_exponent == 0.0
    assert report.passed


def test_growth_fit_log_power_data():
    times = np.geomspace(2.0, 1000.0, 40)
    series = _synthetic_series(times, 1.0 + 0.5 * np.log(times) ** 1.2)
    report = growth_fit_thm2(series, "stretched_exponential", zeta=1.0,
                             sigma_plus=1.5, s=1.0, baseline=1.0)
    assert report.kind == "log_power"
    assert report.bound == pytest.approx(1.5)   # theta = 1/min(1, 1/1.5)
    assert report.fitted_exponent == pytest.approx(1.2, abs=0.02)
    assert report.passed


def test_participation_width_uniform_vector():
    h = 0.1
    u = np.ones(100) / np.sqrt(100 * h)
    assert participation_width(u, h) == pytest.approx(10.0)


def test_mobility_scan_basics():
    grid = build_grid(1200, 30.0)
    report = mobility_edge_scan(1.0, grid, 2, low_band=(0.1, 0.5),
                                high_band=(1.8, 2.2))
    assert not report.empty_low_band
    assert not report.empty_high_band
    assert all(rec.j > 0 for rec in report.localized)
    assert report.min_decay_rate > 0.05
    assert report.min_width_ratio > 1.5
