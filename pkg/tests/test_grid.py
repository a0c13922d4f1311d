import numpy as np
import pytest

from fluxlab.flux import FluxProfile
from fluxlab.grid import (RadialGrid, build_channel_operator, build_grid,
                          check_truncation, truncation_margin)


def landau_level(n, j, b0):
    """Analytic oracle E_{n,j} = (2n + 1 + |j| - j) B0 in units hbar = 2m = 1."""
    return (2 * n + 1 + abs(j) - j) * b0


def test_build_grid_basic_contract():
    g = build_grid(9, 1.0)
    assert g.h == pytest.approx(1.0 / 9.0)
    assert g.nodes[0] == pytest.approx(0.5 * g.h)
    assert np.all(np.diff(g.nodes) > 0)
    assert g.nodes[-1] == pytest.approx(g.r_max - 0.5 * g.h)
    g2 = build_grid(1000, 10.0)
    assert g2.h == pytest.approx(0.01)


def test_build_grid_rejects_bad_input():
    with pytest.raises(ValueError):
        build_grid(0, 1.0)
    with pytest.raises(ValueError):
        build_grid(7, 1.0)
    with pytest.raises(ValueError):
        build_grid(100, -2.0)


def test_cell_measure_is_exact():
    # midpoint cells integrate r dr exactly: sum r_i h = r_max^2 / 2
    g = build_grid(64, 3.0)
    assert np.sum(g.nodes) * g.h == pytest.approx(g.r_max ** 2 / 2.0, rel=1e-14)


def test_representation_round_trip():
    g = build_grid(32, 2.0)
    rng = np.random.default_rng(3)
    phi = rng.normal(size=32) + 1j * rng.normal(size=32)
    back = g.to_weighted(g.to_flat(phi))
    assert np.max(np.abs(back - phi)) < 1e-15


def test_channel_operator_landau_levels():
    profile = FluxProfile.uniform_field(2.0)
    g = build_grid(2000, 12.0)
    for j, n, expected in [(0, 0, 2.0), (3, 0, 2.0), (-1, 0, 6.0), (0, 1, 6.0)]:
        op = build_channel_operator(profile, j, g)
        vals = op.eigenvalues(n + 1)
        assert vals[n] == pytest.approx(expected, rel=1e-3), (j, n)


def test_channel_operator_second_order_convergence():
    profile = FluxProfile.uniform_field(2.0)
    errors = []
    for n_r in (400, 800):
        op = build_channel_operator(profile, 0, build_grid(n_r, 12.0))
        errors.append(abs(op.eigenvalues(1)[0] - 2.0))
    ratio = errors[0] / errors[1]
    assert 3.5 <= ratio <= 4.5


def test_eigenvector_normalization_and_weighted_form():
    profile = FluxProfile.uniform_field(2.0)
    g = build_grid(500, 10.0)
    op = build_channel_operator(profile, 1, g)
    vals, u, phi = op.eigenpairs(n_lowest=2)
    assert g.h * np.sum(u[:, 0] ** 2) == pytest.approx(1.0, abs=1e-12)
    assert np.sum(np.abs(phi[:, 0]) ** 2 * g.nodes) * g.h == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(phi[:, 0], u[:, 0] / np.sqrt(g.nodes))


def test_off_diagonal_metric_weights():
    g = build_grid(16, 1.0)
    _, off = g.kinetic_tridiagonal()
    i = np.arange(1, 16)
    assert np.allclose(off, -(i / np.sqrt(i ** 2 - 0.25)) / g.h ** 2)


def test_kinetic_is_positive_semidefinite():
    g = build_grid(200, 5.0)
    d, e = g.kinetic_tridiagonal()
    from scipy.linalg import eigh_tridiagonal
    lam0 = eigh_tridiagonal(d, e, eigvals_only=True, select="i",
                            select_range=(0, 0))[0]
    assert lam0 >= -1e-10
    # continuum floor for the critical channel is (j_{0,1} / r_max)^2
    assert lam0 == pytest.approx((2.404826 / g.r_max) ** 2, rel=0.01)


def test_truncation_warning():
    profile = FluxProfile.power_law(1.0, 1.5)
    tight = build_grid(100, 4.0)
    assert truncation_margin(profile, tight, 6, 1.0) < 1.5
    with pytest.warns(UserWarning):
        check_truncation(profile, tight, 6, 1.0)
    roomy = build_grid(100, 12.0)
    margin = check_truncation(profile, roomy, 3, 1.0)
    assert margin >= 1.5
