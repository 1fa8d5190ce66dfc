"""Grid, transforms, norms, and spectral operators.

Closed-form anchors use phi = sin x sin y on (0, 2pi)^2:
||phi|| = pi, |phi|_H1 = sqrt(2) pi, ||phi||_{H^-1} = pi/sqrt(2),
and -Lap(phi) = 2 phi.
"""

import math

import numpy as np
import pytest

from savflow import (
    Field,
    GridMismatchError,
    SpectralField,
    apply_laplacian,
    forward,
    h1_seminorm,
    hminus1_norm,
    inner,
    inverse,
    inverse_laplacian,
    l2_norm,
    linf_norm,
    make_grid,
    mean,
    norms,
    solve_symbol,
)
from savflow.spectral import dealias, dealias_mask

PI = math.pi


def sin_product(grid):
    X, Y = grid.nodes()
    return Field(grid, np.sin(X) * np.sin(Y))


class TestGrid:
    def test_wavenumber_shapes(self):
        g = make_grid(32, 16, 2 * PI, 2 * PI)
        assert g.kx.shape == (32,)
        assert g.ky.shape == (16 // 2 + 1,)  # rfft2 keeps half the y modes
        assert g.k2.shape == (32, 9)

    def test_cell_area_and_area(self):
        g = make_grid(8, 8, 1.0, 2.0)
        assert g.area == pytest.approx(2.0)
        assert g.cell_area == pytest.approx(2.0 / 64)

    def test_wavenumbers_are_integers_on_2pi_domain(self):
        g = make_grid(8, 8, 2 * PI, 2 * PI)
        assert np.allclose(sorted(g.kx), [-4, -3, -2, -1, 0, 1, 2, 3])
        assert np.allclose(g.ky, [0, 1, 2, 3, 4])

    def test_rejects_odd_or_small_sizes(self):
        with pytest.raises(ValueError, match="even"):
            make_grid(9, 8, 2 * PI, 2 * PI)
        with pytest.raises(ValueError, match=">= 4"):
            make_grid(2, 8, 2 * PI, 2 * PI)

    def test_rejects_nonpositive_lengths(self):
        with pytest.raises(ValueError, match="positive"):
            make_grid(8, 8, -1.0, 2 * PI)

    def test_wavenumber_arrays_read_only(self):
        g = make_grid(8, 8, 2 * PI, 2 * PI)
        with pytest.raises(ValueError):
            g.kx[0] = 99.0


class TestFieldContainers:
    def test_field_shape_mismatch(self, grid16):
        with pytest.raises(ValueError, match="shape"):
            Field(grid16, np.zeros((4, 4)))

    def test_spectral_shape_mismatch(self, grid16):
        with pytest.raises(ValueError, match="shape"):
            SpectralField(grid16, np.zeros((4, 4), dtype=complex))

    def test_grid_mismatch_on_inner(self, grid16, rng):
        other = make_grid(16, 16, 1.0, 1.0)
        f = Field(grid16, rng.standard_normal(grid16.shape))
        h = Field(other, rng.standard_normal(other.shape))
        with pytest.raises(GridMismatchError):
            inner(f, h)


class TestTransforms:
    def test_round_trip(self, random_field):
        back = inverse(forward(random_field))
        assert np.max(np.abs(back.data - random_field.data)) <= 1e-13

    def test_zero_mode_is_scaled_mean(self, random_field):
        g = random_field.grid
        coef = forward(random_field).coef
        assert coef[0, 0].real == pytest.approx(
            np.mean(random_field.data) * g.nx * g.ny, rel=1e-12)

    def test_mean(self, random_field):
        assert mean(random_field) == pytest.approx(
            float(np.mean(random_field.data)), rel=1e-14)


class TestNormsAndInner:
    def test_l2_norm_sin_product(self, grid32):
        assert l2_norm(sin_product(grid32)) == pytest.approx(PI, rel=1e-13)

    def test_h1_seminorm_sin_product(self, grid32):
        assert h1_seminorm(sin_product(grid32)) == pytest.approx(
            math.sqrt(2) * PI, rel=1e-13)

    def test_hminus1_norm_sin_product(self, grid32):
        assert hminus1_norm(sin_product(grid32)) == pytest.approx(
            PI / math.sqrt(2), rel=1e-13)

    def test_hminus1_rejects_nonzero_mean(self, grid16):
        f = Field(grid16, np.ones(grid16.shape))
        with pytest.raises(ValueError, match="mean"):
            hminus1_norm(f)

    def test_parseval(self, random_field):
        spectral = math.sqrt(
            sum(np.abs(forward(random_field).coef.ravel()) ** 2
                * _weights(random_field.grid).ravel())
            * random_field.grid.area) / (random_field.grid.nx * random_field.grid.ny)
        assert l2_norm(random_field) == pytest.approx(spectral, rel=1e-12)

    def test_inner_matches_quadrature(self, grid16, rng):
        f = Field(grid16, rng.standard_normal(grid16.shape))
        h = Field(grid16, rng.standard_normal(grid16.shape))
        quad = float(np.sum(f.data * h.data)) * grid16.cell_area
        assert inner(f, h) == pytest.approx(quad, rel=1e-12)

    def test_linf(self, grid16):
        f = Field(grid16, np.zeros(grid16.shape))
        f.data[3, 5] = -7.0
        assert linf_norm(f) == 7.0

    def test_norms_dict(self, grid32):
        d = norms(sin_product(grid32))
        assert set(d) == {"l2", "linf", "h1_semi", "hminus1"}
        assert d["l2"] == pytest.approx(PI, rel=1e-12)
        assert d["linf"] == pytest.approx(1.0, abs=1e-3)  # grid may miss the peak

    def test_norms_rejects_nonzero_mean(self, grid16):
        with pytest.raises(ValueError, match="mean"):
            norms(Field(grid16, np.ones(grid16.shape)))


def _weights(grid):
    w = np.full((grid.nx, grid.ky.size), 2.0)
    w[:, 0] = 1.0
    if grid.ny % 2 == 0:
        w[:, -1] = 1.0
    return w


class TestOperators:
    def test_laplacian_eigenfunction(self, grid32):
        phi = sin_product(grid32)
        lap = apply_laplacian(phi)
        assert np.max(np.abs(lap.data + 2.0 * phi.data)) <= 1e-12

    def test_inverse_laplacian_restores_mean_zero_part(self, random_field):
        back = inverse_laplacian(apply_laplacian(random_field))
        expected = random_field.data - random_field.data.mean()
        assert np.max(np.abs(back.data - expected)) <= 1e-11

    def test_solve_symbol_manufactured(self, random_field):
        a0, a2, a4 = 3.0, 0.7, 0.02
        u = solve_symbol(a0, a2, a4, random_field)
        lap = apply_laplacian(u)
        lap2 = apply_laplacian(lap)
        residual = a0 * u.data - a2 * lap.data + a4 * lap2.data - random_field.data
        assert np.max(np.abs(residual)) <= 1e-10 * np.max(np.abs(random_field.data))

    def test_solve_symbol_rejects_vanishing_symbol(self, random_field):
        with pytest.raises(ValueError, match="symbol"):
            solve_symbol(0.0, 1.0, 0.0, random_field)

    def test_dealias_keeps_low_modes(self, grid32):
        phi = sin_product(grid32)  # modes (±1, ±1): far below the 2/3 cutoff
        assert np.max(np.abs(dealias(phi).data - phi.data)) <= 1e-13

    def test_dealias_kills_high_modes(self, grid16):
        X, _ = grid16.nodes()
        f = Field(grid16, np.cos(8 * X))  # Nyquist mode in x
        assert np.max(np.abs(dealias(f).data)) <= 1e-12

    def test_dealias_mask_shape(self, grid16):
        assert dealias_mask(grid16).shape == (16, 9)
