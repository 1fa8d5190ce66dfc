"""2D periodic Fourier pseudo-spectral operators.

Conventions
-----------
Fields live on the uniform nodal grid x_i = i*lx/nx, y_j = j*ly/ny
(i = 0..nx-1, j = 0..ny-1) and are stored as float64 arrays of shape
(nx, ny), row-major: axis 0 is x, axis 1 is y.

Transforms use ``numpy.fft.rfft2`` with the unnormalized forward
convention, so the (0, 0) coefficient of ``forward(f)`` equals
``mean(f) * nx * ny``; the inverse transform carries the ``1/(nx*ny)``
factor.  All norms and inner products apply the physical quadrature
weight ``lx*ly/(nx*ny)`` (or the equivalent Parseval weights in spectral
space), so results do not depend on where the normalization lives.

Wavenumbers are angular: ``kx[m] = 2*pi*m/lx`` over the symmetric mode
range, ``ky`` over the half-spectrum range of the real transform.  The
symbol ``|k|^2`` vanishes only at the (0, 0) mode.

Grids and the arrays they carry are immutable after construction and may
be shared freely across threads; no operation here mutates its inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GridMismatchError

#: |mean(f)| <= MEAN_ZERO_RTOL * max|f| qualifies as mean-zero for the
#: negative-order operators.  Mean-zero is an analytic identity for the
#: increments these operators see, so any excess signals a bug upstream.
MEAN_ZERO_RTOL = 1e-10


@dataclass(frozen=True)
class Grid:
    """Periodic rectangle (0, lx) x (0, ly) sampled on nx x ny nodes.

    Attributes
    ----------
    kx, ky : wavenumber arrays (angular), shapes (nx,) and (ny//2 + 1,).
    k2 : |k|^2 symbol, shape (nx, ny//2 + 1); zero only at (0, 0).
    dealias : when True, nonlinear terms are truncated by the 2/3 rule
        (off by default; the scheme does not require it).
    """

    nx: int
    ny: int
    lx: float
    ly: float
    dealias: bool = False
    kx: np.ndarray = field(repr=False, default=None)
    ky: np.ndarray = field(repr=False, default=None)
    k2: np.ndarray = field(repr=False, default=None)

    @property
    def cell_area(self) -> float:
        return self.lx * self.ly / (self.nx * self.ny)

    @property
    def area(self) -> float:
        return self.lx * self.ly

    @property
    def shape(self):
        return (self.nx, self.ny)

    def nodes(self):
        """Nodal coordinate arrays X, Y of shape (nx, ny)."""
        x = np.arange(self.nx) * (self.lx / self.nx)
        y = np.arange(self.ny) * (self.ly / self.ny)
        return np.meshgrid(x, y, indexing="ij")


def make_grid(nx: int, ny: int, lx: float, ly: float, dealias: bool = False) -> Grid:
    """Build a Grid with wavenumber arrays populated.

    Raises
    ------
    ValueError
        If nx or ny is odd or below 4, or a domain length is not positive.
    """
    if nx < 4 or ny < 4 or nx % 2 or ny % 2:
        raise ValueError(f"grid sizes must be even and >= 4, got ({nx}, {ny})")
    if lx <= 0 or ly <= 0:
        raise ValueError(f"domain lengths must be positive, got ({lx}, {ly})")
    kx = 2.0 * np.pi * np.fft.fftfreq(nx, d=lx / nx)
    ky = 2.0 * np.pi * np.fft.rfftfreq(ny, d=ly / ny)
    k2 = kx[:, None] ** 2 + ky[None, :] ** 2
    for a in (kx, ky, k2):
        a.setflags(write=False)
    return Grid(nx=nx, ny=ny, lx=float(lx), ly=float(ly), dealias=dealias,
                kx=kx, ky=ky, k2=k2)


@dataclass
class Field:
    """Real nodal values on a grid, shape (nx, ny), row-major."""

    grid: Grid
    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.shape != self.grid.shape:
            raise ValueError(
                f"field shape {self.data.shape} does not match grid {self.grid.shape}"
            )

    def copy(self) -> "Field":
        return Field(self.grid, self.data.copy())


@dataclass
class SpectralField:
    """Complex coefficients in the conjugate-symmetric rfft2 layout."""

    grid: Grid
    coef: np.ndarray

    def __post_init__(self):
        expected = (self.grid.nx, self.grid.ny // 2 + 1)
        if self.coef.shape != expected:
            raise ValueError(
                f"coefficient shape {self.coef.shape} does not match grid layout {expected}"
            )


def _require_same_grid(a, b):
    ga, gb = a.grid, b.grid
    if (ga.nx, ga.ny, ga.lx, ga.ly) != (gb.nx, gb.ny, gb.lx, gb.ly):
        raise GridMismatchError(
            f"grids differ: ({ga.nx},{ga.ny},{ga.lx},{ga.ly}) vs ({gb.nx},{gb.ny},{gb.lx},{gb.ly})"
        )


def forward(f: Field) -> SpectralField:
    """Unnormalized forward transform; coef[0, 0] = mean(f) * nx * ny."""
    return SpectralField(f.grid, np.fft.rfft2(f.data))


def inverse(F: SpectralField) -> Field:
    """Inverse transform (carries the 1/(nx*ny) normalization)."""
    g = F.grid
    return Field(g, np.fft.irfft2(F.coef, s=(g.nx, g.ny)))


def mean(f: Field) -> float:
    return float(f.data.mean())


def inner(f: Field, g: Field) -> float:
    """Quadrature inner product integral(f*g) = cell_area * sum(f*g)."""
    _require_same_grid(f, g)
    return f.grid.cell_area * float(np.dot(f.data.ravel(), g.data.ravel()))


def _parseval_weights(grid: Grid) -> np.ndarray:
    # Middle ky columns represent a conjugate pair of full-spectrum modes.
    w = np.full(grid.ny // 2 + 1, 2.0)
    w[0] = 1.0
    w[-1] = 1.0
    return w


def _spectral_sq_sum(grid: Grid, coef_sq: np.ndarray) -> float:
    """integral(|f|^2) from |coef|^2 (optionally symbol-weighted)."""
    w = _parseval_weights(grid)
    total = float(np.sum(coef_sq * w[None, :]))
    return grid.area / (grid.nx * grid.ny) ** 2 * total


def l2_norm(f: Field) -> float:
    return float(np.sqrt(f.grid.cell_area * np.sum(f.data**2)))


def linf_norm(f: Field) -> float:
    return float(np.max(np.abs(f.data)))


def h1_seminorm(f: Field) -> float:
    """|grad f|_{L2} evaluated spectrally."""
    F = forward(f)
    return float(np.sqrt(_spectral_sq_sum(f.grid, f.grid.k2 * np.abs(F.coef) ** 2)))


def _check_mean_zero(f: Field, what: str):
    m = abs(mean(f))
    scale = linf_norm(f)
    if m > MEAN_ZERO_RTOL * scale:
        raise ValueError(
            f"{what} requires mean-zero input: |mean| = {m:.3e} "
            f"exceeds {MEAN_ZERO_RTOL:g} * max|f| = {MEAN_ZERO_RTOL * scale:.3e}"
        )


def hminus1_norm(f: Field) -> float:
    """Negative-order norm |inverse_grad f|_{L2} of a mean-zero field.

    Computed spectrally by dividing each mode by |k|, with the zero mode
    dropped.  Raises ValueError on non-mean-zero input.
    """
    _check_mean_zero(f, "hminus1 norm")
    F = forward(f)
    g = f.grid
    inv_k2 = np.zeros_like(g.k2)
    nonzero = g.k2 > 0
    inv_k2[nonzero] = 1.0 / g.k2[nonzero]
    return float(np.sqrt(_spectral_sq_sum(g, inv_k2 * np.abs(F.coef) ** 2)))


def norms(f: Field) -> dict:
    """All four norms at once: {l2, linf, h1_semi, hminus1}.

    The hminus1 entry requires mean-zero input and raises otherwise; use
    the individual helpers when the field has a nonzero mean.
    """
    return {
        "l2": l2_norm(f),
        "linf": linf_norm(f),
        "h1_semi": h1_seminorm(f),
        "hminus1": hminus1_norm(f),
    }


def apply_laplacian(f: Field) -> Field:
    """Multiply each mode by -|k|^2."""
    F = forward(f)
    return inverse(SpectralField(f.grid, -f.grid.k2 * F.coef))


def inverse_laplacian(f: Field) -> Field:
    """Divide each mode by -|k|^2, zero mode set to zero.

    Requires mean-zero input; inverse_laplacian(apply_laplacian(f))
    reproduces f - mean(f).
    """
    _check_mean_zero(f, "inverse_laplacian")
    F = forward(f)
    g = f.grid
    coef = np.zeros_like(F.coef)
    nonzero = g.k2 > 0
    coef[nonzero] = F.coef[nonzero] / (-g.k2[nonzero])
    return inverse(SpectralField(g, coef))


def solve_symbol(a0: float, a1: float, a2: float, rhs: Field) -> Field:
    """Solve (a0 - a1*Laplacian + a2*Laplacian^2) u = rhs spectrally.

    The symbol a0 + a1|k|^2 + a2|k|^4 must be nonzero at every mode;
    the solve is then exact in spectral space.
    """
    g = rhs.grid
    symbol = a0 + a1 * g.k2 + a2 * g.k2**2
    small = np.min(np.abs(symbol))
    if small == 0.0:
        raise ValueError(
            f"vanishing symbol: a0 + a1|k|^2 + a2|k|^4 hits zero with "
            f"(a0, a1, a2) = ({a0:g}, {a1:g}, {a2:g})"
        )
    F = forward(rhs)
    return inverse(SpectralField(g, F.coef / symbol))


def dealias_mask(grid: Grid) -> np.ndarray:
    """Boolean 2/3-rule mask over the rfft2 layout (True = keep)."""
    kx_cut = (2.0 * np.pi / grid.lx) * (grid.nx // 3)
    ky_cut = (2.0 * np.pi / grid.ly) * (grid.ny // 3)
    return (np.abs(grid.kx)[:, None] <= kx_cut) & (grid.ky[None, :] <= ky_cut)


def dealias(f: Field) -> Field:
    """Project f onto the 2/3-rule band (used for nonlinear terms only)."""
    F = forward(f)
    return inverse(SpectralField(f.grid, F.coef * dealias_mask(f.grid)))
