"""Phase-space grids, special functions and quadrature.

Conventions used throughout the package: hbar = 1, quadrature ordering
(q, p) per mode, vacuum variance 1/2.  Wigner fields are sampled on
tensor-product grids with ``values[i, j] = W(q_i, p_j)``.

Integration is composite Simpson on each axis (grids are kept at odd point
counts for this reason); convolution is linear, via FFT with zero padding.
"""

import os

import numpy as np
from scipy.signal import fftconvolve

from .errors import CapacityError, GridError, TruncationRiskError

__all__ = [
    "PhaseSpaceGrid",
    "laguerre_assoc",
    "laguerre_assoc_derivative",
    "laguerre_sequence",
    "log_factorial",
    "axis_weights",
    "integrate",
    "convolve",
    "convolve_gaussian",
    "worker_count",
]

# ln(n!) for n = 0..256, enough for sqrt(n!/m!) prefactors at any
# supported Fock cutoff.
LOG_FACTORIAL = np.concatenate(([0.0], np.cumsum(np.log(np.arange(1.0, 257.0)))))

#: hard ceiling on Laguerre degree, matching the largest supported cutoff
DEFAULT_N_CAP = 64

#: absolute boundary-decay threshold for convolution inputs
BOUNDARY_TOL = 1e-12


def worker_count(workers=None):
    """Thread-pool size: the argument, else NGM_WORKERS, else 1."""
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get("NGM_WORKERS", "")
    if env.strip():
        return max(1, int(env))
    return 1


def log_factorial(n):
    """ln(n!) from the precomputed table (n may be an integer array)."""
    n = np.asarray(n)
    if np.any(n < 0) or np.any(n >= LOG_FACTORIAL.size):
        raise ValueError(f"factorial table covers 0..{LOG_FACTORIAL.size - 1}")
    return LOG_FACTORIAL[n]


class PhaseSpaceGrid:
    """Uniform rectangular grid over single-mode phase space.

    Point counts are rounded up to odd so composite Simpson applies exactly;
    by default at least ``min_points`` per axis are required, the working
    floor for entropy integrals.  Pass a smaller ``min_points`` only for
    cheap smoke tests.
    """

    def __init__(self, q_min, q_max, p_min, p_max, n_q, n_p, min_points=65):
        if not (q_max > q_min and p_max > p_min):
            raise ValueError("grid extents must satisfy q_max > q_min, p_max > p_min")
        n_q, n_p = int(n_q), int(n_p)
        if n_q < min_points or n_p < min_points:
            raise ValueError(f"grid needs at least {min_points} points per axis")
        # round up to odd: Simpson needs an even number of panels
        if n_q % 2 == 0:
            n_q += 1
        if n_p % 2 == 0:
            n_p += 1
        self.q_min, self.q_max = float(q_min), float(q_max)
        self.p_min, self.p_max = float(p_min), float(p_max)
        self.n_q, self.n_p = n_q, n_p
        self.q = np.linspace(self.q_min, self.q_max, n_q)
        self.p = np.linspace(self.p_min, self.p_max, n_p)

    @classmethod
    def for_moments(cls, mean, cov, points=513, sigmas=5.5, min_extent=6.0):
        """Grid sized to hold a state with the given first/second moments.

        Half-extent per axis is the largest of min_extent, sigmas * rms
        about the origin (rms = sqrt(V_ii + d_i^2), so displaced states
        stay covered) and |d_i| + sigmas * sigma_i.  Coverage of 5.5
        standard deviations keeps the tail bias of a quadrature-extracted
        covariance below ~1e-6 relative; a plain 5-sigma window would bias
        det V of a minimal-uncertainty Gaussian past the uncertainty-bound
        check.
        """
        mean = np.asarray(mean, dtype=float)
        cov = np.asarray(cov, dtype=float)
        sig = np.sqrt(np.diag(cov))
        rms = np.sqrt(np.diag(cov) + mean**2)
        eq = max(min_extent, sigmas * rms[0], abs(mean[0]) + sigmas * sig[0])
        ep = max(min_extent, sigmas * rms[1], abs(mean[1]) + sigmas * sig[1])
        return cls(-eq, eq, -ep, ep, points, points)

    @property
    def dq(self):
        return (self.q_max - self.q_min) / (self.n_q - 1)

    @property
    def dp(self):
        return (self.p_max - self.p_min) / (self.n_p - 1)

    @property
    def shape(self):
        return (self.n_q, self.n_p)

    def meshes(self):
        """Return (Q, P) meshes with values[i, j] <-> (q_i, p_j) layout."""
        return np.meshgrid(self.q, self.p, indexing="ij")

    def __eq__(self, other):
        if not isinstance(other, PhaseSpaceGrid):
            return NotImplemented
        return (
            self.shape == other.shape
            and self.q_min == other.q_min
            and self.q_max == other.q_max
            and self.p_min == other.p_min
            and self.p_max == other.p_max
        )

    def __repr__(self):
        return (
            f"PhaseSpaceGrid(q=[{self.q_min:g}, {self.q_max:g}]x{self.n_q}, "
            f"p=[{self.p_min:g}, {self.p_max:g}]x{self.n_p})"
        )


def laguerre_sequence(k, x, n_max):
    """Yield L_0^(k)(x) .. L_{n_max}^(k)(x) by the three-term recurrence.

    The recurrence in the degree n,

        n L_n = (2n - 1 + k - x) L_{n-1} - (n - 1 + k) L_{n-2},

    is forward-stable for these parameters; x may be any float array.
    """
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    yield prev
    if n_max == 0:
        return
    cur = 1.0 + k - x
    yield cur
    for n in range(2, n_max + 1):
        prev, cur = cur, ((2 * n - 1 + k - x) * cur - (n - 1 + k) * prev) / n
        yield cur


def laguerre_assoc(n, k, x, n_cap=DEFAULT_N_CAP):
    """Associated Laguerre polynomial L_n^(k)(x), vectorized over x."""
    n, k = int(n), int(k)
    if n < 0 or k < 0:
        raise ValueError("laguerre_assoc needs n >= 0 and k >= 0")
    if n > n_cap:
        raise CapacityError(f"Laguerre degree {n} above cap {n_cap}")
    scalar = np.isscalar(x)
    for value in laguerre_sequence(k, x, n):
        pass
    return float(value) if scalar else value


def laguerre_assoc_derivative(n, k, x, n_cap=DEFAULT_N_CAP):
    """d/dx L_n^(k)(x) = -L_{n-1}^(k+1)(x); zero for n = 0."""
    if int(n) == 0:
        return 0.0 if np.isscalar(x) else np.zeros_like(np.asarray(x, dtype=float))
    return -laguerre_assoc(int(n) - 1, int(k) + 1, x, n_cap=n_cap)


def axis_weights(n, step):
    """Quadrature weights for one axis: Simpson for odd n, trapezoid else."""
    w = np.ones(n)
    if n % 2 == 1 and n >= 3:
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        return w * (step / 3.0)
    w[0] = w[-1] = 0.5
    return w * step


def grid_weights(grid):
    """Tensor-product quadrature weights, shape (n_q, n_p)."""
    return np.outer(axis_weights(grid.n_q, grid.dq), axis_weights(grid.n_p, grid.dp))


def integrate(values, grid):
    """Integrate sampled values over the grid (tensor-product Simpson)."""
    values = np.asarray(values)
    if values.shape != grid.shape:
        raise ValueError(f"values shape {values.shape} != grid shape {grid.shape}")
    wq = axis_weights(grid.n_q, grid.dq)
    wp = axis_weights(grid.n_p, grid.dp)
    return wq @ values @ wp


def _edge_max(values):
    return max(
        np.abs(values[0, :]).max(),
        np.abs(values[-1, :]).max(),
        np.abs(values[:, 0]).max(),
        np.abs(values[:, -1]).max(),
    )


def _check_boundary(values, grid, tol, label):
    mag = _edge_max(values)
    if mag > tol:
        raise TruncationRiskError(
            f"{label} does not decay at the grid boundary "
            f"(edge magnitude {mag:.3e} > {tol:.0e}); enlarge the grid",
            magnitude=mag,
        )


def _origin_index(lo, step, n, label):
    # linear convolution on a sampled grid only lines up when the origin
    # is itself a sample
    idx = -lo / step
    if abs(idx - round(idx)) > 1e-6 or not (0 <= round(idx) < n):
        raise GridError(f"{label} axis must contain 0 as a grid point")
    return int(round(idx))


def convolve(a, b, grid, boundary_tol=BOUNDARY_TOL):
    """Linear convolution (a * b)(r) = integral a(r - r') b(r') dr'.

    Both fields must live on `grid` and decay below `boundary_tol` at its
    edges; the product is formed with zero padding to full length and
    cropped back, scaled by the area element.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != grid.shape or b.shape != grid.shape:
        raise ValueError("convolve expects both fields sampled on the given grid")
    _check_boundary(a, grid, boundary_tol, "first field")
    _check_boundary(b, grid, boundary_tol, "second field")
    iq = _origin_index(grid.q_min, grid.dq, grid.n_q, "q")
    ip = _origin_index(grid.p_min, grid.dp, grid.n_p, "p")
    full = fftconvolve(a, b, mode="full")
    out = full[iq : iq + grid.n_q, ip : ip + grid.n_p]
    return out * (grid.dq * grid.dp)


def convolve_gaussian(values, grid, cov, boundary_tol=BOUNDARY_TOL):
    """Convolve a field with a centered Gaussian of covariance `cov`.

    The kernel enters through its exact Fourier transform
    exp(-w^T cov w / 2) on the zero-padded spectral grid, so kernels much
    narrower than the mesh stay accurate (the sampled-kernel route fails
    there).  `cov` is a 2x2 symmetric PSD matrix; cov = 0 returns a copy.
    """
    values = np.asarray(values, dtype=float)
    if values.shape != grid.shape:
        raise ValueError("field shape does not match grid")
    cov = np.asarray(cov, dtype=float)
    if cov.shape != (2, 2):
        raise ValueError("cov must be 2x2")
    if np.allclose(cov, 0.0):
        return values.copy()
    _check_boundary(values, grid, boundary_tol, "field")
    nq, np_ = grid.shape
    shape = (2 * nq - 1, 2 * np_ - 1)
    wq = 2.0 * np.pi * np.fft.fftfreq(shape[0], d=grid.dq)
    wp = 2.0 * np.pi * np.fft.rfftfreq(shape[1], d=grid.dp)
    quad = (
        cov[0, 0] * wq[:, None] ** 2
        + 2.0 * cov[0, 1] * wq[:, None] * wp[None, :]
        + cov[1, 1] * wp[None, :] ** 2
    )
    spec = np.fft.rfft2(values, s=shape) * np.exp(-0.5 * quad)
    out = np.fft.irfft2(spec, s=shape)
    return out[:nq, :np_]
