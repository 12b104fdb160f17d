"""Wigner synthesis from Fock-basis states.

The field is assembled as W = W0 * F with W0 the vacuum Gaussian
(1/pi) e^{-q^2-p^2} and F a polynomial accumulated over the density-matrix
diagonals: the |n><n+k| pair contributes

    (-1)^n sqrt(n!/(n+k)!) (sqrt2 (q+ip))^k  L_n^(k)(2q^2+2p^2)

with the conjugate-power twin for the lower triangle and the plain
(-1)^n L_n term on the diagonal.  Prefactors run in log space; one
three-term Laguerre recurrence per diagonal serves values and analytic
gradients alike (the gradient needs superscript k+1 sums, obtained from
the same recurrence through L_n^(k+1) = sum_{i<=n} L_i^(k)).

Hermitian input makes F real up to roundoff; the imaginary residue is
checked and dropped, never silently discarded above tolerance.
"""

import struct

import numpy as np

from .errors import ConsistencyError, NormalizationError
from .fock import as_density, state_moments
from .numerics import (
    LOG_FACTORIAL,
    PhaseSpaceGrid,
    grid_weights,
    integrate,
)

__all__ = [
    "WignerField",
    "GaussianMoments",
    "default_grid",
    "wigner_from_fock",
    "wigner_gradient",
    "moments",
    "gaussian_wigner",
    "negative_volume",
    "write_field_csv",
    "write_field_binary",
    "read_field_binary",
]

#: imaginary residue above this is a consistency failure (non-Hermitian input)
IMAG_RESIDUE_HARD = 1e-9

_MAGIC = b"NGMW"


class GaussianMoments:
    """First and second quadrature moments (d, V) in qqpp ordering."""

    def __init__(self, d, V):
        self.d = np.asarray(d, dtype=float).reshape(-1)
        self.V = np.asarray(V, dtype=float)
        n = self.d.size
        if self.V.shape != (n, n) or n % 2 != 0:
            raise ValueError("moments need a 2N vector and matching square matrix")

    @property
    def n_modes(self):
        return self.d.size // 2

    def validate(self, physical=False, tol=1e-6):
        if np.max(np.abs(self.V - self.V.T)) > 1e-10:
            raise ValueError("covariance matrix not symmetric")
        ev = np.linalg.eigvalsh(self.V)
        if ev.min() <= 0.0:
            raise ValueError("covariance matrix not positive definite")
        if physical and np.linalg.det(self.V) < 0.25**self.n_modes - tol:
            raise ValueError(
                f"det V = {np.linalg.det(self.V):.6f} violates the uncertainty bound"
            )
        return self


class WignerField:
    """Sampled Wigner function, optionally with analytic gradient fields."""

    def __init__(self, grid, values, grad_q=None, grad_p=None):
        values = np.asarray(values, dtype=float)
        if values.shape != grid.shape:
            raise ValueError("field values do not match the grid shape")
        self.grid = grid
        self.values = values
        self.grad_q = grad_q
        self.grad_p = grad_p

    def integral(self):
        return integrate(self.values, self.grid)

    @property
    def has_gradient(self):
        return self.grad_q is not None and self.grad_p is not None


#: per-chunk float budget for the Laguerre table (~190 MB)
_TABLE_CELLS = 24_000_000


def _suffix(a):
    # suffix sums give the superscript-(k+1) gradient coefficients
    s = np.cumsum(a[::-1])[::-1]
    return np.concatenate((s[1:], [0.0 + 0.0j]))


def _laguerre_table(k, u, m, out, work):
    """Rows L_0^(k)(u) .. L_{m-1}^(k)(u) of the three-term recurrence."""
    out[0] = 1.0
    if m > 1:
        np.subtract(1.0 + k, u, out=out[1])
    for j in range(2, m):
        np.subtract(2 * j - 1 + k, u, out=work)
        work *= out[j - 1]
        np.multiply(out[j - 2], j - 1 + k, out=out[j])
        np.subtract(work, out[j], out=out[j])
        out[j] *= 1.0 / j


def _synthesize(c, grid, with_grad):
    dim = c.shape[0]
    Q, P = grid.meshes()
    r2 = Q**2 + P**2
    w0 = np.exp(-r2) / np.pi
    u = (2.0 * r2).ravel()
    A = (np.sqrt(2.0) * (Q + 1j * P)).ravel()
    Qf, Pf = Q.ravel(), P.ravel()
    npts = u.size

    signs = (-1.0) ** np.arange(dim)
    F = np.zeros(npts, dtype=complex)
    Fq = np.zeros(npts, dtype=complex) if with_grad else None
    Fp = np.zeros(npts, dtype=complex) if with_grad else None

    # Diagonals may be skipped only by the size of the raw density entries:
    # dropping a band Delta changes W pointwise by at most (2/pi)||Delta||_tr
    # <= (2/pi) sum|entries|, so a relative 1e-16 band is harmless, whereas
    # the prefactored coefficients a_j say nothing (A^k L_n^(k) is unbounded
    # on the grid and can amplify a tiny coefficient arbitrarily).
    raw_tol = 1e-16 * max(np.max(np.abs(c)), 1e-300)
    Apow = np.ones(npts, dtype=complex)
    Aprev = None
    for k in range(dim):
        if k > 0:
            if with_grad:
                Aprev = Apow.copy()
            Apow *= A
        js = np.arange(dim - k)
        raw = max(np.max(np.abs(c[js, js + k])), np.max(np.abs(c[js + k, js])))
        if raw <= raw_tol:
            continue
        m = dim - k
        pref = signs[js] * np.exp(0.5 * (LOG_FACTORIAL[js] - LOG_FACTORIAL[js + k]))
        a = c[js, js + k] * pref
        rows = [a]
        if k > 0:
            b = c[js + k, js] * pref
            rows.append(b)
        if with_grad:
            rows.append(_suffix(a))
            if k > 0:
                rows.append(_suffix(b))
        R = np.vstack(rows)
        n_rows = R.shape[0]
        # one real GEMM per chunk combines every coefficient vector with the
        # shared Laguerre table (stacked real/imaginary parts)
        C = np.vstack((R.real, R.imag))
        chunk = max(4096, min(npts, _TABLE_CELLS // m))
        table = np.empty((m, min(chunk, npts)))
        work = np.empty(min(chunk, npts))
        for s in range(0, npts, chunk):
            e = min(npts, s + chunk)
            L = table[:, : e - s]
            _laguerre_table(k, u[s:e], m, L, work[: e - s])
            G = C @ L
            sums = G[:n_rows] + 1j * G[n_rows:]
            if k == 0:
                Su = sums[0]
                F[s:e] += Su
                if with_grad:
                    Tu = sums[1]
                    Fq[s:e] += -4.0 * Qf[s:e] * Tu
                    Fp[s:e] += -4.0 * Pf[s:e] * Tu
            else:
                Su, Sd = sums[0], sums[1]
                Ak = Apow[s:e]
                Akc = np.conj(Ak)
                F[s:e] += Ak * Su + Akc * Sd
                if with_grad:
                    Tu, Td = sums[2], sums[3]
                    radial = Ak * Tu + Akc * Td
                    side = Aprev[s:e] * Su
                    side_c = np.conj(Aprev[s:e]) * Sd
                    rt2k = np.sqrt(2.0) * k
                    Fq[s:e] += rt2k * (side + side_c) - 4.0 * Qf[s:e] * radial
                    Fp[s:e] += 1j * rt2k * (side - side_c) - 4.0 * Pf[s:e] * radial
    shape = grid.shape
    W = w0 * F.reshape(shape)
    out = [W]
    if with_grad:
        out.append(w0 * (Fq.reshape(shape) - 2.0 * Q * F.reshape(shape)))
        out.append(w0 * (Fp.reshape(shape) - 2.0 * P * F.reshape(shape)))
    return out


def _real_part(field, label):
    residue = np.max(np.abs(field.imag))
    if residue > IMAG_RESIDUE_HARD:
        raise ConsistencyError(
            f"{label} has imaginary residue {residue:.3e} > {IMAG_RESIDUE_HARD:.0e}; "
            "the input is effectively non-Hermitian"
        )
    return field.real


def default_grid(state, points=513, sigmas=5.5):
    """Auto-sized grid from the state's operator-trace moments."""
    mean, cov = state_moments(state)
    return PhaseSpaceGrid.for_moments(mean, cov, points=points, sigmas=sigmas)


def wigner_from_fock(rho, grid=None, points=513):
    """Synthesize the Wigner field of a Fock-basis state."""
    rho = as_density(rho)
    if grid is None:
        grid = default_grid(rho, points=points)
    (W,) = _synthesize(rho.entries, grid, with_grad=False)
    return WignerField(grid, _real_part(W, "Wigner field"))


def wigner_gradient(rho, grid=None, points=513, check=True, check_stride=8, h=1e-5):
    """Wigner field with analytic (dW/dq, dW/dp), finite-difference checked.

    The check re-synthesizes W on a coarse sub-lattice shifted by ±h and
    compares central differences with the analytic gradient; disagreement
    beyond 1e-5 relative where |W| > 1e-6 raises.  `check=False` skips it
    (the formula is unchanged; useful inside tight sweeps).
    """
    rho = as_density(rho)
    if grid is None:
        grid = default_grid(rho, points=points)
    W, gq, gp = _synthesize(rho.entries, grid, with_grad=True)
    field = WignerField(
        grid,
        _real_part(W, "Wigner field"),
        grad_q=_real_part(gq, "gradient (q)"),
        grad_p=_real_part(gp, "gradient (p)"),
    )
    if check:
        _check_gradient(rho, field, check_stride, h)
    return field


class _PointSet:
    """Tensor-product point set quacking like a grid for _synthesize."""

    def __init__(self, q, p):
        self.q = q
        self.p = p
        self.shape = (q.size, p.size)

    def meshes(self):
        return np.meshgrid(self.q, self.p, indexing="ij")


def _check_gradient(rho, field, stride, h):
    g = field.grid
    qs = g.q[::stride]
    ps = g.p[::stride]
    base_q = field.grad_q[::stride, ::stride]
    base_p = field.grad_p[::stride, ::stride]
    w_ref = field.values[::stride, ::stride]
    fd = {}
    for axis, delta in (("q", h), ("p", h)):
        hi_pts = _PointSet(qs + delta, ps) if axis == "q" else _PointSet(qs, ps + delta)
        lo_pts = _PointSet(qs - delta, ps) if axis == "q" else _PointSet(qs, ps - delta)
        (hi,) = _synthesize(rho.entries, hi_pts, with_grad=False)
        (lo,) = _synthesize(rho.entries, lo_pts, with_grad=False)
        fd[axis] = (hi.real - lo.real) / (2.0 * delta)
    mask = np.abs(w_ref) > 1e-6
    if not np.any(mask):
        return
    scale = np.maximum(np.abs(fd["q"][mask]), np.abs(fd["p"][mask]))
    scale = np.maximum(scale, 1e-6)
    dev = np.maximum(
        np.abs(base_q[mask] - fd["q"][mask]), np.abs(base_p[mask] - fd["p"][mask])
    )
    worst = np.max(dev / scale)
    if worst > 1e-5:
        raise ConsistencyError(
            f"analytic gradient deviates from finite differences by {worst:.3e} "
            "(relative) on the checked sub-lattice"
        )


def moments(field, physical=True):
    """Quadrature moments of a normalized field.

    ``physical=False`` skips the uncertainty-bound check, for fields that
    are legitimate densities but not state Wigner functions (for example
    rescaled ones).
    """
    w = grid_weights(field.grid)
    mass = float(np.sum(w * field.values))
    if abs(mass - 1.0) > 1e-4:
        raise NormalizationError(f"field mass {mass:.6f} deviates from 1 beyond 1e-4")
    Q, P = field.grid.meshes()
    ww = w * field.values
    dq = float(np.sum(ww * Q))
    dp = float(np.sum(ww * P))
    cq = Q - dq
    cp = P - dp
    vqq = float(np.sum(ww * cq * cq))
    vpp = float(np.sum(ww * cp * cp))
    vqp = float(np.sum(ww * cq * cp))
    m = GaussianMoments([dq, dp], [[vqq, vqp], [vqp, vpp]])
    return m.validate(physical=physical)


def gaussian_wigner(m, grid):
    """Gaussian Wigner field with the given moments (the Gaussian associate)."""
    det = np.linalg.det(m.V)
    if det <= 0.0:
        raise np.linalg.LinAlgError("covariance matrix is singular")
    inv = np.linalg.inv(m.V)
    Q, P = grid.meshes()
    x = Q - m.d[0]
    y = P - m.d[1]
    quad = inv[0, 0] * x * x + 2.0 * inv[0, 1] * x * y + inv[1, 1] * y * y
    return WignerField(grid, np.exp(-0.5 * quad) / (2.0 * np.pi * np.sqrt(det)))


def negative_volume(field):
    """|V_-| = (1/2) integral of (|W| - W), the mass of the negative part."""
    w = grid_weights(field.grid)
    mass = float(np.sum(w * field.values))
    if abs(mass - 1.0) > 1e-4:
        raise NormalizationError(f"field mass {mass:.6f} deviates from 1 beyond 1e-4")
    return 0.5 * float(np.sum(w * (np.abs(field.values) - field.values)))


# ----------------------------------------------------------------- export


def write_field_csv(field, path):
    """Rows (q, p, W[, dW/dq, dW/dp]) in row-major grid order."""
    g = field.grid
    cols = [field.values]
    header = "q,p,W"
    if field.has_gradient:
        cols += [field.grad_q, field.grad_p]
        header += ",dW_dq,dW_dp"
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for i, qv in enumerate(g.q):
            for j, pv in enumerate(g.p):
                row = [f"{qv:.12g}", f"{pv:.12g}"] + [f"{c[i, j]:.17g}" for c in cols]
                fh.write(",".join(row) + "\n")


def write_field_binary(field, path):
    """Compact dump: magic, counts, extents, row-major doubles."""
    g = field.grid
    has_grad = 1 if field.has_gradient else 0
    head = struct.pack(
        "<4sII4dB", _MAGIC, g.n_q, g.n_p, g.q_min, g.q_max, g.p_min, g.p_max, has_grad
    )
    with open(path, "wb") as fh:
        fh.write(head)
        fh.write(field.values.astype("<f8").tobytes())
        if has_grad:
            fh.write(field.grad_q.astype("<f8").tobytes())
            fh.write(field.grad_p.astype("<f8").tobytes())


def read_field_binary(path):
    head_size = struct.calcsize("<4sII4dB")
    with open(path, "rb") as fh:
        magic, n_q, n_p, q0, q1, p0, p1, has_grad = struct.unpack(
            "<4sII4dB", fh.read(head_size)
        )
        if magic != _MAGIC:
            raise ValueError("not a Wigner field dump (bad magic)")
        grid = PhaseSpaceGrid(q0, q1, p0, p1, n_q, n_p, min_points=2)
        count = n_q * n_p
        data = np.frombuffer(fh.read(8 * count), dtype="<f8").reshape(n_q, n_p)
        gq = gp = None
        if has_grad:
            gq = np.frombuffer(fh.read(8 * count), dtype="<f8").reshape(n_q, n_p)
            gp = np.frombuffer(fh.read(8 * count), dtype="<f8").reshape(n_q, n_p)
    return WignerField(grid, data.copy(), None if gq is None else gq.copy(), gp)
