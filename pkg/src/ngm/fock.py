"""Truncated Fock-basis states and operators.

States live in a hard-truncated space of dimension dim = cutoff + 1.
Constructors that truncate a physical state check the dropped weight and
renormalize; the checks raise :class:`~ngm.errors.CutoffError` when the
cutoff is genuinely too small rather than papering over it.

Ladder convention: ⟨n-1|â|n⟩ = √n.  Quadratures q = (â + â†)/√2,
p = (â - â†)/(i√2), so a coherent state |α⟩ sits at (√2 Re α, √2 Im α).
"""

import json

import numpy as np
from scipy.linalg import expm

from .errors import CutoffError, NormalizationError
from .numerics import laguerre_sequence

__all__ = [
    "FockVector",
    "FockDensityMatrix",
    "as_density",
    "annihilation_matrix",
    "coherent",
    "cat",
    "displaced_squeezed",
    "gkp_logical",
    "qubit_rotation",
    "haar_unitary",
    "random_qudit",
    "apply_qubit_state",
    "displace_state",
    "squeeze_state",
    "state_moments",
    "fidelity",
    "trim_density",
    "state_to_json",
    "state_from_json",
    "save_state",
    "load_state",
]


class FockVector:
    """Pure state as a complex amplitude vector over |0⟩..|dim-1⟩."""

    def __init__(self, amplitudes, normalize=False):
        amp = np.asarray(amplitudes, dtype=complex).ravel()
        if amp.size < 1:
            raise ValueError("empty amplitude vector")
        if normalize:
            norm = np.linalg.norm(amp)
            if norm == 0.0:
                raise ValueError("cannot normalize the zero vector")
            amp = amp / norm
        self.amplitudes = amp

    @property
    def dim(self):
        return self.amplitudes.size

    def validate(self, tol=1e-10):
        norm = np.linalg.norm(self.amplitudes)
        if abs(norm - 1.0) > tol:
            raise NormalizationError(f"state norm {norm} deviates from 1 beyond {tol}")
        return self

    def to_density(self):
        return FockDensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))

    def overlap(self, other):
        n = max(self.dim, other.dim)
        a = np.zeros(n, dtype=complex)
        b = np.zeros(n, dtype=complex)
        a[: self.dim] = self.amplitudes
        b[: other.dim] = other.amplitudes
        return np.vdot(a, b)


class FockDensityMatrix:
    """Mixed state c_{nm} = ⟨n|ρ|m⟩ on the truncated Fock basis."""

    def __init__(self, entries, normalize=False):
        mat = np.asarray(entries, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] < 1:
            raise ValueError("density matrix must be square and non-empty")
        if normalize:
            tr = np.trace(mat).real
            if tr <= 0.0:
                raise ValueError("cannot normalize: non-positive trace")
            mat = mat / tr
        self.entries = mat

    @property
    def dim(self):
        return self.entries.shape[0]

    def validate(self, herm_tol=1e-12, trace_tol=1e-10, psd_tol=1e-9):
        m = self.entries
        herm = np.max(np.abs(m - m.conj().T))
        if herm > herm_tol:
            raise NormalizationError(f"Hermiticity residue {herm:.2e} > {herm_tol:.0e}")
        tr = np.trace(m).real
        if abs(tr - 1.0) > trace_tol:
            raise NormalizationError(f"trace {tr} deviates from 1 beyond {trace_tol:.0e}")
        lo = np.linalg.eigvalsh(0.5 * (m + m.conj().T)).min()
        if lo < -psd_tol:
            raise NormalizationError(f"minimum eigenvalue {lo:.2e} < -{psd_tol:.0e}")
        return self

    def expectation(self, op):
        return np.trace(op @ self.entries)

    def embed(self, dim):
        """Zero-pad to a larger Fock space."""
        if dim < self.dim:
            raise ValueError("embed target smaller than current dimension")
        out = np.zeros((dim, dim), dtype=complex)
        out[: self.dim, : self.dim] = self.entries
        return FockDensityMatrix(out)


def as_density(state):
    """Coerce FockVector / FockDensityMatrix / raw array to a density matrix."""
    if isinstance(state, FockDensityMatrix):
        return state
    if isinstance(state, FockVector):
        return state.to_density()
    arr = np.asarray(state, dtype=complex)
    if arr.ndim == 1:
        return FockVector(arr).to_density()
    return FockDensityMatrix(arr)


def annihilation_matrix(dim):
    """Matrix of â with ⟨n-1|â|n⟩ = √n."""
    dim = int(dim)
    if dim < 2:
        raise ValueError("annihilation_matrix needs dim >= 2")
    return np.diag(np.sqrt(np.arange(1.0, dim)), k=1).astype(complex)


def _coherent_amplitudes(alpha, n_c):
    # log-space magnitudes keep large |alpha| finite
    n = np.arange(n_c + 1)
    lf = np.concatenate(([0.0], np.cumsum(np.log(np.arange(1.0, n_c + 1)))))
    a = abs(alpha)
    if a == 0.0:
        amp = np.zeros(n_c + 1, dtype=complex)
        amp[0] = 1.0
        return amp
    logmag = n * np.log(a) - 0.5 * lf - 0.5 * a**2
    phase = np.exp(1j * n * np.angle(alpha))
    return np.exp(logmag) * phase


def coherent(alpha, n_c=40):
    """Truncated coherent state |α⟩; raises when the cutoff leaks > 1e-8."""
    n_c = int(n_c)
    if n_c < 1:
        raise ValueError("coherent needs n_c >= 1")
    amp = _coherent_amplitudes(alpha, n_c)
    leak = 1.0 - float(np.sum(np.abs(amp) ** 2))
    if leak > 1e-8:
        raise CutoffError(f"coherent truncation leakage {leak:.3e} > 1e-8 at n_c={n_c}")
    return FockVector(amp, normalize=True)


def cat(alpha, parity="even", n_c=40):
    """Normalized (|α⟩ ± |−α⟩) superposition, α real.

    Even parity takes the + sign (vacuum at α = 0); the odd cat tends to
    |1⟩ as α → 0 and is undefined at exactly 0.
    """
    if parity not in ("even", "odd"):
        raise ValueError("parity must be 'even' or 'odd'")
    alpha = float(alpha)
    sign = 1.0 if parity == "even" else -1.0
    if alpha == 0.0 and parity == "odd":
        raise ValueError("odd cat is singular at alpha = 0; use a small alpha")
    plus = _coherent_amplitudes(alpha, n_c)
    leak = 1.0 - float(np.sum(np.abs(plus) ** 2))
    if leak > 1e-8:
        raise CutoffError(f"cat truncation leakage {leak:.3e} > 1e-8 at n_c={n_c}")
    amp = plus + sign * _coherent_amplitudes(-alpha, n_c)
    # parity selection is exact here: odd (even) Fock entries cancel to 0.0
    return FockVector(amp, normalize=True)


def _squeezed_vacuum_amplitudes(xi, n_max):
    """S(ξ)|0⟩ with S = exp((ξ/2)(â² − â†²)): closed-form even amplitudes."""
    amp = np.zeros(n_max + 1)
    t = np.tanh(xi)
    amp[0] = 1.0 / np.sqrt(np.cosh(xi))
    # c_{2m} = c_0 (-t)^m sqrt((2m)!)/(2^m m!), stable via the ratio
    # c_{2m}/c_{2m-2} = -t sqrt((2m-1)(2m)) / (2m)
    c = amp[0]
    for m in range(1, n_max // 2 + 1):
        c *= -t * np.sqrt((2 * m - 1) * (2 * m)) / (2 * m)
        amp[2 * m] = c
    return amp


def _displacement_slab(alpha, rows, cols):
    """⟨m|D(α)|n⟩ for m < rows, n < cols, via closed-form Laguerre elements.

    Exact projection of the displacement onto a truncated basis; safe for
    |α|² far above the row cutoff, where a truncated-space exponential
    would silently rotate weight back into the kept levels.
    """
    a2 = abs(alpha) ** 2
    n_top = rows + cols
    lf = np.concatenate(([0.0], np.cumsum(np.log(np.arange(1.0, n_top + 1.0)))))
    out = np.zeros((rows, cols), dtype=complex)
    if a2 == 0.0:
        nd = min(rows, cols)
        out[:nd, :nd] = np.eye(nd)
        return out
    loga = np.log(abs(alpha))
    up = -np.conj(alpha) / abs(alpha)  # unit-modulus phase factors only:
    dn = alpha / abs(alpha)            # magnitudes live in the log prefactor
    for k in range(1 - rows, cols):
        # diagonal n - m = k; Laguerre degree runs along min(m, n)
        if k >= 0:
            ms = np.arange(0, min(rows, cols - k))
            ns = ms + k
            phase = up**k
        else:
            ns = np.arange(0, min(cols, rows + k))
            ms = ns - k
            phase = dn ** (-k)
        if ms.size == 0:
            continue
        deg = int(np.minimum(ms, ns)[-1])
        lag = np.fromiter(laguerre_sequence(abs(k), a2, deg), dtype=float, count=deg + 1)
        low = np.minimum(ms, ns)
        high = np.maximum(ms, ns)
        pref = np.exp(0.5 * (lf[low] - lf[high]) + abs(k) * loga - 0.5 * a2)
        out[ms, ns] = phase * pref * lag[low]
    return out


def _displaced_squeezed_projection(alpha, xi, n_c):
    """Amplitudes ⟨n|D(α)S(ξ)|0⟩ for n ≤ n_c (un-renormalized projection)."""
    if xi == 0.0:
        src = np.zeros(1)
        src[0] = 1.0
    else:
        # extend squeezed-vacuum support until the dropped tail is negligible
        n_src = 64
        while True:
            src = _squeezed_vacuum_amplitudes(xi, n_src)
            if np.sum(src[-8:] ** 2) < 1e-28 or n_src >= 4096:
                break
            n_src *= 2
    slab = _displacement_slab(alpha, n_c + 1, src.size)
    return slab @ src.astype(complex)


def displaced_squeezed(alpha, xi, n_c=40, headroom=32):
    """D(α)S(ξ)|0⟩ by truncated matrix exponentials, then cut to n_c.

    Positive ξ squeezes Var q below the vacuum 1/2.  The exponentials act
    in a padded space so the dropped tail is a real norm loss; more than
    1e-6 of it raises.
    """
    n_c = int(n_c)
    if n_c < 1:
        raise ValueError("displaced_squeezed needs n_c >= 1")
    xi = float(xi)
    dim = n_c + 1 + int(headroom)
    if dim > 2048:
        raise CutoffError("displaced_squeezed build space exceeded 2048 levels")
    a = annihilation_matrix(dim)
    ad = a.conj().T
    psi = np.zeros(dim, dtype=complex)
    psi[0] = 1.0
    if xi != 0.0:
        psi = expm((xi / 2.0) * (a @ a - ad @ ad)) @ psi
    if alpha != 0:
        psi = expm(alpha * ad - np.conj(alpha) * a) @ psi
    # top of the padded space must be quiet or the build space was too small
    top = float(np.sum(np.abs(psi[-8:]) ** 2))
    if top > 1e-12:
        return displaced_squeezed(alpha, xi, n_c, headroom=2 * headroom + 32)
    kept = psi[: n_c + 1]
    norm = np.linalg.norm(kept)
    if norm < 1.0 - 1e-6:
        raise CutoffError(
            f"displaced_squeezed keeps norm {norm:.8f} < 1 - 1e-6 at n_c={n_c}"
        )
    return FockVector(kept, normalize=True)


def gkp_logical(logical, delta, t_max=None, n_c=60):
    """Finite-energy square-lattice GKP logical state.

    Weighted sum of squeezed peaks displaced along q: logical 0 over even
    lattice sites 2t√π, logical 1 over odd sites (2t+1)√π, envelope weight
    exp(-(π/2)Δ²s²) at site s, squeezing ξ = −ln Δ.  When t_max is omitted
    it grows until the first dropped envelope weight is below 1e-10.
    """
    if logical not in (0, 1):
        raise ValueError("logical must be 0 or 1")
    delta = float(delta)
    if delta <= 0:
        raise ValueError("delta must be positive")
    xi = -np.log(delta)
    if t_max is None:
        t_max = 1
        while np.exp(-(np.pi / 2) * delta**2 * (2 * t_max) ** 2) >= 1e-10 and t_max < 40:
            t_max += 1
    t_max = int(t_max)
    if t_max < 1:
        raise ValueError("t_max must be >= 1")
    sites = (
        [2 * t for t in range(-t_max, t_max + 1)]
        if logical == 0
        else [2 * t + 1 for t in range(-t_max, t_max)]
    )
    amp = np.zeros(n_c + 1, dtype=complex)
    for s in sites:
        w = np.exp(-(np.pi / 2) * delta**2 * s**2)
        amp += w * _displaced_squeezed_projection(s * np.sqrt(np.pi), xi, n_c)
    return FockVector(amp, normalize=True)


def qubit_rotation(theta, phi):
    """Rotation [[cos θ/2, e^{iφ} sin θ/2], [e^{-iφ} sin θ/2, -cos θ/2]]."""
    c, s = np.cos(theta / 2.0), np.sin(theta / 2.0)
    return np.array(
        [[c, np.exp(1j * phi) * s], [np.exp(-1j * phi) * s, -c]], dtype=complex
    )


def haar_unitary(d, seed):
    """Haar-random unitary: QR of a complex Ginibre matrix, phases fixed."""
    d = int(d)
    if d < 1:
        raise ValueError("haar_unitary needs d >= 1")
    rng = np.random.default_rng(seed)
    return _haar_from_rng(d, rng)


def _haar_from_rng(d, rng):
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, r = np.linalg.qr(z)
    # without this phase correction QR is not Haar-distributed
    ph = np.diagonal(r) / np.abs(np.diagonal(r))
    return q * ph


def _simplex_point(d, rng):
    # sorted uniform spacings give the flat Dirichlet
    cuts = np.sort(rng.uniform(size=d - 1))
    return np.diff(np.concatenate(([0.0], cuts, [1.0])))


def random_qudit(d, logical_fock_levels=None, seed=0):
    """Random d-level state embedded at the given Fock levels.

    Diagonal drawn uniformly on the probability simplex, conjugated by a
    Haar unitary from the same seeded stream.
    """
    d = int(d)
    if d < 1:
        raise ValueError("random_qudit needs d >= 1")
    levels = list(range(d)) if logical_fock_levels is None else [int(x) for x in logical_fock_levels]
    if len(levels) != d or len(set(levels)) != d:
        raise ValueError("need d distinct logical Fock levels")
    rng = np.random.default_rng(seed)
    if d == 1:
        small = np.ones((1, 1), dtype=complex)
    else:
        u = _haar_from_rng(d, rng)
        small = u @ np.diag(_simplex_point(d, rng)).astype(complex) @ u.conj().T
    return _embed_levels(small, levels)


def _embed_levels(small, levels):
    dim = max(levels) + 1
    out = np.zeros((dim, dim), dtype=complex)
    idx = np.asarray(levels)
    out[np.ix_(idx, idx)] = small
    return FockDensityMatrix(out)


def apply_qubit_state(r, theta, phi, logical_levels=(0, 1)):
    """U(θ,φ) [r|0̄⟩⟨0̄| + (1−r)|1̄⟩⟨1̄|] U†, embedded at the logical levels."""
    r = float(r)
    if not 0.0 <= r <= 1.0:
        raise ValueError("mixing parameter r must lie in [0, 1]")
    levels = [int(x) for x in logical_levels]
    if len(levels) != 2 or levels[0] == levels[1]:
        raise ValueError("logical_levels must be two distinct Fock levels")
    u = qubit_rotation(theta, phi)
    small = u @ np.diag([r, 1.0 - r]).astype(complex) @ u.conj().T
    return _embed_levels(small, levels)


def _gaussian_unitary(generator_dim, alpha=None, xi=None):
    a = annihilation_matrix(generator_dim)
    ad = a.conj().T
    u = np.eye(generator_dim, dtype=complex)
    if xi:
        u = expm((xi / 2.0) * (a @ a - ad @ ad)) @ u
    if alpha:
        u = expm(alpha * ad - np.conj(alpha) * a) @ u
    return u


def _apply_unitary(state, u, trace_tol=1e-6):
    rho = as_density(state)
    dim = u.shape[0]
    big = rho.embed(dim).entries
    out = u @ big @ u.conj().T
    tr = np.trace(out).real
    if tr < 1.0 - trace_tol:
        raise CutoffError(f"unitary application lost trace ({tr:.8f}); raise headroom")
    return FockDensityMatrix(out / tr)


def displace_state(state, alpha, headroom=24):
    """D(α) ρ D(α)† in a padded Fock space, renormalized."""
    rho = as_density(state)
    u = _gaussian_unitary(rho.dim + int(headroom), alpha=alpha)
    return _apply_unitary(rho, u)


def squeeze_state(state, xi, headroom=24):
    """S(ξ) ρ S(ξ)† in a padded Fock space, renormalized."""
    rho = as_density(state)
    u = _gaussian_unitary(rho.dim + int(headroom), xi=xi)
    return _apply_unitary(rho, u)


def state_moments(state):
    """Quadrature mean and covariance by operator traces.

    Independent of any phase-space grid: d_i = Tr(ρ r̂_i), V_ij from the
    symmetrized second moments.  Returns (mean[2], cov[2,2]).
    """
    base = as_density(state)
    # two levels of headroom make Tr(rho q^2) exact for the truncated state
    dim = base.dim + 2
    rho = base.embed(dim).entries
    a = annihilation_matrix(dim)
    q = (a + a.conj().T) / np.sqrt(2.0)
    p = (a - a.conj().T) / (1j * np.sqrt(2.0))
    dq = np.trace(q @ rho).real
    dp = np.trace(p @ rho).real
    vqq = np.trace(q @ q @ rho).real - dq**2
    vpp = np.trace(p @ p @ rho).real - dp**2
    vqp = 0.5 * np.trace((q @ p + p @ q) @ rho).real - dq * dp
    return np.array([dq, dp]), np.array([[vqq, vqp], [vqp, vpp]])


def fidelity(a, b):
    """|⟨a|b⟩|² for pure states (vectors padded to a common dimension)."""
    return abs(a.overlap(b)) ** 2


def trim_density(rho, tol=1e-12):
    """Drop trailing Fock levels whose cumulative population is below tol."""
    rho = as_density(rho)
    pop = np.real(np.diag(rho.entries))
    tail = np.cumsum(pop[::-1])[::-1]
    keep = rho.dim
    while keep > 1 and tail[keep - 1] < tol:
        keep -= 1
    if keep == rho.dim:
        return rho
    return FockDensityMatrix(rho.entries[:keep, :keep], normalize=True)


# ------------------------------------------------------------ serialization


def state_to_json(state):
    """JSON document {dim, re, im}; nested lists for density matrices."""
    if isinstance(state, FockVector):
        return {
            "dim": state.dim,
            "re": state.amplitudes.real.tolist(),
            "im": state.amplitudes.imag.tolist(),
        }
    rho = as_density(state)
    return {
        "dim": rho.dim,
        "re": rho.entries.real.tolist(),
        "im": rho.entries.imag.tolist(),
    }


def state_from_json(doc):
    """Inverse of state_to_json; accepts vector (1-d) or matrix (2-d) docs."""
    re = np.asarray(doc["re"], dtype=float)
    im = np.asarray(doc["im"], dtype=float)
    if re.shape != im.shape:
        raise ValueError("re/im shapes differ")
    if int(doc["dim"]) != re.shape[0]:
        raise ValueError("dim field does not match array shape")
    data = re + 1j * im
    if data.ndim == 1:
        return FockVector(data).validate()
    return FockDensityMatrix(data).validate()


def save_state(state, path):
    with open(path, "w") as fh:
        json.dump(state_to_json(state), fh)


def load_state(path):
    with open(path) as fh:
        return state_from_json(json.load(fh))
