"""Gaussian mollification, the heat equation on a periodic grid, and its pathologies.

Conventions: a field lives on the periodic grid x_j = -L + 2 L j / N and the
heat equation is 2 u_t = u_xx, so that time t is the variance of the Gaussian
kernel (t = sigma^2) and Fourier mode omega decays by exp(-omega^2 t / 2).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

#: Amplification beyond this counts as overflow of the backward solve.
OVERFLOW_FACTOR = 1e300


@dataclass(frozen=True)
class Field1D:
    samples: np.ndarray
    L: float = np.pi

    def __post_init__(self):
        v = np.asarray(self.samples, float)
        N = v.shape[-1]
        if N < 8 or N & (N - 1):
            raise ValueError(f"grid size must be a power of two >= 8, got {N}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field samples must be finite")
        if self.L <= 0:
            raise ValueError("domain half-width must be positive")
        object.__setattr__(self, "samples", v)

    @property
    def N(self):
        return self.samples.shape[-1]

    @property
    def dx(self):
        return 2 * self.L / self.N

    @property
    def x(self):
        return -self.L + self.dx * np.arange(self.N)

    @property
    def omega(self):
        """Angular wavenumbers omega_k = pi k / L in rfft order (k = 0..N/2)."""
        return np.pi * np.arange(self.N // 2 + 1) / self.L

    @classmethod
    def sample(cls, f, N=1024, L=np.pi):
        x = -L + 2 * L / N * np.arange(N)
        return cls(np.asarray(f(x), float), L)

    def with_samples(self, v):
        return Field1D(v, self.L)

    def coefficients(self):
        """Complex Fourier coefficients B_k for k = -N/2..N/2-1, and omega_k."""
        k = np.fft.fftshift(np.fft.fftfreq(self.N, 1.0 / self.N))
        # phase referenced to x = 0 rather than the left edge
        B = np.fft.fftshift(np.fft.fft(self.samples)) / self.N * np.exp(1j * np.pi * k)
        return B, np.pi * k / self.L

    def interpolate(self, xq):
        """Trigonometric interpolant of the samples at arbitrary points."""
        xq = np.asarray(xq, float)
        c = np.fft.rfft(self.samples) / self.N
        w = np.ones(c.size)
        w[1:] = 2.0
        if self.N % 2 == 0:
            w[-1] = 1.0
        phase = np.exp(1j * np.outer(xq + self.L, self.omega))
        return (phase @ (w * c)).real.reshape(xq.shape)

    def total_variation(self):
        v = self.samples
        return float(np.abs(np.diff(np.append(v, v[0]))).sum())


@dataclass(frozen=True)
class HeatField:
    base: Field1D
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, float)
        if np.any(np.diff(t) < 0) or np.any(t < 0):
            raise ValueError("times must be non-negative and ascending")
        object.__setattr__(self, "times", t)

    def to_csv(self, path):
        x = self.base.x
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "x", "u"])
            for t, row in zip(self.times, self.values):
                for xi, ui in zip(x, row):
                    w.writerow([repr(float(t)), repr(float(xi)), repr(float(ui))])


def gaussian_multiplier(field: Field1D, t):
    return np.exp(-0.5 * field.omega ** 2 * t)


def _direct(g: Field1D, t):
    if t == 0:
        return g.samples.copy()
    dx = g.dx
    reach = int(np.ceil(8 * np.sqrt(t) / dx))
    offs = np.arange(-reach, reach + 1)
    w = np.exp(-0.5 * (offs * dx) ** 2 / t)
    w /= w.sum()
    v = g.samples
    out = np.zeros_like(v)
    for o, wo in zip(offs, w):
        out += wo * np.roll(v, o)
    return out


def heat_forward(g: Field1D, t: float, method: str = "spectral") -> Field1D:
    """Solve 2 u_t = u_xx up to time t from u(., 0) = g on the periodic grid.

    ``spectral`` multiplies each Fourier mode by exp(-omega^2 t / 2);
    ``direct`` convolves with the sampled Gaussian of variance t truncated at
    8 standard deviations and renormalized to unit mass.
    """
    if t < 0:
        raise ValueError("heat_forward needs t >= 0; use backward_attempt to go back")
    if t == 0:
        return g.with_samples(g.samples.copy())
    if method == "spectral":
        v = np.fft.irfft(np.fft.rfft(g.samples) * gaussian_multiplier(g, t), n=g.N)
    elif method == "direct":
        v = _direct(g, t)
    else:
        raise ValueError(f"unknown method {method!r}")
    return g.with_samples(v)


def heat_field(g: Field1D, times, method: str = "spectral") -> HeatField:
    times = np.asarray(times, float)
    if method == "spectral":
        c = np.fft.rfft(g.samples)
        vals = np.fft.irfft(c[None, :] * np.exp(-0.5 * np.outer(times, g.omega ** 2)), n=g.N, axis=1)
    else:
        vals = np.stack([heat_forward(g, t, method).samples for t in times])
    vals[times == 0] = g.samples
    return HeatField(g, times, vals)


def mode_decay(g: Field1D, t: float, method: str = "spectral"):
    """Measured |B_k(t)| / |B_k(0)| for k = 0..N/2 (nan where B_k(0) = 0)."""
    c0 = np.abs(np.fft.rfft(g.samples))
    ct = np.abs(np.fft.rfft(heat_forward(g, t, method).samples))
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(c0 > 0, ct / c0, np.nan)


class BackwardOverflow(OverflowError):
    """The backward heat solve amplified some mode beyond floating range."""

    def __init__(self, k, omega, log_factor):
        self.k, self.omega, self.log_factor = k, omega, log_factor
        super().__init__(f"backward heat solve overflows at mode k={k} "
                         f"(omega={omega:g}): amplification exp({log_factor:.1f}) > 1e300")


@dataclass
class AmplificationReport:
    k: np.ndarray
    omega: np.ndarray
    factor: np.ndarray

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "omega", "factor"])
            for row in zip(self.k, self.omega, self.factor):
                w.writerow([int(row[0]), repr(float(row[1])), repr(float(row[2]))])


def backward_attempt(g_T: Field1D, t: float, k_max: int | None = None):
    """Try to run the heat equation backwards by t: 2 u_t + u_xx = 0.

    Modes with |k| <= k_max are multiplied by exp(+omega^2 t / 2), the rest
    are zeroed.  Raises BackwardOverflow at the first retained mode whose
    amplification exceeds 1e300.
    """
    if t <= 0:
        raise ValueError("backward time must be positive")
    N = g_T.N
    if k_max is None:
        k_max = N // 2
    k_max = min(int(k_max), N // 2)
    k = np.arange(N // 2 + 1)
    omega = g_T.omega
    log_fac = 0.5 * omega ** 2 * t
    keep = k <= k_max
    over = np.nonzero(keep & (log_fac > np.log(OVERFLOW_FACTOR)))[0]
    if over.size:
        i = over[0]
        raise BackwardOverflow(int(k[i]), float(omega[i]), float(log_fac[i]))
    mult = np.where(keep, np.exp(np.where(keep, log_fac, 0.0)), 0.0)
    v = np.fft.irfft(np.fft.rfft(g_T.samples) * mult, n=N)
    report = AmplificationReport(k[keep], omega[keep], mult[keep])
    return g_T.with_samples(v), report


def blowup_table(g_T: Field1D, t: float, cutoffs):
    """L2 norm of the backward solution for each cutoff, stopping at overflow.

    Returns a list of (k_max, norm) pairs and the overflow (or None).
    """
    rows = []
    for k_max in cutoffs:
        try:
            u, _ = backward_attempt(g_T, t, k_max)
        except BackwardOverflow as exc:
            return rows, exc
        rows.append((int(k_max), float(np.linalg.norm(u.samples) * np.sqrt(g_T.dx))))
    return rows, None


def heavy_tail_surrogate(eps, N=256, L=np.pi):
    """(eps/2) exp(-|x|/2), the small perturbation with no backward solution."""
    return Field1D.sample(lambda x: 0.5 * eps * np.exp(-0.5 * np.abs(x)), N, L)


def mollify_mc(f, mu, sigma, n, rng):
    """Monte Carlo estimate of E f(mu + sigma z), z ~ N(0, I), with its standard error.

    ``f`` must be vectorized: it receives an array of points of shape (n,)
    for scalar ``mu`` or (n, m) for vector ``mu`` and returns n values.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if n < 2:
        raise ValueError("need at least two samples")
    mu = np.asarray(mu, float)
    z = rng.standard_normal((n,) + mu.shape)
    pts = mu + sigma * z
    vals = np.asarray(f(pts), float).reshape(n)
    bad = ~np.isfinite(vals)
    if bad.any():
        i = int(np.argmax(bad))
        raise ValueError(f"f returned {vals[i]} at input {pts[i]!r}")
    return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(n))


def bump_weights(sigma, quad_points=257):
    """Quadrature nodes on [-sigma, sigma] and unit-mass bump weights.

    The normalizing constant is the reciprocal of the same quadrature sum,
    so the discrete kernel has mass one exactly.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if quad_points < 64:
        raise ValueError("use at least 64 quadrature points")
    y = np.linspace(-sigma, sigma, quad_points)
    inside = np.abs(y) < sigma
    # exponent is <= -1/sigma^2, so shift by its maximum before exponentiating;
    # the shift cancels in the normalization
    expo = np.full(y.shape, -np.inf)
    expo[inside] = 1.0 / (y[inside] ** 2 - sigma * sigma)
    eta = np.exp(expo - expo.max())
    return y, eta / eta.sum()


def bump_mollify(f, x, sigma, quad_points=257):
    """(f * eta_sigma)(x) with the compactly supported bump kernel."""
    y, w = bump_weights(sigma, quad_points)
    return float(np.dot(w, np.asarray(f(x - y), float)))


GAUSSIAN_BOUND = 1.0 / (16 * np.pi ** 2)


def uncertainty_product(phi: Field1D):
    """Spatial and frequency second moments of a unit-L2 function and their product.

    The Fourier transform uses exp(-2 pi i x xi); for a Gaussian the
    product attains 1/(16 pi^2).
    """
    v = phi.samples
    dx = phi.dx
    mass = np.sum(v * v) * dx
    if abs(mass - 1) > 1e-8:
        raise ValueError(f"phi must have unit L2 norm, got {mass!r}")
    if max(abs(v[0]), abs(v[-1])) >= 1e-10:
        raise ValueError("phi does not decay below 1e-10 at the domain edge")
    x = phi.x
    var_x = float(np.sum(x * x * v * v) * dx)
    N = phi.N
    xi = np.fft.fftfreq(N, d=dx)
    hat = dx * np.fft.fft(v)
    var_xi = float(np.sum(xi * xi * np.abs(hat) ** 2) / (N * dx))
    return var_x, var_xi, var_x * var_xi


def normalized(v, dx):
    v = np.asarray(v, float)
    return v / np.sqrt(np.sum(v * v) * dx)


def gaussian_test_function(N=4096, L=8.0, scale=1.0):
    """Unit-norm Gaussian exp(-pi x^2 / scale^2), the equality case."""
    x = -L + 2 * L * np.arange(N) / N
    return Field1D(normalized(np.exp(-np.pi * (x / scale) ** 2), 2 * L / N), L)


def random_test_function(rng, N=4096, L=8.0):
    """A smooth, rapidly decaying, unit-norm non-Gaussian function.

    Sum of 2-4 Gaussian bumps with random centres, widths, amplitudes and a
    random polynomial factor, so it is never a single Gaussian.
    """
    rng = np.random.default_rng(rng)
    x = -L + 2 * L * np.arange(N) / N
    v = np.zeros(N)
    for _ in range(rng.integers(2, 5)):
        c = rng.uniform(-1.5, 1.5)
        w = rng.uniform(0.3, 0.8)
        v += rng.uniform(0.5, 2.0) * rng.choice([-1.0, 1.0]) * np.exp(-0.5 * ((x - c) / w) ** 2)
    v *= 1 + rng.uniform(-0.5, 0.5) * x + rng.uniform(0, 0.3) * x * x
    return Field1D(normalized(v, 2 * L / N), L)


@dataclass
class MaxPrincipleReport:
    passed: bool
    boundary_gap: float
    worst_violation: float
    worst_at: tuple | None = field(default=None)

    def __bool__(self):
        return self.passed


def max_principle_probe(h: HeatField, boundary_tol=1e-8, local_tol=1e-10) -> MaxPrincipleReport:
    """Check the discrete strong maximum principle on a heat field.

    (a) the global maximum is attained on the parabolic boundary (t = 0 or
    the two edge columns); (b) no interior node at t > 0 exceeds all of its
    left, right and previous-time neighbours.
    """
    u = h.values
    boundary = max(u[0].max(), u[:, 0].max(), u[:, -1].max())
    gap = float(u.max() - boundary)
    centre = u[1:, 1:-1]
    neigh = np.maximum(np.maximum(u[1:, :-2], u[1:, 2:]), u[:-1, 1:-1])
    excess = centre - neigh
    j, i = np.unravel_index(np.argmax(excess), excess.shape)
    worst = float(excess[j, i])
    at = (float(h.times[j + 1]), float(h.base.x[i + 1]))
    passed = gap <= boundary_tol and worst <= local_tol
    return MaxPrincipleReport(passed, gap, worst, at)


def weierstrass(x, alpha=0.5, a=3, terms=25):
    """Truncated Weierstrass sum with Holder exponent alpha = -ln b / ln a."""
    b = a ** (-alpha)
    x = np.asarray(x, float)
    out = np.zeros_like(x)
    for n in range(terms):
        out += b ** n * np.cos(float(a) ** n * x)
    return out
