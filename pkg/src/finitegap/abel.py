"""Character torus, Abel map of divisors, its inversion, reproducing-kernel
values at the origin, and the shift-invariant measure on the divisor torus.

The divisor space is a product of N circles (one per gap, endpoints
identified across the sign flip).  In the angle chart the Abel map has
rapidly converging Fourier series, which makes Newton inversion and
Monte-Carlo sampling over the torus cheap; the series are checked against
direct harmonic-measure quadrature.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import SolverError, ValidationError
from .herglotz import Divisor
from .quad import DEFAULT_QTOL
from .spectral_set import (
    _harmonic_poly_coeffs,
    _rest_abs,
    critical_points,
    gap_branch_sign,
    green,
    harmonic_measure,
)

_SERIES_NODES = 512
_TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class Character:
    """Point of the character torus [0,1)^N with mod-1 arithmetic."""

    alpha: tuple

    def __post_init__(self):
        object.__setattr__(self, "alpha", tuple(float(a) % 1.0 for a in self.alpha))

    def translate(self, shift):
        return Character(tuple(a + s for a, s in zip(self.alpha, shift)))

    def distance(self, other):
        return torus_distance(np.asarray(self.alpha), np.asarray(other.alpha))

    def to_json(self):
        return {"alpha": list(self.alpha)}

    @classmethod
    def from_json(cls, doc):
        try:
            return cls(alpha=tuple(doc["alpha"]))
        except (KeyError, TypeError):
            raise ValidationError("document must contain 'alpha': [...]")


@dataclass(frozen=True)
class DivisorChart:
    """Angle coordinates of a divisor: x_j = m_j + r_j cos(phi_j), eps_j = sign(sin phi_j)."""

    angles: tuple

    def __post_init__(self):
        object.__setattr__(self, "angles", tuple(float(p) % _TWO_PI for p in self.angles))


def torus_distance(a, b):
    """Max over coordinates of the circle distance on R/Z."""
    d = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)) % 1.0
    d = np.minimum(d, 1.0 - d)
    return float(np.max(d)) if d.size else 0.0


def _gap_geometry(gs):
    mids = np.array([0.5 * (a + b) for a, b in gs.gaps])
    halfs = np.array([0.5 * (b - a) for a, b in gs.gaps])
    return mids, halfs


def chart_from_divisor(gs, divisor):
    divisor = divisor.validate(gs)
    mids, halfs = _gap_geometry(gs)
    phis = []
    for k, (x, e) in enumerate(divisor.points):
        u = np.clip((x - mids[k]) / halfs[k], -1.0, 1.0)
        phi = float(np.arccos(u))
        if e < 0 and 0.0 < phi < np.pi:
            phi = _TWO_PI - phi
        phis.append(phi)
    return DivisorChart(angles=tuple(phis))


def divisor_from_chart(gs, chart):
    mids, halfs = _gap_geometry(gs)
    pts = []
    for k, phi in enumerate(chart.angles):
        x = mids[k] + halfs[k] * np.cos(phi)
        a, b = gs.gap(k + 1)
        x = min(max(x, a), b)
        e = 1 if np.sin(phi) >= 0.0 else -1
        pts.append((x, e))
    return Divisor(points=tuple(pts)).normalized(gs)


@lru_cache(maxsize=16)
def _abel_series(gs):
    """Fourier data of the Abel map in the angle chart.

    Coordinate j of the map is sum_k psi_jk(phi_k) with
    psi_jk(phi) = delta_jk (1/2 - phi/2pi) + sum_m b_m sin(m phi);
    the derivative d psi_jk / d phi has a pure cosine series a_m since it is
    even about both phi = 0 and phi = pi.
    """
    n = gs.n_gaps
    mids, halfs = _gap_geometry(gs)
    coeffs = _harmonic_poly_coeffs(gs)
    m_grid = _SERIES_NODES
    half_idx = np.arange(m_grid // 2 + 1)
    phi_half = half_idx * (_TWO_PI / m_grid)
    a_cos = np.zeros((n, n, m_grid // 2))
    for k in range(n):
        lo, hi = gs.gap(k + 1)
        sk = gap_branch_sign(gs, k + 1)
        x = mids[k] + halfs[k] * np.cos(phi_half)
        root = np.sqrt(_rest_abs(gs, (lo, hi), x))
        for j in range(n):
            pj = np.polynomial.Polynomial(coeffs[j])
            g_half = -0.5 * sk * pj(x) / root
            g = np.concatenate([g_half, g_half[-2:0:-1]])  # even extension
            fhat = np.fft.rfft(g) / m_grid
            a_cos[j, k] = 2.0 * fhat[1 : m_grid // 2 + 1].real
            mean_err = abs(fhat[0].real - (-1.0 if j == k else 0.0) / _TWO_PI)
            if mean_err > 1e-10:
                raise SolverError("Abel series normalization failed", residual=mean_err)
    m_idx = np.arange(1, m_grid // 2 + 1)
    b_sin = a_cos / m_idx[None, None, :]
    return m_idx, a_cos, b_sin


def abel_map(gs, cp, divisor, qtol=DEFAULT_QTOL):
    """Character of a divisor: alpha_j = (1/2) sum_k eps_k (omega_j(x_k) - omega_j(a_k)) mod 1.

    Direct harmonic-measure quadrature; the base divisor {(a_k, +1)} maps to 0.
    """
    divisor = divisor.normalized(gs)
    n = gs.n_gaps
    alpha = np.zeros(n)
    for j in range(1, n + 1):
        total = 0.0
        for k, (x, e) in enumerate(divisor.points, start=1):
            a, _ = gs.gap(k)
            total += 0.5 * e * (
                harmonic_measure(gs, cp, j, x, qtol) - harmonic_measure(gs, cp, j, a, qtol)
            )
        alpha[j - 1] = total
    return Character(alpha=tuple(alpha % 1.0))


def abel_map_angles(gs, phis):
    """Vectorized Abel map in the angle chart via the Fourier series.

    phis: array of shape (..., N); returns torus coordinates of the same shape.
    """
    n = gs.n_gaps
    phis = np.atleast_2d(np.asarray(phis, dtype=float)) % _TWO_PI
    m_idx, _, b_sin = _abel_series(gs)
    sines = np.sin(phis[..., None] * m_idx)  # (..., N, M)
    alpha = np.einsum("jkm,...km->...j", b_sin, sines)
    alpha += 0.5 - phis / _TWO_PI
    return alpha % 1.0


def abel_jacobian_angles(gs, phis):
    """Jacobian d alpha_j / d phi_k of the chart Abel map, shape (..., N, N)."""
    n = gs.n_gaps
    phis = np.atleast_2d(np.asarray(phis, dtype=float)) % _TWO_PI
    m_idx, a_cos, _ = _abel_series(gs)
    cosines = np.cos(phis[..., None] * m_idx)  # (..., N, M)
    jac = np.einsum("jkm,...km->...jk", a_cos, cosines)
    eye = np.eye(n) / _TWO_PI
    return jac - eye


def abel_jacobian(gs, cp, divisor):
    """Jacobian of the Abel map at a divisor, in the angle chart."""
    chart = chart_from_divisor(gs, divisor)
    return abel_jacobian_angles(gs, np.asarray(chart.angles))[0]


def _wrap_half(r):
    return (r + 0.5) % 1.0 - 0.5


def _coarse_grid(n, per_dim=8):
    axes = [np.arange(per_dim) * (_TWO_PI / per_dim) + 0.1] * n
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def _newton_invert(gs, targets, phis, iters=60, tol=1e-11):
    """Vectorized torus Newton for the chart Abel map; returns (phis, residuals)."""
    targets = np.atleast_2d(targets)
    phis = np.array(phis, dtype=float)
    for _ in range(iters):
        res = _wrap_half(abel_map_angles(gs, phis) - targets)
        if np.max(np.abs(res)) < tol:
            break
        jac = abel_jacobian_angles(gs, phis)
        try:
            step = np.linalg.solve(jac, res[..., None])[..., 0]
        except np.linalg.LinAlgError:
            jac = jac + 1e-10 * np.eye(gs.n_gaps)
            step = np.linalg.solve(jac, res[..., None])[..., 0]
        step = np.clip(step, -1.0, 1.0)
        phis = (phis - step) % _TWO_PI
    res = np.max(np.abs(_wrap_half(abel_map_angles(gs, phis) - targets)), axis=-1)
    return phis, res


def invert_abel(gs, cp, alpha, guess=None):
    """Divisor with the given character, by Newton on the torus in the angle chart.

    Falls back to restarts from a coarse grid of chart angles; raises with the
    best residual on non-convergence.
    """
    n = gs.n_gaps
    target = np.asarray(alpha.alpha if isinstance(alpha, Character) else alpha, dtype=float)
    if n == 0:
        return Divisor(())
    starts = []
    if guess is not None:
        starts.append(np.asarray(chart_from_divisor(gs, guess).angles))
    grid = _coarse_grid(n)
    vals = abel_map_angles(gs, grid)
    d = np.abs(_wrap_half(vals - target)).max(axis=-1)
    order = np.argsort(d)
    starts.extend(grid[i] for i in order[: min(6, len(order))])
    best = None
    for start in starts:
        phis, res = _newton_invert(gs, target[None, :], start[None, :])
        r = float(res[0])
        if best is None or r < best[0]:
            best = (r, phis[0])
        if r <= 1e-10:
            return divisor_from_chart(gs, DivisorChart(angles=tuple(phis[0])))
    raise SolverError("Abel inversion did not converge", residual=best[0], iterate=best[1])


def shift_covariance_residual(gs, cp, divisor, prec=None, steps=1, qtol=DEFAULT_QTOL):
    """Torus distance between the Abel image of the divisor advanced by the
    coefficient stripping iteration and the frequency translate
    alpha(D) - steps * omega."""
    from .jacobi_cf import DEFAULT_PREC, cf_step, initial_state
    from .spectral_set import frequencies

    if prec is None:
        prec = DEFAULT_PREC
    omega = frequencies(gs, cp, qtol)
    state = initial_state(gs, divisor, prec=prec)
    for _ in range(steps):
        _, _, state = cf_step(state)
    a0 = abel_map(gs, cp, divisor, qtol)
    a1 = abel_map(gs, cp, state.divisor, qtol)
    expected = a0.translate(-steps * omega)
    return a1.distance(expected)


def kernel_at_origin(gs, cp, divisor, qtol=DEFAULT_QTOL):
    """Reproducing-kernel value at the origin for the divisor's character:
    exp(-sum_j [h_j + eps_j G(x_j)]); lies in [Delta(0)^2, 1]."""
    divisor = divisor.normalized(gs)
    expo = 0.0
    for (x, e), h in zip(divisor.points, cp.h):
        expo += h + e * green(gs, cp, x, qtol)
    return float(np.exp(-expo))


def widom_delta(cp):
    """Delta(0) = exp(-sum_j h_j) for a finite-gap set."""
    return float(np.exp(-sum(cp.h)))


# ---------------------------------------------------------------------------
# shift-invariant measure on the divisor torus


def _parse_box(gs, box):
    entries = []
    seen = set()
    for item in box:
        j, a, b, e = int(item["gap"]), float(item["a"]), float(item["b"]), int(item["eps"])
        lo, hi = gs.gap(j)
        if not lo <= a < b <= hi:
            raise ValidationError(f"box interval ({a}, {b}) not inside gap {j}")
        if e not in (-1, 1):
            raise ValidationError("box eps must be +1 or -1")
        if j in seen:
            raise ValidationError("one arc per gap; pass unions as separate boxes")
        seen.add(j)
        entries.append((j, a, b, e))
    return entries


def measure_box(gs, cp, box, qtol=DEFAULT_QTOL):
    """Invariant measure of a product of gap arcs:
    2^(-l) |det[ omega_{j_r}(b_s) - omega_{j_r}(a_s) ]|."""
    entries = _parse_box(gs, box)
    if not entries:
        return 1.0
    ell = len(entries)
    mat = np.empty((ell, ell))
    for r, (jr, _, _, _) in enumerate(entries):
        for s, (_, a, b, _) in enumerate(entries):
            mat[r, s] = harmonic_measure(gs, cp, jr, b, qtol) - harmonic_measure(gs, cp, jr, a, qtol)
    return float(2.0 ** (-ell) * abs(np.linalg.det(mat)))


def measure_mc(gs, cp, box, samples=100_000, seed=0, chunk=4096):
    """Monte-Carlo oracle for measure_box: sample characters uniformly,
    invert the Abel map, count divisors landing in the box.

    Returns (estimate, stderr).
    """
    entries = _parse_box(gs, box)
    n = gs.n_gaps
    if n == 0 or not entries:
        return 1.0, 0.0
    rng = np.random.Generator(np.random.Philox(seed))
    mids, halfs = _gap_geometry(gs)
    grid = _coarse_grid(n)
    grid_vals = abel_map_angles(gs, grid)
    hits = 0
    for start in range(0, samples, chunk):
        count = min(chunk, samples - start)
        alpha = rng.random((count, n))
        d = np.abs(_wrap_half(grid_vals[None, :, :] - alpha[:, None, :])).max(axis=-1)
        phis0 = grid[np.argmin(d, axis=1)]
        phis, res = _newton_invert(gs, alpha, phis0)
        bad = res > 1e-8
        if np.any(bad):
            # retry strays one by one with full restarts
            for i in np.nonzero(bad)[0]:
                div = invert_abel(gs, cp, Character(tuple(alpha[i])))
                phis[i] = np.asarray(chart_from_divisor(gs, div).angles)
        xs = mids + halfs * np.cos(phis)
        eps = np.where(np.sin(phis) >= 0.0, 1, -1)
        inside = np.ones(count, dtype=bool)
        for j, a, b, e in entries:
            col = j - 1
            inside &= (xs[:, col] >= a) & (xs[:, col] <= b) & (eps[:, col] == e)
        hits += int(np.count_nonzero(inside))
    p = hits / samples
    stderr = float(np.sqrt(max(p * (1.0 - p), 1e-300) / samples))
    return p, stderr
