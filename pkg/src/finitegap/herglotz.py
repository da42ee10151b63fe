"""Divisors, the diagonal resolvent R00, and the polynomial splitting
into the half-line resolvent pair of a reflectionless Jacobi matrix.

The pair u = -1/r_plus and v = p0^2 r_minus is represented as
(sqrt(R) +- T) / (2 Pi) with a monic polynomial T of degree N+1 and
Pi(z) = prod (z - x_j) over the divisor points.
"""

from dataclasses import dataclass

import mpmath as mp
import numpy as np

from .errors import SolverError, ValidationError
from .spectral_set import GapSystem, sqrt_R, sqrt_R_gap, dos_density

_COND_LIMIT = 1e12


@dataclass(frozen=True)
class Divisor:
    """One marked point per gap with a sign: ((x_1, eps_1), ..., (x_N, eps_N))."""

    points: tuple

    def __post_init__(self):
        pts = tuple((float(x), int(e)) for x, e in self.points)
        for x, e in pts:
            if e not in (-1, 1):
                raise ValidationError(f"eps must be +1 or -1, got {e}")
        object.__setattr__(self, "points", pts)

    @property
    def xs(self):
        return tuple(x for x, _ in self.points)

    @property
    def eps(self):
        return tuple(e for _, e in self.points)

    def validate(self, gs):
        if len(self.points) != gs.n_gaps:
            raise ValidationError(
                f"divisor has {len(self.points)} points, gap system has {gs.n_gaps} gaps"
            )
        for j, (x, _) in enumerate(self.points, start=1):
            a, b = gs.gap(j)
            if not a <= x <= b:
                raise ValidationError(f"divisor point {x} outside closed gap {j} [{a}, {b}]")
        return self

    def normalized(self, gs):
        """Endpoint identification: (a_j, -1) = (a_j, +1), stored with eps = +1."""
        self.validate(gs)
        pts = []
        for j, (x, e) in enumerate(self.points, start=1):
            a, b = gs.gap(j)
            if x == a or x == b:
                e = 1
            pts.append((x, e))
        return Divisor(points=tuple(pts))

    def to_json(self):
        return {"divisor": [{"x": x, "eps": e} for x, e in self.points]}

    @classmethod
    def from_json(cls, doc):
        try:
            pts = tuple((p["x"], p["eps"]) for p in doc["divisor"])
        except (KeyError, TypeError):
            raise ValidationError("document must contain 'divisor': [{'x':..,'eps':..}]")
        return cls(points=pts)


@dataclass(frozen=True)
class HerglotzPair:
    """The split resolvent pair of a reflectionless matrix with divisor data.

    t_coeffs are ascending coefficients of the monic degree-N+1 polynomial T
    with T(x_j) = eps_j sqrt(R)(x_j) on the gaps and the two leading
    coefficients matched to the expansion of sqrt(R) at infinity.
    """

    gs: GapSystem
    divisor: Divisor
    t_coeffs: tuple
    p0sq: float
    q0: float

    def _pi(self, z):
        out = np.ones_like(np.asarray(z, dtype=complex))
        for x in self.divisor.xs:
            out = out * (np.asarray(z, dtype=complex) - x)
        return out

    def _t(self, z):
        return np.polynomial.polynomial.polyval(np.asarray(z, dtype=complex), self.t_coeffs)

    def u(self, z):
        """u = -1/r_plus; Herglotz, u(z) = z - q0 + O(1/z)."""
        return (sqrt_R(self.gs, z) + self._t(z)) / (2.0 * self._pi(z))

    def v(self, z):
        """v = p0^2 r_minus; Herglotz, z v(z) -> -p0^2."""
        return (sqrt_R(self.gs, z) - self._t(z)) / (2.0 * self._pi(z))

    def r_plus(self, z):
        return -1.0 / self.u(z)

    def r_minus(self, z):
        return self.v(z) / self.p0sq


def r00(gs, divisor, z):
    """Diagonal resolvent element restored from the divisor: -Pi(z)/sqrt(R)."""
    divisor.validate(gs)
    z = np.asarray(z, dtype=complex)
    num = np.ones_like(z)
    for x in divisor.xs:
        num = num * (z - x)
    out = -num / sqrt_R(gs, z)
    return out if out.shape else complex(out)


def _sqrtr_series_coeff(gs):
    """Coefficient of z^N in the expansion sqrt(R) = z^(N+1) + s1 z^N + ..."""
    return -0.5 * sum(gs.endpoints)


def _solve_t(gs, divisor):
    """Interpolation + asymptotics system for the lower coefficients of T."""
    n = gs.n_gaps
    s1 = _sqrtr_series_coeff(gs)
    if n == 0:
        return np.array([s1, 1.0])
    xs = np.asarray(divisor.xs)
    rhs = np.empty(n)
    mat = np.vander(xs, n, increasing=True)
    for j, (x, e) in enumerate(divisor.points):
        a, b = gs.gap(j + 1)
        sr = 0.0 if (x == a or x == b) else sqrt_R_gap(gs, j + 1, x)
        rhs[j] = e * sr - x ** (n + 1) - s1 * x ** n
    if np.linalg.cond(mat) > _COND_LIMIT:
        low = _solve_t_mp(gs, divisor, s1)
    else:
        low = np.linalg.solve(mat, rhs)
    return np.concatenate([low, [s1, 1.0]])


def _solve_t_mp(gs, divisor, s1, prec=240):
    """Extended-precision fallback for clustered divisor points."""
    n = gs.n_gaps
    with mp.workprec(prec):
        mat = mp.matrix(n, n)
        rhs = mp.matrix(n, 1)
        for j, (x, e) in enumerate(divisor.points):
            a, b = gs.gap(j + 1)
            xm = mp.mpf(x)
            for m in range(n):
                mat[j, m] = xm ** m
            if x == a or x == b:
                sr = mp.mpf(0)
            else:
                rprod = mp.mpf(1)
                for ep in gs.endpoints:
                    rprod *= abs(xm - ep)
                from .spectral_set import gap_branch_sign

                sr = gap_branch_sign(gs, j + 1) * mp.sqrt(rprod)
            rhs[j] = e * sr - xm ** (n + 1) - mp.mpf(s1) * xm ** n
        try:
            sol = mp.lu_solve(mat, rhs)
        except ZeroDivisionError:
            raise SolverError("divisor interpolation system is singular")
        return np.array([float(sol[m]) for m in range(n)])


def split_resolvents(gs, divisor):
    """Construct the resolvent pair (u, v) = ((sqrt R + T)/2Pi, (sqrt R - T)/2Pi).

    Extracts p0^2 from the z^(2N) coefficient of R - T^2 and q0 from the
    expansion of u at infinity.
    """
    divisor = divisor.normalized(gs)
    t_coeffs = _solve_t(gs, divisor)
    n = gs.n_gaps
    r_poly = np.polynomial.polynomial.polyfromroots(gs.endpoints)
    t_sq = np.polynomial.polynomial.polymul(t_coeffs, t_coeffs)
    diff = np.polynomial.polynomial.polysub(r_poly, t_sq)
    scale = max(1.0, np.max(np.abs(r_poly)))
    if len(diff) > 2 * n + 1 and np.max(np.abs(diff[2 * n + 1 :])) > 1e-8 * scale:
        raise SolverError(
            "degree reduction of R - T^2 failed", residual=np.max(np.abs(diff[2 * n + 1 :]))
        )
    lead = diff[2 * n] if len(diff) > 2 * n else 0.0
    p0sq = -lead / 4.0
    if p0sq <= 0.0:
        raise SolverError(f"nonpositive p0^2 = {p0sq}: invalid divisor data")
    q0 = -sum(divisor.xs) + 0.5 * sum(gs.endpoints)
    return HerglotzPair(gs=gs, divisor=divisor, t_coeffs=tuple(t_coeffs), p0sq=p0sq, q0=q0)


def reflectionless_residual(gs, pair, x):
    """|1/r_plus(x+i0) - conj(p0^2 r_minus(x+i0))| on the set E."""
    if not gs.on_set(x):
        raise ValidationError("reflectionless identity is a boundary relation on E")
    u = pair.u(complex(x))
    v = pair.v(complex(x))
    return abs(-u - np.conj(v))


def wronskian_residual(gs, pair, x, cp=None):
    """Wronskian/modulus identity residual at x in the interior of E.

    Checks the reflectionless boundary relation together with the density
    identity Im R00(x+i0)/pi = W(x) * dos(x), W = prod (x-x_j)/(x-c_j).
    """
    if cp is None:
        from .spectral_set import critical_points

        cp = critical_points(gs)
    refl = reflectionless_residual(gs, pair, x)
    w = 1.0
    for xj, cj in zip(pair.divisor.xs, cp.c):
        w *= (x - xj) / (x - cj)
    r = r00(gs, pair.divisor, x)
    mod = abs(np.imag(r) / np.pi - w * dos_density(gs, cp, x))
    return refl + mod
