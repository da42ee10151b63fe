"""Comb-domain parameters of a finite-gap set: frequencies and slit heights,
the forward map from gap systems, the inverse parameter problem, and the
finite-band truncation diagnostics.

The comb encodes E through the conformal map of the upper half-plane onto a
half-strip with vertical slits: slit abscissas are -pi omega_k and slit
heights are the Green's function values h_k at its critical points.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .errors import SolverError, ValidationError
from .quad import DEFAULT_QTOL
from .spectral_set import GapSystem, critical_points, frequencies, green


@dataclass(frozen=True)
class CombData:
    """Teeth (omega_j, h_j) of a comb domain, plus a declared tail bound.

    A finite comb has tail_bound 0; an infinite comb is represented by its
    leading teeth and a bound on the sum of the remaining heights.  The
    Widom flag requires the total height sum to be finite.
    """

    teeth: tuple
    tail_bound: float = 0.0

    def __post_init__(self):
        teeth = tuple((float(o), float(h)) for o, h in self.teeth)
        for o, h in teeth:
            if not 0.0 < o < 1.0:
                raise ValidationError(f"frequency {o} outside (0, 1)")
            if h <= 0.0:
                raise ValidationError(f"tooth height {h} must be positive")
        omegas = [o for o, _ in teeth]
        if len(set(omegas)) != len(omegas):
            raise ValidationError("tooth frequencies must be pairwise distinct")
        if self.tail_bound < 0.0:
            raise ValidationError("tail bound must be nonnegative")
        object.__setattr__(self, "teeth", teeth)

    @property
    def omegas(self):
        return tuple(o for o, _ in self.teeth)

    @property
    def heights(self):
        return tuple(h for _, h in self.teeth)

    @property
    def height_sum(self):
        return sum(self.heights) + self.tail_bound

    @property
    def is_widom(self):
        return np.isfinite(self.height_sum)

    @property
    def delta0(self):
        """Widom function value Delta(0) = exp(-sum h_j) (lower estimate if a tail is declared)."""
        return float(np.exp(-self.height_sum))

    def rational_relation_report(self, max_coeff=5):
        """Integer relations sum n_k omega_k = integer with |n_k| <= max_coeff.

        Reported only; independence over the rationals is not enforced.
        """
        omegas = np.asarray(self.omegas)
        found = []
        if omegas.size == 0 or omegas.size > 6:
            return found
        ranges = [np.arange(-max_coeff, max_coeff + 1)] * omegas.size
        mesh = np.stack([m.ravel() for m in np.meshgrid(*ranges, indexing="ij")], axis=-1)
        vals = mesh @ omegas
        near = np.abs(vals - np.round(vals)) < 1e-9
        for row in mesh[near]:
            if np.any(row):
                found.append(tuple(int(v) for v in row))
        return found

    def to_json(self):
        return {
            "teeth": [{"omega": o, "h": h} for o, h in self.teeth],
            "tail_bound": self.tail_bound,
        }

    @classmethod
    def from_json(cls, doc):
        try:
            teeth = tuple((t["omega"], t["h"]) for t in doc["teeth"])
        except (KeyError, TypeError):
            raise ValidationError("document must contain 'teeth': [{'omega':..,'h':..}]")
        return cls(teeth=teeth, tail_bound=float(doc.get("tail_bound", 0.0)))


def comb_from_gaps(gs, cp=None, qtol=DEFAULT_QTOL):
    """Forward parameter map: omega_j = frequency of gap j, h_j = G(c_j)."""
    if cp is None:
        cp = critical_points(gs, qtol)
    om = frequencies(gs, cp, qtol)
    return CombData(teeth=tuple(zip(om, cp.h)))


def _endpoints_to_gaps(x):
    pairs = tuple((x[2 * i], x[2 * i + 1]) for i in range(len(x) // 2))
    return pairs


def gaps_from_comb(comb, bracket, qtol=DEFAULT_QTOL, inner_qtol=1e-10):
    """Inverse parameter problem: gap endpoints from a finite comb.

    The outer band [b0, a0] is fixed by the bracket (normalization: scale and
    translation are not determined by the comb); the 2N interior endpoints are
    found by least squares on the frequency and height residuals.
    """
    n = len(comb.teeth)
    if comb.tail_bound != 0.0:
        raise ValidationError("inverse problem requires a finite comb")
    if bracket.n_gaps != n:
        raise ValidationError("bracket must have one gap per tooth")
    b0, a0 = bracket.b0, bracket.a0
    target = np.concatenate([comb.omegas, comb.heights])
    x0 = np.array([v for g in bracket.gaps for v in g])
    margin = 1e-8 * (a0 - b0)

    def residual(x):
        gaps = _endpoints_to_gaps(x)
        flat = [b0] + [v for g in gaps for v in g] + [a0]
        if any(flat[i] >= flat[i + 1] for i in range(len(flat) - 1)):
            return 1e3 * np.ones(2 * n)
        try:
            gs = GapSystem(b0=b0, a0=a0, gaps=gaps)
            cp = critical_points(gs, inner_qtol)
            om = frequencies(gs, cp, inner_qtol)
        except (SolverError, ValidationError):
            return 1e3 * np.ones(2 * n)
        return np.concatenate([om, cp.h]) - target

    sol = least_squares(
        residual,
        x0,
        bounds=(b0 + margin, a0 - margin),
        xtol=1e-14,
        ftol=1e-14,
        gtol=1e-14,
        diff_step=1e-7,
    )
    if np.max(np.abs(sol.fun)) > 1e-8:
        raise SolverError(
            "comb inversion did not reach tolerance",
            residual=float(np.max(np.abs(sol.fun))),
            iterate=sol.x,
        )
    return GapSystem(b0=b0, a0=a0, gaps=_endpoints_to_gaps(sol.x))


def truncate_comb(comb, n):
    """Finite-band truncation: teeth with h_j > 1/n survive with height h_j - 1/n."""
    if n <= 0:
        raise ValidationError("truncation parameter must be positive")
    teeth = tuple((o, h - 1.0 / n) for o, h in comb.teeth if h > 1.0 / n)
    return CombData(teeth=teeth, tail_bound=0.0)


def widom_delta_report(comb, n_list):
    """Delta_n(0) = exp(-sum of truncated heights) along n_list.

    Non-increasing in n with limit exp(-sum h_j), attained exactly for
    finite combs once every tooth survives.
    """
    out = []
    for n in n_list:
        trunc = truncate_comb(comb, n)
        out.append(
            {
                "n": int(n),
                "teeth": len(trunc.teeth),
                "delta_n0": float(np.exp(-sum(trunc.heights))),
            }
        )
    return out


def kernel_truncation_report(base_gs, n_list, eps=-1, rel_positions=None, qtol=DEFAULT_QTOL):
    """Kernel values at the origin across finite-band truncations.

    The comb of base_gs is truncated for each n, the truncated gap system is
    recovered by the inverse parameter problem (same outer band), and the
    divisor is placed either at the critical points (rel_positions None) or
    at the given gap-relative positions in each surviving gap.  Exploratory
    diagnostic: the two envelope cases eps = -1 / eps = +1 at the critical
    points give exactly 1 and Delta_n(0)^2.
    """
    from .abel import kernel_at_origin
    from .herglotz import Divisor

    comb = comb_from_gaps(base_gs, qtol=qtol)
    eps_arr = np.broadcast_to(np.asarray(eps, dtype=int), (len(comb.teeth),))
    report = []
    for n in n_list:
        trunc = truncate_comb(comb, n)
        survivors = [j for j, (_, h) in enumerate(comb.teeth) if h > 1.0 / n]
        if not survivors:
            report.append({"n": int(n), "teeth": 0, "k0": 1.0, "delta_n0": 1.0})
            continue
        bracket = GapSystem(
            b0=base_gs.b0, a0=base_gs.a0, gaps=tuple(base_gs.gaps[j] for j in survivors)
        )
        gs_n = gaps_from_comb(trunc, bracket, qtol=qtol)
        cp_n = critical_points(gs_n, qtol)
        pts = []
        for i, j in enumerate(survivors):
            if rel_positions is None:
                x = cp_n.c[i]
            else:
                a, b = gs_n.gaps[i]
                x = a + float(rel_positions[j]) * (b - a)
            pts.append((x, int(eps_arr[j])))
        k0 = kernel_at_origin(gs_n, cp_n, Divisor(tuple(pts)), qtol)
        report.append(
            {
                "n": int(n),
                "teeth": len(survivors),
                "k0": float(k0),
                "delta_n0": float(np.exp(-sum(trunc.heights))),
            }
        )
    return report
