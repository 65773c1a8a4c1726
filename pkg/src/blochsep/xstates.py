"""Closed-form X-state volumes and separability probabilities.

Everything is a function of the two Bloch radii ``(r_A, r_B)`` (for
X-states both point along z).  The bivariate forms are piecewise in
``r_A > r_B`` versus ``r_A < r_B``; the two pieces are written out
separately, so their agreement on the diagonal is an actual check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import optimize

from blochsep.quadrature import quad1d, quad2d

PI2 = math.pi ** 2
LOG2SQ = math.log(2.0) ** 2


class DomainError(ValueError):
    pass


# ---------------------------------------------------------------------------
# global separability constants


def complex_rule_separability(k: float) -> float:
    """Generic two-qubit separability probability under the induced measure
    with ancilla dimension ``K = k + 4`` (``k = 0`` is Hilbert-Schmidt)."""
    if k < -1:
        raise DomainError(f"k must be >= -1, got {k}")
    log_term = (math.log(3.0) + (k + 3) * math.log(4.0) + math.log(2 * k * (k + 7) + 25)
                + math.lgamma(k + 3.5) + math.lgamma(2 * k + 9)
                - 0.5 * math.log(math.pi) - math.lgamma(3 * k + 13))
    return 1.0 - math.exp(log_term)


def cfd_separability(k: float) -> float:
    """X-state separability probability for the density ``det(rho)**k``
    times the flat measure (``k = K - 4``)."""
    if k < 0:
        raise DomainError(f"k must be >= 0, got {k}")
    log_term = (math.log(2.0) + 2 * math.lgamma(2 * k + 4)
                - math.lgamma(k + 2) - math.lgamma(3 * k + 6))
    return 1.0 - math.exp(log_term)


# ---------------------------------------------------------------------------
# branched surfaces


@dataclass(frozen=True)
class BranchedSurface:
    """Surface with an ``r_A >= r_B`` piece and an ``r_A < r_B`` piece.

    Both pieces are kept as separately written formulas so that their
    agreement on the diagonal is a real check (:meth:`diagonal_gap`).
    """

    name: str
    upper: Callable
    lower: Callable

    def __call__(self, ra, rb):
        ra = np.asarray(ra, dtype=float)
        rb = np.asarray(rb, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(ra >= rb, self.upper(ra, rb), self.lower(ra, rb))
        return float(out) if out.ndim == 0 else out

    def diagonal_gap(self, r) -> float:
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return float(np.max(np.abs(self.upper(r, r) - self.lower(r, r))))


def _check_unit(*xs):
    for x in xs:
        x = np.asarray(x)
        if np.any(x < 0) or np.any(x > 1) or np.any(np.isnan(x)):
            raise DomainError("radii must lie in [0, 1]")


# Hilbert-Schmidt (K = 4)

V_TOT_HS = BranchedSurface(
    "v_tot_hs",
    lambda a, b: -PI2 / 960 * (a - 1) ** 3 * (a * (a + 3) - 5 * b ** 2 + 1),
    lambda a, b: -PI2 / 960 * (b - 1) ** 3 * (-5 * a ** 2 + b * (b + 3) + 1),
)
V_SEP_HS = BranchedSurface(
    "v_sep_hs",
    lambda a, b: -PI2 * (a - 1) ** 3 * (5 * (a + 3) * b ** 4 - 10 * (3 * a + 1) * b ** 2
                                        + 8 * a ** 2 + 9 * a + 3) / 7680,
    lambda a, b: -PI2 * (b - 1) ** 3 * (5 * a ** 4 * (b + 3) - 10 * a ** 2 * (3 * b + 1)
                                        + b * (8 * b + 9) + 3) / 7680,
)


def _edge_zero(hi, p):
    # 0 on the pure-marginal edge, where both volumes vanish
    return np.where(hi >= 1.0, 0.0, p)


P_BIV_HS = BranchedSurface(
    "p_biv_hs",
    lambda a, b: _edge_zero(a, (5 * (a + 3) * b ** 4 - 10 * (3 * a + 1) * b ** 2 + 8 * a ** 2
                                + 9 * a + 3) / (8 * (a * (a + 3) - 5 * b ** 2 + 1))),
    lambda a, b: _edge_zero(b, (5 * a ** 4 * (b + 3) - 10 * a ** 2 * (3 * b + 1) + b * (8 * b + 9)
                                + 3) / (8 * (-5 * a ** 2 + b * (b + 3) + 1))),
)


def v_tot_hs(ra, rb):
    _check_unit(ra, rb)
    return V_TOT_HS(ra, rb)


def v_sep_hs(ra, rb):
    _check_unit(ra, rb)
    return V_SEP_HS(ra, rb)


def p_biv_hs(ra, rb):
    """Bivariate X-state separability probability (Hilbert-Schmidt).

    On the edge ``max(r_A, r_B) = 1`` both volumes vanish; the value there is
    taken as 0, the stated boundary value, although the rational formula
    tends to ``(1 - r^2) / 2`` along it.
    """
    _check_unit(ra, rb)
    return P_BIV_HS(ra, rb)


def p_biv_hs_edge_limit(r):
    """Limit of the rational formula as the larger radius tends to 1."""
    r = np.asarray(r, dtype=float)
    return (1 - r ** 2) / 2


def p_diag_hs(r):
    r = np.asarray(r, dtype=float)
    return -((r - 1) * (5 * r * (r * (r + 5) + 3) + 3)) / (32 * r + 8)


def p_antidiag_hs(ra):
    """Separability probability on the line ``r_A + r_B = 1``."""
    a = np.asarray(ra, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        hi = -((a - 2) * a * (5 * a * (a ** 2 + a - 10) + 28) + 8) / (8 * (a * (4 * a - 13) + 4))
        lo = (a * (a * (5 * a * ((a - 4) * a - 6) + 32) + 25) - 20) / (8 * (a * (4 * a + 5) - 5))
    out = np.where(2 * a > 1, hi, lo)
    return float(out) if out.ndim == 0 else out


def p_fixed_rb(ra, rb: float):
    """Sections at ``r_B`` in ``{0, 1/2, 1}`` as separate closed forms."""
    a = np.asarray(ra, dtype=float)
    if rb == 0:
        out = (a * (8 * a + 9) + 3) / (8 * (a * (a + 3) + 1))
    elif rb == 0.5:
        with np.errstate(divide="ignore", invalid="ignore"):
            hi = (a * (128 * a + 29) + 23) / (32 * (4 * a * (a + 3) - 1))
            lo = (35 * a ** 4 - 50 * a ** 2 + 19) / (44 - 80 * a ** 2)
        out = np.where(a > 0.5, hi, lo)
    elif rb == 1:
        out = np.zeros_like(a)
    else:
        raise DomainError("closed-form sections exist for r_B in {0, 1/2, 1} only")
    return float(out) if np.ndim(out) == 0 else out


# induced K = 5

V_TOT_K5 = BranchedSurface(
    "v_tot_k5",
    lambda a, b: -PI2 * (a - 1) ** 5 * (-6 * a * (a + 5) * b ** 2 + a * (a + 1) * (a * (a + 4) + 5)
                                        + 21 * b ** 4 - 6 * b ** 2 + 1) / 1290240,
    lambda a, b: -PI2 * (b - 1) ** 5 * (-6 * a ** 2 * (b * (b + 5) + 1) + 21 * a ** 4
                                        + b * (b + 1) * (b * (b + 4) + 5) + 1) / 1290240,
)


def _k5_sep_upper(a, b):
    return (-21 * (a + 5) * b ** 6 + 63 * (5 * a + 1) * b ** 4 - 27 * a * (8 * a + 5) * b ** 2
            + a * (8 * a * (a + 2) * (a + 3) + 25) - 27 * b ** 2 + 5)


def _k5_sep_lower(a, b):
    return (-21 * a ** 6 * (b + 5) + 63 * a ** 4 * (5 * b + 1) - 27 * a ** 2 * (b * (8 * b + 5) + 1)
            + 25 * b + 8 * b ** 2 * (b + 2) * (b + 3) + 5)


def _k5_tot_upper(a, b):
    return -6 * a * (a + 5) * b ** 2 + a * (a + 1) * (a * (a + 4) + 5) + 21 * b ** 4 - 6 * b ** 2 + 1


def _k5_tot_lower(a, b):
    return -6 * a ** 2 * (b * (b + 5) + 1) + 21 * a ** 4 + b * (b + 1) * (b * (b + 4) + 5) + 1


V_SEP_K5 = BranchedSurface(
    "v_sep_k5",
    lambda a, b: -PI2 * (a - 1) ** 5 * _k5_sep_upper(a, b) / 10321920,
    lambda a, b: -PI2 * (b - 1) ** 5 * _k5_sep_lower(a, b) / 10321920,
)


def _corner_zero(a, b, p):
    # the rational form is 0/0 only at (1, 1), where the diagonal section is 0
    return np.where((a >= 1.0) & (b >= 1.0), 0.0, p)


P_BIV_K5 = BranchedSurface(
    "p_biv_k5",
    lambda a, b: _corner_zero(a, b, _k5_sep_upper(a, b) / (8 * _k5_tot_upper(a, b))),
    lambda a, b: _corner_zero(a, b, _k5_sep_lower(a, b) / (8 * _k5_tot_lower(a, b))),
)


def v_tot_k5(ra, rb):
    _check_unit(ra, rb)
    return V_TOT_K5(ra, rb)


def v_sep_k5(ra, rb):
    _check_unit(ra, rb)
    return V_SEP_K5(ra, rb)


def p_biv_k5(ra, rb):
    _check_unit(ra, rb)
    return P_BIV_K5(ra, rb)


def p_diag_k5(r):
    r = np.asarray(r, dtype=float)
    return (1 - r) * (r * (21 * r * (r * (r + 8) + 6) + 40) + 5) / (8 * (r * (16 * r + 7) + 1))


# induced K = 3


def v_tot_k3(ra, rb):
    _check_unit(ra, rb)
    hi = np.maximum(np.asarray(ra, dtype=float), np.asarray(rb, dtype=float))
    out = -2 * PI2 * LOG2SQ * (hi - 1)
    return float(out) if np.ndim(out) == 0 else out


K3_TOTAL_VOLUME = 2 / 3 * PI2 * LOG2SQ
K3_SEPARABILITY = 1 / 3

SURFACES = {s.name: s for s in (V_TOT_HS, V_SEP_HS, P_BIV_HS, V_TOT_K5, V_SEP_K5, P_BIV_K5)}


# ---------------------------------------------------------------------------
# marginals and total volumes

_MARGINAL = {
    # K: (coefficient, power of 1 - r^2)
    3: (PI2 * LOG2SQ, 1),
    4: (PI2 / 2304, 3),
    5: (PI2 / 3686400, 5),
    6: (PI2 / 2890137600, 7),
    7: (PI2 / 1664719257600, 9),
}
_MARGINAL_SEP = {5: (PI2 / 5734400, 5)}

TOTAL_VOLUME = {
    3: K3_TOTAL_VOLUME,
    4: PI2 / 5040,
    5: PI2 / 9979200,
    6: PI2 / 9081072000,
    7: PI2 / 5866372512000,
}


def marginal_volume(K: int, r, kind: str = "total"):
    """Single-radius marginal of the X-state volume for ancilla dimension ``K``."""
    table = _MARGINAL if kind == "total" else _MARGINAL_SEP
    if K not in table:
        raise DomainError(f"no {kind} marginal for K={K}")
    _check_unit(r)
    coef, power = table[K]
    r = np.asarray(r, dtype=float)
    out = coef * (1 - r ** 2) ** power
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# correlations of the radii


def radii_correlation(density: Callable, tol: float = 1e-11) -> float:
    """Pearson correlation of ``(r_A, r_B)`` under an unnormalized bivariate
    density on the unit square, by quadrature."""
    def moment(g):
        return quad2d(lambda a, b: g(a, b) * density(a, b), tol=tol)
    m0 = moment(lambda a, b: 1.0)
    ma = moment(lambda a, b: a) / m0
    mb = moment(lambda a, b: b) / m0
    maa = moment(lambda a, b: a * a) / m0
    mbb = moment(lambda a, b: b * b) / m0
    mab = moment(lambda a, b: a * b) / m0
    return (mab - ma * mb) / math.sqrt((maa - ma ** 2) * (mbb - mb ** 2))


# ---------------------------------------------------------------------------
# loci


def diag_continuum_sepprob(curve: str = "diagonal", measure: str = "hs", tol: float = 1e-12) -> float:
    """Separable over total volume integrated along ``r_A = r_B``
    (``"diagonal"``) or ``r_A + r_B = 1`` (``"antidiagonal"``)."""
    tot, sep = {"hs": (V_TOT_HS, V_SEP_HS), "k5": (V_TOT_K5, V_SEP_K5)}[measure]
    if curve == "diagonal":
        def path(s):
            return s, s
        points = ()
    elif curve == "antidiagonal":
        def path(s):
            return s, 1 - s
        points = (0.5,)
    else:
        raise DomainError(f"unknown curve {curve!r}")
    num = quad1d(lambda s: sep(*path(s)), 0.0, 1.0, tol, points=points)
    den = quad1d(lambda s: tot(*path(s)), 0.0, 1.0, tol, points=points)
    return num / den


def mzz_curve_negative(m):
    """Stated closed form for the separability probability conditioned on
    ``M_zz`` in ``(-1, 0)``."""
    m = np.asarray(m, dtype=float)
    if np.any(m <= -1) or np.any(m >= 0):
        raise DomainError("formula stated for -1 < M_zz < 0 only")
    out = 3 * (m + 1) ** 2 / (2 * (m - 2) * (2 * m - 1))
    return float(out) if out.ndim == 0 else out


def mzz_conditional_sepprob(m: float, det_power: int = 0, tol: float = 1e-10) -> float:
    """Separability probability of X-states conditioned on ``M_zz = m``,
    by quadrature, under ``det(rho)**det_power`` times the flat measure.

    With ``s = (1 + m) / 2`` the diagonal is ``(s t, (1-s) q, (1-s)(1-q),
    s(1-t))`` with ``t, q`` independent Beta(k, k) (``k = det_power + 2``),
    and the probability that both antidiagonal moduli fit is
    ``F(min(x/y, y/x))`` with ``x = s^2 t(1-t)``, ``y = (1-s)^2 q(1-q)`` and
    ``F(u) = 1 - (1-u)**(det_power + 1)``.  Symmetric in ``m -> -m``.
    """
    if not -1 < m < 1:
        return 0.0
    # exchanging s <-> 1 - s and t <-> q maps m to -m; the m >= 0 side keeps
    # the inner kinks away from the endpoints and integrates more accurately
    m = abs(m)
    k = det_power + 2
    s = 0.5 * (1 + m)
    c = (s / (1 - s)) ** 2
    norm = math.gamma(2 * k) / math.gamma(k) ** 2

    def beta_pdf(t):
        return norm * (t * (1 - t)) ** (k - 1)

    def inner(t):
        x = c * t * (1 - t)
        # kink where q(1-q) = x
        pts = []
        if x < 0.25:
            q0 = 0.5 * (1 - math.sqrt(1 - 4 * x))
            pts = [q0, 1 - q0]

        def g(q):
            y = q * (1 - q)
            with np.errstate(divide="ignore", invalid="ignore"):
                u = np.where((x > 0) & (y > 0), np.minimum(x / y, y / x), 0.0)
            return beta_pdf(q) * (1 - (1 - u) ** (det_power + 1))
        return beta_pdf(t) * quad1d(g, 0.0, 1.0, tol / 10, points=pts)

    # the integrand is symmetric under t -> 1 - t
    return 2 * quad1d(lambda ts: np.array([inner(float(t)) for t in np.atleast_1d(ts)]),
                      0.0, 0.5, tol)


def mzz_integral(positive_m, positive_p, tol: float = 1e-9) -> float:
    """Integral over ``[-1, 1]`` of the ``M_zz`` separability curve with the
    closed form on ``(-1, 0)`` and a tabulated curve (linearly interpolated)
    on ``[0, 1]``."""
    neg = quad1d(lambda m: mzz_curve_negative(np.clip(m, -1 + 1e-300, -1e-300)), -1.0, 0.0, tol)
    xs = np.asarray(positive_m, dtype=float)
    ys = np.asarray(positive_p, dtype=float)
    pos = quad1d(lambda m: np.interp(m, xs, ys), 0.0, 1.0, tol, points=tuple(xs[(xs > 0) & (xs < 1)]))
    return neg + pos


# ---------------------------------------------------------------------------
# extrema


@dataclass(frozen=True)
class Extrema:
    diag_max_r: float
    diag_max_value: float
    antidiag_min_r: float
    antidiag_min_value: float
    crossing_r: float
    max_gap_r: float
    max_gap: float
    k5_antidiag_min_r: float
    k5_antidiag_min_value: float
    k5_diag_max_r: float
    k5_diag_max_value: float


def _argmax(f, lo, hi):
    res = optimize.minimize_scalar(lambda r: -f(r), bounds=(lo, hi), method="bounded",
                                   options={"xatol": 1e-12})
    return float(res.x), float(f(res.x))


def extrema() -> Extrema:
    """Locate the stated extrema numerically from the exact formulas."""
    d_r, d_v = _argmax(p_diag_hs, 0.0, 1.0)
    a_r, a_neg = _argmax(lambda r: -p_antidiag_hs(r), 0.05, 0.95)

    def gap(r):
        return p_diag_hs(r) - p_antidiag_hs(r)
    cross = optimize.brentq(gap, 0.3, 0.45, xtol=1e-14)
    g_r, g_v = _argmax(gap, cross, 0.5)
    k5_anti = lambda r: -p_biv_k5(r, 1 - r)  # noqa: E731
    ka_r, ka_neg = _argmax(k5_anti, 0.05, 0.95)
    kd_r, kd_v = _argmax(p_diag_k5, 0.0, 1.0)
    return Extrema(d_r, d_v, a_r, -a_neg, float(cross), g_r, g_v, ka_r, -ka_neg, kd_r, kd_v)


def positive_root(coeffs) -> float:
    """Unique positive real root of a polynomial (highest degree first)."""
    roots = np.roots(coeffs)
    real = roots[np.abs(roots.imag) < 1e-12].real
    pos = real[real > 0]
    if pos.size != 1:
        raise DomainError(f"expected one positive root, got {pos}")
    return float(pos[0])
