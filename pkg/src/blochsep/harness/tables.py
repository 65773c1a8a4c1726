"""Analytic X-state tables: surfaces on a grid, curves, marginals, constants."""

from __future__ import annotations

import math
from fractions import Fraction
from pathlib import Path

import numpy as np

from blochsep import xstates
from blochsep.harness.report import write_table
from blochsep.quadrature import quad1d, quad2d

SUPPORTED_K = (3, 4, 5, 6, 7)


class GridError(ValueError):
    pass


def grid_points(step: float) -> np.ndarray:
    """``0, step, ..., 1``; ``step`` must divide 1."""
    if not 0 < step <= 1:
        raise GridError(f"step must lie in (0, 1], got {step}")
    n = round(1 / step)
    if abs(n * step - 1) > 1e-9:
        raise GridError(f"step {step} does not divide 1")
    return np.linspace(0.0, 1.0, n + 1)


def _write_grid(out: Path, name: str, r: np.ndarray, fn) -> None:
    vals = fn(r[:, None], r[None, :])
    header = ["r_a"] + [f"{x:.6g}" for x in r]
    write_table(out / f"{name}.csv", name, header, ([a] + list(row) for a, row in zip(r, vals)))


def _surfaces(ks) -> dict:
    out = {}
    if 3 in ks:
        out["v_tot_k3"] = xstates.v_tot_k3
    if 4 in ks:
        out.update(p_biv_hs=xstates.p_biv_hs, v_tot_hs=xstates.v_tot_hs, v_sep_hs=xstates.v_sep_hs)
    if 5 in ks:
        out.update(p_biv_k5=xstates.p_biv_k5, v_tot_k5=xstates.v_tot_k5, v_sep_k5=xstates.v_sep_k5)
    return out


def curve_rows(r: np.ndarray, ks) -> tuple[list[str], list[np.ndarray]]:
    header, cols = ["r"], [r]
    if 4 in ks:
        header += ["p_diag_hs", "p_antidiag_hs", "p_hs_rb0", "p_hs_rb_half", "p_hs_rb1"]
        cols += [xstates.p_diag_hs(r), xstates.p_antidiag_hs(r),
                 xstates.p_fixed_rb(r, 0.0), xstates.p_fixed_rb(r, 0.5), xstates.p_fixed_rb(r, 1.0)]
    if 5 in ks:
        header += ["p_diag_k5", "p_antidiag_k5"]
        cols += [xstates.p_diag_k5(r), xstates.p_biv_k5(r, 1 - r)]
    return header, cols


def marginal_rows(r: np.ndarray, ks) -> tuple[list[str], list[np.ndarray]]:
    header, cols = ["r"], [r]
    for K in ks:
        header.append(f"total_K{K}")
        cols.append(xstates.marginal_volume(K, r))
        if K == 5:
            header.append("sep_K5")
            cols.append(xstates.marginal_volume(5, r, "sep"))
    return header, cols


def constant_rows(ks) -> list[tuple]:
    """``(quantity, K, stated, computed)`` for exact constants and stated integrals.

    For the separability constants ``stated`` is the exact rational (factorial
    arithmetic) and ``computed`` the log-gamma closed form.
    """
    rows = []
    for K in ks:
        k = K - 4
        rows.append(("complex_rule_separability", K, _complex_rule_rational(k),
                     xstates.complex_rule_separability(k)))
        if k >= 0:
            rows.append(("cfd_separability", K, _cfd_rational(k), xstates.cfd_separability(k)))
        total = quad1d(lambda r: xstates.marginal_volume(K, r), 0.0, 1.0, 1e-14)
        rows.append(("marginal_integral", K, xstates.TOTAL_VOLUME[K], total))
    if 3 in ks:
        rows.append(("v_tot_k3_integral", 3, xstates.K3_TOTAL_VOLUME,
                     quad2d(xstates.v_tot_k3, tol=1e-12)))
    if 4 in ks:
        rows += [
            ("v_tot_hs_integral", 4, xstates.TOTAL_VOLUME[4], quad2d(xstates.v_tot_hs, tol=1e-14)),
            ("p_biv_hs_integral", 4, 0.381678, quad2d(xstates.p_biv_hs, tol=1e-12)),
            ("diagonal_continuum", 4, 8 / 21, xstates.diag_continuum_sepprob("diagonal", "hs")),
            ("antidiagonal_continuum", 4, 58 / 147, xstates.diag_continuum_sepprob("antidiagonal", "hs")),
            ("p_biv_hs_origin", 4, 3 / 8, xstates.p_biv_hs(0.0, 0.0)),
            ("p_biv_hs_half", 4, 139 / 384, xstates.p_biv_hs(0.5, 0.5)),
        ]
    if 5 in ks:
        rows += [
            ("v_tot_k5_integral", 5, xstates.TOTAL_VOLUME[5], quad2d(xstates.v_tot_k5, tol=1e-15)),
            ("p_antidiag_k5_half", 5, 1261 / 2176, xstates.p_biv_k5(0.5, 0.5)),
        ]
    return rows


def _complex_rule_rational(k: int) -> float:
    # Gamma(k + 7/2) / sqrt(pi) = (2k+5)!! / 2^(k+3), so the ratio is rational
    num = 3 * Fraction(4) ** (k + 3) * (2 * k * (k + 7) + 25)
    dfact = math.prod(range(2 * k + 5, 0, -2)) if k >= -2 else 1
    gamma_half = Fraction(dfact, 2 ** (k + 3))
    val = num * gamma_half * math.factorial(2 * k + 8) / math.factorial(3 * k + 12)
    return float(1 - val)


def _cfd_rational(k: int) -> float:
    val = Fraction(2 * math.factorial(2 * k + 3) ** 2, math.factorial(k + 1) * math.factorial(3 * k + 5))
    return float(1 - val)


def extrema_rows() -> list[tuple]:
    """``(quantity, stated, computed, printed_digits)``."""
    e = xstates.extrema()
    return [
        ("p_diag_hs_argmax", 0.2722700792, e.diag_max_r, 10),
        ("p_diag_hs_max", 0.393558399, e.diag_max_value, 9),
        ("p_diag_hs_argmax_cubic_a", 0.2722700792, xstates.positive_root([3, 9, 1, -1]), 10),
        ("p_diag_hs_max_cubic", 0.393558399, xstates.positive_root([54, 108, -28, -9]), 9),
        ("p_antidiag_hs_argmin", 0.5, e.antidiag_min_r, 8),
        ("p_antidiag_hs_min", 139 / 384, e.antidiag_min_value, 15),
        ("diag_antidiag_crossing", 0.40182804, e.crossing_r, 8),
        ("max_gap_r", 0.4564893379, e.max_gap_r, 10),
        ("max_gap", 0.0056796160, e.max_gap, 10),
        ("p_antidiag_k5_min", 1261 / 2176, e.k5_antidiag_min_value, 15),
        ("p_diag_k5_argmax", 0.238465, e.k5_diag_max_r, 6),
        ("p_diag_k5_max", 0.63964, e.k5_diag_max_value, 5),
    ]


def parse_k_list(text: str) -> tuple[int, ...]:
    try:
        ks = tuple(sorted({int(t) for t in text.split(",") if t.strip()}))
    except ValueError as exc:
        raise GridError(f"bad K list {text!r}") from exc
    bad = [k for k in ks if k not in SUPPORTED_K]
    if not ks or bad:
        raise GridError(f"K values must be drawn from {SUPPORTED_K}, got {text!r}")
    return ks


def write_tables(step: float, ks, out_dir) -> dict:
    """Write the bundle and return a summary (max constant residual etc.)."""
    r = grid_points(step)
    ks = tuple(sorted(set(ks)))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, fn in _surfaces(ks).items():
        _write_grid(out, f"grid_{name}", r, fn)
    header, cols = curve_rows(r, ks)
    write_table(out / "curves.csv", "xstate_curves", header, zip(*cols))
    header, cols = marginal_rows(r, ks)
    write_table(out / "marginals.csv", "xstate_marginals", header, zip(*cols))

    consts = constant_rows(ks)
    rel = [abs(c - s) / abs(s) for _, _, s, c in consts]
    write_table(out / "constants.csv", "xstate_constants",
                ["quantity", "K", "k", "stated", "computed", "rel_residual"],
                ([q, K, K - 4, s, c, d] for (q, K, s, c), d in zip(consts, rel)))
    summary = {"grid_points": len(r), "k_list": list(ks), "constants": len(consts),
               "max_rel_residual": max(rel)}
    if 4 in ks or 5 in ks:
        ext = extrema_rows()
        write_table(out / "extrema.csv", "xstate_extrema",
                    ["quantity", "stated", "computed", "abs_diff", "printed_digits"],
                    ([q, s, c, abs(c - s), d] for q, s, c, d in ext))
    return summary
