"""Turn a checkpoint into a JSON report plus a bundle of versioned CSV tables."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np
from scipy.stats import spearmanr

from blochsep import measures, stats, xstates

SCHEMA_VERSION = 1
SILVER_MEAN_BURES = 1680 * (math.sqrt(2) - 1) / math.pi ** 8


class EmptyCheckpoint(ValueError):
    pass


def conjectures_for(label: str) -> dict[str, float]:
    """Conjectured global probabilities: ``sep`` and, where known, the
    PT-dominated (``pt``) and rho-dominated (``rho``) shares."""
    spec = measures.MeasureSpec.parse(label)
    fam = spec.family
    if fam is measures.Family.HILBERT_SCHMIDT:
        return {"sep": 8 / 33, "pt": 4 / 33}
    if fam is measures.Family.INDUCED:
        out = {"sep": xstates.complex_rule_separability(spec.det_power)}
        if spec.K == 3:
            out["pt"] = out["sep"]  # det(rho) = 0 <= det(rho^PT) on every separable state
        if spec.K == 5:
            out.update(pt=45 / 286, rho=7 / 26)
        return out
    if fam is measures.Family.REBIT_HS:
        return {"sep": 29 / 64, "pt": 29 / 128}
    if fam is measures.Family.BURES:
        return {"sep": SILVER_MEAN_BURES}
    return {"sep": xstates.cfd_separability(spec.det_power)}


def _f(x) -> float | None:
    x = float(x)
    return None if math.isnan(x) else x


def _estimate_dict(h, kind, p0):
    e = stats.estimate(h, kind)
    lo, hi = e.ci95
    out = {"p": e.p, "n": e.n, "count": e.k, "ci95": [lo, hi]}
    if p0 is not None:
        out["conjecture"] = p0
        out["z"] = (e.p - p0) / math.sqrt(p0 * (1 - p0) / e.n)
    return out


def _spearman(x, y):
    ok = np.isfinite(y)
    if ok.sum() < 3:
        return None
    return _f(spearmanr(x[ok], y[ok])[0])


def _fit_dict(counts, dim):
    try:
        f = stats.fit_exponent(counts, dim)
    except stats.InsufficientBins as exc:
        return {"error": str(exc)}
    return {"c": f.c, "p": f.p, "rss": f.rss, "n_bins_used": f.n_bins_used, "reliable": f.reliable}


def _xstate_crosscheck(h, spec):
    out = {"cfd_separability": xstates.cfd_separability(spec.det_power)}
    analytic_power = {0: 3, 1: 5, 2: 7, 3: 9}.get(spec.det_power)
    if analytic_power is not None:
        out["marginal_power"] = analytic_power
    if spec.det_power in (0, 1):
        surface = xstates.p_biv_hs if spec.det_power == 0 else xstates.p_biv_k5
        rc = stats.bin_centers()
        p_exact = surface(rc[:, None], rc[None, :])
        sym = stats.symmetrize(h)
        n = sym["total"].astype(float)
        p_hat = np.divide(sym["sep"], n, out=np.full(n.shape, np.nan), where=n > 0)
        sigma = np.sqrt(p_exact * (1 - p_exact) / np.where(n > 0, n, np.nan))
        z = (p_hat - p_exact) / sigma
        use = (n >= 100) & np.isfinite(z)
        out["bivariate_cells_compared"] = int(use.sum())
        if use.any():
            out["bivariate_max_abs_z"] = float(np.max(np.abs(z[use])))
            out["bivariate_rms_z"] = float(np.sqrt(np.mean(z[use] ** 2)))
    return out


def analyze(h: stats.JointHistogram, conjectures: str = "default") -> dict:
    """Everything the CSV bundle summarizes, as a JSON-ready dict."""
    if h.n_samples == 0:
        raise EmptyCheckpoint("checkpoint holds no samples")
    spec = measures.MeasureSpec.parse(h.measure)
    conj = conjectures_for(h.measure) if conjectures == "default" else {}
    report = {
        "schema_version": SCHEMA_VERSION,
        "measure": h.measure,
        "base_seed": h.base_seed,
        "n_samples": h.n_samples,
        "global": {
            "separable": _estimate_dict(h, "sep", conj.get("sep")),
            "sep_pt_dominant": _estimate_dict(h, "pt", conj.get("pt")),
            "sep_rho_dominant": _estimate_dict(h, "rho", conj.get("rho")),
        },
        "diagnostics": {
            "boundary_det_pt_count": h.n_boundary,
            "max_abs_det_rho": h.max_abs_det_rho,
            "all_det_rho_below_1e-12": h.max_abs_det_rho < 1e-12,
            "sampler": "exact (no rejection)" if spec.is_xstate else "direct",
        },
    }
    if spec.family is measures.Family.BURES:
        report["global"]["separable"]["silver_mean_conjecture"] = SILVER_MEAN_BURES

    prof = stats.marginal_profile(h, conj.get("sep"))
    split = stats.split_profile(h, conj.get("pt"), "pt")
    flat = {}
    for name, p in (("marginal", prof), ("split_pt", split)):
        inside, considered = p.band_coverage()
        flat[name] = {"inside": inside, "considered": considered,
                      "fraction": inside / considered if considered else None,
                      "spearman_bins_5_95": _spearman(p.r_mid[5:96], p.p_hat[5:96])}
    report["profiles"] = flat

    try:
        corr = {"all": stats.correlation(h, "all"), "separable": stats.correlation(h, "separable")}
    except stats.InsufficientData as exc:
        corr = {"error": str(exc)}
    report["correlations"] = corr
    report["fits"] = {
        "area_dim": spec.bloch_dim,
        "total": _fit_dict(stats.radial_counts(h, "total"), spec.bloch_dim),
        "separable": _fit_dict(stats.radial_counts(h, "sep"), spec.bloch_dim),
    }
    diag = stats.diagonal_curve(h)
    report["curves"] = {
        "diagonal_band_fraction": stats.diagonal_band_fraction(h),
        "prod_dist_spearman": _spearman(*_occupied(stats.prod_dist_curve(h))),
        "diagonal_spearman": _spearman(diag.r, diag.p),
    }
    if not spec.is_xstate:
        report["residuals"] = {
            name: stats.residual_grid(h, name, scale_fit=name.startswith("Q")).rss
            for name in stats.SURFACES
        }
    report["crosscheck"] = (_xstate_crosscheck(h, spec) if spec.is_xstate else
                            {"complex_rule_separability": xstates.complex_rule_separability(spec.det_power)}
                            if spec.family in (measures.Family.HILBERT_SCHMIDT, measures.Family.INDUCED)
                            else {})
    return report


def _occupied(curve: stats.Curve, min_count: int = 100):
    ok = curve.n >= min_count
    return curve.r[ok], curve.p[ok]


# ---------------------------------------------------------------------------
# CSV bundle


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    return "" if math.isnan(x) else f"{x:.17g}"


def write_table(path, name: str, header: list[str], rows) -> None:
    path = Path(path)
    with path.open("w", newline="") as f:
        f.write(f"# schema=blochsep/{name}/v{SCHEMA_VERSION}\n")
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _cell(v: str):
    if not v:
        return math.nan
    try:
        return float(v)
    except ValueError:
        return v


def read_table(path) -> tuple[str, list[str], np.ndarray]:
    """Inverse of :func:`write_table`: ``(schema, header, rows)``.

    Rows come back as a float array (empty cells as NaN), or as an object
    array when the table has text columns.
    """
    with Path(path).open() as f:
        first = f.readline().strip()
        if not first.startswith("# schema="):
            raise ValueError(f"{path}: missing schema line")
        schema = first.split("=", 1)[1]
        reader = csv.reader(f)
        header = next(reader)
        rows = [[_cell(v) for v in row] for row in reader]
    numeric = all(isinstance(v, float) for row in rows for v in row)
    arr = np.array(rows, dtype=float if numeric else object)
    return schema, header, arr.reshape(-1, len(header))


def write_bundle(h: stats.JointHistogram, out_dir, conjectures: str = "default") -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = analyze(h, conjectures)
    conj = conjectures_for(h.measure) if conjectures == "default" else {}

    prof_header = ["r_mid", "n_tot", "n_sep", "p_hat", "band_low", "band_high"]
    for fname, p in (("radial_profile", stats.marginal_profile(h, conj.get("sep"))),
                     ("split_profile", stats.split_profile(h, conj.get("pt"), "pt"))):
        write_table(out / f"{fname}.csv", fname, prof_header,
                    zip(p.r_mid, p.n_tot, p.n_sep, p.p_hat, p.ci_low, p.ci_high))
    for fname, c in (("diagonal", stats.diagonal_curve(h)), ("antidiagonal", stats.antidiagonal_curve(h)),
                     ("prod_dist", stats.prod_dist_curve(h)), ("mzz", stats.mzz_curve(h))):
        write_table(out / f"{fname}.csv", fname, ["x_mid", "n", "p_hat"], zip(c.r, c.n, c.p))
    rc = stats.bin_centers()
    grid_header = ["r_a_mid"] + [f"{r:.3f}" for r in rc]
    for key, g in stats.symmetrize(h).items():
        write_table(out / f"grid_{key}.csv", f"grid_{key}", grid_header,
                    ([r] + list(row) for r, row in zip(rc, g)))
    if "residuals" in report:
        for name in stats.SURFACES:
            res = stats.residual_grid(h, name, scale_fit=name.startswith("Q"))
            write_table(out / f"residual_{name}.csv", f"residual_{name}", grid_header,
                        ([r] + list(row) for r, row in zip(rc, res.values)))
    corr = report["correlations"]
    write_table(out / "correlations.csv", "correlations", ["pearson_all", "pearson_separable"],
                [[corr.get("all", math.nan), corr.get("separable", math.nan)]])
    with (out / "report.json").open("w") as f:
        json.dump(report, f, indent=2, sort_keys=True)
        f.write("\n")
    return report
