"""End-to-end verification: every acceptance criterion at full or quick scale.

Each scenario is sampled once, in stages, and the counters are snapshotted
at each stage size (a snapshot at ``n`` is exactly the first ``n`` samples
of the longer run).  At quick scale every scenario stops at ``QUICK_N`` and
statistical tolerances are widened by ``sqrt(n_full / QUICK_N)``.
"""

from __future__ import annotations

import math
import sys
import zlib
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np
from scipy.stats import spearmanr

from blochsep import kernels, stats, xstates
from blochsep.harness import report, runner

QUICK_N = 100_000

STAGES = {
    "hs": (4_000_000, 5_000_000, 10_000_000),
    "rebit": (1_000_000, 5_000_000, 10_000_000),
    "induced:3": (1_000_000, 5_000_000),
    "induced:5": (1_000_000, 5_000_000),
    "bures": (1_000_000, 5_000_000),
    "xstate-hs": (10_000_000,),
    "xstate-induced:5": (1_000_000,),
    "xstate-induced:6": (1_000_000,),
    "xstate-induced:7": (1_000_000,),
}

# correlations of (r_A, r_B), all states / separable states, 5e6 draws each
CORRELATION_TARGETS = {
    "induced:5": (0.145496, 0.0968024),
    "hs": (0.183026, 0.107762),
    "rebit": (0.176898, 0.118049),
    "induced:3": (0.248993, 0.125835),
    "bures": (0.388250, 0.210838),
}

# (scenario, area dimension of the reduced Bloch body, target exponent, tolerance)
EXPONENTS = (
    ("hs", 3, 6.0, 0.05),
    ("rebit", 2, 6.0, 0.05),
    ("induced:3", 3, 4.0, 0.05),
    ("induced:5", 3, 8.0, 0.05),
    ("bures", 3, 3.5, 0.15),
)


@dataclass
class Check:
    name: str
    value: float
    target: float
    tol: float
    # "abs": |value - target| < tol; "below": value < target;
    # "above_eq": value >= target
    mode: str = "abs"

    @property
    def margin(self) -> float:
        if self.mode == "abs":
            return self.tol - abs(self.value - self.target)
        if self.mode == "below":
            return self.target - self.value
        return self.value - self.target

    @property
    def passed(self) -> bool:
        m = self.margin
        if not math.isfinite(m):
            return False
        return bool(m >= 0 if self.mode == "above_eq" else m > 0)

    def as_dict(self) -> dict:
        d = asdict(self)
        d.update(value=float(self.value), target=float(self.target), tol=float(self.tol),
                 margin=float(self.margin), passed=self.passed)
        return d


@dataclass
class Criterion:
    number: int
    title: str
    checks: list[Check] = field(default_factory=list)
    info: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks)

    @property
    def margin(self) -> float:
        return min((c.margin for c in self.checks), default=math.nan)

    def as_dict(self) -> dict:
        return {"criterion": self.number, "title": self.title, "passed": self.passed,
                "min_margin": self.margin, "checks": [c.as_dict() for c in self.checks],
                "info": self.info}


def scenario_seed(base_seed: int, label: str) -> int:
    """Independent per-scenario seed so e.g. qubit and rebit runs do not share normals."""
    ss = np.random.SeedSequence([base_seed, zlib.crc32(label.encode())])
    return int(ss.generate_state(1, np.uint64)[0] >> 1)


class Samples:
    """Staged runs and their snapshots."""

    def __init__(self, scale: str, seed: int, workers: int = 1, progress: bool = True):
        if scale not in ("quick", "full"):
            raise runner.ConfigError(f"scale must be quick or full, not {scale!r}")
        self.scale = scale
        self.seed = seed
        self.workers = workers
        self.progress = progress
        self.snapshots: dict[str, dict[int, stats.JointHistogram]] = {}

    def stages(self, label):
        return (QUICK_N,) if self.scale == "quick" else STAGES[label]

    def run_all(self):
        for label in STAGES:
            h = stats.JointHistogram.empty(label, scenario_seed(self.seed, label))
            snaps = {}
            for n in self.stages(label):
                h = runner.extend(h, n, self.workers)
                snaps[n] = h
            self.snapshots[label] = snaps
            if self.progress:
                print(f"sampled {label}: {h.n_samples}", file=sys.stderr)

    def get(self, label: str, n_full: int) -> stats.JointHistogram:
        snaps = self.snapshots[label]
        return snaps[QUICK_N] if self.scale == "quick" else snaps[n_full]

    def widen(self, n_full: int) -> float:
        """Tolerance multiplier for a criterion stated at ``n_full`` samples."""
        return math.sqrt(n_full / QUICK_N) if self.scale == "quick" else 1.0


# ---------------------------------------------------------------------------
# criteria


def _p(h, kind="sep"):
    return stats.estimate(h, kind).p


def c1(s: Samples) -> Criterion:
    c = Criterion(1, "HS global separability probability 8/33")
    c.checks.append(Check("p_hat(hs)", _p(s.get("hs", 4_000_000)), 8 / 33, 0.002 * s.widen(4_000_000)))
    return c


def c2(s: Samples) -> Criterion:
    h = s.get("induced:3", 1_000_000)
    c = Criterion(2, "Induced K=3 separability 1/14 and rank-deficient draws")
    c.checks.append(Check("p_hat(induced:3)", _p(h), 1 / 14, 0.002 * s.widen(1_000_000)))
    c.checks.append(Check("max |det rho|", h.max_abs_det_rho, 1e-12, 0.0, "below"))
    return c


def c3(s: Samples) -> Criterion:
    c = Criterion(3, "Induced K=5 separability 61/143")
    c.checks.append(Check("p_hat(induced:5)", _p(s.get("induced:5", 1_000_000)), 61 / 143,
                          0.003 * s.widen(1_000_000)))
    return c


def c4(s: Samples) -> Criterion:
    c = Criterion(4, "Two-rebit HS separability 29/64")
    c.checks.append(Check("p_hat(rebit)", _p(s.get("rebit", 1_000_000)), 29 / 64, 0.003 * s.widen(1_000_000)))
    return c


def c5(s: Samples) -> Criterion:
    c = Criterion(5, "Determinantal splits")
    hs = s.get("hs", 4_000_000)
    k5 = s.get("induced:5", 1_000_000)
    rb = s.get("rebit", 1_000_000)
    c.checks += [
        Check("hs |rho^PT| > |rho|", _p(hs, "pt"), 4 / 33, 0.002 * s.widen(4_000_000)),
        Check("K=5 |rho^PT| > |rho|", _p(k5, "pt"), 45 / 286, 0.002 * s.widen(1_000_000)),
        Check("K=5 |rho| > |rho^PT| > 0", _p(k5, "rho"), 7 / 26, 0.002 * s.widen(1_000_000)),
        Check("rebit |rho^PT| > |rho|", _p(rb, "pt"), 29 / 128, 0.003 * s.widen(1_000_000)),
    ]
    return c


def c6(s: Samples) -> Criterion:
    c = Criterion(6, "r-invariance: profiles inside the conjecture-centred 95% band")
    cases = [
        ("hs", 4_000_000, "sep", 8 / 33),
        ("induced:3", 1_000_000, "sep", 1 / 14),
        ("induced:5", 1_000_000, "sep", 61 / 143),
        ("rebit", 1_000_000, "sep", 29 / 64),
        ("hs", 4_000_000, "pt", 4 / 33),
        ("induced:5", 1_000_000, "pt", 45 / 286),
        ("rebit", 1_000_000, "pt", 29 / 128),
    ]
    for label, n, kind, p0 in cases:
        h = s.get(label, n)
        prof = stats.marginal_profile(h, p0) if kind == "sep" else stats.split_profile(h, p0, "pt")
        inside, considered = prof.band_coverage(r_max=0.95, min_count=1000)
        frac = inside / considered if considered else math.nan
        c.checks.append(Check(f"{label} {kind} band coverage", frac, 0.9, 0.0, "above_eq"))
        c.info[f"{label}/{kind}"] = {"inside": inside, "considered": considered}
    return c


def c7(s: Samples) -> Criterion:
    h = s.get("bures", 1_000_000)
    prof = stats.marginal_profile(h, None)
    rho = spearmanr(prof.r_mid[5:96], prof.p_hat[5:96], nan_policy="omit")[0]
    c = Criterion(7, "Bures separability 0.0733 and decreasing radial profile")
    c.checks += [
        Check("p_hat(bures)", _p(h), 0.0733, 0.003 * s.widen(1_000_000)),
        Check("Spearman(r, p_hat) bins 5..95", float(rho), -0.9, 0.0, "below"),
    ]
    c.info["silver_mean_conjecture"] = report.SILVER_MEAN_BURES
    c.info["p_hat"] = _p(h)
    return c


def c8(s: Samples) -> Criterion:
    c = Criterion(8, "Bloch-radii correlations and repulsion")
    tol = 0.01 * s.widen(5_000_000)
    for label, (t_all, t_sep) in CORRELATION_TARGETS.items():
        h = s.get(label, 5_000_000)
        r_all = stats.correlation(h, "all")
        r_sep = stats.correlation(h, "separable")
        c.checks += [
            Check(f"{label} all", r_all, t_all, tol),
            Check(f"{label} separable", r_sep, t_sep, tol),
            Check(f"{label} separable - all", r_sep - r_all, 0.0, 0.0, "below"),
        ]
    return c


def c9(s: Samples) -> Criterion:
    c = Criterion(9, "Radial exponent fits c r^(d-1) (1-r^2)^p")
    for label, dim, target, tol in EXPONENTS:
        n_full = STAGES[label][-1]
        h = s.get(label, n_full)
        for kind in ("total", "sep"):
            fit = stats.fit_exponent(stats.radial_counts(h, kind), dim)
            c.checks.append(Check(f"{label} {kind} (d={dim})", fit.p, target, tol * s.widen(n_full)))
    return c


def c10(s: Samples) -> Criterion:
    c = Criterion(10, "X-state analytics")
    exact = 1e-12
    for k, q in ((-1, Fraction(1, 14)), (0, Fraction(8, 33)), (1, Fraction(61, 143))):
        c.checks.append(Check(f"complex rule k={k}", xstates.complex_rule_separability(k), float(q), exact))
    for k, q in ((1, Fraction(9, 14)), (2, Fraction(26, 33)), (3, Fraction(125, 143))):
        c.checks.append(Check(f"CFD k={k}", xstates.cfd_separability(k), float(q), exact))
    for (a, b), v in (((0, 0), 3 / 8), ((0.5, 0.5), 139 / 384), ((1, 1), 0.0)):
        c.checks.append(Check(f"p_biv_hs{(a, b)}", xstates.p_biv_hs(a, b), v, exact))
    c.checks.append(Check("quad2d(p_biv_hs)", xstates.quad2d(xstates.p_biv_hs, tol=1e-10), 0.381678, 1e-5))
    c.checks.append(Check("diagonal continuum", xstates.diag_continuum_sepprob("diagonal"), 8 / 21, 1e-9))
    c.checks.append(Check("antidiagonal continuum", xstates.diag_continuum_sepprob("antidiagonal"),
                          58 / 147, 1e-9))
    e = xstates.extrema()
    tol = 1e-6
    c.checks += [
        Check("diagonal max location", e.diag_max_r, 0.2722700792, tol),
        Check("diagonal max value", e.diag_max_value, 0.393558399, tol),
        Check("crossing", e.crossing_r, 0.40182804, tol),
        Check("max gap", e.max_gap, 0.0056796160, tol),
        Check("max gap location", e.max_gap_r, 0.4564893379, tol),
        Check("K=5 antidiagonal min location", e.k5_antidiag_min_r, 0.5, tol),
        Check("K=5 antidiagonal min value", e.k5_antidiag_min_value, 1261 / 2176, tol),
        Check("K=5 diagonal max location", e.k5_diag_max_r, 0.238465, tol),
        Check("K=5 diagonal max value", e.k5_diag_max_value, 0.63964, tol),
    ]
    return c


def c11(s: Samples) -> Criterion:
    c = Criterion(11, "Monte Carlo X-states vs closed forms")
    h = s.get("xstate-hs", 10_000_000)
    c.checks.append(Check("p_hat(xstate-hs)", _p(h), 2 / 5, 0.002 * s.widen(10_000_000)))
    sym = stats.symmetrize(h)
    rc = stats.bin_centers()
    rng = np.random.default_rng(s.seed)
    cells = [(i, j) for i in range(5, 95) for j in range(5, 95) if i != j and sym["total"][i, j] >= 100]
    picks = rng.choice(len(cells), size=min(20, len(cells)), replace=False)
    for k in sorted(picks):
        i, j = cells[k]
        n = int(sym["total"][i, j])
        p0 = xstates.p_biv_hs(rc[i], rc[j])
        sigma = math.sqrt(p0 * (1 - p0) / n)
        c.checks.append(Check(f"bin ({rc[i]:.3f}, {rc[j]:.3f}) n={n}", sym["sep"][i, j] / n, p0, 4 * sigma))
    for K in (5, 6, 7):
        hk = s.get(f"xstate-induced:{K}", 1_000_000)
        p0 = xstates.cfd_separability(K - 4)
        sigma = math.sqrt(p0 * (1 - p0) / hk.n_samples)
        c.checks.append(Check(f"p_hat(xstate-induced:{K})", _p(hk), p0, 4 * sigma))
    return c


def c12(s: Samples) -> Criterion:
    c = Criterion(12, "Separability falls with the distance to the product of the reductions")
    for label in ("hs", "bures"):
        h = s.get(label, STAGES[label][-1])
        curve = stats.prod_dist_curve(h)
        ok = curve.n >= 100
        rho = spearmanr(curve.r[ok], curve.p[ok])[0]
        c.checks.append(Check(f"{label} Spearman over bins with n >= 100", float(rho), -0.9, 0.0, "below"))
        c.info[label] = {"bins": int(ok.sum())}
    return c


def c13(s: Samples) -> Criterion:
    c = Criterion(13, "Dyson-index ratio p_qubit / p_rebit^2 on the diagonal")
    dq = stats.diagonal_curve(s.get("hs", 10_000_000))
    dr = stats.diagonal_curve(s.get("rebit", 10_000_000))
    idx = np.arange(10, 81)
    ok = (dq.n[idx] > 0) & (dr.n[idx] > 0) & (dr.p[idx] > 0)
    ratio = dq.p[idx][ok] / dr.p[idx][ok] ** 2
    c.checks.append(Check("mean ratio, bins 10..80", float(np.mean(ratio)), 1.25, 0.05 * s.widen(10_000_000)))
    c.info["bins_used"] = int(ok.sum())
    return c


CRITERIA = (c1, c2, c3, c4, c5, c6, c7, c8, c9, c10, c11, c12, c13)


def verify(scale: str = "full", seed: int = 0, workers: int = 1, progress: bool = True) -> dict:
    samples = Samples(scale, seed, workers, progress)
    samples.run_all()
    results = []
    for fn in CRITERIA:
        crit = fn(samples)
        results.append(crit)
        if progress:
            status = "PASS" if crit.passed else "FAIL"
            print(f"{status} criterion {crit.number:2d}: {crit.title} (min margin {crit.margin:.3g})",
                  file=sys.stderr)
    return {
        "scale": scale,
        "seed": seed,
        "backend": kernels.BACKEND,
        "passed": all(c.passed for c in results),
        "criteria": [c.as_dict() for c in results],
    }
