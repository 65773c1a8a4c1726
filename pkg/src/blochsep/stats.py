"""Classification, mergeable (r_A, r_B) histograms and the estimators built on them."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from blochsep import kernels, qmat

NBINS = kernels.NBINS
Z95 = 1.959964
PD_MAX = 0.9  # product-distance histogram range; the Bell value sqrt(3)/2 is near-extremal
BOUNDARY_DET = 1e-13


class OutOfRange(ValueError):
    pass


class InsufficientData(ValueError):
    pass


class InsufficientBins(ValueError):
    pass


class SepClass(enum.IntEnum):
    ENT = kernels.ENT
    SEP_PT_DOM = kernels.SEP_PT_DOM
    SEP_RHO_DOM = kernels.SEP_RHO_DOM


@dataclass(frozen=True)
class SampleRecord:
    r_a: float
    r_b: float
    det_rho: float
    det_pt: float
    cls: SepClass
    mzz: float
    prod_dist: float


def class_of(det_rho: float, det_pt: float) -> SepClass:
    # ties det_pt == det_rho go to the PT-dominated side
    if det_pt < 0.0:
        return SepClass.ENT
    return SepClass.SEP_PT_DOM if det_pt >= det_rho else SepClass.SEP_RHO_DOM


def classify(rho: np.ndarray) -> SampleRecord:
    """Scalar record of one state via the exact :mod:`qmat` kernels."""
    rho = np.asarray(rho, dtype=complex)
    det_rho = qmat.det4(rho).real
    det_pt = qmat.det4(qmat.partial_transpose(rho)).real
    return SampleRecord(
        r_a=qmat.bloch_radius(qmat.partial_trace(rho, "A")),
        r_b=qmat.bloch_radius(qmat.partial_trace(rho, "B")),
        det_rho=det_rho,
        det_pt=det_pt,
        cls=class_of(det_rho, det_pt),
        mzz=qmat.fano_mzz(rho),
        prod_dist=qmat.product_distance(rho),
    )


def bin_index(r: float) -> int:
    """Index of the width-1/100 radius bin holding ``r``; ``r >= 1`` maps to 99."""
    if r < 0.0 or r > 1.0 + 1e-9 or math.isnan(r):
        raise OutOfRange(f"radius {r!r} outside [0, 1]")
    return min(int(r * NBINS), NBINS - 1)


# ---------------------------------------------------------------------------
# moments


@dataclass
class Moments:
    """Exact integer sums of the radii quantized to ``2**-bits``.

    Integer sums keep merges associative and checkpoints lossless.
    """

    n: int = 0
    sa: int = 0
    sb: int = 0
    saa: int = 0
    sbb: int = 0
    sab: int = 0
    bits: int = kernels.MOMENT_BITS

    def add(self, sums) -> None:
        self.n += int(sums[0])
        self.sa += int(sums[1])
        self.sb += int(sums[2])
        self.saa += int(sums[3])
        self.sbb += int(sums[4])
        self.sab += int(sums[5])

    def as_list(self) -> list[int]:
        return [self.n, self.sa, self.sb, self.saa, self.sbb, self.sab]

    def merged(self, other: "Moments") -> "Moments":
        if self.bits != other.bits:
            raise ValueError("moment quantizations differ")
        out = Moments(bits=self.bits)
        out.add(self.as_list())
        out.add(other.as_list())
        return out

    def correlation(self) -> float:
        if self.n < 2:
            raise InsufficientData(f"need at least 2 samples, have {self.n}")
        cov = self.n * self.sab - self.sa * self.sb
        va = self.n * self.saa - self.sa * self.sa
        vb = self.n * self.sbb - self.sb * self.sb
        if va <= 0 or vb <= 0:
            raise InsufficientData("a radius is constant over the subset")
        return cov / math.sqrt(va) / math.sqrt(vb)

    def mean(self) -> tuple[float, float]:
        scale = float(1 << self.bits) * self.n
        return self.sa / scale, self.sb / scale


def _quantize(r: float, bits: int) -> int:
    return int(math.floor(r * (1 << bits) + 0.5))


# ---------------------------------------------------------------------------
# histogram


def _zeros2():
    return np.zeros((NBINS, NBINS), dtype=np.int64)


def _zeros1():
    return np.zeros((NBINS, 2), dtype=np.int64)


@dataclass
class JointHistogram:
    """Mergeable counters over the 100x100 grid of radius bins.

    ``total``/``sep``/``sep_pt_dom`` are indexed ``[bin(r_A), bin(r_B)]``.
    ``prod_dist`` and ``mzz`` are 1D ``(total, sep)`` histograms over
    ``[0, pd_max]`` and ``[-1, 1]``.
    """

    measure: str
    base_seed: int | None = None
    total: np.ndarray = field(default_factory=_zeros2)
    sep: np.ndarray = field(default_factory=_zeros2)
    sep_pt_dom: np.ndarray = field(default_factory=_zeros2)
    prod_dist: np.ndarray = field(default_factory=_zeros1)
    mzz: np.ndarray = field(default_factory=_zeros1)
    moments_all: Moments = field(default_factory=Moments)
    moments_sep: Moments = field(default_factory=Moments)
    n_samples: int = 0
    n_boundary: int = 0
    max_abs_det_rho: float = 0.0
    pd_max: float = PD_MAX

    # -- accumulation -----------------------------------------------------

    def add_states(self, rho: np.ndarray) -> None:
        """Classify and count a ``(n, 4, 4)`` stack of states (hot path)."""
        for start in range(0, rho.shape[0], kernels.MAX_BATCH):
            self._add_chunk(np.ascontiguousarray(rho[start:start + kernels.MAX_BATCH]))

    def _add_chunk(self, rho):
        r_a, r_b, det_rho, det_pt, mzz, pdist = kernels.analyze(rho)
        cls = kernels.classify_codes(det_rho, det_pt)
        sums = kernels.accumulate(self.total, self.sep, self.sep_pt_dom, self.prod_dist,
                                  self.mzz, r_a, r_b, cls, mzz, pdist, self.pd_max)
        self.moments_all.add(sums[:6])
        self.moments_sep.add(sums[6:])
        self.n_samples += rho.shape[0]
        self.n_boundary += int(np.count_nonzero(np.abs(det_pt) < BOUNDARY_DET))
        if rho.shape[0]:
            self.max_abs_det_rho = max(self.max_abs_det_rho, float(np.max(np.abs(det_rho))))

    def accumulate(self, rec: SampleRecord) -> None:
        """Count a single :class:`SampleRecord`."""
        i, j = bin_index(rec.r_a), bin_index(rec.r_b)
        is_sep = rec.cls != SepClass.ENT
        self.total[i, j] += 1
        ipd = min(int(rec.prod_dist * (NBINS / self.pd_max)), NBINS - 1)
        im = min(max(int(math.floor((rec.mzz + 1.0) * NBINS / 2)), 0), NBINS - 1)
        self.prod_dist[ipd, 0] += 1
        self.mzz[im, 0] += 1
        ka = _quantize(rec.r_a, self.moments_all.bits)
        kb = _quantize(rec.r_b, self.moments_all.bits)
        row = [1, ka, kb, ka * ka, kb * kb, ka * kb]
        self.moments_all.add(row)
        if is_sep:
            self.sep[i, j] += 1
            if rec.cls == SepClass.SEP_PT_DOM:
                self.sep_pt_dom[i, j] += 1
            self.prod_dist[ipd, 1] += 1
            self.mzz[im, 1] += 1
            self.moments_sep.add(row)
        self.n_samples += 1
        if abs(rec.det_pt) < BOUNDARY_DET:
            self.n_boundary += 1
        self.max_abs_det_rho = max(self.max_abs_det_rho, abs(rec.det_rho))

    # -- monoid -----------------------------------------------------------

    @classmethod
    def empty(cls, measure: str, base_seed: int | None = None) -> "JointHistogram":
        return cls(measure=measure, base_seed=base_seed)

    def copy(self) -> "JointHistogram":
        return self.merge(JointHistogram.empty(self.measure, self.base_seed))

    def merge(self, other: "JointHistogram") -> "JointHistogram":
        if self.measure != other.measure:
            raise ValueError(f"cannot merge {self.measure!r} with {other.measure!r}")
        if self.pd_max != other.pd_max:
            raise ValueError("product-distance ranges differ")
        seed = self.base_seed if self.base_seed == other.base_seed else None
        return JointHistogram(
            measure=self.measure,
            base_seed=seed,
            total=self.total + other.total,
            sep=self.sep + other.sep,
            sep_pt_dom=self.sep_pt_dom + other.sep_pt_dom,
            prod_dist=self.prod_dist + other.prod_dist,
            mzz=self.mzz + other.mzz,
            moments_all=self.moments_all.merged(other.moments_all),
            moments_sep=self.moments_sep.merged(other.moments_sep),
            n_samples=self.n_samples + other.n_samples,
            n_boundary=self.n_boundary + other.n_boundary,
            max_abs_det_rho=max(self.max_abs_det_rho, other.max_abs_det_rho),
            pd_max=self.pd_max,
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, JointHistogram):
            return NotImplemented
        return (self.measure == other.measure
                and self.base_seed == other.base_seed
                and self.n_samples == other.n_samples
                and all(np.array_equal(getattr(self, k), getattr(other, k))
                        for k in ("total", "sep", "sep_pt_dom", "prod_dist", "mzz"))
                and self.moments_all == other.moments_all
                and self.moments_sep == other.moments_sep
                and self.n_boundary == other.n_boundary
                and self.max_abs_det_rho == other.max_abs_det_rho
                and self.pd_max == other.pd_max)

    # -- totals -----------------------------------------------------------

    @property
    def n_sep(self) -> int:
        return int(self.sep.sum())

    @property
    def n_sep_pt_dom(self) -> int:
        return int(self.sep_pt_dom.sum())

    @property
    def n_sep_rho_dom(self) -> int:
        return self.n_sep - self.n_sep_pt_dom


# ---------------------------------------------------------------------------
# global estimates


@dataclass(frozen=True)
class Estimate:
    p: float
    n: int
    k: int

    @property
    def stderr(self) -> float:
        return math.sqrt(self.p * (1.0 - self.p) / self.n) if self.n else math.nan

    @property
    def ci95(self) -> tuple[float, float]:
        return self.p - Z95 * self.stderr, self.p + Z95 * self.stderr


def estimate(h: JointHistogram, kind: str = "sep") -> Estimate:
    """Global fraction of separable (``"sep"``), PT-dominated (``"pt"``) or
    rho-dominated (``"rho"``) states."""
    k = {"sep": h.n_sep, "pt": h.n_sep_pt_dom, "rho": h.n_sep_rho_dom}[kind]
    n = h.n_samples
    if n == 0:
        raise InsufficientData("empty histogram")
    return Estimate(k / n, n, k)


# ---------------------------------------------------------------------------
# grids and profiles


def bin_centers() -> np.ndarray:
    return (np.arange(NBINS) + 0.5) / NBINS


def symmetrize(h: JointHistogram) -> dict[str, np.ndarray]:
    """``in + in.T`` for each counter grid (diagonal cells are doubled)."""
    return {k: g + g.T for k, g in
            (("total", h.total), ("sep", h.sep), ("sep_pt_dom", h.sep_pt_dom))}


def _ratio(num, den):
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    out = np.full(den.shape, np.nan)
    np.divide(num, den, out=out, where=den > 0)
    return out


@dataclass
class RadialProfile:
    r_mid: np.ndarray
    n_tot: np.ndarray
    n_sep: np.ndarray
    p_hat: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    p0: float | None

    def inside_band(self) -> np.ndarray:
        return (self.p_hat >= self.ci_low) & (self.p_hat <= self.ci_high)

    def band_coverage(self, r_max: float = 0.95, min_count: int = 1000) -> tuple[int, int]:
        """``(inside, considered)`` over bins with ``r_mid < r_max`` and ``n_tot > min_count``."""
        use = (self.r_mid < r_max) & (self.n_tot > min_count)
        return int(np.count_nonzero(self.inside_band() & use)), int(np.count_nonzero(use))


def _profile(n_tot, n_sep, p0):
    p_hat = _ratio(n_sep, n_tot)
    if p0 is None:
        lo = hi = np.full(NBINS, np.nan)
    else:
        half = np.full(NBINS, np.nan)
        ok = n_tot > 0
        half[ok] = Z95 * np.sqrt(p0 * (1.0 - p0) / n_tot[ok])
        lo, hi = p0 - half, p0 + half
    return RadialProfile(bin_centers(), n_tot, n_sep, p_hat, lo, hi, p0)


def _pooled(grid):
    # rows and columns together: the curve along either Bloch radius
    return grid.sum(axis=1) + grid.sum(axis=0)


def marginal_profile(h: JointHistogram, p0: float | None) -> RadialProfile:
    """Separability probability along either Bloch radius, with a 95% band
    centred on the conjectured value ``p0``."""
    if h.n_samples == 0:
        raise InsufficientData("empty histogram")
    return _profile(_pooled(h.total), _pooled(h.sep), p0)


def split_profile(h: JointHistogram, p0split: float | None, which: str = "pt") -> RadialProfile:
    """Like :func:`marginal_profile` for the PT-dominated (``"pt"``) or
    rho-dominated (``"rho"``) part of the separable states."""
    if h.n_samples == 0:
        raise InsufficientData("empty histogram")
    num = h.sep_pt_dom if which == "pt" else h.sep - h.sep_pt_dom
    return _profile(_pooled(h.total), _pooled(num), p0split)


@dataclass
class Curve:
    r: np.ndarray
    p: np.ndarray
    n: np.ndarray

    def __iter__(self):
        return iter(zip(self.r, self.p, self.n))

    def band_fraction(self, sep_counts: np.ndarray) -> float:
        return float(np.sum(sep_counts) / np.sum(self.n))


def diagonal_curve(h: JointHistogram) -> Curve:
    """Cells ``(i, i)``: the ``r_A = r_B`` section."""
    idx = np.arange(NBINS)
    n = h.total[idx, idx]
    return Curve(bin_centers(), _ratio(h.sep[idx, idx], n), n)


def antidiagonal_curve(h: JointHistogram) -> Curve:
    """Cells ``(i, 99 - i)``, whose centres satisfy ``r_A + r_B = 1``."""
    idx = np.arange(NBINS)
    n = h.total[idx, NBINS - 1 - idx]
    return Curve(bin_centers(), _ratio(h.sep[idx, NBINS - 1 - idx], n), n)


def diagonal_band_fraction(h: JointHistogram) -> float:
    idx = np.arange(NBINS)
    return float(h.sep[idx, idx].sum() / h.total[idx, idx].sum())


def prod_dist_curve(h: JointHistogram) -> Curve:
    centers = (np.arange(NBINS) + 0.5) * (h.pd_max / NBINS)
    return Curve(centers, _ratio(h.prod_dist[:, 1], h.prod_dist[:, 0]), h.prod_dist[:, 0])


def mzz_curve(h: JointHistogram) -> Curve:
    centers = -1.0 + (np.arange(NBINS) + 0.5) * (2.0 / NBINS)
    return Curve(centers, _ratio(h.mzz[:, 1], h.mzz[:, 0]), h.mzz[:, 0])


def correlation(h: JointHistogram, subset: str = "all") -> float:
    """Pearson correlation of ``(r_A, r_B)`` over all or separable states."""
    m = {"all": h.moments_all, "separable": h.moments_sep}[subset]
    return m.correlation()


# ---------------------------------------------------------------------------
# exponent fit


@dataclass(frozen=True)
class FitResult:
    c: float
    p: float
    rss: float
    n_bins_used: int
    reliable: bool


def fit_exponent(counts, area_dim: int, r_mid=None, r_cut: float = 0.99,
                 min_count: int = 100) -> FitResult:
    """Fit ``counts ~ c r^(d-1) (1 - r^2)^p`` by weighted least squares in
    the log domain, weights ``n_i`` (the inverse variance of ``ln n_i``)."""
    counts = np.asarray(counts, dtype=float)
    r = bin_centers() if r_mid is None else np.asarray(r_mid, dtype=float)
    if area_dim not in (1, 2, 3):
        raise ValueError("area_dim must be 1, 2 or 3")
    use = (counts > 0) & (r <= r_cut) & (r > 0)
    if np.count_nonzero(use) < 10:
        raise InsufficientBins(f"only {np.count_nonzero(use)} occupied bins")
    n, rr = counts[use], r[use]
    y = np.log(n) - (area_dim - 1) * np.log(rr)
    x = np.log1p(-rr * rr)
    sw = np.sqrt(n)
    design = np.column_stack([np.ones_like(x), x]) * sw[:, None]
    coef, *_ = np.linalg.lstsq(design, y * sw, rcond=None)
    resid = (y - coef[0] - coef[1] * x) * sw
    reliable = np.count_nonzero(counts[use] >= min_count) >= 10
    return FitResult(float(np.exp(coef[0])), float(coef[1]), float(resid @ resid),
                     int(use.sum()), bool(reliable))


def radial_counts(h: JointHistogram, kind: str = "total") -> np.ndarray:
    grid = {"total": h.total, "sep": h.sep}[kind]
    return _pooled(grid)


# ---------------------------------------------------------------------------
# reference surfaces and curves


def q_null(ra, rb):
    return 16 * np.pi ** 2 * ra ** 2 * rb ** 2 * (1 - ra ** 2) ** 6 * (1 - rb ** 2) ** 6


def q_alt(ra, rb):
    return (16 * np.pi ** 2 * ra ** 2 * rb ** 2 * (1 - ra ** 2) ** 8 * (1 - rb ** 2) ** 8
            / (1 - ra ** 2 * rb ** 2) ** 13)


def tung(ra, rb):
    return 2 * ra + 2 * rb - 4 * ra * rb


def tung_prime(ra, rb):
    return (1.5 * ra ** 2 * rb + 1.5 * ra * rb ** 2 - 6 * ra * rb
            - 0.75 * ra ** 2 + 2.5 * ra - 0.75 * rb ** 2 + 2.5 * rb)


SURFACES = {"Q": q_null, "Q_alt": q_alt, "tung": tung, "tung_prime": tung_prime}


def reference_surface(name: str, ra, rb):
    return SURFACES[name](np.asarray(ra, dtype=float), np.asarray(rb, dtype=float))


def hs_diagonal_model(r):
    r = np.asarray(r, dtype=float)
    return 375 * (1 - r) * (58 * r ** 2 + 17 * r + 2) / (4096 * (8 * r + 1))


def hs_antidiagonal_model(r):
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(r < 0.5, (r + 4) / (24 * r + 8), (r - 5) / (24 * r - 32))


def k3_diagonal_model(r):
    r = np.asarray(r, dtype=float)
    return (1 - r) * (r ** 2 + 6 * r + 1) / 32


def k5_diagonal_model(r):
    r = np.asarray(r, dtype=float)
    return ((1 - r) * (87 * r ** 3 / 2 + 85 * r ** 2 / 4 + 17 * r / 4 + 1 / 3)
            / (40 * r ** 2 + 11 * r + 1))


@dataclass
class ResidualGrid:
    values: np.ndarray
    scale: float
    rss: float


def residual_grid(h: JointHistogram, surface, scale_fit: bool = True,
                  counts: str = "total") -> ResidualGrid:
    """Residuals of symmetrized data against a reference surface at bin centres.

    With ``scale_fit`` the surface is a count model: the least-squares
    multiple of it is subtracted from the symmetrized ``counts`` grid.
    Otherwise it is a probability surface subtracted, unscaled, from the
    symmetrized separability-probability grid (NaN on empty cells).
    """
    if isinstance(surface, str):
        surface = SURFACES[surface]
    rc = bin_centers()
    model = surface(rc[:, None], rc[None, :])
    sym = symmetrize(h)
    if scale_fit:
        data = sym[counts].astype(float)
        scale = float(np.sum(data * model) / np.sum(model * model))
        res = data - scale * model
    else:
        data = _ratio(sym["sep"], sym["total"])
        scale = 1.0
        res = data - model
    finite = np.isfinite(res)
    return ResidualGrid(res, scale, float(np.sum(res[finite] ** 2)))


def dyson_ratio(diag_qubit: Curve, diag_rebit: Curve) -> Curve:
    """``p_qubit / p_rebit**2`` per aligned bin; bins where either curve is
    empty or the rebit probability vanishes are skipped."""
    ok = (diag_qubit.n > 0) & (diag_rebit.n > 0) & (diag_rebit.p > 0)
    ok &= np.isfinite(diag_qubit.p) & np.isfinite(diag_rebit.p)
    ratio = diag_qubit.p[ok] / diag_rebit.p[ok] ** 2
    return Curve(diag_qubit.r[ok], ratio, np.minimum(diag_qubit.n[ok], diag_rebit.n[ok]))
