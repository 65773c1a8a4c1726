"""Vectorized numpy implementation of the batch kernels.

Same signatures and semantics as the compiled ``_kernels`` extension; used
when the extension is not built or ``BLOCHSEP_PURE_PYTHON`` is set.
"""

import numpy as np

NBINS = 100
MOMENT_BITS = 20
MAX_BATCH = 1 << 22  # keeps per-batch int64 moment sums below 2**62

ENT, SEP_PT_DOM, SEP_RHO_DOM = 0, 1, 2


def _dagger(m):
    return np.conj(np.swapaxes(m, -1, -2))


def gram_density(a):
    """``A A^dagger / tr(A A^dagger)`` for a stack of ``4 x K`` matrices.

    Returns ``(rho, trace)``; rows with ``trace < 1e-300`` are left for the
    caller to redraw.
    """
    w = a @ _dagger(a)
    tr = np.einsum("nii->n", w).real
    with np.errstate(divide="ignore", invalid="ignore"):
        rho = w / tr[:, None, None]
    # exact Hermitian symmetry and a real diagonal
    rho = 0.5 * (rho + _dagger(rho))
    return rho, tr


def haar_unitary(z):
    """Haar unitaries from a stack of square complex Ginibre matrices."""
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    return q * (d / np.abs(d))[..., None, :]


def bures_density(g, z):
    """Bures-distributed states ``(1+U) G G^dag (1+U)^dag`` normalized."""
    u = haar_unitary(z)
    m = g + u @ g
    return gram_density(m)


def analyze(rho):
    """Per-state scalars: ``r_a, r_b, det_rho, det_pt, mzz, prod_dist``."""
    n = rho.shape[0]
    t = rho.reshape(n, 2, 2, 2, 2)
    ra = np.einsum("nabcb->nac", t)
    rb = np.einsum("nabad->nbd", t)
    pa = np.sum(np.abs(ra) ** 2, axis=(1, 2))
    pb = np.sum(np.abs(rb) ** 2, axis=(1, 2))
    r_a = np.sqrt(np.clip(2.0 * pa - 1.0, 0.0, 1.0))
    r_b = np.sqrt(np.clip(2.0 * pb - 1.0, 0.0, 1.0))
    det_rho = np.linalg.det(rho).real
    pt = t.transpose(0, 1, 4, 3, 2).reshape(n, 4, 4)
    det_pt = np.linalg.det(pt).real
    d = np.einsum("nii->ni", rho).real
    mzz = d[:, 0] - d[:, 1] - d[:, 2] + d[:, 3]
    prod = np.einsum("nac,nbd->nabcd", ra, rb).reshape(n, 4, 4)
    prod_dist = np.sqrt(np.sum(np.abs(rho - prod) ** 2, axis=(1, 2)))
    return r_a, r_b, det_rho, det_pt, mzz, prod_dist


def classify_codes(det_rho, det_pt):
    cls = np.full(det_pt.shape, ENT, dtype=np.int8)
    sep = det_pt >= 0.0
    cls[sep & (det_pt >= det_rho)] = SEP_PT_DOM
    cls[sep & (det_pt < det_rho)] = SEP_RHO_DOM
    return cls


def radius_bins(r):
    return np.minimum((r * NBINS).astype(np.int64), NBINS - 1)


def _moments(ka, kb):
    return [ka.size, int(ka.sum()), int(kb.sum()), int((ka * ka).sum()),
            int((kb * kb).sum()), int((ka * kb).sum())]


def accumulate(total, sep, ptdom, pd_counts, mzz_counts,
               r_a, r_b, cls, mzz, prod_dist, pd_max):
    """Add a batch into the count arrays in place.

    Returns the 12 integer moment sums (all states, then separable states) of
    the radii quantized to ``2**-MOMENT_BITS``.
    """
    if r_a.size > MAX_BATCH:
        raise ValueError(f"batch larger than {MAX_BATCH}")
    ia = radius_bins(r_a)
    ib = radius_bins(r_b)
    flat = ia * NBINS + ib
    is_sep = cls != ENT
    size = NBINS * NBINS
    total += np.bincount(flat, minlength=size).reshape(NBINS, NBINS)
    sep += np.bincount(flat[is_sep], minlength=size).reshape(NBINS, NBINS)
    ptdom += np.bincount(flat[cls == SEP_PT_DOM], minlength=size).reshape(NBINS, NBINS)

    ipd = np.clip((prod_dist * (NBINS / pd_max)).astype(np.int64), 0, NBINS - 1)
    pd_counts[:, 0] += np.bincount(ipd, minlength=NBINS)
    pd_counts[:, 1] += np.bincount(ipd[is_sep], minlength=NBINS)
    im = np.clip(np.floor((mzz + 1.0) * (NBINS / 2)).astype(np.int64), 0, NBINS - 1)
    mzz_counts[:, 0] += np.bincount(im, minlength=NBINS)
    mzz_counts[:, 1] += np.bincount(im[is_sep], minlength=NBINS)

    scale = float(1 << MOMENT_BITS)
    ka = np.floor(r_a * scale + 0.5).astype(np.int64)
    kb = np.floor(r_b * scale + 0.5).astype(np.int64)
    return np.array(_moments(ka, kb) + _moments(ka[is_sep], kb[is_sep]), dtype=np.int64)
