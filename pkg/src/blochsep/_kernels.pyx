# cython: language_level=3
"""Compiled batch kernels; see ``_kernels_py`` for the reference semantics."""

from libc.math cimport sqrt, floor
from libc.stdint cimport int64_t
import numpy as np

ctypedef double complex cplx

cdef enum:
    NB = 100

NBINS = NB
MOMENT_BITS = 20
MAX_BATCH = 1 << 22

ENT, SEP_PT_DOM, SEP_RHO_DOM = 0, 1, 2


cdef inline double abs2(cplx z) noexcept nogil:
    return z.real * z.real + z.imag * z.imag


cdef inline cplx conj(cplx z) noexcept nogil:
    return z.conjugate()


cdef double det4_real(cplx* a) noexcept nogil:
    # LU with partial pivoting, destroys a (row-major 4x4)
    cdef int k, i, j, p
    cdef cplx det = 1.0, piv, f, tmp
    cdef double best, v
    for k in range(4):
        p = k
        best = abs2(a[5 * k])
        for i in range(k + 1, 4):
            v = abs2(a[4 * i + k])
            if v > best:
                best = v
                p = i
        if best == 0.0:
            return 0.0
        if p != k:
            for j in range(4):
                tmp = a[4 * k + j]
                a[4 * k + j] = a[4 * p + j]
                a[4 * p + j] = tmp
            det = -det
        piv = a[5 * k]
        det = det * piv
        for i in range(k + 1, 4):
            f = a[4 * i + k] / piv
            for j in range(k + 1, 4):
                a[4 * i + j] = a[4 * i + j] - f * a[4 * k + j]
    return det.real


cdef double gram4(const cplx* m, Py_ssize_t ncol, cplx* out) noexcept nogil:
    # out = m m^dag / tr for a row-major 4 x ncol block; returns the trace
    cdef int i, j
    cdef Py_ssize_t k
    cdef cplx acc
    cdef double tr = 0.0
    for i in range(4):
        for j in range(i, 4):
            acc = 0.0
            for k in range(ncol):
                acc = acc + m[i * ncol + k] * conj(m[j * ncol + k])
            out[4 * i + j] = acc
        tr += out[5 * i].real
    if tr < 1e-300:
        return tr
    for i in range(4):
        out[5 * i] = out[5 * i].real / tr
        for j in range(i + 1, 4):
            out[4 * i + j] = out[4 * i + j] / tr
            out[4 * j + i] = conj(out[4 * i + j])
    return tr


def _gram_density(const cplx[:, :, ::1] a):
    cdef Py_ssize_t n = a.shape[0], ncol = a.shape[2], s
    if a.shape[1] != 4:
        raise ValueError("expected a stack of 4 x K matrices")
    rho_arr = np.empty((n, 4, 4), dtype=np.complex128)
    tr_arr = np.empty(n, dtype=np.float64)
    cdef cplx[:, :, ::1] rho = rho_arr
    cdef double[::1] tr = tr_arr
    with nogil:
        for s in range(n):
            tr[s] = gram4(&a[s, 0, 0], ncol, &rho[s, 0, 0])
    return rho_arr, tr_arr


cdef void mgs4(const cplx* z, cplx* q) noexcept nogil:
    # Gram-Schmidt on the columns of z with one re-orthogonalization pass;
    # the implied R has a positive real diagonal, i.e. the Haar phase fix.
    cdef int i, j, l, rep
    cdef cplx r
    cdef double nrm
    for j in range(4):
        for l in range(4):
            q[4 * l + j] = z[4 * l + j]
        for rep in range(2):
            for i in range(j):
                r = 0.0
                for l in range(4):
                    r = r + conj(q[4 * l + i]) * q[4 * l + j]
                for l in range(4):
                    q[4 * l + j] = q[4 * l + j] - r * q[4 * l + i]
        nrm = 0.0
        for l in range(4):
            nrm += abs2(q[4 * l + j])
        nrm = sqrt(nrm)
        for l in range(4):
            q[4 * l + j] = q[4 * l + j] / nrm


def _haar_unitary(const cplx[:, :, ::1] z):
    cdef Py_ssize_t n = z.shape[0], s
    if z.shape[1] != 4 or z.shape[2] != 4:
        # general sizes are rare; defer to the reference path
        from blochsep import _kernels_py
        return _kernels_py.haar_unitary(np.asarray(z))
    out = np.empty((n, 4, 4), dtype=np.complex128)
    cdef cplx[:, :, ::1] u = out
    with nogil:
        for s in range(n):
            mgs4(&z[s, 0, 0], &u[s, 0, 0])
    return out


def _bures_density(const cplx[:, :, ::1] g, const cplx[:, :, ::1] z):
    cdef Py_ssize_t n = g.shape[0], s
    cdef int i, k, l
    cdef cplx u[16]
    cdef cplx m[16]
    cdef cplx acc
    rho_arr = np.empty((n, 4, 4), dtype=np.complex128)
    tr_arr = np.empty(n, dtype=np.float64)
    cdef cplx[:, :, ::1] rho = rho_arr
    cdef double[::1] tr = tr_arr
    with nogil:
        for s in range(n):
            mgs4(&z[s, 0, 0], u)
            for i in range(4):
                for k in range(4):
                    acc = g[s, i, k]
                    for l in range(4):
                        acc = acc + u[4 * i + l] * g[s, l, k]
                    m[4 * i + k] = acc
            tr[s] = gram4(m, 4, &rho[s, 0, 0])
    return rho_arr, tr_arr


def _analyze(const cplx[:, :, ::1] rho):
    cdef Py_ssize_t n = rho.shape[0], s
    cdef int i, j, a_, b_, c_, d_
    cdef cplx w[16]
    cdef cplx qa[4]
    cdef cplx qb[4]
    cdef const cplx* r
    cdef double pa, pb, acc
    out = np.empty((6, n), dtype=np.float64)
    cdef double[:, ::1] o = out
    with nogil:
        for s in range(n):
            r = &rho[s, 0, 0]
            qa[0] = r[0] + r[5]
            qa[1] = r[2] + r[7]
            qa[2] = r[8] + r[13]
            qa[3] = r[10] + r[15]
            qb[0] = r[0] + r[10]
            qb[1] = r[1] + r[11]
            qb[2] = r[4] + r[14]
            qb[3] = r[5] + r[15]
            pa = abs2(qa[0]) + abs2(qa[1]) + abs2(qa[2]) + abs2(qa[3])
            pb = abs2(qb[0]) + abs2(qb[1]) + abs2(qb[2]) + abs2(qb[3])
            pa = 2.0 * pa - 1.0
            pb = 2.0 * pb - 1.0
            o[0, s] = sqrt(0.0 if pa < 0.0 else (1.0 if pa > 1.0 else pa))
            o[1, s] = sqrt(0.0 if pb < 0.0 else (1.0 if pb > 1.0 else pb))
            for i in range(16):
                w[i] = r[i]
            o[2, s] = det4_real(w)
            # partial transpose on qubit B
            for a_ in range(2):
                for b_ in range(2):
                    for c_ in range(2):
                        for d_ in range(2):
                            w[4 * (2 * a_ + b_) + 2 * c_ + d_] = r[4 * (2 * a_ + d_) + 2 * c_ + b_]
            o[3, s] = det4_real(w)
            o[4, s] = r[0].real - r[5].real - r[10].real + r[15].real
            acc = 0.0
            for a_ in range(2):
                for b_ in range(2):
                    for c_ in range(2):
                        for d_ in range(2):
                            acc += abs2(r[4 * (2 * a_ + b_) + 2 * c_ + d_]
                                        - qa[2 * a_ + c_] * qb[2 * b_ + d_])
            o[5, s] = sqrt(acc)
    return out[0], out[1], out[2], out[3], out[4], out[5]


def _classify_codes(const double[::1] det_rho, const double[::1] det_pt):
    cdef Py_ssize_t n = det_pt.shape[0], s
    out = np.empty(n, dtype=np.int8)
    cdef signed char[::1] c = out
    with nogil:
        for s in range(n):
            if det_pt[s] < 0.0:
                c[s] = 0
            elif det_pt[s] >= det_rho[s]:
                c[s] = 1
            else:
                c[s] = 2
    return out


def radius_bins(r):
    return np.minimum((np.asarray(r) * NB).astype(np.int64), NB - 1)


def _accumulate(int64_t[:, ::1] total, int64_t[:, ::1] sep, int64_t[:, ::1] ptdom,
               int64_t[:, ::1] pd_counts, int64_t[:, ::1] mzz_counts,
               const double[::1] r_a, const double[::1] r_b, const signed char[::1] cls,
               const double[::1] mzz, const double[::1] prod_dist, double pd_max):
    cdef Py_ssize_t n = r_a.shape[0], s
    cdef int64_t ia, ib, ipd, im, ka, kb
    cdef int64_t mom[12]
    cdef double scale = <double>(1 << MOMENT_BITS)
    cdef double pd_scale = NB / pd_max
    cdef bint is_sep
    if n > MAX_BATCH:
        raise ValueError(f"batch larger than {MAX_BATCH}")
    for s in range(12):
        mom[s] = 0
    with nogil:
        for s in range(n):
            ia = <int64_t>(r_a[s] * NB)
            ib = <int64_t>(r_b[s] * NB)
            if ia > NB - 1:
                ia = NB - 1
            if ib > NB - 1:
                ib = NB - 1
            is_sep = cls[s] != 0
            total[ia, ib] += 1
            ipd = <int64_t>(prod_dist[s] * pd_scale)
            if ipd > NB - 1:
                ipd = NB - 1
            im = <int64_t>floor((mzz[s] + 1.0) * (NB / 2))
            if im < 0:
                im = 0
            elif im > NB - 1:
                im = NB - 1
            pd_counts[ipd, 0] += 1
            mzz_counts[im, 0] += 1
            ka = <int64_t>floor(r_a[s] * scale + 0.5)
            kb = <int64_t>floor(r_b[s] * scale + 0.5)
            mom[0] += 1
            mom[1] += ka
            mom[2] += kb
            mom[3] += ka * ka
            mom[4] += kb * kb
            mom[5] += ka * kb
            if is_sep:
                sep[ia, ib] += 1
                if cls[s] == 1:
                    ptdom[ia, ib] += 1
                pd_counts[ipd, 1] += 1
                mzz_counts[im, 1] += 1
                mom[6] += 1
                mom[7] += ka
                mom[8] += kb
                mom[9] += ka * ka
                mom[10] += kb * kb
                mom[11] += ka * kb
    return np.array([mom[s] for s in range(12)], dtype=np.int64)


# Public entry points accept any layout; the typed cores need C-contiguous input.

def _c(x, dtype):
    return np.ascontiguousarray(x, dtype=dtype)


def gram_density(a):
    return _gram_density(_c(a, np.complex128))


def haar_unitary(z):
    return _haar_unitary(_c(z, np.complex128))


def bures_density(g, z):
    return _bures_density(_c(g, np.complex128), _c(z, np.complex128))


def analyze(rho):
    return _analyze(_c(rho, np.complex128))


def classify_codes(det_rho, det_pt):
    return _classify_codes(_c(det_rho, np.float64), _c(det_pt, np.float64))


def accumulate(total, sep, ptdom, pd_counts, mzz_counts, r_a, r_b, cls, mzz, prod_dist, pd_max):
    # the count grids are updated in place and must already be C-contiguous int64
    return _accumulate(total, sep, ptdom, pd_counts, mzz_counts,
                       _c(r_a, np.float64), _c(r_b, np.float64), _c(cls, np.int8),
                       _c(mzz, np.float64), _c(prod_dist, np.float64), pd_max)
