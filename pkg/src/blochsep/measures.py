"""Seeded random two-qubit states under the supported ensembles.

Every batch sampler takes a :class:`numpy.random.Generator` and a count and
returns a ``(n, 4, 4)`` complex stack.  For the Ginibre-based ensembles a
batch of ``n`` draws consumes the generator exactly like ``n`` consecutive
single draws; the X-state sampler draws its gamma variates first, so only
equal-sized batches are reproducible there.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from blochsep import kernels


class UnsupportedMeasure(ValueError):
    pass


class Family(enum.Enum):
    HILBERT_SCHMIDT = "hs"
    INDUCED = "induced"
    BURES = "bures"
    REBIT_HS = "rebit"
    XSTATE_HS = "xstate-hs"
    XSTATE_INDUCED = "xstate-induced"


@dataclass(frozen=True)
class MeasureSpec:
    """Which ensemble to sample; ``K`` is the ancilla dimension."""

    family: Family
    K: int = 4

    def __post_init__(self):
        if self.family is Family.HILBERT_SCHMIDT and self.K != 4:
            raise UnsupportedMeasure("Hilbert-Schmidt is the K=4 induced measure")
        if self.family is Family.INDUCED and self.K < 3:
            raise UnsupportedMeasure(f"induced measure needs K >= 3, got {self.K}")
        if self.family is Family.XSTATE_INDUCED and self.K < 5:
            raise UnsupportedMeasure(
                f"X-state induced sampling needs K >= 5, got {self.K} "
                "(the K=3 weight det(rho)^-1 is unbounded)")

    @classmethod
    def parse(cls, label: str) -> "MeasureSpec":
        """Parse CLI labels such as ``hs``, ``induced:5`` or ``xstate-induced:6``."""
        name, _, k = label.strip().lower().partition(":")
        try:
            family = Family(name)
        except ValueError:
            raise UnsupportedMeasure(f"unknown measure {label!r}") from None
        if family in (Family.INDUCED, Family.XSTATE_INDUCED):
            if not k:
                raise UnsupportedMeasure(f"{name} needs an ancilla dimension, e.g. {name}:5")
            return cls(family, int(k))
        if k:
            raise UnsupportedMeasure(f"{name} takes no parameter")
        return cls(family)

    @property
    def label(self) -> str:
        if self.family in (Family.INDUCED, Family.XSTATE_INDUCED):
            return f"{self.family.value}:{self.K}"
        return self.family.value

    @property
    def real_only(self) -> bool:
        return self.family is Family.REBIT_HS

    @property
    def is_xstate(self) -> bool:
        return self.family in (Family.XSTATE_HS, Family.XSTATE_INDUCED)

    @property
    def bloch_dim(self) -> int:
        """Dimension of the Bloch body each reduced state ranges over."""
        if self.is_xstate:
            return 1
        return 2 if self.real_only else 3

    @property
    def det_power(self) -> int:
        """Exponent ``K - 4`` of the det(rho) weight relative to Hilbert-Schmidt."""
        return self.K - 4


HS = MeasureSpec(Family.HILBERT_SCHMIDT)


@dataclass(frozen=True)
class RngStream:
    """A reproducible, statistically independent random stream."""

    base_seed: int
    stream_index: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.base_seed, spawn_key=(self.stream_index,))
        return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class XStateCoords:
    """Diagonal weights and the two antidiagonal entries of an X-state."""

    p: tuple[float, float, float, float]
    x14: float
    y14: float
    x23: float
    y23: float

    def matrix(self) -> np.ndarray:
        z14 = np.array([self.x14 + 1j * self.y14])
        z23 = np.array([self.x23 + 1j * self.y23])
        return xstate_matrices(np.array([self.p]), z14, z23)[0]

    @property
    def radii(self) -> tuple[float, float]:
        p1, p2, p3, p4 = self.p
        return abs(p1 + p2 - p3 - p4), abs(p1 + p3 - p2 - p4)

    @property
    def separable(self) -> bool:
        # the partial transpose swaps the two antidiagonal moduli
        p1, p2, p3, p4 = self.p
        return (p1 * p4 >= self.x23 ** 2 + self.y23 ** 2
                and p2 * p3 >= self.x14 ** 2 + self.y14 ** 2)


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    return rng


# ---------------------------------------------------------------------------
# primitives


def ginibre(rows: int, cols: int, real_only: bool, rng, size: int | None = None) -> np.ndarray:
    """Matrix (or stack of ``size`` matrices) with i.i.d. standard normal
    real and, unless ``real_only``, imaginary parts."""
    rng = _as_generator(rng)
    lead = () if size is None else (size,)
    if real_only:
        return rng.standard_normal(lead + (rows, cols))
    return rng.standard_normal(lead + (rows, cols, 2)).view(np.complex128)[..., 0]


def haar_unitary(n: int, rng, size: int | None = None) -> np.ndarray:
    """Haar-random unitary from the QR factorization of a complex Ginibre
    matrix, with the phases of ``diag(R)`` divided out of ``Q``."""
    z = ginibre(n, n, False, rng, size=size)
    stack = z if size is not None else z[None]
    u = kernels.haar_unitary(np.ascontiguousarray(stack))
    return u if size is not None else u[0]


# ---------------------------------------------------------------------------
# generic ensembles


def _redraw_degenerate(rho, tr, redraw):
    # AA^dag with vanishing trace has probability ~0; redraw those rows
    bad = ~(tr >= 1e-300)
    while bad.any():
        idx = np.flatnonzero(bad)
        new_rho, new_tr = redraw(idx.size)
        rho[idx] = new_rho
        tr[idx] = new_tr
        bad[idx] = ~(new_tr >= 1e-300)
    return rho


def induced_batch(K: int, rng, n: int, real_only: bool = False) -> np.ndarray:
    if K < 3:
        raise UnsupportedMeasure(f"induced measure needs K >= 3, got {K}")
    rng = _as_generator(rng)

    def draw(m):
        a = ginibre(4, K, real_only, rng, size=m)
        if real_only:
            a = a.astype(np.complex128)
        return kernels.gram_density(np.ascontiguousarray(a))

    rho, tr = draw(n)
    return _redraw_degenerate(rho, tr, draw)


def bures_batch(rng, n: int) -> np.ndarray:
    rng = _as_generator(rng)

    def draw(m):
        # G and the Ginibre matrix behind U are adjacent per draw
        gz = rng.standard_normal((m, 2, 4, 4, 2)).view(np.complex128)[..., 0]
        g = np.ascontiguousarray(gz[:, 0])
        z = np.ascontiguousarray(gz[:, 1])
        return kernels.bures_density(g, z)

    rho, tr = draw(n)
    return _redraw_degenerate(rho, tr, draw)


def sample_induced(K: int, rng) -> np.ndarray:
    """One state from the random induced measure with ancilla dimension ``K``."""
    return induced_batch(K, rng, 1)[0]


def sample_hs(rng) -> np.ndarray:
    """One Hilbert-Schmidt state, ``A A^dag / tr(A A^dag)`` with 4x4 complex Ginibre ``A``."""
    return sample_induced(4, rng)


def sample_bures(rng) -> np.ndarray:
    return bures_batch(rng, 1)[0]


REBIT_COLUMNS = 5


def rebit_batch(rng, n: int) -> np.ndarray:
    """Real two-rebit states under the Hilbert-Schmidt (flat) measure.

    For a real ``N x K`` Ginibre ``A`` the law of ``A A^T / tr`` carries the
    weight ``det(rho)**((K - N - 1) / 2)``, so the flat measure needs
    ``K = N + 1 = 5`` columns (a square ``A`` would weight by ``det**-1/2``).
    """
    return induced_batch(REBIT_COLUMNS, rng, n, real_only=True)


def sample_rebit(rng) -> np.ndarray:
    """One real two-rebit state under the Hilbert-Schmidt measure."""
    return rebit_batch(rng, 1)[0]


# ---------------------------------------------------------------------------
# X-states


def xstate_matrices(p: np.ndarray, z14: np.ndarray, z23: np.ndarray) -> np.ndarray:
    n = p.shape[0]
    rho = np.zeros((n, 4, 4), dtype=np.complex128)
    for i in range(4):
        rho[:, i, i] = p[:, i]
    rho[:, 0, 3] = z14
    rho[:, 3, 0] = np.conj(z14)
    rho[:, 1, 2] = z23
    rho[:, 2, 1] = np.conj(z23)
    return rho


def xstate_coords_batch(det_power: int, rng, n: int):
    """Exact draws from the density proportional to ``det(rho)**det_power``
    times the flat measure on X-states.

    Integrating the antidiagonal entry ``z14`` over its disk
    ``|z14|^2 <= p1 p4`` gives ``(p1 p4)**(m+1)`` up to a constant (``m`` the
    det power), so the diagonal is Dirichlet(m+2, ..., m+2), and given the
    diagonal ``u = |z14|^2 / (p1 p4)`` has density ``(m+1)(1-u)**m``; the
    phase is uniform.  Same for ``z23``.
    """
    rng = _as_generator(rng)
    m = int(det_power)
    if m < 0:
        raise UnsupportedMeasure("negative det powers are not normalizable by this sampler")
    g = rng.standard_gamma(m + 2.0, size=(n, 4))
    p = g / g.sum(axis=1, keepdims=True)
    v = rng.random((n, 2, 2))
    u = 1.0 - (1.0 - v[..., 0]) ** (1.0 / (m + 1))
    phase = np.exp(2j * np.pi * v[..., 1])
    cap = np.stack([p[:, 0] * p[:, 3], p[:, 1] * p[:, 2]], axis=1)
    z = np.sqrt(u * cap) * phase
    return p, z[:, 0], z[:, 1]


def xstate_batch(det_power: int, rng, n: int) -> np.ndarray:
    return xstate_matrices(*xstate_coords_batch(det_power, rng, n))


def _coords(p, z14, z23) -> XStateCoords:
    return XStateCoords(tuple(float(x) for x in p), float(z14.real), float(z14.imag),
                        float(z23.real), float(z23.imag))


def sample_xstate_hs(rng) -> XStateCoords:
    """One X-state drawn from the flat (Hilbert-Schmidt) measure."""
    p, z14, z23 = xstate_coords_batch(0, rng, 1)
    return _coords(p[0], z14[0], z23[0])


def sample_xstate_induced(K: int, rng) -> XStateCoords:
    if K < 5:
        raise UnsupportedMeasure(f"X-state induced sampling needs K >= 5, got {K}")
    p, z14, z23 = xstate_coords_batch(K - 4, rng, 1)
    return _coords(p[0], z14[0], z23[0])


def xstate_rejection_batch(det_power: int, rng, n: int, chunk: int = 1 << 18):
    """Reference sampler by plain rejection (slow, used to cross-check).

    Diagonal uniform on the simplex, antidiagonal components uniform on
    ``[-1/2, 1/2]^4``, kept when both positivity constraints hold and then
    with probability ``(256 det rho)**det_power``.  Returns ``(p, z14, z23,
    acceptance_rate)``.
    """
    rng = _as_generator(rng)
    kept_p, kept_z14, kept_z23 = [], [], []
    have = tried = 0
    while have < n:
        p = rng.dirichlet(np.ones(4), size=chunk)
        xy = rng.random((chunk, 4)) - 0.5
        z14 = xy[:, 0] + 1j * xy[:, 1]
        z23 = xy[:, 2] + 1j * xy[:, 3]
        f14 = p[:, 0] * p[:, 3] - np.abs(z14) ** 2
        f23 = p[:, 1] * p[:, 2] - np.abs(z23) ** 2
        ok = (f14 >= 0) & (f23 >= 0)
        if det_power:
            w = (256.0 * np.where(ok, f14 * f23, 0.0)) ** det_power
            ok &= rng.random(chunk) < w
        tried += chunk
        kept_p.append(p[ok])
        kept_z14.append(z14[ok])
        kept_z23.append(z23[ok])
        have += int(ok.sum())
    p = np.concatenate(kept_p)[:n]
    return (p, np.concatenate(kept_z14)[:n], np.concatenate(kept_z23)[:n], have / tried)


# ---------------------------------------------------------------------------
# dispatch


def sample_batch(spec: MeasureSpec, rng, n: int) -> np.ndarray:
    """``n`` states from ``spec`` as a ``(n, 4, 4)`` complex stack."""
    fam = spec.family
    if fam in (Family.HILBERT_SCHMIDT, Family.INDUCED):
        return induced_batch(spec.K, rng, n)
    if fam is Family.REBIT_HS:
        return rebit_batch(rng, n)
    if fam is Family.BURES:
        return bures_batch(rng, n)
    if fam is Family.XSTATE_HS:
        return xstate_batch(0, rng, n)
    if fam is Family.XSTATE_INDUCED:
        return xstate_batch(spec.det_power, rng, n)
    raise UnsupportedMeasure(str(spec))


def sample_dispatch(spec: MeasureSpec, rng) -> np.ndarray:
    return sample_batch(spec, rng, 1)[0]
