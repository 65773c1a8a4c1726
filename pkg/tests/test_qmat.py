import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from blochsep import measures, qmat


def random_states(n, seed=0, K=4):
    return measures.induced_batch(K, np.random.default_rng(seed), n)


def product_state(a, b):
    qa = qmat.Qubit2.from_bloch(*a).matrix
    qb = qmat.Qubit2.from_bloch(*b).matrix
    return np.kron(qa, qb), qa, qb


unit_ball = st.tuples(*[st.floats(-1, 1)] * 3).filter(lambda v: sum(x * x for x in v) <= 1)


# ---------------------------------------------------------------------------
# validation


def test_check_density_accepts_maximally_mixed():
    qmat.check_density(np.eye(4) / 4)


@pytest.mark.parametrize("bad, exc", [
    (np.diag([0.5, 0.5, 0.5, -0.5]), qmat.InvalidState),           # trace 1 but not PSD
    (np.eye(4) / 2, qmat.InvalidState),                              # trace 2
    (np.eye(4) / 4 + np.triu(np.full((4, 4), 0.1), 1), qmat.InvalidState),  # not Hermitian
])
def test_check_density_rejects(bad, exc):
    with pytest.raises(exc):
        qmat.check_density(bad)


def test_check_density_real_only():
    rho = np.eye(4, dtype=complex) / 4
    rho[0, 1], rho[1, 0] = 0.01j, -0.01j
    qmat.check_density(rho)
    with pytest.raises(qmat.InvalidState):
        qmat.check_density(rho, real_only=True)


# ---------------------------------------------------------------------------
# reductions and radii


def test_partial_trace_of_maximally_mixed():
    for keep in "AB":
        q = qmat.partial_trace(np.eye(4) / 4, keep)
        np.testing.assert_allclose(q, np.eye(2) / 2, atol=1e-15)
        assert qmat.bloch_radius(q) == 0.0


@given(unit_ball, unit_ball)
def test_partial_trace_of_product(a, b):
    rho, qa, qb = product_state(a, b)
    np.testing.assert_allclose(qmat.partial_trace(rho, "A"), qa, atol=1e-14)
    np.testing.assert_allclose(qmat.partial_trace(rho, "B"), qb, atol=1e-14)


def test_bell_state_reductions_unpolarized():
    bell = qmat.bell_phi_plus()
    for keep in "AB":
        assert qmat.bloch_radius(qmat.partial_trace(bell, keep)) == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("q, r", [
    (np.eye(2) / 2, 0.0),
    (np.diag([1.0, 0.0]), 1.0),
    (np.diag([0.75, 0.25]), 0.5),
])
def test_bloch_radius_examples(q, r):
    assert qmat.bloch_radius(q) == pytest.approx(r, abs=1e-15)


@given(unit_ball)
def test_bloch_vector_round_trip(b):
    q = qmat.Qubit2.from_bloch(*b)
    np.testing.assert_allclose(qmat.bloch_vector(q.matrix), b, atol=1e-12)
    assert q.radius == pytest.approx(np.linalg.norm(b), abs=1e-7)


def test_radius_is_one_iff_pure():
    rng = np.random.default_rng(1)
    pure = [qmat.ket_density(rng.normal(size=2) + 1j * rng.normal(size=2)) for _ in range(50)]
    products = [np.kron(q, np.eye(2) / 2) for q in pure]
    mixed = random_states(200, seed=2)
    for m in [qmat.partial_trace(r, "A") for r in products] + pure:
        purity = np.trace(m @ m).real
        assert (abs(qmat.bloch_radius(m) - 1) < 1e-9) == (abs(purity - 1) < 1e-9)
    for r in mixed:
        m = qmat.partial_trace(r, "B")
        assert 0 <= qmat.bloch_radius(m) < 1 - 1e-9


# ---------------------------------------------------------------------------
# partial transpose


def test_partial_transpose_fixes_identity():
    np.testing.assert_array_equal(qmat.partial_transpose(np.eye(4) / 4), np.eye(4) / 4)


@given(unit_ball, unit_ball)
def test_partial_transpose_of_product(a, b):
    rho, qa, qb = product_state(a, b)
    np.testing.assert_allclose(qmat.partial_transpose(rho), np.kron(qa, qb.T), atol=1e-15)


def test_werner_partial_transpose_spectrum():
    # eigenvalues of the PT of w|phi+><phi+| + (1-w)I/4: (1+w)/4 three times and (1-3w)/4
    pt = qmat.partial_transpose(qmat.werner_state(0.5))
    np.testing.assert_allclose(qmat.eig_hermitian(pt), [-1 / 8, 3 / 8, 3 / 8, 3 / 8], atol=1e-12)
    assert qmat.det4(pt).real == pytest.approx(-27 / 4096, abs=1e-15)
    assert qmat.det_cofactor(pt).real == pytest.approx(-27 / 4096, abs=1e-15)


def test_partial_transpose_involution_and_trace():
    rho = random_states(100_000, seed=3)
    pt = rho.reshape(-1, 2, 2, 2, 2).transpose(0, 1, 4, 3, 2).reshape(-1, 4, 4)
    for r, p in zip(rho[:200], pt[:200]):
        np.testing.assert_array_equal(qmat.partial_transpose(r), p)
    back = pt.reshape(-1, 2, 2, 2, 2).transpose(0, 1, 4, 3, 2).reshape(-1, 4, 4)
    assert np.max(np.abs(back - rho)) <= 1e-14
    assert np.max(np.abs(np.einsum("nii->n", pt) - 1)) <= 1e-12
    assert np.max(np.abs(pt - np.conj(np.swapaxes(pt, 1, 2)))) <= 1e-12


def test_ppt_det_sign_matches_min_eigenvalue():
    # 1e6 states: sign(det PT) >= 0 iff min eig PT >= 0, up to boundary noise
    rng = np.random.default_rng(4)
    disagree = boundary = 0
    for _ in range(4):
        rho = measures.induced_batch(4, rng, 250_000)
        pt = rho.reshape(-1, 2, 2, 2, 2).transpose(0, 1, 4, 3, 2).reshape(-1, 4, 4)
        det = np.linalg.det(pt).real
        emin = np.linalg.eigvalsh(pt)[:, 0]
        bad = (det >= 0) != (emin >= 0)
        boundary += int(np.count_nonzero(np.abs(det) < 1e-13))
        disagree += int(np.count_nonzero(bad & (np.abs(det) >= 1e-13)))
    assert disagree == 0
    print(f"boundary cases |det PT| < 1e-13: {boundary}")


# ---------------------------------------------------------------------------
# determinants and eigenvalues


def test_det4_examples():
    assert qmat.det4(np.eye(4)) == pytest.approx(1.0)
    assert qmat.det4(np.eye(4) / 4) == pytest.approx(1 / 256, abs=1e-18)


hermitian4 = arrays(np.float64, (2, 4, 4), elements=st.floats(-3, 3)).map(
    lambda a: (a[0] + a[0].T) + 1j * (a[1] - a[1].T))


@settings(max_examples=200)
@given(hermitian4)
def test_det_routes_and_eigen_agree(m):
    d_lu = qmat.det4(m)
    d_cof = qmat.det_cofactor(m)
    ev = qmat.eig_hermitian(m)
    scale = max(1.0, float(np.max(np.abs(m)))) ** 4
    assert abs(d_lu - d_cof) <= 1e-9 * scale
    assert abs(d_lu - np.prod(ev)) <= 1e-9 * scale
    np.testing.assert_allclose(ev, np.linalg.eigvalsh(m), atol=1e-9 * max(1.0, np.max(np.abs(m))))


@pytest.mark.parametrize("m, ev", [
    (np.eye(4) / 4, [0.25] * 4),
    (np.diag([0.4, 0.1, 0.3, 0.2]), [0.1, 0.2, 0.3, 0.4]),
])
def test_eig_hermitian_examples(m, ev):
    np.testing.assert_allclose(qmat.eig_hermitian(m), ev, atol=1e-15)


def test_eig_hermitian_rejects_non_hermitian():
    with pytest.raises(qmat.NonHermitianInput):
        qmat.eig_hermitian(np.triu(np.ones((4, 4))))


# ---------------------------------------------------------------------------
# correlators and distances


@pytest.mark.parametrize("ket, m", [([1, 0, 0, 0], 1.0), ([0, 1, 0, 0], -1.0)])
def test_fano_mzz_basis_states(ket, m):
    assert qmat.fano_mzz(qmat.ket_density(ket)) == m


def test_fano_mzz_maximally_mixed():
    assert qmat.fano_mzz(np.eye(4) / 4) == 0.0


def test_product_distance_examples():
    assert qmat.product_distance(np.eye(4) / 4) == pytest.approx(0.0, abs=1e-16)
    assert qmat.product_distance(qmat.bell_phi_plus()) == pytest.approx(np.sqrt(3) / 2, abs=1e-15)


@given(unit_ball, unit_ball)
def test_product_distance_vanishes_on_products(a, b):
    rho, _, _ = product_state(a, b)
    assert qmat.product_distance(rho) < 1e-10


def test_product_distance_zero_iff_product():
    for rho in random_states(500, seed=5):
        qa, qb = qmat.partial_trace(rho, "A"), qmat.partial_trace(rho, "B")
        is_product = np.max(np.abs(rho - np.kron(qa, qb))) < 1e-10
        assert (qmat.product_distance(rho) < 1e-10) == is_product
        assert not is_product
