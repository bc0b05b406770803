import numpy as np
import pytest

from psideal.errors import (
    BreakdownError,
    DegenerateDataError,
    ShapeError,
    TooFewImagesError,
    UnderdeterminedError,
)
from psideal.linear import (
    align_estimate,
    align_lights,
    cholesky_factor,
    estimate_lights_linear,
    gram_design_matrix,
    gram_from_params,
    rank3_factor,
    solve_gram,
)
from psideal.model import DataMatrix, GridSpec
from psideal.synth import SyntheticScenario, generate_dataset


def random_rank3_data(rng, p=80, q=9):
    """Exactly rank-3 nonnegative stack from frontal normals and lights."""
    normals = rng.normal(size=(3, p)) * 0.3
    normals[2] = 1.0
    normals /= np.linalg.norm(normals, axis=0)
    albedo = 0.5 + 0.5 * rng.random(p)
    lights = rng.normal(size=(3, q)) * 0.3
    lights[2] = 1.0
    lights /= np.linalg.norm(lights, axis=0)
    M = (albedo * normals).T @ lights
    assert np.min(M) > 0
    return DataMatrix(M), albedo * normals, lights


def clean_synthetic(nodes=31, seed=0):
    spec = GridSpec(2.0, nodes - 2, nodes - 2)
    scn = SyntheticScenario(
        spec=spec,
        surface="gaussian_bump",
        surface_params={"amplitude": 0.35, "width": 0.4},
        albedo="two_tone",
        seed=seed,
    )
    return generate_dataset(scn)


def test_rank3_factor_exact_rank3_input():
    rng = np.random.default_rng(2)
    data, _, _ = random_rank3_data(rng)
    fact = rank3_factor(data)
    s = fact.singular_values
    assert s[3] / s[2] < 1e-10
    approx = fact.pixel_factor.T @ fact.light_factor
    assert np.linalg.norm(approx - data.values) < 1e-10 * s[0]


def test_rank3_factor_eckart_young():
    rng = np.random.default_rng(3)
    M = rng.random((120, 10))
    fact = rank3_factor(DataMatrix(M))
    resid = np.linalg.norm(M - fact.pixel_factor.T @ fact.light_factor, ord=2)
    assert abs(resid - fact.singular_values[3]) < 1e-10 * fact.singular_values[0]


def test_rank3_factor_rejects_bad_input():
    with pytest.raises(TooFewImagesError):
        rank3_factor(DataMatrix(np.ones((10, 2))))
    with pytest.raises(DegenerateDataError):
        rank3_factor(DataMatrix(np.zeros((10, 4))))
    with pytest.raises(ShapeError):
        rank3_factor(DataMatrix(np.ones((4, 6))))


def test_rank3_factor_large_thin_shape_contract():
    rng = np.random.default_rng(4)
    left = rng.random((702927, 3))
    right = rng.random((3, 20))
    fact = rank3_factor(DataMatrix(left @ right))
    assert fact.light_factor.shape == (3, 20)
    assert fact.pixel_factor.shape == (3, 702927)
    assert fact.singular_values.shape == (20,)


def test_gram_design_matrix_rows():
    H = gram_design_matrix(np.array([[1.0, 1.0], [0.0, 1.0], [0.0, 1.0]]))
    assert np.allclose(H[0], [1, 0, 0, 0, 0, 0])
    assert np.allclose(H[1], [1, 1, 1, 2, 2, 2])
    rng = np.random.default_rng(5)
    Z = rng.normal(size=(3, 7))
    H = gram_design_matrix(Z)
    # identity Gram action: row . [1,1,1,0,0,0] = ||z||^2
    assert np.allclose(H @ np.array([1.0, 1, 1, 0, 0, 0]), (Z**2).sum(axis=0))
    # general symmetric matrix action matches the quadratic form
    params = rng.normal(size=6)
    G = gram_from_params(params)
    assert np.allclose(H @ params, np.einsum("it,ij,jt->t", Z, G, Z))


def test_solve_gram_identity_for_unit_columns():
    rng = np.random.default_rng(6)
    Z = rng.normal(size=(3, 9))
    Z /= np.linalg.norm(Z, axis=0)
    cand = solve_gram(gram_design_matrix(Z))
    assert np.allclose(cand.params, [1, 1, 1, 0, 0, 0], atol=1e-10)
    assert np.allclose(cand.gram, np.eye(3), atol=1e-10)
    assert cand.min_eigenvalue == pytest.approx(1.0, abs=1e-10)
    assert cand.residual < 1e-10
    assert not cand.degenerate


def test_solve_gram_underdetermined():
    rng = np.random.default_rng(7)
    with pytest.raises(UnderdeterminedError):
        solve_gram(gram_design_matrix(rng.normal(size=(3, 5))))


def test_solve_gram_residual_matches_constraints():
    rng = np.random.default_rng(8)
    Z = rng.normal(size=(3, 11))
    cand = solve_gram(gram_design_matrix(Z))
    assert np.allclose(cand.gram, cand.gram.T)
    constraints = np.einsum("it,ij,jt->t", Z, cand.gram, Z) - 1.0
    assert np.linalg.norm(constraints) == pytest.approx(cand.residual, rel=1e-12)


def test_solve_gram_positive_on_clean_synthetic():
    ds = clean_synthetic()
    fact = rank3_factor(ds.data)
    cand = solve_gram(gram_design_matrix(fact.light_factor))
    assert cand.min_eigenvalue > 0


def test_cholesky_factor_known_cases():
    assert np.allclose(cholesky_factor(np.eye(3)), np.eye(3))
    assert np.allclose(cholesky_factor(np.diag([4.0, 1, 1])), np.diag([2.0, 1, 1]))
    with pytest.raises(BreakdownError) as info:
        cholesky_factor(np.diag([1.0, 1.0, -0.1]))
    assert info.value.min_eigenvalue == pytest.approx(-0.1)


@pytest.mark.parametrize("eps,ok", [(-1e-3, False), (0.0, False), (1e-3, True)])
def test_cholesky_factor_definiteness_sweep(eps, ok):
    G = np.diag([1.0, 1.0, eps])
    if ok:
        R = cholesky_factor(G)
        assert np.allclose(R.T @ R, G)
    else:
        with pytest.raises(BreakdownError) as info:
            cholesky_factor(G)
        assert info.value.min_eigenvalue == pytest.approx(eps, abs=1e-15)


def test_cholesky_factor_random_spd():
    rng = np.random.default_rng(9)
    for _ in range(20):
        A = rng.normal(size=(3, 3))
        G = A @ A.T + 0.1 * np.eye(3)
        R = cholesky_factor(G)
        assert np.allclose(np.tril(R, -1), 0.0)
        assert np.all(np.diag(R) > 0)
        assert np.max(np.abs(R.T @ R - G)) < 1e-12 * np.linalg.norm(G, 2)


def test_estimate_lights_linear_unit_columns_and_consistency():
    ds = clean_synthetic()
    est = estimate_lights_linear(ds.data)
    norms = np.linalg.norm(est.raw_lights, axis=0)
    assert np.all(norms > 1 - 1e-6) and np.all(norms < 1 + 1e-6)
    # factorization consistency on exactly rank-3 data
    rng = np.random.default_rng(10)
    data, _, _ = random_rank3_data(rng)
    est = estimate_lights_linear(data)
    rebuilt = est.pseudo_normals.T @ est.raw_lights
    rel = np.linalg.norm(rebuilt - data.values) / np.linalg.norm(data.values)
    assert rel < 1e-9


def test_estimate_lights_linear_too_few_images():
    with pytest.raises(TooFewImagesError):
        estimate_lights_linear(DataMatrix(np.ones((20, 5))))


def test_estimate_lights_linear_breakdown_on_indefinite_data():
    # frozen fixture: uniform random stacks have indefinite Gram fits
    M = np.random.default_rng(0).random((60, 8))
    with pytest.raises(BreakdownError) as info:
        estimate_lights_linear(DataMatrix(M))
    assert info.value.min_eigenvalue == pytest.approx(-0.5524856846306316, rel=1e-9)


def test_align_lights_recovers_rotation():
    rng = np.random.default_rng(11)
    L0 = rng.normal(size=(3, 9))
    assert np.allclose(align_lights(L0, L0), np.eye(3), atol=1e-12)
    # random special-orthogonal matrix
    Q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    if np.linalg.det(Q) < 0:
        Q[:, 0] = -Q[:, 0]
    found = align_lights(L0, Q @ L0)
    assert np.max(np.abs(found - Q)) < 1e-10


def test_align_estimate_roundtrip_on_clean_synthetic():
    ds = clean_synthetic()
    est = estimate_lights_linear(ds.data)
    aligned = align_estimate(est, ds.lights)
    cosines = np.sum(aligned.lights.directions * ds.lights.directions, axis=0)
    angles = np.arccos(np.clip(cosines, -1.0, 1.0))
    assert np.max(angles) < 1e-6
    # normals and albedo recovered too
    assert np.max(np.abs(aligned.field.normals - ds.field.normals)) < 1e-6
    assert np.max(np.abs(aligned.field.albedo - ds.field.albedo)) < 1e-6
    assert not aligned.flipped
    assert np.allclose(aligned.rotation @ aligned.rotation.T, np.eye(3), atol=1e-12)


def test_align_estimate_records_reflection_branch():
    rng = np.random.default_rng(12)
    data, pseudo, lights = random_rank3_data(rng)
    est = estimate_lights_linear(data)
    aligned = align_estimate(est, lights)
    assert aligned.reflection in (True, False)
    cosines = np.sum(aligned.lights.directions * lights, axis=0)
    assert np.min(cosines) > 1.0 - 1e-9
