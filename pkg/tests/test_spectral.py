from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hallmhd.spectral import (
    Grid,
    SpectralField,
    curl,
    curl_inverse,
    differential,
    divergence,
    divergence_defect,
    fft_forward,
    fft_inverse,
    gradient,
    inner_product,
    laplacian,
    leray_project,
    pointwise_product,
    set_fft_workers,
    strict_deterministic,
    transform,
)


def direct_dft(samples: np.ndarray) -> np.ndarray:
    """Forward DFT by explicit summation over the grid (divided by n**3)."""
    n = samples.shape[-1]
    idx = np.arange(n)
    w = np.exp(-2j * np.pi * np.outer(idx, idx) / n)
    out = np.einsum("ai,bj,ck,ijk->abc", w, w, w, samples)
    return out / n**3


def rel(a, b):
    return (a - b).norm() / max(a.norm(), b.norm(), 1e-300)


class TestGrid:
    def test_rejects_odd_or_small(self):
        for n in (2, 7, 0, -4):
            with pytest.raises(ValueError):
                Grid(n)

    def test_rejects_bad_length(self):
        with pytest.raises(ValueError):
            Grid(8, length=0.0)

    def test_wavevectors_range(self, grid8):
        assert grid8.index.min() == -4
        assert grid8.index[:2].max() == 3

    def test_keep_mask_removes_mean_and_nyquist(self, grid8):
        mask = grid8.keep_mask
        assert mask[0, 0, 0] == 0
        assert not np.any(mask[4])
        assert not np.any(mask[:, :, 4])

    def test_dealias_mask_strict_two_thirds(self):
        g = Grid(12)
        kept = np.abs(g.index[0][g.dealias_mask.astype(bool)])
        assert kept.max() == 3


class TestTransform:
    def test_zero_field(self, grid8):
        f = transform(np.zeros((3,) + grid8.shape), grid8)
        assert f.max_abs_coeff() == 0.0

    def test_cosine_coefficients(self, grid8):
        x = grid8.coordinates()[0]
        f = transform(np.cos(x), grid8)
        expected = np.zeros(grid8.spectral_shape, dtype=complex)
        expected[1, 0, 0] = expected[-1, 0, 0] = 0.5
        np.testing.assert_allclose(f.coeffs, expected, atol=1e-15)

    def test_forward_matches_direct_dft(self, grid8, rng):
        x = rng.standard_normal(grid8.shape)
        full = direct_dft(x)
        np.testing.assert_allclose(fft_forward(x), full[..., : 8 // 2 + 1], atol=1e-15)

    def test_round_trip_random(self, grid8, rng):
        x = rng.standard_normal(grid8.shape)
        assert np.max(np.abs(fft_inverse(fft_forward(x), 8) - x)) <= 1e-13

    def test_inverse_of_field_is_projection(self, grid8, rng):
        f = transform(rng.standard_normal((3,) + grid8.shape), grid8)
        g = transform(transform(f), grid8)
        assert rel(f, g) <= 1e-13

    def test_size_mismatch_rejected(self, grid8):
        with pytest.raises(ValueError):
            transform(np.zeros((3, 8, 8, 6)), grid8)

    def test_parseval(self, grid16, random_vec):
        f = random_vec(solenoidal=False)
        samples = f.physical()
        quad = np.sqrt(np.sum(samples**2) * grid16.cell_volume)
        assert abs(quad - f.norm()) / f.norm() <= 1e-12

    def test_fields_are_immutable(self, random_vec):
        f = random_vec()
        with pytest.raises((ValueError, AttributeError)):
            f.coeffs[0, 1, 0, 0] = 1.0
        with pytest.raises(AttributeError):
            f.grid = Grid(8)

    def test_mean_mode_zero(self, grid8):
        f = SpectralField.from_physical(grid8, np.ones((3,) + grid8.shape))
        assert f.max_abs_coeff() == 0.0


class TestDifferential:
    def test_curl_single_mode(self, grid16):
        x = grid16.coordinates()[0]
        zero = np.zeros_like(x)
        B = transform(np.stack([zero, zero, np.sin(x)]), grid16)
        expected = transform(np.stack([zero, -np.cos(x), zero]), grid16)
        assert rel(curl(B), expected) <= 1e-14

    def test_div_grad_is_laplacian(self, random_vec):
        f = random_vec(comp_shape=(), solenoidal=False)
        assert rel(divergence(gradient(f)), laplacian(f)) <= 1e-13

    def test_vector_identity(self, random_vec):
        v = random_vec(solenoidal=False)
        lhs = curl(curl(v)) + laplacian(v) - gradient(divergence(v))
        assert lhs.norm() <= 1e-13 * laplacian(v).norm()

    def test_dispatch(self, random_vec):
        v = random_vec(solenoidal=False)
        assert rel(differential(v, "curl"), curl(v)) == 0.0
        with pytest.raises(ValueError):
            differential(v, "hessian")

    def test_gradient_index_order(self, grid16):
        x, y, _ = grid16.coordinates()
        f = transform(np.stack([np.sin(y), np.zeros_like(x), np.zeros_like(x)]), grid16)
        g = gradient(f).physical()
        # g[i, j] = d_j f_i
        np.testing.assert_allclose(g[0, 1], np.cos(y), atol=1e-13)
        np.testing.assert_allclose(g[1, 0], 0.0, atol=1e-13)


class TestCurlInverse:
    def test_single_mode(self, grid16):
        x = grid16.coordinates()[0]
        zero = np.zeros_like(x)
        J = transform(np.stack([zero, -np.cos(x), zero]), grid16)
        B = transform(np.stack([zero, zero, np.sin(x)]), grid16)
        assert rel(curl_inverse(J), B) <= 1e-14

    def test_inverts_curl_on_divergence_free(self, random_vec):
        B = random_vec()
        assert rel(curl_inverse(curl(B)), B) <= 1e-13

    def test_output_divergence_free(self, random_vec):
        J = random_vec(solenoidal=False)
        c = curl_inverse(J).coeffs
        k = J.grid.k
        assert np.max(np.abs(np.einsum("i...,i...->...", k, c))) <= 1e-12 * np.max(np.abs(c))


class TestLeray:
    def test_annihilates_gradients(self, grid16):
        x = grid16.coordinates()[0]
        zero = np.zeros_like(x)
        u = transform(np.stack([-np.sin(x), zero, zero]), grid16)
        assert leray_project(u).norm() <= 1e-14

    def test_fixes_divergence_free(self, random_vec):
        u = random_vec()
        assert rel(leray_project(u), u) <= 1e-13

    def test_idempotent_and_divergence_free(self, random_vec):
        p = leray_project(random_vec(solenoidal=False))
        assert rel(leray_project(p), p) <= 1e-13
        assert divergence_defect(p) <= 1e-12


def direct_product(a: SpectralField, b: SpectralField, grid: Grid) -> np.ndarray:
    """Convolution of two scalar coefficient tables by explicit mode sums."""
    n = grid.n
    full_a = np.fft.fftn(a.physical()) / n**3
    full_b = np.fft.fftn(b.physical()) / n**3
    out = np.zeros((n, n, n), dtype=complex)
    nz_a = np.argwhere(np.abs(full_a) > 1e-14)
    nz_b = np.argwhere(np.abs(full_b) > 1e-14)
    half = n // 2
    for ia in nz_a:
        ka = np.where(ia >= half, ia - n, ia)
        for ib in nz_b:
            kb = np.where(ib >= half, ib - n, ib)
            k = ka + kb
            if np.all(3 * np.abs(k) < n):
                out[tuple(k % n)] += full_a[tuple(ia)] * full_b[tuple(ib)]
    out[0, 0, 0] = 0.0
    return out[..., : half + 1]


class TestPointwiseProduct:
    def test_product_to_sum(self, grid16):
        x = grid16.coordinates()[0]
        a = transform(np.cos(x), grid16)
        expected = transform(0.5 * np.cos(2 * x), grid16)
        assert rel(pointwise_product(a, a), expected) <= 1e-14

    def test_zero(self, random_vec, grid16):
        a = random_vec(comp_shape=())
        assert pointwise_product(a, SpectralField.zeros(grid16, ())).norm() == 0.0

    def test_dealiased_equals_direct_convolution(self, grid16, rng):
        from hallmhd.initial import random_vector_field

        band = 16 // 3
        a = random_vector_field(grid16, rng, band, False, comp_shape=())
        b = random_vector_field(grid16, rng, band, False, comp_shape=())
        a = a.multiply(grid16.dealias_mask)
        b = b.multiply(grid16.dealias_mask)
        a = a.multiply(np.all(np.abs(grid16.index) <= 2, axis=0))
        b = b.multiply(np.all(np.abs(grid16.index) <= 2, axis=0))
        got = pointwise_product(a, b, dealias=True).coeffs
        np.testing.assert_allclose(got, direct_product(a, b, grid16), atol=1e-15)

    def test_kinds(self, random_vec):
        a, b = random_vec(), random_vec()
        dot = pointwise_product(a, b, kind="dot")
        expected = transform(np.sum(a.physical() * b.physical(), axis=0), a.grid)
        assert rel(dot, expected) <= 1e-14
        cross = pointwise_product(a, b, kind="cross")
        assert cross.comp_shape == (3,)
        assert pointwise_product(a, b, kind="outer").comp_shape == (3, 3)
        with pytest.raises(ValueError):
            pointwise_product(a, b, kind="wedge")


class TestInnerProduct:
    def test_cosine_norm(self, grid16):
        x = grid16.coordinates()[0]
        f = transform(np.cos(x), grid16)
        assert inner_product(f, f) == pytest.approx((2 * np.pi) ** 3 / 2, rel=1e-14)

    def test_orthogonal_modes(self, grid16):
        x = grid16.coordinates()[0]
        assert abs(inner_product(transform(np.cos(x), grid16), transform(np.sin(x), grid16))) <= 1e-13

    def test_curl_self_adjoint(self, random_vec):
        v, w = random_vec(solenoidal=False), random_vec(solenoidal=False)
        a, b = inner_product(curl(w), v), inner_product(w, curl(v))
        assert abs(a - b) <= 1e-12 * curl(w).norm() * v.norm()

    def test_quadrature_matches_spectral(self, random_vec):
        a, b = random_vec(solenoidal=False), random_vec(solenoidal=False)
        s = inner_product(a, b)
        q = inner_product(a, b, method="quadrature")
        assert abs(s - q) <= 1e-12 * a.norm() * b.norm()


class TestDeterminism:
    def test_strict_mode_bit_identical(self, random_vec):
        a, b = random_vec(), random_vec()
        set_fft_workers(2)
        try:
            with strict_deterministic():
                first = pointwise_product(a, b, kind="cross").coeffs.copy()
                second = pointwise_product(a, b, kind="cross").coeffs.copy()
        finally:
            set_fft_workers(1)
        assert np.array_equal(first, second)


class TestProperties:
    @given(
        k=st.tuples(*(st.integers(-3, 3),) * 3).filter(any),
        amp=st.floats(0.1, 10.0),
    )
    def test_curl_inverse_single_mode(self, k, amp):
        grid = Grid(8)
        x = grid.coordinates()
        e = np.cross(k, [1.0, 2.0, 3.0])
        if not np.any(e):
            return
        phase = np.tensordot(np.asarray(k, float), x, axes=1)
        B = transform(amp * e[:, None, None, None] * np.sin(phase), grid)
        assert rel(curl_inverse(curl(B)), B) <= 1e-13

    @given(seed=st.integers(0, 2**16))
    def test_linearity_of_transform(self, seed):
        grid = Grid(8)
        rng = np.random.default_rng(seed)
        x, y = rng.standard_normal((2,) + grid.shape)
        lhs = fft_forward(2.0 * x - y)
        rhs = 2.0 * fft_forward(x) - fft_forward(y)
        assert np.max(np.abs(lhs - rhs)) <= 1e-14

    def test_all_kinds_listed(self):
        for kind in ("gradient", "divergence", "curl", "laplacian"):
            assert differential(SpectralField.zeros(Grid(8)), kind) is not None

    def test_parseval_weights(self, grid8):
        # kz = 0 plane counted once, the rest twice (conjugate halves)
        w = grid8.weights
        assert set(np.unique(w[..., 0])) == {1.0}
        assert set(np.unique(w[..., 1:])) == {2.0}
