import numpy as np
import pytest

from hodw import regularizer as reg


def test_sigma_star_defaults_table():
    assert reg.sigma_star_default("hard", 0.1) == 10 ** 1.6
    assert reg.sigma_star_default("hard", 0.3) == 10 ** 1.0
    assert reg.sigma_star_default("soft", 0.4) == 10 ** 0.4
    assert reg.sigma_star_default("soft", 0.1) == 10 ** 0.8
    assert reg.sigma_star_default("wiener", 0.2) == 10 ** 0.8


def test_sigma_star_nearest_subrate_rounds_down():
    assert reg.sigma_star_default("wiener", 0.25) == 10 ** 0.8
    assert reg.sigma_star_default("hard", 0.05) == 10 ** 1.6
    assert reg.sigma_star_default("soft", 0.9) == 10 ** 0.4


def test_sigma_star_oracle_has_no_default():
    with pytest.raises(ValueError):
        reg.sigma_star_default("oracle", 0.1)


def test_filter_soft_examples():
    assert reg.filter_soft(5.0, 2.0) == 3.0
    assert reg.filter_soft(-1.0, 2.0) == 0.0
    assert reg.filter_soft(-5.0, 2.0) == -3.0


def test_filter_wiener_examples():
    assert abs(reg.filter_wiener(3.0, np.sqrt(5.0)) - 4.0 / 3.0) < 1e-15
    assert reg.filter_wiener(1.0, 2.0) == 0.0
    r = np.linspace(-3, 3, 13)
    assert np.array_equal(reg.filter_wiener(r, 0.0), r)


def test_filter_wiener_equivalent_forms():
    r = np.arange(-10.0, 10.0001, 0.01)
    for s in (0.0, 0.5, 1.0, 2.0, 5.0):
        a = reg.filter_wiener(r, s)
        mag = np.abs(r)
        safe = np.where(mag > 0, mag, 1.0)
        b = np.sign(r) * np.maximum(mag - s * s / safe, 0.0)
        b = np.where(mag > 0, b, 0.0)
        assert np.allclose(a, b, rtol=1e-12, atol=1e-12)


def test_filter_hard_examples():
    assert reg.filter_hard(3.0, 2.0) == 3.0
    assert reg.filter_hard(2.0, 2.0) == 0.0  # boundary is strict
    assert reg.filter_hard(-2.5, 2.0) == -2.5


def test_filter_oracle_examples():
    assert reg.filter_oracle(4.0, 0.0, 1.0) == 0.0
    assert reg.filter_oracle(4.0, 2.0, 0.0) == 4.0
    assert reg.filter_oracle(2.0, 1.0, 1.0) == 1.0
    assert reg.filter_oracle(3.0, 0.0, 0.0) == 0.0


def test_filters_odd_nonexpansive_ordered():
    r = np.arange(-10.0, 10.0001, 0.01)
    for s in (0.5, 1.0, 2.0, 5.0):
        for f in (reg.filter_soft, reg.filter_wiener, reg.filter_hard):
            out = f(r, s)
            assert np.allclose(f(-r, s), -out, atol=1e-12)
            assert np.all(np.abs(out) <= np.abs(r) + 1e-12)
        keep = np.abs(r) > s
        soft = np.abs(reg.filter_soft(r, s))[keep]
        wien = np.abs(reg.filter_wiener(r, s))[keep]
        hard = np.abs(reg.filter_hard(r, s))[keep]
        assert np.all(soft <= wien + 1e-12)
        assert np.all(wien <= hard + 1e-12)


def test_apply_design_identity_and_annihilation():
    rng = np.random.default_rng(0)
    rep = rng.normal(size=(3, 4, 4, 3, 5))
    for kind in ("soft", "wiener", "hard"):
        out = reg.apply_design(reg.WeightDesign(kind, 0.0), rep)
        assert np.array_equal(out, rep)
        out = reg.apply_design(reg.WeightDesign(kind, np.inf), rep)
        assert not out.any()


def test_apply_design_hard_matches_scalar_loop():
    rng = np.random.default_rng(1)
    rep = rng.normal(scale=2.0, size=(2, 3, 3, 3, 4))
    out = reg.apply_design(reg.WeightDesign("hard", 1.0), rep)
    expect = np.zeros_like(rep)
    for idx in np.ndindex(*rep.shape):
        expect[idx] = rep[idx] if abs(rep[idx]) > 1.0 else 0.0
    assert np.array_equal(out, expect)


def test_apply_design_oracle_requires_matching_shapes():
    rng = np.random.default_rng(2)
    rep = rng.normal(size=(2, 2, 2, 3, 2))
    with pytest.raises(ValueError):
        reg.apply_design(reg.WeightDesign("oracle", alpha0=rep[:1], sigma=1.0),
                         rep)
    out = reg.apply_design(reg.WeightDesign("oracle", alpha0=rep, sigma=0.0),
                           rep)
    assert np.array_equal(out, rep)


def test_design_validation():
    with pytest.raises(ValueError):
        reg.WeightDesign("banana")
    with pytest.raises(ValueError):
        reg.WeightDesign("soft", sigma_star=-1.0)


def test_estimate_error_std():
    rng = np.random.default_rng(3)
    a = rng.normal(size=(4, 3, 3, 3, 6))
    assert reg.estimate_error_std(a, a) == (0.0, 0.0)
    mean, std = reg.estimate_error_std(a + 2.5, a)
    assert abs(mean - 2.5) < 1e-12 and std < 1e-12
    noise = rng.normal(0.0, 1.7, size=(10, 10, 10, 3, 40))
    base = rng.normal(size=noise.shape)
    mean, std = reg.estimate_error_std(base + noise, base)
    assert abs(std - 1.7) / 1.7 < 0.05


def test_oracle_mmse_beats_practical_filters():
    rng = np.random.default_rng(4)
    n = 100_000
    alpha0 = rng.laplace(0.0, 1.0, size=n)
    for sigma in (0.5, 1.0, 2.0):
        r = alpha0 + rng.normal(0.0, sigma, size=n)
        mse_oracle = float(np.mean(
            (reg.filter_oracle(r, alpha0, sigma) - alpha0) ** 2))
        grid = np.geomspace(0.05, 10.0, 20)
        best = min(
            float(np.mean((f(r, s) - alpha0) ** 2))
            for s in grid
            for f in (reg.filter_soft, reg.filter_wiener, reg.filter_hard))
        assert mse_oracle <= best * 1.01
