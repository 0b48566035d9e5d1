import math

import numpy as np
import pytest

from critlab.errors import CapacityExceeded, DegenerateStatistic, InvalidParameter, SingularCovariance
from critlab.gibbs import Quadrature, enumerate_measure, expectation
from critlab.lattice import build_chain, build_rectangle
from critlab.phi4 import (BlockSpinSpec, FieldStatistic, Phi4Params, alpha_form_energy, block_spin_law,
                          gaussianity_report, gff_field, gff_variance, iid_linear_statistic, phi4_chain,
                          variance_scaling_exponent, well_mass, xi_statistic)
from critlab.rng import make_rng


def test_alpha_roundtrip():
    p = Phi4Params.from_alpha(1.5, 2.0, build_chain(2))
    assert (p.g, p.nu) == (2.0, -3.0)
    assert p.to_alpha() == (1.5, 2.0)
    with pytest.raises(InvalidParameter):
        Phi4Params(0.0, -1.0, build_chain(2))


def test_alpha_energy():
    assert alpha_form_energy([1.0, 2.0], 1.0, [(0, 1)]) == pytest.approx(1 - 1 + 16 - 4 + 0.5)


def test_block_spin_hand_check():
    support, pmf = block_spin_law(BlockSpinSpec(2, 0.5))
    assert list(support) == [-2, 0, 2]
    assert pmf[2] / pmf[1] == pytest.approx(math.e**2 / 2)
    _, anti = block_spin_law(BlockSpinSpec(2, 0.5, sign=-1))
    assert anti[2] / anti[1] == pytest.approx(math.e**-2 / 2)


@pytest.mark.parametrize("K", range(1, 9))
def test_block_spin_symmetric(K):
    rng = make_rng(K)
    a = rng.random((K, K))
    a = (a + a.T) / 2
    np.fill_diagonal(a, 0)
    support, pmf = block_spin_law(BlockSpinSpec(K, a, delta=0.5))
    assert pmf.sum() == pytest.approx(1.0)
    assert np.allclose(pmf, pmf[::-1])
    assert np.allclose(support, 0.5 * np.arange(-K, K + 1, 2))


def test_block_spin_validation():
    with pytest.raises(InvalidParameter):
        BlockSpinSpec(2, -0.1)
    with pytest.raises(CapacityExceeded):
        block_spin_law(BlockSpinSpec(23, 0.0))


def test_chain_matches_quadrature():
    params = Phi4Params(1.0, -1.0, build_chain(2))
    quad = Quadrature.gauss_legendre(80, -4.0, 4.0)
    m = enumerate_measure(params.energy_model(quad), params.lat)
    exact_sq = expectation(m, lambda s: s[:, 0] ** 2)
    exact_cross = expectation(m, lambda s: s[:, 0] * s[:, 1])
    run = phi4_chain(params, 100_000, seed=5, thin=2, burn_in=2000)
    assert 0.3 < run.acceptance < 0.6
    x = run.samples
    assert abs((x[:, 0] ** 2).mean() - exact_sq) < 0.02
    assert abs((x[:, 0] * x[:, 1]).mean() - exact_cross) < 0.02


def test_chain_deterministic():
    params = Phi4Params(0.5, 0.5, build_rectangle(3, 3))
    a = phi4_chain(params, 20, seed=1, burn_in=100).samples
    b = phi4_chain(params, 20, seed=1, burn_in=100).samples
    assert np.array_equal(a, b)


def test_gff_variance():
    L, m = 8, 0.7
    x = gff_field(L, m, seed=2, n_samples=4000)
    assert x.var() == pytest.approx(gff_variance(L, m), rel=0.03)
    with pytest.raises(SingularCovariance):
        gff_variance(L, 0.0)
    assert gff_field(L, 0.0, seed=0, project_zero_mode=True).mean() == pytest.approx(0.0, abs=1e-12)


def test_gff_1d_variance_formula():
    L, m = 16, 0.5
    k = 2 - 2 * np.cos(2 * np.pi * np.arange(L) / L)
    assert gff_variance(L, m, d=1) == pytest.approx(np.mean(1 / (k + m * m)))


def test_iid_scaling():
    assert variance_scaling_exponent([16, 64, 256], 4000, seed=3) == pytest.approx(1.0, abs=0.08)
    x = iid_linear_statistic(10, 20000, seed=1)
    n_sites = (21**2 + 1) // 2
    assert x.var() == pytest.approx(n_sites / 100, rel=0.05)


def test_gaussianity_report():
    rep = gaussianity_report(make_rng(4).standard_normal(20000))
    assert rep["gaussian"] and rep["variance"] == pytest.approx(1.0, rel=0.05)
    signs = np.where(make_rng(5).random(20000) < 0.5, -1.0, 1.0)
    assert not gaussianity_report(signs)["gaussian"]
    with pytest.raises(InvalidParameter):
        gaussianity_report(np.zeros(10))


def test_xi_statistic():
    lat = build_rectangle(4, 4)
    xi = xi_statistic(np.ones((3, 16)), FieldStatistic(lambda p: 1.0, 2.0, normalize=False), lat)
    assert np.allclose(xi, 16.0)
    with pytest.raises(DegenerateStatistic):
        xi_statistic(np.ones((3, 16)), FieldStatistic(lambda p: 1.0, 2.0), lat)


def test_well_mass_grows():
    masses = [well_mass(a) for a in (1, 10, 100)]
    assert masses[0] < masses[1] < masses[2]
    with pytest.raises(InvalidParameter):
        well_mass(0.0)
