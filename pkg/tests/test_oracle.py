from fractions import Fraction

import numpy as np
import pytest

from cvbell._accel import tensor_expectation
from cvbell.functional_bell import bell_value, ideal_epsilon, solve_epsilon_even
from cvbell.model import (
    AngleConfig,
    DensityMatrix,
    Identity,
    Optimal,
    SignBin,
    StateSpec,
    density_matrix,
    raising_amplitude,
)
from cvbell.oracle import (
    angle_scan,
    evaluate,
    optimize_epsilon_numeric,
    orthogonal_angles,
    random_product_mixture,
)


def vacuum(n):
    m = np.zeros((2 ** n, 2 ** n), dtype=complex)
    m[0, 0] = 1.0
    return DensityMatrix(n_modes=n, matrix=m)


def cfrd_even_ideal(n):
    """Analytic pure-state moment-correlation ratio: 4^(n/2-1) / 3^(n/2)."""
    return float(Fraction(4 ** (n // 2 - 1), 3 ** (n // 2)))


class TestEvaluate:
    def test_vacuum_has_zero_correlator(self, rule):
        for f in (Identity(), Optimal(2.0)):
            res = evaluate(vacuum(3), f, f, orthogonal_angles(3, 1), rule)
            assert res.lhs == pytest.approx(0.0, abs=1e-28)
            assert res.ratio == pytest.approx(0.0, abs=1e-28)
            assert res.rhs > 0

    def test_moment_correlation_onset(self, rule):
        # plain moments need ten modes: 256/243 > 1 at N=10, 64/81 < 1 at N=9
        ident = Identity()
        r10 = evaluate(density_matrix(StateSpec(10, 5)), ident, ident,
                       orthogonal_angles(10, 5), rule)
        assert r10.ratio == pytest.approx(256 / 243, rel=1e-12)
        assert r10.ratio > 1
        r9 = evaluate(density_matrix(StateSpec(9, 4)), ident, ident,
                      orthogonal_angles(9, 4), rule)
        assert r9.ratio == pytest.approx(64 / 81, rel=1e-12)
        assert r9.ratio <= 1

    def test_matches_closed_form_n6(self, rule):
        eps = solve_epsilon_even(1.0, rule).epsilon_lossy
        f = Optimal(eps)
        res = evaluate(density_matrix(StateSpec(6, 3)), f, f,
                       orthogonal_angles(6, 3), rule)
        closed = bell_value(StateSpec(6, 3), rule)
        assert abs(res.ratio - closed.ratio) / closed.ratio < 1e-8

    def test_ratio_consistency_field(self, rule):
        res = evaluate(density_matrix(StateSpec(4, 2, 0.9, 0.9)), Identity(),
                       Identity(), orthogonal_angles(4, 2), rule)
        assert res.ratio == pytest.approx(res.lhs / res.rhs, rel=1e-14)

    def test_dimension_mismatch(self, rule):
        with pytest.raises(ValueError):
            evaluate(vacuum(3), Identity(), Identity(), orthogonal_angles(4, 2), rule)

    def test_scale_invariance(self, rule):
        rho = density_matrix(StateSpec(4, 2, 0.95, 0.9))
        angles = orthogonal_angles(4, 2)
        base = evaluate(rho, Optimal(2.0), Optimal(2.0), angles, rule).ratio
        for c in (0.1, 3.0):
            f = lambda x, c=c: c * Optimal(2.0)(x)
            scaled = evaluate(rho, f, f, angles, rule).ratio
            assert abs(scaled - base) < 1e-12 * base

    def test_block_permutation_symmetry(self, rule):
        # permuting sites within the occupied block and within the empty block
        # permutes identical factors of the site product
        rng = np.random.default_rng(3)
        n, r = 5, 2
        rho = density_matrix(StateSpec(n, r, 0.9, 0.85))
        th = rng.uniform(-np.pi, np.pi, n)
        thp = th + np.where(np.arange(n) < r, np.pi / 2, -np.pi / 2)
        base = evaluate(rho, Optimal(1.3), Optimal(1.3),
                        AngleConfig(tuple(th), tuple(thp)), rule).ratio
        perm = np.array([1, 0, 4, 2, 3])  # swaps inside [0,r) and inside [r,n)
        res = evaluate(rho, Optimal(1.3), Optimal(1.3),
                       AngleConfig(tuple(th[perm]), tuple(thp[perm])), rule).ratio
        assert res == pytest.approx(base, rel=1e-12)

    def test_separable_mixtures_respect_bound(self, rule):
        rng = np.random.default_rng(11)
        f = Optimal(1.5)
        for _ in range(50):
            n = int(rng.integers(2, 7))
            rho = random_product_mixture(n, rng, n_states=int(rng.integers(1, 5)))
            th = rng.uniform(-np.pi, np.pi, n)
            thp = rng.uniform(-np.pi, np.pi, n)
            res = evaluate(rho, f, f, AngleConfig(tuple(th), tuple(thp)), rule)
            assert res.ratio <= 1.0 + 1e-10

    def test_binning_reduces_to_binary_form(self, rule):
        # sign^2 + sign^2 = 2 per site: the bound side is exactly 2^N, so the
        # normalized statement is |2^(-N/2) Pi_N| <= 1, the binary inequality
        n, r = 4, 2
        rho = density_matrix(StateSpec(n, r, 0.9, 0.9))
        sb = SignBin()
        res = evaluate(rho, sb, sb, orthogonal_angles(n, r), rule)
        assert res.rhs == pytest.approx(2.0 ** n, abs=1e-12)
        s_sq = res.lhs / 2.0 ** n
        assert res.ratio == pytest.approx(s_sq, rel=1e-14)


class TestAngleScan:
    def test_finds_orthogonal_maximizer(self, rule):
        eps = ideal_epsilon(rule)
        f = Optimal(eps)
        rho = density_matrix(StateSpec(6, 3))
        cfg, best = angle_scan(rho, f, f, rule, resolution=4)
        canonical = orthogonal_angles(6, 3)
        conjugate = AngleConfig(
            canonical.theta, tuple(-t for t in canonical.theta_prime)
        )
        deltas = [
            max(abs(a - b) for a, b in zip(cfg.theta_prime, ref.theta_prime))
            for ref in (canonical, conjugate)
        ]
        assert min(deltas) < 1e-12
        closed = bell_value(StateSpec(6, 3), rule)
        assert best.ratio == pytest.approx(closed.ratio, rel=1e-10)

    def test_bound_side_invariant_across_scan(self, rule):
        # the scan itself raises if the bound side varied; also compare two
        # explicit configurations directly
        rho = density_matrix(StateSpec(4, 2, 0.9, 0.8))
        f = Optimal(2.0)
        r1 = evaluate(rho, f, f, orthogonal_angles(4, 2, base=0.0), rule)
        r2 = evaluate(rho, f, f, orthogonal_angles(4, 2, base=1.1), rule)
        assert abs(r1.rhs - r2.rhs) < 1e-10
        angle_scan(rho, f, f, rule, resolution=3)

    def test_product_state_scan_is_zero(self, rule):
        cfg, best = angle_scan(vacuum(2), Identity(), Identity(), rule, resolution=2)
        assert best.ratio == pytest.approx(0.0, abs=1e-28)

    def test_resolution_validation(self, rule):
        with pytest.raises(ValueError):
            angle_scan(vacuum(2), Identity(), Identity(), rule, resolution=1)


class TestEpsilonSearch:
    def test_matches_fixed_point_at_unit_efficiency(self, rule):
        eps, res = optimize_epsilon_numeric(StateSpec(6, 3), rule)
        assert abs(eps - solve_epsilon_even(1.0, rule).epsilon_lossy) < 1e-5
        assert res.ratio > 1

    def test_five_mode_violation(self, rule):
        eps, res = optimize_epsilon_numeric(StateSpec(5, 2), rule)
        assert res.ratio > 1

    def test_four_modes_no_violation(self, rule):
        eps, res = optimize_epsilon_numeric(StateSpec(4, 2), rule)
        assert res.ratio <= 1


class TestFullAngleGrid:
    """One-off validation that the pi/2 patterns are global maximizers."""

    @staticmethod
    def _grid_correlators(rho, m01, resolution):
        """All correlator values on the full (theta, theta') product grid."""
        n = rho.n_modes
        angles = np.linspace(0.0, 2 * np.pi, resolution, endpoint=False)
        th, thp = np.meshgrid(angles, angles, indexing="ij")
        th, thp = th.ravel(), thp.ravel()
        combos = np.zeros((th.size, 2, 2), dtype=complex)
        combos[:, 0, 1] = m01 * (np.exp(-1j * th) + 1j * np.exp(-1j * thp))
        combos[:, 1, 0] = m01 * (np.exp(1j * th) + 1j * np.exp(1j * thp))
        letters = "abcdefgh"
        rows, cols = letters[:n], letters[n:2 * n]
        combo_axes = "uvwz"[:n]
        terms = ",".join(
            f"{combo_axes[k]}{cols[k]}{rows[k]}" for k in range(n)
        )
        sub = f"{rows}{cols},{terms}->{combo_axes}"
        t = rho.matrix.reshape((2,) * (2 * n))
        return np.einsum(sub, t, *([combos] * n))

    def test_einsum_helper_agrees_with_evaluate(self, rule):
        rho = density_matrix(StateSpec(2, 1, 0.9, 0.8))
        f = Optimal(1.3)
        m01 = raising_amplitude(f, rule)
        grid = self._grid_correlators(rho, m01, 4)
        angles = np.linspace(0.0, 2 * np.pi, 4, endpoint=False)
        for i, t1 in enumerate(angles):
            for j, t1p in enumerate(angles):
                cfg = AngleConfig((t1, angles[1]), (t1p, angles[3]))
                res = evaluate(rho, f, f, cfg, rule)
                combo = grid[i * 4 + j, 1 * 4 + 3]
                assert abs(combo) ** 2 == pytest.approx(res.lhs, rel=1e-12, abs=1e-20)

    def test_orthogonal_patterns_are_global_maximum(self, rule):
        n, r = 3, 1
        rho = density_matrix(StateSpec(n, r))
        eps = ideal_epsilon(rule)
        f = Optimal(eps)
        m01 = raising_amplitude(f, rule)
        grid = np.abs(self._grid_correlators(rho, m01, 8)) ** 2
        res = evaluate(rho, f, f, orthogonal_angles(n, r), rule)
        assert grid.max() <= res.lhs * (1 + 1e-12)
        assert grid.max() == pytest.approx(res.lhs, rel=1e-12)


class TestContractionBackend:
    def test_against_dense_kron(self):
        rng = np.random.default_rng(5)
        n = 3
        a = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
        rho = a + a.conj().T
        mats = rng.normal(size=(n, 2, 2)) + 1j * rng.normal(size=(n, 2, 2))
        dense = np.kron(np.kron(mats[0], mats[1]), mats[2])
        expected = np.trace(rho @ dense)
        got = tensor_expectation(rho, mats)
        assert got == pytest.approx(expected, rel=1e-13)
