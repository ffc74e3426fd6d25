import itertools

import numpy as np
import pytest

from conftest import central_diff, rel_err
from tensorid.grid import Discretizer
from tensorid.models import (
    AdaptationOrderError,
    BasicInterpTensor,
    DecomposedInterpTensor,
    LmsFilter,
    LmsModel,
    TensorOnlyModel,
    parse_snapshot,
    snapshot_state,
)
from tensorid.tensors import FactorSet, cpd_evaluate, materialize


class TestLmsFilter:
    def test_predict_selects_with_basis_weights(self):
        f = LmsFilter([1.0, 0.0, 0.0], mu=0.1)
        assert f.predict([5.0, 7.0, 9.0]) == 5.0

    def test_zero_weights(self, rng):
        f = LmsFilter(4, mu=0.1)
        assert f.predict(rng.standard_normal(4)) == 0.0

    def test_predict_matches_loop(self, rng):
        w = rng.standard_normal(5)
        x = rng.standard_normal(5)
        f = LmsFilter(w, mu=0.1)
        assert f.predict(x) == pytest.approx(sum(a * b for a, b in zip(w, x)),
                                             rel=1e-12)

    def test_adapt_zero_error_is_noop(self, rng):
        f = LmsFilter(rng.standard_normal(3), mu=0.5)
        before = f.weights.copy()
        f.adapt(0.0, rng.standard_normal(3))
        assert np.array_equal(f.weights, before)

    def test_adapt_unit_example(self):
        # w <- w + 2*mu*e*r/(delta+||r||^2) = 2*0.5*1*[1,0]/1
        f = LmsFilter(2, mu=0.5, delta=0.0)
        f.adapt(1.0, [1.0, 0.0])
        assert np.allclose(f.weights, [1.0, 0.0])

    def test_one_step_reduces_error(self, rng):
        # static linear target, a-priori error shrinks for mu in (0,1)
        for _ in range(20):
            w_true = rng.standard_normal(4)
            f = LmsFilter(rng.standard_normal(4), mu=0.3, delta=1e-12)
            x = rng.standard_normal(4)
            e = np.dot(w_true, x) - f.predict(x)
            f.adapt(e, x)
            e2 = np.dot(w_true, x) - f.predict(x)
            assert abs(e2) < abs(e) or e == 0.0

    def test_length_mismatch(self):
        f = LmsFilter(3, mu=0.1)
        with pytest.raises(ValueError):
            f.predict([1.0, 2.0])
        with pytest.raises(ValueError):
            f.adapt(1.0, [1.0, 2.0])


def make_basic(rng, order=2, size=6, half=1.5, mu=0.05):
    grid = rng.standard_normal((size,) * order)
    disc = Discretizer.from_half_range(half, size)
    return BasicInterpTensor(grid, disc, mu)


class TestBasicInterpTensor:
    def test_zero_grid_predicts_zero(self, rng):
        m = BasicInterpTensor(np.zeros((5, 5)), Discretizer(0.5, 5), 0.1)
        assert m.predict(rng.uniform(-1, 1, 2)) == 0.0

    def test_single_mode_midpoint(self):
        grid = np.zeros(10)
        grid[5] = 1.0  # row 6 (1-based)
        d = Discretizer(0.2, 10)
        m = BasicInterpTensor(grid, d, 0.1)
        # x = 0.1: cell 5, u = 0.5 -> halfway between rows 5 and 6
        assert m.predict([0.1]) == pytest.approx(0.5, rel=1e-12)

    def test_matches_manual_corner_interp(self, rng):
        m = make_basic(rng)
        xs = rng.uniform(-1.2, 1.2, 2)
        got = m.predict(xs)
        ks, us = [], []
        for x in xs:
            k, w = m.discs[0].locate(x)
            ks.append(k - 1)
            us.append(w.u)
        expect = 0.0
        for l1, l2 in itertools.product((0, 1), repeat=2):
            c = m.grid[ks[0] + l1, ks[1] + l2]
            expect += c * ((1 - us[0]) if l1 == 0 else us[0]) \
                        * ((1 - us[1]) if l2 == 0 else us[1])
        assert got == pytest.approx(expect, rel=1e-12)

    def test_zero_error_leaves_grid(self, rng):
        m = make_basic(rng)
        m.predict([0.1, -0.2])
        before = m.grid.copy()
        m.adapt(0.0)
        assert np.array_equal(m.grid, before)

    def test_grid_point_touches_single_corner(self):
        d = Discretizer(0.5, 8)
        m = BasicInterpTensor(np.zeros((8, 8)), d, mu=0.25)
        m.predict([0.5, -0.5])  # exactly on rows -> u = 0
        m.adapt(1.0)
        changed = np.argwhere(m.grid != 0.0)
        assert len(changed) == 1
        assert m.grid[tuple(changed[0])] == pytest.approx(2 * 0.25 * 1.0)

    def test_corner_updates_match_finite_differences(self, rng):
        # dJ/dQ(corner) for J = (y - interp)^2
        m = make_basic(rng, order=3, size=5)
        xs = rng.uniform(-1.0, 1.0, 3)
        y = 1.3
        e = y - m.predict(xs)
        grads = m.loss_gradients(e)
        sl, g = grads["cell"], grads["grid"]

        def loss():
            return (y - m.peek_output()) ** 2

        view = m.grid[sl]
        for labels in itertools.product((0, 1), repeat=3):
            fd = central_diff(loss, view, labels, 1e-6)
            assert rel_err(fd, g[labels]) <= 1e-5

    def test_untouched_entries_bitwise_constant(self, rng):
        m = make_basic(rng)
        m.predict([0.3, 0.3])
        sl = m._cell[0]
        mask = np.ones_like(m.grid, dtype=bool)
        mask[sl] = False
        before = m.grid[mask].copy()
        m.adapt(2.0)
        assert np.array_equal(m.grid[mask], before)

    def test_adapt_requires_predict(self, rng):
        m = make_basic(rng)
        with pytest.raises(AdaptationOrderError):
            m.adapt(1.0)
        m.predict([0.0, 0.0])
        m.adapt(0.5)
        with pytest.raises(AdaptationOrderError):
            m.adapt(0.5)

    def test_nonfinite_input_rejected(self, rng):
        m = make_basic(rng)
        with pytest.raises(ValueError):
            m.predict([np.nan, 0.0])


def make_decomposed(rng, order=2, size=8, rank=2, half=2.0, mu=0.1,
                    interpolated=True, delta=1e-6):
    factors = FactorSet.random((size,) * order, rank, rng, scale=0.5)
    disc = Discretizer.from_half_range(half, size)
    return DecomposedInterpTensor(factors, disc, mu, delta, interpolated)


class TestDecomposedInterpTensor:
    def test_classical_ones_rank_one(self, rng):
        factors = [np.ones((6, 1)) for _ in range(3)]
        m = DecomposedInterpTensor(factors, Discretizer(0.5, 6), 0.1,
                                   interpolated=False)
        assert m.predict([0.2, -0.4, 0.9]) == 1.0

    def test_interpolated_at_grid_points_equals_classical(self, rng):
        mi = make_decomposed(rng, interpolated=True)
        mc = DecomposedInterpTensor([A.copy() for A in mi.factors],
                                    mi.discs[0], mi.mu, interpolated=False)
        d = mi.discs[0]
        # exact grid positions -> u = 0
        x = (3 - d.offset) * d.delta_x
        xs = [x, x]
        assert mi.predict(xs) == pytest.approx(mc.predict(xs), rel=1e-12)

    def test_matches_dense_grid_model(self, rng):
        # factorized interpolation equals dense-grid interpolation when the
        # dense grid is the materialized factor tensor
        m = make_decomposed(rng, order=2, size=6, rank=2)
        dense = materialize(FactorSet(tuple(m.factors))).array()
        basic = BasicInterpTensor(dense, m.discs[0], 0.1)
        xs = rng.uniform(-1.8, 1.8, 2)
        assert m.predict(xs) == pytest.approx(basic.predict(xs), rel=1e-12)

    def test_zero_error_is_noop(self, rng):
        m = make_decomposed(rng)
        m.predict([0.3, -0.7])
        before = [A.copy() for A in m.factors]
        m.adapt(0.0)
        assert all(np.array_equal(a, b) for a, b in zip(m.factors, before))

    def test_single_mode_row_moves(self, rng):
        # M=1: rank products are empty, rows move by 2*mu_eff*e*(1-u), u
        col = np.zeros((10, 1))
        d = Discretizer(0.2, 10)
        m = DecomposedInterpTensor([col], d, mu=0.5, delta=0.0)
        x = 0.05  # cell 5, u = 0.25
        m.predict([x])
        m.adapt(1.0)
        k, w = d.locate(x)
        u = w.u
        nsq = (1 - u) ** 2 + u ** 2
        expect_lo = 2 * (0.5 / nsq) * 1.0 * (1 - u)
        expect_hi = 2 * (0.5 / nsq) * 1.0 * u
        assert m.factors[0][k - 1, 0] == pytest.approx(expect_lo, rel=1e-12)
        assert m.factors[0][k, 0] == pytest.approx(expect_hi, rel=1e-12)
        assert np.count_nonzero(m.factors[0]) == 2

    def test_gradients_match_finite_differences(self, rng):
        for interpolated in (True, False):
            m = make_decomposed(rng, order=3, size=6, rank=2,
                                interpolated=interpolated)
            xs = rng.uniform(-1.5, 1.5, 3)
            y = 0.8
            e = y - m.predict(xs)
            grads = m.loss_gradients(e)["factors"]

            def loss():
                return (y - m.peek_output()) ** 2

            for mode, (rows, G) in enumerate(grads):
                A = m.factors[mode]
                for i, row in enumerate(rows):
                    for r in range(m.rank):
                        fd = central_diff(loss, A, (row, r), 1e-6)
                        assert rel_err(fd, G[i, r]) <= 1e-5

    def test_rows_outside_cell_bitwise_constant(self, rng):
        m = make_decomposed(rng, order=2, size=9)
        xs = rng.uniform(-1.5, 1.5, 2)
        m.predict(xs)
        grads = m.loss_gradients(1.0)["factors"]
        before = [A.copy() for A in m.factors]
        m.adapt(0.7)
        for mode, (rows, _) in enumerate(grads):
            mask = np.ones(m.factors[mode].shape[0], dtype=bool)
            mask[list(rows)] = False
            assert np.array_equal(m.factors[mode][mask], before[mode][mask])

    def test_classical_touches_subset_and_upper_rows_static(self, rng):
        # with u = 0 the interpolated update touches the classical rows and
        # adds zero to the upper rows
        size, order = 8, 2
        factors = FactorSet.random((size,) * order, 2, rng, scale=0.5)
        d = Discretizer(0.5, size)
        mi = DecomposedInterpTensor(factors, d, 0.2, interpolated=True)
        mc = DecomposedInterpTensor([A.copy() for A in mi.factors], d, 0.2,
                                    interpolated=False)
        x = (2 - d.offset) * d.delta_x  # exact grid point, u = 0
        for m in (mi, mc):
            m.predict([x, x])
        gi = mi.loss_gradients(1.0)["factors"]
        gc = mc.loss_gradients(1.0)["factors"]
        for (rows_i, Gi), (rows_c, Gc) in zip(gi, gc):
            assert set(rows_c) <= set(rows_i)
            for i, row in enumerate(rows_i):
                if row in set(rows_c):
                    j = list(rows_c).index(row)
                    assert np.allclose(Gi[i], Gc[j], rtol=1e-12)
                else:
                    assert np.allclose(Gi[i], 0.0)

    def test_one_step_error_contraction(self, rng):
        # frozen target: |e| shrinks after one normalized step at small mu
        wins = 0
        trials = 100
        for _ in range(trials):
            m = make_decomposed(rng, order=2, size=6, rank=2, mu=0.05,
                                delta=1e-12)
            xs = rng.uniform(-1.5, 1.5, 2)
            y = rng.normal()
            e = y - m.predict(xs)
            m.adapt(e)
            e2 = y - m.peek_output()
            wins += abs(e2) < abs(e)
        assert wins >= 0.95 * trials

    def test_error_ratio_matches_first_order_prediction(self, rng):
        # at small mu the one-step error ratio tracks the linearized factor
        # 1 - sum_m 2*mu_eff,m*||S_m||^2 to within 10%
        mu = 0.01
        for _ in range(30):
            m = make_decomposed(rng, order=2, size=6, rank=2, mu=mu,
                                delta=1e-12)
            xs = rng.uniform(-1.5, 1.5, 2)
            y = rng.normal() + 2.0
            e = y - m.predict(xs)
            if abs(e) < 0.2:
                continue
            grads = m.loss_gradients(e)["factors"]
            predicted = 1.0
            budget = mu / m.order
            for rows, G in grads:
                nsq = float(((G / (-2.0 * e)) ** 2).sum())
                predicted -= 2.0 * (budget / (1e-12 + nsq)) * nsq
            m.adapt(e)
            ratio = (y - m.peek_output()) / e
            assert ratio == pytest.approx(predicted, abs=0.1 * abs(predicted))

    def test_determinism(self):
        outs = []
        for _ in range(2):
            rng = np.random.default_rng(7)
            m = make_decomposed(rng, order=2, size=6, rank=2)
            data = np.random.default_rng(8).uniform(-1.5, 1.5, (50, 2))
            for xs in data:
                y = m.predict(xs)
                m.adapt(0.5 - y)
            outs.append([A.copy() for A in m.factors])
        assert all(np.array_equal(a, b) for a, b in zip(*outs))

    def test_adapt_requires_predict(self, rng):
        m = make_decomposed(rng)
        with pytest.raises(AdaptationOrderError):
            m.adapt(0.1)


class TestStreamingAdapters:
    def test_lms_model_window(self, rng):
        m = LmsModel(3, mu=0.2)
        m.filter.weights[:] = [1.0, 0.0, 0.0]
        assert m.predict(5.0) == 5.0
        assert m.predict(7.0) == 7.0

    def test_tensor_only_feeds_recent_samples(self, rng):
        core = make_decomposed(rng, order=2)
        m = TensorOnlyModel(core)
        m.predict(0.5)
        got = m.predict(0.8)
        expect = DecomposedInterpTensor([A.copy() for A in core.factors],
                                        core.discs[0], core.mu).predict([0.8, 0.5])
        assert got == pytest.approx(expect, rel=1e-12)


class TestSnapshots:
    def test_factor_round_trip(self, rng):
        m = make_decomposed(rng, order=3, size=5, rank=2)
        state = parse_snapshot(snapshot_state(m))
        assert all(np.array_equal(a, b)
                   for a, b in zip(state["factors"], m.factors))

    def test_weights_and_grid_round_trip(self, rng):
        f = LmsFilter(rng.standard_normal(4), mu=0.1)
        state = parse_snapshot(snapshot_state(f))
        assert np.array_equal(state["weights"], f.weights)
        b = make_basic(rng)
        state = parse_snapshot(snapshot_state(b))
        assert np.array_equal(state["grid"], b.grid)

    def test_rejects_other_text(self):
        with pytest.raises(ValueError):
            parse_snapshot("not a snapshot")
