import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tensorid.grid import UPPER_SATURATION, Discretizer, InterpWeights, TapDelayLine


class TestDiscretizer:
    def test_construction_validation(self):
        with pytest.raises(ValueError):
            Discretizer(0.0, 10)
        with pytest.raises(ValueError):
            Discretizer(0.5, 1)

    def test_cell_index_examples(self):
        d = Discretizer(0.2, 10)
        assert d.cell_index(0.0) == 5
        assert d.cell_index(0.3) == 6
        assert d.cell_index(100.0) == 9

    def test_lower_clamp(self):
        d = Discretizer(0.2, 10)
        assert d.cell_index(-100.0) == 1
        assert d.weights(-100.0).u == 0.0

    def test_upper_clamp_saturates(self):
        d = Discretizer(0.2, 10)
        w = d.weights(100.0)
        assert w.u == UPPER_SATURATION
        assert 0.0 <= w.u < 1.0

    def test_weights_examples(self):
        d = Discretizer(0.2, 10)
        assert d.weights(0.3).u == pytest.approx(0.5, rel=1e-12)
        assert d.weights(0.4).u == pytest.approx(0.0, abs=1e-12)
        assert d.weights(-0.45).u == pytest.approx(0.75, rel=1e-12)

    def test_odd_grid_center(self):
        # generalized center offset ceil(I/2)
        d = Discretizer(0.5, 9)
        assert d.offset == 5
        assert d.cell_index(0.0) == 5

    def test_nonfinite_rejected(self):
        d = Discretizer(0.2, 10)
        for bad in (math.nan, math.inf, -math.inf):
            with pytest.raises(ValueError):
                d.cell_index(bad)
            with pytest.raises(ValueError):
                d.weights(bad)

    def test_from_half_range(self):
        d = Discretizer.from_half_range(4.0, 10)
        assert d.delta_x == pytest.approx(0.8)

    @settings(max_examples=200, deadline=None)
    @given(st.floats(-0.75, 0.75))
    def test_reconstruction_identity(self, x):
        # interior of the grid: (k - ceil(I/2) + u) * dx == x
        d = Discretizer(0.2, 10)
        k, w = d.locate(x)
        assert (k - d.offset + w.u) * d.delta_x == pytest.approx(x, abs=1e-12)

    @settings(max_examples=200, deadline=None)
    @given(st.floats(-50, 50), st.floats(-50, 50))
    def test_monotone(self, a, b):
        d = Discretizer(0.3, 12)
        lo, hi = min(a, b), max(a, b)
        assert d.cell_index(lo) <= d.cell_index(hi)

    @settings(max_examples=200, deadline=None)
    @given(st.floats(-1e6, 1e6))
    def test_weights_sum_to_one_and_cell_valid(self, x):
        d = Discretizer(0.7, 7)
        k, w = d.locate(x)
        assert 1 <= k <= d.grid_size - 1
        assert w.vec[0] + w.vec[1] == pytest.approx(1.0, abs=1e-15)
        assert 0.0 <= w.vec[0] <= 1.0 and 0.0 <= w.vec[1] <= 1.0


class TestInterpWeights:
    def test_vec(self):
        w = InterpWeights(0.25)
        assert w.vec == (0.75, 0.25)
        assert w[0] == 0.75 and w[1] == 0.25

    def test_range_validation(self):
        with pytest.raises(ValueError):
            InterpWeights(1.0)
        with pytest.raises(ValueError):
            InterpWeights(-0.1)


class TestTapDelayLine:
    def test_push_examples(self):
        t = TapDelayLine(3)
        assert t.values() == [0.0, 0.0, 0.0]
        t.push(1.0)
        assert t.values() == [1.0, 0.0, 0.0]
        t.push(2.0)
        assert t.values() == [2.0, 1.0, 0.0]

    def test_fifo_drops_oldest(self):
        t = TapDelayLine(3)
        for v in (1, 2, 3):
            t.push(v)
        assert t.values() == [3, 2, 1]
        t.push(4)
        assert t.values() == [4, 3, 2]

    def test_length_constant_for_generic_entries(self):
        t = TapDelayLine(2, fill=None)
        assert len(t) == 2
        t.push({"cell": (1, 2)})
        assert len(t) == 2
        assert t[0] == {"cell": (1, 2)} and t[1] is None

    def test_length_validation(self):
        with pytest.raises(ValueError):
            TapDelayLine(0)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-10, 10), min_size=1, max_size=20), st.integers(1, 6))
    def test_push_preserves_length(self, values, length):
        t = TapDelayLine(length)
        for v in values:
            t.push(v)
            assert len(list(t)) == length
