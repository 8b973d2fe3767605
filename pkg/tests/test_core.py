import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levywell import DomainError, FractionalParams, Grid, ShapeError, UsageError, WaveFunction, inner_product, make_params
from levywell.well import eigenfunction_values, eigenstate


class TestParams:
    def test_classical_mass(self):
        p = make_params(2.0, 0.5, 1.0, 1.0)
        assert p.mass() == 1.0

    def test_mass_undefined_off_alpha_two(self):
        with pytest.raises(DomainError):
            make_params(1.5).mass()

    @pytest.mark.parametrize("alpha", [2.5, 1.0, 0.5, -1.0, float("nan"), float("inf")])
    def test_alpha_out_of_range(self, alpha):
        with pytest.raises(DomainError, match="alpha"):
            make_params(alpha)

    def test_alpha_error_names_interval(self):
        with pytest.raises(DomainError, match=r"\(1, 2\]"):
            make_params(2.5)

    def test_cauchy_only_in_validation_mode(self):
        p = make_params(1.0, validation_mode=True)
        assert p.alpha == 1.0
        with pytest.raises(DomainError):
            make_params(0.9, validation_mode=True)

    @pytest.mark.parametrize("field", ["d_alpha", "hbar", "l"])
    @pytest.mark.parametrize("value", [0.0, -1.0])
    def test_nonpositive_constants(self, field, value):
        kwargs = {"d_alpha": 1.0, "hbar": 1.0, "l": 1.0, field: value}
        with pytest.raises(DomainError, match=field):
            make_params(1.5, **kwargs)

    def test_immutable(self):
        p = make_params(1.5)
        with pytest.raises(Exception):
            p.alpha = 1.7

    def test_as_dict_roundtrip(self):
        p = make_params(1.3, 0.7, 1.1, 2.0)
        assert FractionalParams(**p.as_dict()) == p


class TestGrid:
    def test_spacing_conventions(self):
        assert Grid(-1.0, 1.0, 16, periodic=True).spacing == pytest.approx(2.0 / 16)
        assert Grid(-1.0, 1.0, 17).spacing == pytest.approx(2.0 / 16)

    def test_bounded_endpoints_exact(self):
        g = Grid.well(1.3, 101)
        x = g.points
        assert x[0] == -1.3 and x[-1] == 1.3
        np.testing.assert_array_equal(x, -x[::-1])

    def test_periodic_excludes_right_end(self):
        g = Grid.ring(4.0, 8)
        assert g.points[0] == -2.0
        assert g.points[-1] == pytest.approx(2.0 - 0.5)

    @pytest.mark.parametrize("args", [(1.0, -1.0, 16), (-1.0, 1.0, 4), (-1.0, 1.0, 10.5)])
    def test_invalid(self, args):
        with pytest.raises(UsageError):
            Grid(*args)

    def test_power_of_two_flag(self):
        assert Grid.ring(1.0, 64).is_power_of_two()
        assert not Grid.ring(1.0, 96).is_power_of_two()

    def test_weights_sum_to_length(self):
        for g in (Grid.well(1.0, 33), Grid.ring(3.0, 32)):
            assert g.weights.sum() == pytest.approx(g.length)


class TestWaveFunction:
    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            WaveFunction(Grid.well(1.0, 16), np.zeros(15))

    def test_values_are_copied_and_frozen(self):
        raw = np.ones(16)
        wf = WaveFunction(Grid.well(1.0, 16), raw)
        raw[0] = 5.0
        assert wf.values[0] == 1.0
        with pytest.raises(ValueError):
            wf.values[0] = 2.0

    def test_eigenfunction_vanishes_outside_well(self):
        params = make_params(1.5)
        g = Grid(-2.0, 2.0, 401)
        wf = eigenfunction_values(eigenstate(3, params), g)
        assert np.all(wf.values[np.abs(g.points) >= 1.0] == 0.0)


class TestInnerProduct:
    def test_ground_state_normalised(self):
        params = make_params(1.5)
        g = Grid.well(1.0, 2048)
        phi = eigenfunction_values(eigenstate(1, params), g)
        assert inner_product(phi, phi).real == pytest.approx(1.0, abs=1e-8)

    def test_opposite_parity_orthogonal(self):
        params = make_params(1.5)
        g = Grid.well(1.0, 2048)
        a, b = (eigenfunction_values(eigenstate(n, params), g) for n in (1, 2))
        assert abs(inner_product(a, b)) < 1e-8

    def test_zero_state(self, rng):
        g = Grid.well(1.0, 64)
        z = WaveFunction(g, np.zeros(64))
        b = WaveFunction(g, rng.normal(size=64) + 1j * rng.normal(size=64))
        assert inner_product(z, b) == 0

    def test_grid_mismatch(self):
        a = WaveFunction(Grid.well(1.0, 16), np.ones(16))
        b = WaveFunction(Grid.well(1.0, 17), np.ones(17))
        with pytest.raises(ShapeError):
            inner_product(a, b)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(min_value=0, max_value=2**32 - 1), st.booleans())
    def test_conjugate_symmetry_exact(self, seed, periodic):
        r = np.random.default_rng(seed)
        g = Grid(-1.0, 1.0, 32, periodic)
        a = WaveFunction(g, r.normal(size=32) + 1j * r.normal(size=32))
        b = WaveFunction(g, r.normal(size=32) + 1j * r.normal(size=32))
        assert inner_product(a, b) == inner_product(b, a).conjugate()
        aa = inner_product(a, a)
        assert aa.real >= 0 and abs(aa.imag) < 1e-12

    def test_second_order_refinement(self):
        f = lambda x: np.exp(x) * np.cos(3 * x)
        sizes = [65, 129, 257]
        ref_grid = Grid.well(1.0, 4 * (sizes[-1] - 1) + 1)
        ref = np.sum(ref_grid.weights * f(ref_grid.points))
        errs = []
        for n in sizes:
            g = Grid.well(1.0, n)
            one = WaveFunction(g, np.ones(n))
            errs.append(abs(inner_product(one, WaveFunction(g, f(g.points))) - ref))
        ratios = [errs[0] / errs[1], errs[1] / errs[2]]
        for r in ratios:
            assert 3.5 <= r <= 4.5
