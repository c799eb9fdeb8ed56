from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fitlevel.levels import (
    BoundMatrix,
    Kind,
    LevelPartition,
    NotMonotoneError,
    PopulationVector,
    all_genotypes,
    is_monotone,
    matrix_from_function,
    selection_probability,
    selection_probability_level,
    validate_bound_pair,
)


def onemax_partition(n):
    return LevelPartition(tuple(range(n + 1)), lambda g: np.asarray(g).sum(axis=-1))


class TestLevelPartition:
    def test_classify_onemax(self):
        part = onemax_partition(4)
        g = np.array([[0, 0, 0, 0], [1, 0, 1, 0], [1, 1, 1, 1]], dtype=np.uint8)
        assert part.classify(g).tolist() == [0, 2, 4]
        assert part.in_h(g, 2).tolist() == [False, True, True]

    def test_values_between_thresholds(self):
        part = LevelPartition((0, 2, 5), lambda g: np.asarray(g).sum(axis=-1))
        g = all_genotypes(6)
        lev = part.classify(g)
        u = g.sum(axis=1)
        assert np.array_equal(lev, np.where(u >= 5, 2, np.where(u >= 2, 1, 0)))

    def test_rejects_bad_thresholds(self):
        with pytest.raises(ValueError):
            LevelPartition((0,), lambda g: g)
        with pytest.raises(ValueError):
            LevelPartition((0, 0, 1), lambda g: g)

    def test_fitness_below_phi0(self):
        part = LevelPartition((1, 2), lambda g: np.asarray(g).sum(axis=-1))
        with pytest.raises(ValueError):
            part.classify(np.zeros((1, 3), dtype=np.uint8))

    def test_enumerated_nonempty(self):
        part = LevelPartition((0, 1, 10), lambda g: np.asarray(g).sum(axis=-1)).with_enumerated_nonempty(3)
        assert part.nonempty == (True, True, False)
        assert not part.all_nonempty

    def test_all_genotypes(self):
        g = all_genotypes(3)
        assert g.shape == (8, 3) and g.dtype == np.uint8
        assert len({tuple(r) for r in g}) == 8
        with pytest.raises(ValueError):
            all_genotypes(30)


class TestPopulationVector:
    def test_from_levels(self):
        z = PopulationVector.from_levels([0, 2, 3, 3], 3)
        assert z.values.tolist() == [0.75, 0.75, 0.5]
        assert z.lam == 4 and z.exact

    def test_rejects_increasing(self):
        with pytest.raises(ValueError):
            PopulationVector([0.2, 0.5])

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            PopulationVector([1.2, 0.5])

    def test_rejects_non_multiple(self):
        with pytest.raises(ValueError):
            PopulationVector([0.5, 0.3], lam=4)

    def test_level_distribution_roundtrip(self):
        z = PopulationVector([0.9, 0.4, 0.1])
        p = z.level_distribution()
        assert np.allclose(p, [0.1, 0.5, 0.3, 0.1])
        assert np.allclose(PopulationVector.from_level_distribution(p).values, z.values)

    def test_csv_roundtrip(self):
        z = PopulationVector([0.75, 0.5, 0.25], lam=4)
        text = z.to_csv()
        assert text.splitlines()[0] == "i\\j,1,2,3"
        assert np.array_equal(PopulationVector.from_csv(text, lam=4).values, z.values)

    @given(st.lists(st.integers(0, 6), min_size=1, max_size=40))
    def test_population_invariants(self, levels):
        z = PopulationVector.from_levels(levels, 6)
        lam = len(levels)
        assert np.all(np.diff(z.values) <= 0)
        assert np.allclose(z.values * lam, np.round(z.values * lam))
        assert z.level_distribution().sum() == pytest.approx(1.0)


class TestSelection:
    def test_selection_probability(self):
        z = [0.5, 0.25]
        assert selection_probability(z, 1, 1) == pytest.approx(0.5)
        assert selection_probability(z, 2, 1) == pytest.approx(0.75)
        with pytest.raises(ValueError):
            selection_probability(z, 2, 0)

    def test_s_must_be_positive(self):
        with pytest.raises(ValueError):
            selection_probability([0.5], 0, 1)

    @given(
        st.lists(st.floats(0, 1), min_size=1, max_size=6).map(lambda v: sorted(v, reverse=True)),
        st.integers(1, 8),
    )
    def test_level_probabilities_sum_to_one(self, z, s):
        m = len(z)
        total = sum(selection_probability_level(z, s, i) for i in range(m + 1))
        assert total == pytest.approx(1.0)

    def test_tournament_empirical(self):
        rng = np.random.default_rng(0)
        levels = np.array([0, 0, 1, 1, 2, 3, 3, 3])
        z = PopulationVector.from_levels(levels, 3).values
        draws = levels[rng.integers(0, 8, (200_000, 3))].max(axis=1)
        for j in range(1, 4):
            assert (draws >= j).mean() == pytest.approx(selection_probability(z, 3, j), abs=5e-3)


class TestBoundMatrix:
    def test_shape_and_range(self):
        with pytest.raises(ValueError):
            BoundMatrix(np.zeros((2, 2)), Kind.LOWER)
        with pytest.raises(ValueError):
            BoundMatrix(np.full((3, 2), 1.5), Kind.LOWER)

    def test_exact_rows_must_not_increase(self):
        with pytest.raises(ValueError):
            BoundMatrix.from_rows([[0.1, 0.5], [1, 1], [1, 1]], Kind.EXACT)

    def test_entry_column_zero(self):
        A = BoundMatrix.zeros(3)
        assert A.entry(2, 0) == 1.0
        assert A.entry(2, 1) == 0.0

    def test_monotone_location(self):
        A = BoundMatrix.from_rows([[0.5, 0], [0.4, 0], [1, 1]])
        assert A.monotone_violations() == [(1, 1)]
        with pytest.raises(NotMonotoneError) as info:
            A.require_monotone()
        assert "entry(0,1)" in str(info.value)

    def test_exact_rational_monotonicity(self):
        third = Fraction(1, 3)
        A = BoundMatrix.from_rows([[third, 0], [third, third], [1, third]])
        assert A.rational is not None
        assert is_monotone(A)

    def test_zero_and_ones(self):
        assert is_monotone(BoundMatrix.zeros(4))
        assert is_monotone(BoundMatrix.ones(4))

    def test_csv_and_config_roundtrip(self):
        A = matrix_from_function(3, lambda i, j: Fraction(1, 2) if j <= i + 1 else 0)
        B = BoundMatrix.from_csv(A.to_csv(), Kind.LOWER)
        assert np.array_equal(A.entries, B.entries)
        C = BoundMatrix.from_config(A.to_config())
        assert np.array_equal(A.entries, C.entries)

    def test_validate_pair(self):
        A = BoundMatrix.from_rows([[0.2, 0.0], [0.5, 0.1], [1, 0.4]], Kind.LOWER)
        B = BoundMatrix.from_rows([[0.3, 0.1], [0.6, 0.2], [1, 0.5]], Kind.UPPER)
        rep = validate_bound_pair(A, B)
        assert rep.valid and rep.lower_monotone and rep.upper_monotone
        bad = validate_bound_pair(B.__class__(B.entries, Kind.LOWER), A.__class__(A.entries, Kind.UPPER))
        assert not bad.valid and bad.violations

    def test_validate_pair_dimension(self):
        with pytest.raises(ValueError):
            validate_bound_pair(BoundMatrix.zeros(2), BoundMatrix.ones(3))

    @settings(max_examples=50)
    @given(st.integers(1, 6), st.integers(0, 2**31 - 1))
    def test_sorted_columns_are_monotone(self, m, seed):
        rng = np.random.default_rng(seed)
        E = np.sort(rng.random((m + 1, m)), axis=0)
        E = -np.sort(-E, axis=1)
        assert is_monotone(BoundMatrix(E, Kind.EXACT))
