"""Tests for the Monte Carlo and exact lemma checks."""

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from distal_lab.models.config import LemmaParams
from distal_lab.services.lemmalab import (
    LemmaPreconditionError,
    lemma_tasks,
    run_lemma_grid,
    verify_del,
    verify_del_random,
    verify_randomp,
    verify_randomp_variance,
    verify_simple,
)


def rng(seed=0):
    return np.random.default_rng(seed)


class TestRandomPermutation:
    """Matched counts of a uniform permutation."""

    def test_bound_example(self):
        """gamma = 0.5 and N = 100 give the bound 0.8, and the estimate clears it."""
        check = verify_randomp(0.5, 100, 10_000, rng(1))
        assert check.bound == pytest.approx(0.8)
        assert check.passed
        assert check.empirical >= 0.8

    def test_vacuous_bound(self):
        """gamma = 0.1 and N = 10 make the bound negative; the check passes and is marked."""
        check = verify_randomp(0.1, 10, 100, rng(2))
        assert check.bound < 0
        assert check.vacuous
        assert check.passed
        assert check.margin == 0.0

    @pytest.mark.parametrize("gamma, n", [(0.0, 10), (1.0, 10), (0.5, 1)])
    def test_preconditions(self, gamma, n):
        """gamma in (0, 1) and N >= 2."""
        with pytest.raises(LemmaPreconditionError):
            verify_randomp(gamma, n, 10, rng())

    def test_variance_matches_hypergeometric(self):
        """The sampled variance agrees with the exact value and sits below rho(1 - rho)/M."""
        check = verify_randomp_variance(0.3, 200, 10_000, rng(3))
        assert check.passed
        assert check.extra["exact"] <= check.bound * (1 + 1e-12)

    def test_variance_needs_positive_m(self):
        """floor(gamma N) = 0 leaves nothing to normalize by."""
        with pytest.raises(LemmaPreconditionError):
            verify_randomp_variance(0.3, 3, 10, rng())

    def test_params_text(self):
        """Parameters are listed as key=value pairs."""
        check = verify_randomp(0.5, 100, 10, rng(4))
        assert check.params_text == "gamma=0.5;N=100;trials=10"


class TestDel:
    """Cells that an overlap set fills beyond sqrt(delta)."""

    def test_empty_overlap(self):
        """With E empty nothing is excluded."""
        check = verify_del([Fraction(1, 10)] * 10, [0] * 10, Fraction(15, 100))
        assert check.passed
        assert check.empirical == pytest.approx(1.0)
        assert check.extra["excluded"] == 0

    def test_one_cell_filled(self):
        """A cell filled by E is excluded and the rest still clears 1 - sqrt(delta)."""
        masses = [Fraction(1, 10)] * 10
        overlaps = [Fraction(1, 10)] + [Fraction(0)] * 9
        check = verify_del(masses, overlaps, Fraction(15, 100))
        assert check.passed
        assert check.extra["excluded"] == 1
        assert check.empirical == pytest.approx(0.9)

    def test_float_inputs_are_converted_exactly(self):
        """Floats go through their shortest decimal form."""
        check = verify_del([0.5, 0.5], [0.01, 0.0], 0.05)
        assert check.passed

    @pytest.mark.parametrize(
        "masses, overlaps, delta",
        [
            ([Fraction(1, 2)] * 2, [0], Fraction(1, 10)),
            ([Fraction(1, 3)] * 2, [0, 0], Fraction(1, 10)),
            ([Fraction(1, 2)] * 2, [Fraction(3, 4), 0], Fraction(9, 10)),
            ([Fraction(1, 2)] * 2, [0, 0], Fraction(0)),
            ([Fraction(1, 2)] * 2, [Fraction(1, 10), 0], Fraction(1, 10)),
        ],
    )
    def test_preconditions(self, masses, overlaps, delta):
        """Lengths, total mass, overlap range, delta range and mu(E) < delta are enforced."""
        with pytest.raises(LemmaPreconditionError):
            verify_del(masses, overlaps, delta)

    def test_random_instances_have_no_violations(self):
        """The inequality holds on every random rational instance."""
        check = verify_del_random(2000, 12, rng(5))
        assert check.passed
        assert check.extra["violations"] == 0

    @given(
        st.lists(st.integers(1, 50), min_size=1, max_size=12),
        st.data(),
    )
    @settings(max_examples=200, deadline=None)
    def test_inequality_holds(self, weights, data):
        """Any partition, any admissible E and delta satisfy the inequality."""
        total = sum(weights)
        overlap = [data.draw(st.integers(0, w)) for w in weights]
        used = sum(overlap)
        if used >= total:
            return
        top = data.draw(st.integers(used + 1, total - 1)) if used + 1 < total else None
        if top is None:
            return
        check = verify_del(
            [Fraction(w, total) for w in weights],
            [Fraction(o, total) for o in overlap],
            Fraction(top, total),
        )
        assert check.passed


class TestSimple:
    """Weighted sums of dependent Bernoulli blocks."""

    def test_bound_example(self):
        """L = 0, n = 1000, p = 0.5 give the bound 0.984, and the estimate clears it."""
        check = verify_simple(0.5, 0, 1000, 10_000, rng(6))
        assert check.bound == pytest.approx(0.984)
        assert check.passed

    def test_vacuous_for_a_single_variable(self):
        """n = 1 makes the bound negative."""
        check = verify_simple(0.5, 0, 1, 100, rng(7))
        assert check.vacuous
        assert check.passed

    @pytest.mark.parametrize("dependence", ["copies", "anti"])
    def test_blocks(self, dependence):
        """Blocks of length L + 1 with either dependence pass at n = 2000."""
        check = verify_simple(0.5, 4, 2000, 5000, rng(8), dependence=dependence)
        assert check.bound == pytest.approx(1 - 4 * 5 / 2000 / 0.25)
        assert check.passed

    def test_higher_success_probability(self):
        """Success probabilities above p only help."""
        check = verify_simple(0.3, 1, 2000, 5000, rng(9), p_actual=0.75)
        assert check.passed
        assert check.empirical == pytest.approx(1.0)

    def test_explicit_weights(self):
        """Non-uniform weights enter the bound through their maximum."""
        weights = np.full(1000, 1.0 / 1000)
        weights[:10] += 0.001
        weights /= weights.sum()
        check = verify_simple(0.5, 0, 1000, 2000, rng(10), weights=weights)
        assert check.bound == pytest.approx(1 - 4 * weights.max() / 0.25)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"p": 0.0},
            {"p": 0.5, "p_actual": 0.4},
            {"p": 0.5, "dependence": "random"},
            {"p": 0.5, "weights": [1.0, 1.0]},
        ],
    )
    def test_preconditions(self, kwargs):
        """p in (0, 1], p <= p_actual <= 1, known dependence and normalized weights."""
        kwargs = dict(kwargs)
        p = kwargs.pop("p")
        with pytest.raises(LemmaPreconditionError):
            verify_simple(p, 0, 2, 10, rng(), **kwargs)


class TestGrid:
    """Configured grids of checks."""

    def small_params(self):
        return LemmaParams(
            trials=500,
            randomp_gamma=[0.5],
            randomp_N=[50],
            del_instances=50,
            simple_p=[0.5],
            simple_L=[0],
            simple_n=[500],
            simple_dependence=["copies", "anti"],
            simple_p_actual=[0.75],
        )

    def test_task_count(self):
        """randomp, its variance, the del batch, two dependences and one p_actual."""
        assert len(lemma_tasks(self.small_params(), 1)) == 6

    def test_grid_is_deterministic(self):
        """The same seed reproduces every estimate."""
        first = run_lemma_grid(self.small_params(), 42)
        second = run_lemma_grid(self.small_params(), 42)
        assert [c.empirical for c in first] == [c.empirical for c in second]

    def test_tasks_are_order_independent(self):
        """Each task has its own stream, so running them backwards gives the same results."""
        tasks = lemma_tasks(self.small_params(), 7)
        forward = [t().empirical for t in tasks]
        backward = [t().empirical for t in reversed(tasks)][::-1]
        assert forward == backward


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
