import math
from fractions import Fraction

import numpy as np
import pytest

from weighted_kstab import catalog
from weighted_kstab.errors import NonPolynomial, ParseError, RankMismatch
from weighted_kstab.integration import generators, polynomial
from weighted_kstab.weights import (
    WeightFunction,
    WeightKind,
    euler_evaluator,
    euler_pairing,
    load_weight,
    positivity_audit,
    pullback,
    read_weight,
)

F = Fraction
(t,) = generators(1)


class TestWeightFunction:
    """Construction and exact evaluation."""

    def test_merges_terms(self):
        """Test that equal powers are merged and zero powers mean the constant."""
        g = WeightFunction.polynomial([(1, [0]), (2, []), (1, [2]), (-1, [2])])
        assert g.terms == ((F(3), ()),)
        assert g.rank is None

    def test_rank(self):
        """Test the rank of a non-constant weight."""
        assert catalog.weight("theta_squared").rank == 1
        assert WeightFunction.exp_affine([1.0, 2.0]).rank == 2

    def test_value(self):
        """Test exact evaluation."""
        assert catalog.weight("one_plus_theta_squared").value((F(1, 2),)) == F(5, 4)

    def test_shifted(self):
        """Test that shifting substitutes theta - shift."""
        g = catalog.weight("theta_squared").shifted((F(1),))
        assert g.value((F(3),)) == 4
        assert g == WeightFunction.polynomial([(1, [2]), (-2, [1]), (1, [0])])

    def test_exp_affine_has_no_exact_value(self):
        """Test that exp-affine weights refuse exact operations."""
        g = WeightFunction.exp_affine([1.0])
        assert not g.exact
        with pytest.raises(NonPolynomial):
            g.value((F(0),))
        with pytest.raises(NonPolynomial):
            g.shifted((F(1),))

    def test_load_and_read(self, data_dir):
        """Test that documents and files give the same weight."""
        for name in catalog.WEIGHTS:
            assert read_weight(data_dir / f"{name}.json") == catalog.weight(name)

    def test_load_exp_affine(self):
        """Test the exp-affine document."""
        g = load_weight({"type": "exp_affine", "coeffs": [0.5], "constant": 1})
        assert g.kind == WeightKind.EXP_AFFINE
        assert g.coeffs == (0.5,)
        assert g.constant == 1.0

    def test_unknown_type(self):
        """Test that an unknown weight type is rejected."""
        with pytest.raises(ParseError):
            load_weight({"type": "gaussian", "terms": []})


class TestPullback:
    """Substitution of the torus coordinates."""

    def test_canonical_chi(self, p1):
        """Test the pullback with theta = x."""
        assert pullback(catalog.weight("one_plus_theta_squared"), p1).polynomial == polynomial(1 + t**2, 1)

    def test_shifted_chi(self, p1):
        """Test that the lifting character enters the pullback."""
        pulled = pullback(catalog.weight("theta_squared"), p1.with_chi((F(1),)))
        assert pulled.polynomial == polynomial((t + 1) ** 2, 1)

    def test_constant_on_rank_zero(self, sl2, one):
        """Test that constants pull back to any torus rank."""
        assert pullback(one, sl2).polynomial == polynomial(1, 1)

    def test_rank_mismatch(self, sl2):
        """Test that a rank-1 weight is rejected on a datum without torus."""
        with pytest.raises(RankMismatch):
            pullback(catalog.weight("theta_squared"), sl2)

    def test_exp_affine_evaluator(self, p1):
        """Test the numeric pullback of an exp-affine weight."""
        pulled = pullback(WeightFunction.exp_affine([1.0], 0.5), p1)
        assert not pulled.exact
        assert pulled.evaluator()(np.array([[1.0]]))[0] == pytest.approx(math.exp(1.5))


class TestEulerPairing:
    """The pairing of x with the gradient of the pulled-back weight."""

    def test_polynomial(self, p1):
        """Test x * d(x^2)/dx = 2 x^2."""
        assert euler_pairing(catalog.weight("theta_squared"), p1).polynomial == polynomial(2 * t**2, 1)

    def test_constant_vanishes(self, p1, one):
        """Test that a constant weight pairs to zero."""
        assert euler_pairing(one, p1).polynomial.is_zero

    def test_exp_affine_numeric_only(self, p1):
        """Test that the exact pairing refuses exp-affine weights and the evaluator handles them."""
        g = WeightFunction.exp_affine([2.0])
        with pytest.raises(NonPolynomial):
            euler_pairing(g, p1)
        h = euler_evaluator(g, p1)
        assert h(np.array([[0.5]]))[0] == pytest.approx(math.e * 2.0 * 0.5)


class TestPositivityAudit:
    """Sampled positivity of the pulled-back weight."""

    def test_positive(self, p1, one):
        """Test that a constant weight passes on vertices and grid points."""
        audit = positivity_audit(one, p1)
        assert audit.passed
        assert audit.samples == 5

    def test_vanishing_inside(self, p1):
        """Test that theta^2 fails at the origin."""
        audit = positivity_audit(catalog.weight("theta_squared"), p1)
        assert not audit.passed
        assert audit.witness == (0,)
        assert audit.value == 0

    def test_exp_affine_positive(self, p1):
        """Test that an exp-affine weight passes numerically."""
        assert positivity_audit(WeightFunction.exp_affine([3.0]), p1, grid=2).passed
