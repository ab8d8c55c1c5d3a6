from fractions import Fraction

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from weighted_kstab.errors import DegeneratePolytope, DependentGenerators, Infeasible, Unbounded
from weighted_kstab.rational_geometry import (
    HPolytope,
    affine_rank,
    as_rational,
    determinant,
    dot,
    hull,
    irredundant,
    is_full_dimensional,
    lattice_points,
    nullspace,
    primitive,
    rank,
    simplicial_cone_coefficients,
    solve,
    triangulate,
    vertices,
    volume,
)

F = Fraction


@pytest.fixture
def square():
    """The box [-1, 1]^2."""
    return HPolytope.from_inequalities([((1, 0), 1), ((-1, 0), 1), ((0, 1), 1), ((0, -1), 1)], 2)


@pytest.fixture
def quadrilateral():
    """x >= -1, y >= -1, -1 <= x + y <= 1."""
    return HPolytope.from_inequalities([((1, 0), 1), ((0, 1), 1), ((-1, -1), 1), ((1, 1), 1)], 2)


class TestRationals:
    """Parsing and small linear algebra helpers."""

    @pytest.mark.parametrize(
        "raw,expected", [(3, F(3)), ("3/4", F(3, 4)), (" -1/2 ", F(-1, 2)), (F(5, 7), F(5, 7))]
    )
    def test_as_rational(self, raw, expected):
        """Test that integers, fractions and p/q strings parse exactly."""
        assert as_rational(raw) == expected

    @pytest.mark.parametrize("raw", [True, 0.5, "one", "1/0", None])
    def test_as_rational_rejects(self, raw):
        """Test that booleans, floats and malformed strings are rejected."""
        with pytest.raises(ValueError):
            as_rational(raw)

    def test_primitive(self):
        """Test the split into a primitive integral vector and a positive scale."""
        assert primitive((F(2, 3), F(4, 3))) == ((F(1), F(2)), F(2, 3))

    def test_primitive_zero_vector(self):
        """Test that the zero vector has no primitive form."""
        with pytest.raises(ValueError):
            primitive((F(0), F(0)))

    def test_determinant(self):
        """Test an exact 2x2 determinant."""
        assert determinant([[1, 2], [3, 4]]) == -2

    def test_solve_unique(self):
        """Test a uniquely solvable system."""
        assert solve([[F(2), F(0)], [F(0), F(4)]], [F(1), F(1)]) == (F(1, 2), F(1, 4))

    def test_solve_inconsistent(self):
        """Test that inconsistent systems return None."""
        assert solve([[F(1)], [F(1)]], [F(0), F(1)]) is None

    def test_nullspace(self):
        """Test the kernel of a single row."""
        assert nullspace([[F(1), F(1)]], 2) == [(F(-1), F(1))]


class TestHPolytope:
    """Construction and vertex enumeration."""

    def test_duplicate_rows_dropped(self):
        """Test that positive multiples of a row are dropped."""
        p = HPolytope.from_inequalities([((2, 0), 2), ((1, 0), 1), ((-1, 0), 1), ((0, 1), 1), ((0, -1), 1)], 2)
        assert len(p.inequalities) == 4

    def test_wrong_length_rejected(self):
        """Test that a normal of the wrong length is rejected."""
        with pytest.raises(ValueError):
            HPolytope.from_inequalities([((1, 0, 0), 1)], 2)

    def test_vertices_of_square(self, square):
        """Test that the square has its four corners in lexicographic order."""
        assert vertices(square) == ((-1, -1), (-1, 1), (1, -1), (1, 1))

    def test_vertices_of_quadrilateral(self, quadrilateral):
        """Test the vertices of a non-symmetric quadrilateral."""
        assert vertices(quadrilateral) == ((-1, 0), (-1, 2), (0, -1), (2, -1))

    def test_unbounded(self):
        """Test that a half-line is reported unbounded."""
        with pytest.raises(Unbounded):
            vertices(HPolytope.from_inequalities([((1,), 0)], 1))

    def test_infeasible(self):
        """Test that contradictory rows are reported infeasible."""
        with pytest.raises(Infeasible):
            vertices(HPolytope.from_inequalities([((1,), -1), ((-1,), 0)], 1))

    def test_lower_dimensional(self, square):
        """Test that a flattened square is not full dimensional."""
        flat = square.with_inequalities([((0, -1), 0)]).with_inequalities([((0, 1), 0)])
        assert not is_full_dimensional(flat)
        with pytest.raises(DegeneratePolytope):
            triangulate(flat)

    def test_irredundant(self, square):
        """Test that a row missing the square is removed."""
        padded = square.with_inequalities([((-1, -1), 5)])
        assert irredundant(padded).inequalities == square.inequalities

    def test_hull_matches_square(self, square):
        """Test that the hull of the corners recovers the square."""
        assert vertices(hull(vertices(square))) == vertices(square)

    def test_hull_degenerate(self):
        """Test that collinear points have no full-dimensional hull."""
        with pytest.raises(DegeneratePolytope):
            hull([(0, 0), (1, 1), (2, 2)])

    def test_tight_rows(self, square):
        """Test the rows tight at a corner."""
        assert square.tight((F(1), F(1))) == frozenset({1, 3})


class TestVolume:
    """Triangulation volumes and lattice points."""

    def test_square_volume(self, square):
        """Test the area of the square."""
        assert volume(square) == 4

    def test_quadrilateral_volume(self, quadrilateral):
        """Test the area of the quadrilateral."""
        assert volume(quadrilateral) == 4

    def test_dilation(self, square):
        """Test that dilation by k scales area by k^2."""
        assert volume(square.dilate(3)) == 36

    @pytest.mark.parametrize("apex", [0, 1, 2, 3])
    def test_apex_independent(self, quadrilateral, apex):
        """Test that every choice of cone point gives the same total."""
        assert sum(s.volume for s in triangulate(quadrilateral, apex)) == 4

    def test_lattice_points(self, quadrilateral):
        """Test the integer points of the quadrilateral."""
        points = lattice_points(quadrilateral)
        assert len(points) == 9
        assert points[0] == (-1, 0)
        assert points == sorted(points)

    @settings(max_examples=30, deadline=None)
    @given(
        widths=st.lists(st.integers(min_value=1, max_value=4), min_size=1, max_size=3),
        shift=st.integers(min_value=-2, max_value=2),
    )
    def test_box_volume_and_points(self, widths, shift):
        """Test that boxes have product volume and product lattice counts."""
        rows = []
        for i, w in enumerate(widths):
            unit = [0] * len(widths)
            unit[i] = 1
            rows.append((unit, -shift))
            rows.append(([-u for u in unit], shift + w))
        box = HPolytope.from_inequalities(rows, len(widths))
        expected_volume = 1
        expected_points = 1
        for w in widths:
            expected_volume *= w
            expected_points *= w + 1
        assert volume(box) == expected_volume
        assert len(lattice_points(box)) == expected_points


class TestConeCoefficients:
    """Coordinates in a simplicial cone basis."""

    def test_inside_span(self):
        """Test coefficients in a basis."""
        assert simplicial_cone_coefficients((1, 1), [(1, 0), (0, 1)]) == (1, 1)

    def test_outside_span(self):
        """Test that a vector outside the span returns None."""
        assert simplicial_cone_coefficients((1, 1), [(1, 0)]) is None

    def test_no_generators(self):
        """Test the empty cone."""
        assert simplicial_cone_coefficients((0, 0), []) == ()
        assert simplicial_cone_coefficients((1, 0), []) is None

    def test_dependent_generators(self):
        """Test that dependent generators are rejected."""
        with pytest.raises(DependentGenerators):
            simplicial_cone_coefficients((1, 1), [(1, 0), (2, 0)])

    @settings(max_examples=50, deadline=None)
    @given(
        first=st.tuples(st.integers(-3, 3), st.integers(-3, 3)),
        second=st.tuples(st.integers(-3, 3), st.integers(-3, 3)),
    )
    def test_nonnegative_exactly_inside(self, first, second):
        """Test on a grid that the coefficients are non-negative exactly on the cone."""
        assume(rank([first, second]) == 2)
        # inward normals of the two boundary rays
        n1 = (-first[1], first[0])
        if dot(n1, second) < 0:
            n1 = (first[1], -first[0])
        n2 = (-second[1], second[0])
        if dot(n2, first) < 0:
            n2 = (second[1], -second[0])
        for px in range(-4, 5):
            for py in range(-4, 5):
                point = (F(px), F(py))
                coefficients = simplicial_cone_coefficients(point, [first, second])
                inside = dot(n1, point) >= 0 and dot(n2, point) >= 0
                assert all(c >= 0 for c in coefficients) == inside


points_2d = st.lists(st.tuples(st.integers(-3, 3), st.integers(-3, 3)), min_size=3, max_size=8)
points_3d = st.lists(
    st.tuples(st.integers(-2, 2), st.integers(-2, 2), st.integers(-2, 2)), min_size=4, max_size=9
)


class TestHullRoundTrip:
    """Facet and vertex descriptions agree on random point sets."""

    @settings(max_examples=40, deadline=None)
    @given(points=st.one_of(points_2d, points_3d))
    def test_round_trip(self, points):
        """Test that the hull contains the points and its vertices are among them."""
        assume(affine_rank([tuple(F(a) for a in p) for p in points]) == len(points[0]))
        polytope = hull(points)
        verts = vertices(polytope)
        given_points = {tuple(F(a) for a in p) for p in points}
        assert set(verts) <= given_points
        assert all(polytope.contains(p) for p in given_points)
        assert vertices(hull(verts)) == verts

    @settings(max_examples=25, deadline=None)
    @given(points=points_2d)
    def test_hull_rows_are_facets(self, points):
        """Test that every row of a hull supports a facet."""
        assume(affine_rank([tuple(F(a) for a in p) for p in points]) == 2)
        polytope = hull(points)
        assert irredundant(polytope).inequalities == polytope.inequalities
