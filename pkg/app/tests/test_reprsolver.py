from fractions import Fraction
import logging

import pytest

from app.models.labels import GeneratorQuintuple
from app.models.representation import NotInSpan, ProductRepresentation
from app.services.characters import DirichletCharacter, trivial_character
from app.services.cuspexp import S_MATRIX, al_eigenvalue, al_image, expansion_at_cusp, gamma_d, matrix_product
from app.services.eisenstein import eisenstein_basis_elements
from app.services.exactmath import CyclotomicNumber, root_of_unity, sqrt_integer
from app.services.qexp import FourierExpansion, sturm_bound
from app.services.reprsolver import (
    EchelonBasis, build_matrix, enumerate_generators, rank_of_span, solve_represent, solve_with_columns,
    verify_representation, working_precision)
from app.utils.errors import ExpansionError, LabelError

ONE = trivial_character()


def level_one_product(l):
    return GeneratorQuintuple(ONE, ONE, l, 1, 1, 1, 12)


def rational_vector(values):
    return [CyclotomicNumber.from_rational(v) for v in values]


def dot(y, column):
    total = CyclotomicNumber.zero()
    for a, b in zip(y, column):
        total = total + a * b
    return total


def test_generator_counts():
    """Test enumeration of generator quintuples"""
    assert len(enumerate_generators(11, 2)) == 10
    assert [q.l for q in enumerate_generators(1, 12)] == [4, 6, 8]
    with pytest.raises(LabelError):
        enumerate_generators(11, 3)


def test_generators_are_deterministic():
    """Test that enumeration order is reproducible and duplicate-free"""
    first = enumerate_generators(12, 4)
    second = enumerate_generators(12, 4)
    assert first == second
    keys = [(q.phi, q.psi, q.l, q.d1 * q.d, q.d2 * q.d) for q in first]
    assert len(keys) == len(set(keys))
    assert all(12 % q.level == 0 for q in first)


def test_echelon_basis():
    """Test insertion, dependency detection and solving"""
    basis = EchelonBasis(3)
    assert basis.add(rational_vector([1, 0, 0]), 0)
    assert not basis.add(rational_vector([2, 0, 0]), 1)
    assert basis.add(rational_vector([1, 1, 0]), 2)
    assert basis.rank == 2
    solution, failure = basis.solve(rational_vector([3, 1, 0]))
    assert failure is None
    assert solution == {0: 2, 2: 1}
    solution, (certificate, residual) = basis.solve(rational_vector([0, 0, 5]))
    assert solution is None
    assert residual == 5
    assert dot(certificate, rational_vector([1, 1, 0])) == 0
    with pytest.raises(ExpansionError):
        basis.add(rational_vector([1, 0]), 3)


def test_rank_of_span():
    """Test ranks at level 1 and level 11"""
    assert rank_of_span(1, 12) == 2
    assert rank_of_span(11, 2) == 2
    with pytest.raises(ExpansionError):
        rank_of_span(11, 2, B=1)


def test_delta_two_column_system(delta):
    """Test Delta = 50/3 E_4E_8 - 147/4 E_6^2 on the two-product subsystem"""
    rep = solve_with_columns(delta, 1, [level_one_product(4), level_one_product(6)], 6)
    assert isinstance(rep, ProductRepresentation)
    assert [c for c, _ in rep.terms] == [Fraction(50, 3), Fraction(-147, 4)]
    assert rep.verified_to == 6


def test_delta_identity(delta):
    """Test the displayed Delta identity through q^12"""
    rep = ProductRepresentation(1, 12, [
        (Fraction(50, 3), level_one_product(4)),
        (Fraction(-147, 4), level_one_product(6)),
    ])
    assert verify_representation(rep, delta, 12)


def test_delta_solve(delta):
    """Test the full solver on Delta"""
    rep = solve_represent(delta, 1, 12)
    assert rep.is_verified
    assert verify_representation(rep, delta, 12)


def test_f11_identity(f11):
    """Test the two-product expression of the level 11 newform"""
    phi = DirichletCharacter(11, [1])
    phi3 = DirichletCharacter(11, [3])
    inv_sqrt5 = sqrt_integer(5).inverse()
    rep = ProductRepresentation(11, 2, [
        (inv_sqrt5 - Fraction(1, 4), GeneratorQuintuple(ONE, phi, 1, 1, 1, 1, 2)),
        (-(inv_sqrt5 + Fraction(1, 4)), GeneratorQuintuple(ONE, phi3, 1, 1, 1, 1, 2)),
    ])
    assert verify_representation(rep, f11, 10)


def test_f11_solve(f11):
    """Test the solver on the level 11 newform"""
    rep = solve_represent(f11, 11, 2)
    assert isinstance(rep, ProductRepresentation)
    assert verify_representation(rep, f11, 20)
    assert rep.to_dict()['verified_to'] == working_precision(11, 2)


def test_f11_atkin_lehner(f11):
    """Test the W_11-eigenvalue -a_11 and its independence of the chosen matrix"""
    rep = solve_represent(f11, 11, 2)
    assert al_eigenvalue(rep, [11], 8) == -f11[11]
    assert al_image(rep, [11], 8, matrix=(11, 1, 110, 11)) == al_image(rep, [11], 8)


def test_rank_one_form_not_in_span(f37_rank_one):
    """Test that the level 37 form with vanishing central value is excluded"""
    result = solve_represent(f37_rank_one, 37, 2)
    assert isinstance(result, NotInSpan)
    assert not result
    assert not result.residual.is_zero()
    B = result.precision
    assert dot(result.certificate, f37_rank_one.coeffs[:B + 1]) == result.residual
    columns, _ = build_matrix(enumerate_generators(37, 2), B, eisenstein_basis_elements(37, 2))
    for column in columns:
        assert dot(result.certificate, column).is_zero()
    assert result.to_dict()['not_in_span'] is True


def test_rank_zero_form_in_span(f37_rank_zero):
    """Test that the level 37 form with nonvanishing central value is represented"""
    rep = solve_represent(f37_rank_zero, 37, 2)
    assert isinstance(rep, ProductRepresentation)
    assert verify_representation(rep, f37_rank_zero, 15)


def test_solver_input_errors(delta):
    """Test target validation in the solver"""
    with pytest.raises(ExpansionError):
        solve_represent(delta, 1, 4)
    with pytest.raises(ExpansionError):
        solve_represent(delta.truncate(0), 1, 12)
    with pytest.raises(ExpansionError):
        verify_representation(ProductRepresentation(1, 12, []), delta, 20)


def test_verify_rejects_wrong_target(delta):
    """Test that verification fails on a different target"""
    rep = ProductRepresentation(1, 12, [(1, level_one_product(4))])
    assert not verify_representation(rep, delta, 6)
    assert not verify_representation(rep, FourierExpansion.from_rationals(12, [0] * 7, width=2), 6)


@pytest.mark.parametrize('N, k, dimension', [
    (8, 16, 17),
    (11, 4, 4),
    (32, 4, 16),
    pytest.param(36, 8, 48, marks=pytest.mark.slow),
    (49, 2, 8),
    pytest.param(243, 4, 90, marks=pytest.mark.slow),
])
def test_span_dimensions(N, k, dimension):
    """Test that products and Eisenstein series fill M_k(Gamma_0(N))"""
    assert rank_of_span(N, k) == dimension


def test_f49_cusp_and_eigenvalue(f49):
    """Test the level 49 newform at cusp 0 and its W_49-eigenvalue"""
    rep = solve_represent(f49, 49, 2)
    assert isinstance(rep, ProductRepresentation)
    at_zero = expansion_at_cusp(rep, S_MATRIX, 4)
    assert at_zero.width == 49
    expected = [0, Fraction(-1, 49), Fraction(-1, 49), 0, Fraction(1, 49)]
    assert at_zero.expansion == FourierExpansion.from_rationals(2, expected, width=49)
    assert al_eigenvalue(rep, [7], 10) == -1


def test_solve_at_sturm_precision(delta, caplog):
    """Test a target known only to the Sturm bound: solved, with no slack rows checked"""
    target = delta.truncate(sturm_bound(1, 12))
    with caplog.at_level(logging.WARNING, logger='app.services.reprsolver'):
        rep = solve_represent(target, 1, 12)
    assert isinstance(rep, ProductRepresentation)
    assert rep.verified_to == sturm_bound(1, 12)
    assert 'No slack rows' in caplog.text
    assert verify_representation(rep, delta, 12)


def test_f11_at_sturm_precision(f11, caplog):
    """Test the level 11 newform truncated at its Sturm bound"""
    with caplog.at_level(logging.WARNING, logger='app.services.reprsolver'):
        rep = solve_represent(f11.truncate(sturm_bound(11, 2)), 11, 2)
    assert rep.verified_to == 2
    assert 'No slack rows' in caplog.text
    assert verify_representation(rep, f11, 20)


def test_slack_rows_checked_separately(delta, caplog):
    """Test that a target agreeing with Delta only through the Sturm bound is rejected"""
    coeffs = list(delta.coeffs)
    coeffs[3] = coeffs[3] + 1
    target = FourierExpansion(12, coeffs)
    with caplog.at_level(logging.WARNING, logger='app.services.reprsolver'):
        result = solve_represent(target, 1, 12)
    assert isinstance(result, NotInSpan)
    assert result.precision == working_precision(1, 12)
    B = result.precision
    assert dot(result.certificate, target.coeffs[:B + 1]) == result.residual
    assert 'disagrees' in caplog.text
    assert 'No slack rows' not in caplog.text


def cyclotomic_expansion(weight, coeffs, width=1, scale=1):
    return FourierExpansion(weight, [CyclotomicNumber.coerce(c) * scale for c in coeffs], width)


def test_level_8_newforms(f8_newform):
    """Test the weight 16 newforms of level 8 at the cusps 1/2 and 1/4 and under W_8"""
    a3, a5 = f8_newform[3], f8_newform[5]
    rep = solve_represent(f8_newform, 8, 16)
    assert isinstance(rep, ProductRepresentation)
    assert al_eigenvalue(rep, [2], 6) == -1
    at_half = expansion_at_cusp(rep, gamma_d(2), 6)
    assert at_half.cusp == '1/2'
    assert at_half.width == 2
    i = root_of_unity(4, 1)
    assert at_half.expansion == cyclotomic_expansion(16, [0, 1, 0, -a3, 0, a5, 0], 2, i / 256)
    at_quarter = expansion_at_cusp(rep, gamma_d(4), 6)
    assert at_quarter.width == 1
    assert at_quarter.expansion == f8_newform.truncate(6).scale(-1)


@pytest.mark.slow
def test_level_36_atkin_lehner_signs(f36):
    """Test the Atkin-Lehner signs of the weight 8 newform of level 36"""
    rep = solve_represent(f36, 36, 8)
    assert isinstance(rep, ProductRepresentation)
    assert al_eigenvalue(rep, [2, 3], 6) == 1
    assert al_eigenvalue(rep, [2], 6) == -1
    assert al_eigenvalue(rep, [3], 6) == -1
    W2 = matrix_product((1, 1, -9, -8), (4, 0, 0, 1))
    W3 = matrix_product((1, 1, 8, 9), (9, 0, 0, 1))
    assert al_image(rep, [2], 6, matrix=W2) == f36.truncate(6).scale(-1)
    assert al_image(rep, [3], 6, matrix=W3) == f36.truncate(6).scale(-1)


@pytest.mark.slow
def test_level_243_cusp_expansions(f243):
    """Test the weight 4 newform of level 243 at the cusps 1/3, 1/9, 1/27 and 1/81"""
    rep = solve_represent(f243, 243, 4)
    assert isinstance(rep, ProductRepresentation)

    def z(m, *exponents):
        return sum((root_of_unity(m, j) for j in exponents), CyclotomicNumber.zero())

    expected = {
        3: (27, Fraction(1, 729), [0, z(162, 2) - z(162, 29), -3 * z(162, 31), 0,
                                   z(162, 8) - z(162, 35), 3 * z(162, 37)]),
        9: (3, Fraction(1, 9), [0, z(54, 14) - z(54, 5), 3 * (z(54, 1) - z(54, 10)), 0,
                                z(54, 11), 3 * z(54, 7)]),
        27: (1, 1, [0, z(9, 1), -3 * z(9, 2), 0, z(9, 4), 3 * z(9, 5)]),
        81: (1, 1, [0, -z(3, 0, 1), -3 * z(3, 1), 0, -z(3, 0, 1), 3 * z(3, 1)]),
    }
    for d, (width, scale, coeffs) in expected.items():
        result = expansion_at_cusp(rep, gamma_d(d), 5)
        assert result.cusp == f'1/{d}'
        assert result.width == width
        assert result.expansion == cyclotomic_expansion(4, coeffs, width, scale)
