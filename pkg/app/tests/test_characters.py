from fractions import Fraction
import random

import pytest
from sympy import factorint

from app.services.characters import (
    DirichletCharacter, all_characters, bernoulli_polynomial, character_from_label, enumerate_primitive,
    principal_character, trivial_character, unit_group)
from app.services.exactmath import CyclotomicNumber, euler_phi, root_of_unity
from app.utils.errors import CharacterError, InputFormatError


def chi4():
    return enumerate_primitive(4)[0]


def test_unit_group_generators():
    """Test generators and orders of (Z/N)^x"""
    assert unit_group(8)[:2] == ((7, 5), (2, 2))
    assert unit_group(12)[:2] == ((7, 5), (2, 2))
    assert unit_group(11)[:2] == ((2,), (10,))
    assert len(unit_group(36)[2]) == 12


def test_character_counts():
    """Test the number of characters and primitive characters"""
    assert len(all_characters(12)) == 4
    assert len(enumerate_primitive(12)) == 1
    assert len(enumerate_primitive(5)) == 3
    assert len(enumerate_primitive(5, 'even')) == 1
    assert len(enumerate_primitive(5, 'odd')) == 2
    assert len(enumerate_primitive(8)) == 2
    assert enumerate_primitive(2) == []
    assert enumerate_primitive(1) == [trivial_character()]


def test_values_of_chi4():
    """Test values of the primitive character modulo 4"""
    chi = chi4()
    assert chi(1) == 1
    assert chi(3) == -1
    assert chi(2) == 0
    assert chi(-1) == -1
    assert chi.parity == -1
    assert chi.order == 2


def test_orthogonality_and_parity():
    """Test character sums and chi(-1) = parity"""
    for M in (5, 7, 8, 12):
        for chi in all_characters(M):
            total = sum((chi(a) for a in range(M)), CyclotomicNumber.zero())
            assert total == (euler_phi(M) if chi.is_trivial() else 0)
            assert chi(-1) == chi.parity


def test_multiplicativity():
    """Test chi(ab) = chi(a) chi(b)"""
    for chi in all_characters(15):
        for a in range(1, 15):
            for b in range(1, 15):
                assert chi(a * b) == chi(a) * chi(b)


def test_conductor_and_induction():
    """Test conductors of principal and induced characters"""
    assert principal_character(6).conductor == 1
    induced = chi4().induce(12)
    assert induced.conductor == 4
    assert induced.primitive() == chi4()
    assert not induced.is_primitive()
    with pytest.raises(CharacterError):
        chi4().induce(6)


def test_prime_part():
    """Test the 2-part of the primitive character modulo 12"""
    chi12 = enumerate_primitive(12)[0]
    assert chi12.prime_part([2]) == chi4()
    assert chi12.prime_part([3]) == enumerate_primitive(3)[0]
    with pytest.raises(CharacterError):
        chi12.prime_part([5])


def test_product_and_conjugate():
    """Test products and conjugates of characters"""
    chi = chi4()
    assert (chi * chi).is_trivial()
    phi = DirichletCharacter(11, [1])
    assert phi(2) == root_of_unity(10, 1)
    assert phi.conjugate()(2) == root_of_unity(10, 9)
    assert (phi * phi.conjugate()).is_trivial()


def test_gauss_sums():
    """Test Gauss sums and their absolute value"""
    assert chi4().gauss_sum() == 2 * root_of_unity(4, 1)
    for M in (5, 7, 8, 11):
        for chi in enumerate_primitive(M):
            g = chi.gauss_sum()
            assert g * g.conjugate() == M


def test_bernoulli_polynomial():
    """Test Bernoulli polynomial values"""
    assert bernoulli_polynomial(1, Fraction(1, 4)) == Fraction(-1, 4)
    assert bernoulli_polynomial(2, 1) == Fraction(1, 6)
    assert bernoulli_polynomial(4, 0) == Fraction(-1, 30)


def test_l_values():
    """Test L-values at non-positive integers"""
    one = trivial_character()
    assert one.l_value_nonpositive(4) == Fraction(1, 120)
    assert one.l_value_nonpositive(2) == Fraction(-1, 12)
    assert one.l_value_nonpositive(8) == Fraction(1, 240)
    assert chi4().l_value_nonpositive(1) == Fraction(1, 2)
    assert enumerate_primitive(3)[0].l_value_nonpositive(1) == Fraction(1, 3)
    assert chi4().generalized_bernoulli(1) == Fraction(-1, 2)
    with pytest.raises(CharacterError):
        principal_character(6).l_value_nonpositive(2)


def test_labels():
    """Test CLI character references"""
    assert character_from_label('1') == trivial_character()
    assert character_from_label('4:0') == chi4()
    assert chi4().label == '4:0'
    assert chi4().induce(12).label is None
    with pytest.raises(InputFormatError):
        character_from_label('four')
    with pytest.raises(CharacterError):
        character_from_label('4:3')


def test_serialization():
    """Test the generator-image encoding"""
    phi = DirichletCharacter(11, [3])
    data = phi.to_dict()
    assert data['modulus'] == 11
    assert data['generator_images'][0][0] == 2
    assert DirichletCharacter.from_dict(data) == phi
    with pytest.raises(InputFormatError):
        DirichletCharacter.from_dict({'modulus': 11, 'generator_images': [[3, data['generator_images'][0][1]]]})


def test_wrong_number_of_exponents():
    """Test exponent tuples that do not match the unit-group generators"""
    with pytest.raises(CharacterError):
        DirichletCharacter(12, [1])
    with pytest.raises(CharacterError):
        DirichletCharacter(11, [1, 0])
    with pytest.raises(CharacterError):
        DirichletCharacter(8, [])


@pytest.mark.parametrize('M', range(1, 31))
@pytest.mark.parametrize('k', range(1, 7))
def test_bernoulli_parity_vanishing(M, k):
    """Test B_{k,chi} = 0 exactly when chi(-1) != (-1)^k"""
    for chi in enumerate_primitive(M):
        value = chi.generalized_bernoulli(k)
        if chi.is_trivial():
            continue
        if chi.parity != (-1) ** k:
            assert value == 0
        else:
            assert value != 0


def test_bernoulli_of_chi4():
    """Test the first generalized Bernoulli numbers of chi_4"""
    assert chi4().generalized_bernoulli(2) == 0
    assert chi4().generalized_bernoulli(4) == 0
    assert chi4().generalized_bernoulli(3) == Fraction(3, 2)


@pytest.mark.parametrize('N', range(2, 201))
def test_prime_part_factorization(N):
    """Test that chi is the product of its prime-power parts"""
    primes = sorted(factorint(N))
    for chi in all_characters(N):
        product = principal_character(1)
        for p in primes:
            part = chi.prime_part([p])
            assert part.modulus == p ** factorint(N)[p]
            product = product * part
        assert product.modulus == N
        assert product == chi


def test_random_multiplicativity():
    """Test chi(ab) = chi(a) chi(b) on seeded random pairs"""
    rng = random.Random(20240518)
    for _ in range(10 ** 4):
        N = rng.randint(1, 200)
        chi = rng.choice(all_characters(N))
        a = rng.randint(-10 ** 6, 10 ** 6)
        b = rng.randint(-10 ** 6, 10 ** 6)
        assert chi(a * b) == chi(a) * chi(b)


@pytest.mark.parametrize('M', range(1, 51))
def test_gauss_sum_norm(M):
    """Test |G(chi)|^2 = M and G(chi) G(conj chi) = chi(-1) M"""
    for chi in enumerate_primitive(M):
        g = chi.gauss_sum()
        assert g * g.conjugate() == M
        assert g * chi.conjugate().gauss_sum() == chi.parity * M
