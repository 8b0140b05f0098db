"""Dirichlet characters and the L-values feeding Eisenstein constant terms.

A character mod N is stored as an exponent vector on fixed generators of
(Z/N)^x: generator g_i of order o_i is sent to zeta_{o_i}^{e_i}. Generators
are taken per prime power (odd p^a: the least primitive root; 4: -1;
2^a with a >= 3: -1 and 5) and lifted to N by CRT, in increasing order of p.
Values are handled internally as angles t in Q/Z meaning exp(2 pi i t).
"""
import itertools
import logging
import math
from fractions import Fraction
from functools import lru_cache

from sympy import Poly, Symbol, bernoulli, divisors, factorint, primitive_root
from sympy.ntheory.modular import crt

from app.services.exactmath import CyclotomicNumber, root_of_unity
from app.utils.errors import CharacterError, InputFormatError

logger = logging.getLogger(__name__)

_x = Symbol('x')


def _prime_power_generators(p, a):
    q = p ** a
    if p != 2:
        return [(int(primitive_root(q)), q - q // p)]
    if a == 1:
        return []
    if a == 2:
        return [(q - 1, 2)]
    return [(q - 1, 2), (5, q // 4)]


@lru_cache(maxsize=None)
def unit_group(N):
    """Generators, their orders and the discrete-log table of (Z/N)^x"""
    if N < 1:
        raise CharacterError(f'modulus must be positive, got {N}')
    generators, orders = [], []
    for p, a in sorted(factorint(N).items()):
        q = p ** a
        for g, o in _prime_power_generators(p, a):
            if q == N:
                lifted = g % N
            else:
                lifted = int(crt([q, N // q], [g, 1])[0]) % N
            generators.append(lifted)
            orders.append(o)
    dlog = {}
    for exps in itertools.product(*(range(o) for o in orders)):
        n = 1 % N
        for g, e in zip(generators, exps):
            n = n * pow(g, e, N) % N
        dlog[n] = exps
    if N == 1:
        dlog = {0: ()}
    return tuple(generators), tuple(orders), dlog


def _lift_unit(n, M, N):
    """A unit mod N congruent to n mod M (M | N)"""
    n %= M
    for t in range(N // M):
        candidate = n + t * M
        if math.gcd(candidate, N) == 1:
            return candidate % N
    raise CharacterError(f'{n} mod {M} does not lift to a unit mod {N}')


@lru_cache(maxsize=None)
def _bernoulli_coefficients(k):
    poly = Poly(bernoulli(k, _x), _x)
    return tuple(Fraction(int(c.p), int(c.q)) for c in reversed(poly.all_coeffs()))


def bernoulli_polynomial(k, t):
    """B_k(t) for rational t, with B_1(t) = t - 1/2"""
    t = Fraction(t)
    value = Fraction(0)
    for c in reversed(_bernoulli_coefficients(k)):
        value = value * t + c
    return value


class DirichletCharacter:
    """Character mod N given by exponents on the unit-group generators"""
    __slots__ = ('modulus', 'exponents', '_angles')

    def __init__(self, modulus, exponents=None):
        generators, orders, dlog = unit_group(modulus)
        if exponents is None:
            exponents = (0,) * len(orders)
        exponents = tuple(exponents)
        if len(exponents) != len(orders):
            raise CharacterError(
                f'modulus {modulus} has {len(orders)} generators, got {len(exponents)} exponents')
        exponents = tuple(int(e) % o for e, o in zip(exponents, orders))
        self.modulus = modulus
        self.exponents = exponents
        angles = {}
        for n, exps in dlog.items():
            angle = sum((Fraction(e * x, o) for e, x, o in zip(exponents, exps, orders)), Fraction(0))
            angles[n] = angle - math.floor(angle)
        self._angles = angles

    @classmethod
    def from_angles(cls, modulus, angle_of):
        """Character mod modulus whose value at generator g is exp(2 pi i angle_of(g))"""
        generators, orders, _ = unit_group(modulus)
        exponents = []
        for g, o in zip(generators, orders):
            e = Fraction(angle_of(g)) * o
            if e.denominator != 1:
                raise CharacterError(f'value at {g} is not an {o}-th root of unity')
            exponents.append(int(e))
        return cls(modulus, exponents)

    # Values

    def angle(self, n):
        """Angle t of chi(n) = exp(2 pi i t), None when n is not a unit"""
        return self._angles.get(n % self.modulus)

    @property
    def order(self):
        order = 1
        for e, o in zip(self.exponents, unit_group(self.modulus)[1]):
            order = math.lcm(order, o // math.gcd(e, o))
        return order

    def exponent(self, n, m=None):
        """j with chi(n) = zeta_m^j (m defaults to the order), None at non-units"""
        m = self.order if m is None else m
        t = self.angle(n)
        if t is None:
            return None
        j = t * m
        if j.denominator != 1:
            raise CharacterError(f'character of order {self.order} has no values in Q(zeta_{m})')
        return int(j)

    def evaluate(self, n):
        """chi(n mod N) as a cyclotomic number; 0 on non-units"""
        m = self.order
        j = self.exponent(n, m)
        if j is None:
            return CyclotomicNumber.zero(m)
        return root_of_unity(m, j)

    __call__ = evaluate

    @property
    def parity(self):
        return 1 if self.angle(-1) == 0 else -1

    def is_trivial(self):
        return not any(self.exponents)

    def is_even(self):
        return self.parity == 1

    # Structure

    def conductor_and_primitive(self):
        """Conductor and the primitive character inducing this one"""
        N = self.modulus
        units = [n for n in self._angles]
        for M in divisors(N):
            if all(self._angles[n] == 0 for n in units if n % M == 1 % M):
                primitive = DirichletCharacter.from_angles(
                    M, lambda g: self._angles[_lift_unit(g, M, N)])
                return M, primitive
        raise CharacterError(f'no conductor found for {self!r}')

    @property
    def conductor(self):
        return self.conductor_and_primitive()[0]

    def is_primitive(self):
        return self.conductor == self.modulus

    def primitive(self):
        return self.conductor_and_primitive()[1]

    def induce(self, N):
        if N % self.modulus:
            raise CharacterError(f'modulus {self.modulus} does not divide {N}')
        return DirichletCharacter.from_angles(N, lambda g: self._angles[g % self.modulus])

    def prime_part(self, primes):
        """The S-part chi_S as a character mod N_S"""
        N = self.modulus
        primes = set(primes)
        factors = factorint(N)
        missing = primes - set(factors)
        if missing:
            raise CharacterError(f'primes {sorted(missing)} do not divide {N}')
        N_S = math.prod(p ** factors[p] for p in primes)
        rest = N // N_S

        def angle_of(g):
            if rest == 1:
                return self._angles[g % N]
            lifted = int(crt([N_S, rest], [g, 1])[0]) % N
            return self._angles[lifted]

        return DirichletCharacter.from_angles(N_S, angle_of)

    def conjugate(self):
        return DirichletCharacter(self.modulus, [-e for e in self.exponents])

    def __mul__(self, other):
        if not isinstance(other, DirichletCharacter):
            return NotImplemented
        N = math.lcm(self.modulus, other.modulus)
        return DirichletCharacter.from_angles(
            N, lambda g: self._angles[g % self.modulus] + other._angles[g % other.modulus])

    # Sums and L-values

    def gauss_sum(self):
        """Sum over a mod N of chi(a) zeta_N^a"""
        N = self.modulus
        m = math.lcm(N, self.order)
        terms = {}
        for a in range(N):
            j = self.exponent(a, m)
            if j is not None:
                key = (j + a * (m // N)) % m
                terms[key] = terms.get(key, 0) + 1
        return CyclotomicNumber.from_exponents(m, terms)

    def generalized_bernoulli(self, k):
        """B_{k,chi} = M^(k-1) sum_{a=1..M} chi(a) B_k(a/M)

        B_1(x) = x - 1/2, so the trivial character mod 1 has B_{1} = +1/2.
        """
        if k < 1:
            raise CharacterError(f'Bernoulli index must be positive, got {k}')
        M = self.modulus
        m = self.order
        terms = {}
        for a in range(1, M + 1):
            j = self.exponent(a, m)
            if j is not None:
                terms[j] = terms.get(j, 0) + bernoulli_polynomial(k, Fraction(a, M))
        return CyclotomicNumber.from_exponents(m, terms) * Fraction(M) ** (k - 1)

    def l_value_nonpositive(self, l):
        """L(chi, 1 - l) = -B_{l,chi}/l for primitive chi"""
        if l < 1:
            raise CharacterError(f'l must be positive, got {l}')
        if not self.is_primitive():
            raise CharacterError(f'{self!r} is not primitive')
        return -self.generalized_bernoulli(l) / l

    # Identity and serialization

    def __eq__(self, other):
        if not isinstance(other, DirichletCharacter):
            return NotImplemented
        return self.modulus == other.modulus and self.exponents == other.exponents

    def __hash__(self):
        return hash((self.modulus, self.exponents))

    @property
    def label(self):
        """CLI reference 'M:i' (or '1' for the trivial character)"""
        if self.modulus == 1:
            return '1'
        if not self.is_primitive():
            return None
        return f'{self.modulus}:{enumerate_primitive(self.modulus).index(self)}'

    def to_dict(self):
        """Convert character to dictionary"""
        generators, orders, _ = unit_group(self.modulus)
        return {
            'modulus': self.modulus,
            'generator_images': [
                [g, root_of_unity(o, e).to_dict()]
                for g, o, e in zip(generators, orders, self.exponents)
            ]
        }

    @classmethod
    def from_dict(cls, data):
        modulus = int(data['modulus'])
        generators, orders, _ = unit_group(modulus)
        images = data.get('generator_images', [])
        if [int(g) for g, _ in images] != list(generators):
            raise InputFormatError(
                f'generator_images must list generators {list(generators)} of modulus {modulus}')
        exponents = []
        for (_, value), o in zip(images, orders):
            value = CyclotomicNumber.from_dict(value)
            matches = [e for e in range(o) if root_of_unity(o, e) == value]
            if not matches:
                raise InputFormatError(f'{value} is not an {o}-th root of unity')
            exponents.append(matches[0])
        return cls(modulus, exponents)

    def __repr__(self):
        return f'<DirichletCharacter mod {self.modulus}: {list(self.exponents)}>'


def trivial_character():
    return DirichletCharacter(1)


def principal_character(N):
    return DirichletCharacter(N)


@lru_cache(maxsize=None)
def all_characters(N):
    """All characters mod N, lexicographic in the exponent vector"""
    _, orders, _ = unit_group(N)
    return tuple(DirichletCharacter(N, exps)
                 for exps in itertools.product(*(range(o) for o in orders)))


@lru_cache(maxsize=None)
def _primitive_characters(M):
    return tuple(chi for chi in all_characters(M) if chi.is_primitive())


def enumerate_primitive(M, parity='any'):
    """Primitive characters mod M with parity 'even', 'odd' or 'any'"""
    if parity not in ('even', 'odd', 'any'):
        raise CharacterError(f'unknown parity {parity!r}')
    chars = _primitive_characters(M)
    if parity == 'any':
        return list(chars)
    wanted = 1 if parity == 'even' else -1
    return [chi for chi in chars if chi.parity == wanted]


def character_from_label(label):
    """Parse a CLI character reference: '1' or 'M:i'"""
    text = str(label).strip()
    if text == '1':
        return trivial_character()
    try:
        modulus, index = (int(part) for part in text.split(':'))
    except ValueError:
        raise InputFormatError(f'character reference must be "1" or "M:i", got {text!r}')
    chars = enumerate_primitive(modulus)
    if not 0 <= index < len(chars):
        raise CharacterError(f'modulus {modulus} has {len(chars)} primitive characters, index {index} given')
    return chars[index]


# Module-level forms of the character operations

def evaluate(chi, n):
    return chi.evaluate(n)


def conductor_and_primitive(chi):
    return chi.conductor_and_primitive()


def induce(chi, N):
    return chi.induce(N)


def prime_part(chi, primes):
    return chi.prime_part(primes)


def gauss_sum(chi):
    return chi.gauss_sum()


def generalized_bernoulli(chi, k):
    return chi.generalized_bernoulli(k)


def l_value_nonpositive(chi, l):
    return chi.l_value_nonpositive(l)
