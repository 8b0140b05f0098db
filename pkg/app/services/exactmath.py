"""Exact arithmetic over Q and over cyclotomic fields Q(zeta_m).

An element of Q(zeta_m) is stored as integer numerators on the power basis
1, x, ..., x^(phi(m)-1) of Q[x]/Phi_m(x) together with one positive common
denominator. Values of different orders compare equal when they agree after
embedding into Q(zeta_lcm); orders are never minimised.
"""
import logging
import math
import re
from fractions import Fraction
from functools import lru_cache

from sympy import Poly, QQ, Symbol, cyclotomic_poly, factorint, legendre_symbol, totient

from app.utils.errors import ArithmeticDomainError, InputFormatError

logger = logging.getLogger(__name__)

_x = Symbol('x')
_FRACTION_RE = re.compile(r'^-?\d+(/\d+)?$')


@lru_cache(maxsize=None)
def euler_phi(m):
    return int(totient(m))


@lru_cache(maxsize=None)
def mobius(n):
    factors = factorint(n)
    if any(e > 1 for e in factors.values()):
        return 0
    return -1 if len(factors) % 2 else 1


@lru_cache(maxsize=None)
def cyclotomic_coefficients(m):
    """Integer coefficients of Phi_m, lowest degree first"""
    poly = Poly(cyclotomic_poly(m, _x), _x)
    return tuple(int(c) for c in reversed(poly.all_coeffs()))


@lru_cache(maxsize=None)
def _division_terms(m):
    coeffs = cyclotomic_coefficients(m)
    degree = len(coeffs) - 1
    return degree, tuple((j, c) for j, c in enumerate(coeffs[:-1]) if c)


@lru_cache(maxsize=None)
def _trace_weights(m):
    # normalised trace of x^i is mu(m/g)/phi(m/g), g = gcd(i, m)
    weights = []
    for i in range(euler_phi(m)):
        h = m // math.gcd(i, m)
        weights.append(Fraction(mobius(h), euler_phi(h)))
    return tuple(weights)


def reduce_exponents(m, vector):
    """Reduce an integer vector on x^0, x^1, ... to the power basis of Q(zeta_m)"""
    degree, terms = _division_terms(m)
    folded = [0] * m
    for i, c in enumerate(vector):
        if c:
            folded[i % m] += c
    for i in range(m - 1, degree - 1, -1):
        c = folded[i]
        if c:
            folded[i] = 0
            shift = i - degree
            for j, a in terms:
                folded[shift + j] -= c * a
    return folded[:degree]


def format_fraction(value):
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f'{value.numerator}/{value.denominator}'


def parse_fraction(text):
    """Parse an exact 'p/q' or 'p' string"""
    if isinstance(text, int):
        return Fraction(text)
    text = str(text).strip()
    if not _FRACTION_RE.match(text):
        raise InputFormatError(f'not an exact fraction: {text!r}')
    value = Fraction(text)
    return value


class CyclotomicNumber:
    """Exact element of Q(zeta_m) in canonical power-basis form"""
    __slots__ = ('order', 'numerators', 'denominator')

    def __init__(self, order, numerators, denominator=1):
        if order < 1:
            raise ArithmeticDomainError(f'order must be positive, got {order}')
        numerators = [int(n) for n in numerators]
        if len(numerators) != euler_phi(order):
            numerators = reduce_exponents(order, numerators)
        denominator = int(denominator)
        if denominator == 0:
            raise ArithmeticDomainError('zero denominator')
        if denominator < 0:
            numerators = [-n for n in numerators]
            denominator = -denominator
        g = denominator
        for n in numerators:
            if n:
                g = math.gcd(g, n)
                if g == 1:
                    break
        if not any(numerators):
            denominator = 1
        elif g > 1:
            numerators = [n // g for n in numerators]
            denominator //= g
        self.order = order
        self.numerators = tuple(numerators)
        self.denominator = denominator

    # Constructors

    @classmethod
    def from_rational(cls, value, order=1):
        value = Fraction(value)
        numerators = [0] * euler_phi(order)
        numerators[0] = value.numerator
        return cls(order, numerators, value.denominator)

    @classmethod
    def from_coeffs(cls, order, coeffs):
        """Build from rational coefficients on the power basis"""
        coeffs = [Fraction(c) if not isinstance(c, str) else parse_fraction(c) for c in coeffs]
        if len(coeffs) != euler_phi(order):
            raise ArithmeticDomainError(
                f'Q(zeta_{order}) needs {euler_phi(order)} coefficients, got {len(coeffs)}')
        den = math.lcm(*(c.denominator for c in coeffs)) if coeffs else 1
        return cls(order, [c.numerator * (den // c.denominator) for c in coeffs], den)

    @classmethod
    def from_exponents(cls, order, terms):
        """Build sum(c * zeta_order^j) from a mapping j -> rational c"""
        terms = {j: Fraction(c) for j, c in terms.items() if c}
        if not terms:
            return cls.zero(order)
        den = math.lcm(*(c.denominator for c in terms.values()))
        vector = [0] * order
        for j, c in terms.items():
            vector[j % order] += c.numerator * (den // c.denominator)
        return cls(order, reduce_exponents(order, vector), den)

    @classmethod
    def zero(cls, order=1):
        return cls(order, [0] * euler_phi(order), 1)

    @classmethod
    def one(cls, order=1):
        return cls.from_rational(1, order)

    @classmethod
    def coerce(cls, value):
        if isinstance(value, CyclotomicNumber):
            return value
        if isinstance(value, (int, Fraction)):
            return cls.from_rational(value)
        raise TypeError(f'cannot coerce {type(value).__name__} to CyclotomicNumber')

    # Inspection

    @property
    def coeffs(self):
        return tuple(Fraction(n, self.denominator) for n in self.numerators)

    @property
    def degree(self):
        return len(self.numerators)

    def is_zero(self):
        return not any(self.numerators)

    def is_rational(self):
        return not any(self.numerators[1:])

    def rational_value(self):
        if not self.is_rational():
            raise ArithmeticDomainError(f'{self} is not rational')
        return Fraction(self.numerators[0], self.denominator)

    # Field structure

    def embed(self, m):
        """Express the same value in Q(zeta_m)"""
        if m == self.order:
            return self
        if m % self.order:
            raise ArithmeticDomainError(f'order {self.order} does not divide {m}')
        step = m // self.order
        vector = [0] * m
        for i, n in enumerate(self.numerators):
            if n:
                vector[i * step] = n
        return CyclotomicNumber(m, reduce_exponents(m, vector), self.denominator)

    def galois(self, t):
        """Image under zeta_m -> zeta_m^t for t prime to m"""
        m = self.order
        if math.gcd(t, m) != 1:
            raise ArithmeticDomainError(f'{t} is not a unit modulo {m}')
        vector = [0] * m
        for i, n in enumerate(self.numerators):
            if n:
                vector[(i * t) % m] += n
        return CyclotomicNumber(m, reduce_exponents(m, vector), self.denominator)

    def conjugate(self):
        return self.galois(-1)

    def times_root_of_unity(self, m, j):
        """self * zeta_m^j, in the order lcm(self.order, m)"""
        order = math.lcm(self.order, m)
        a = self.embed(order)
        shift = (j * (order // m)) % order
        vector = [0] * order
        for i, n in enumerate(a.numerators):
            if n:
                vector[(i + shift) % order] = n
        return CyclotomicNumber(order, reduce_exponents(order, vector), a.denominator)

    def inverse(self):
        if self.is_zero():
            raise ArithmeticDomainError('division by zero')
        if self.is_rational():
            return CyclotomicNumber.from_rational(1 / self.rational_value(), self.order)
        m = self.order
        poly = Poly(list(reversed(self.numerators)), _x, domain=QQ)
        modulus = Poly(list(reversed(cyclotomic_coefficients(m))), _x, domain=QQ)
        inverse = poly.invert(modulus)
        coeffs = [Fraction(int(c.p), int(c.q)) for c in reversed(inverse.all_coeffs())]
        coeffs += [Fraction(0)] * (euler_phi(m) - len(coeffs))
        return CyclotomicNumber.from_coeffs(m, coeffs) * self.denominator

    # Arithmetic

    def _aligned(self, other):
        other = CyclotomicNumber.coerce(other)
        order = math.lcm(self.order, other.order)
        return self.embed(order), other.embed(order), order

    def __add__(self, other):
        try:
            a, b, order = self._aligned(other)
        except TypeError:
            return NotImplemented
        den = math.lcm(a.denominator, b.denominator)
        fa, fb = den // a.denominator, den // b.denominator
        return CyclotomicNumber(
            order, [x * fa + y * fb for x, y in zip(a.numerators, b.numerators)], den)

    __radd__ = __add__

    def __neg__(self):
        return CyclotomicNumber(self.order, [-n for n in self.numerators], self.denominator)

    def __sub__(self, other):
        try:
            other = CyclotomicNumber.coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return CyclotomicNumber.coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Fraction(other)
            return CyclotomicNumber(
                self.order, [n * other.numerator for n in self.numerators],
                self.denominator * other.denominator)
        try:
            a, b, order = self._aligned(other)
        except TypeError:
            return NotImplemented
        if b.is_rational():
            a, b = b, a
        if a.is_rational():
            c = a.numerators[0]
            return CyclotomicNumber(order, [c * n for n in b.numerators],
                                    a.denominator * b.denominator)
        na, nb = a.numerators, b.numerators
        nonzero_b = [(j, y) for j, y in enumerate(nb) if y]
        product = [0] * (len(na) + len(nb) - 1)
        for i, x in enumerate(na):
            if x:
                for j, y in nonzero_b:
                    product[i + j] += x * y
        return CyclotomicNumber(order, reduce_exponents(order, product),
                                a.denominator * b.denominator)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            if other == 0:
                raise ArithmeticDomainError('division by zero')
            return self * (1 / Fraction(other))
        try:
            other = CyclotomicNumber.coerce(other)
        except TypeError:
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        return CyclotomicNumber.coerce(other) * self.inverse()

    def __pow__(self, exponent):
        if exponent < 0:
            return self.inverse() ** (-exponent)
        result = CyclotomicNumber.one(self.order)
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            base = base * base
            exponent >>= 1
        return result

    def __eq__(self, other):
        try:
            a, b, _ = self._aligned(other)
        except TypeError:
            return NotImplemented
        return a.denominator == b.denominator and a.numerators == b.numerators

    def __hash__(self):
        weights = _trace_weights(self.order)
        trace = sum((w * n for w, n in zip(weights, self.numerators) if n), Fraction(0))
        return hash(trace / self.denominator)

    def __bool__(self):
        return not self.is_zero()

    # Serialization

    def to_dict(self):
        """Convert to the JSON encoding {"order", "coeffs"}"""
        return {
            'order': self.order,
            'coeffs': [format_fraction(c) for c in self.coeffs]
        }

    @classmethod
    def from_dict(cls, data):
        return cls.from_coeffs(int(data['order']), data['coeffs'])

    def __str__(self):
        if self.is_rational():
            return format_fraction(self.rational_value())
        parts = []
        for i, c in enumerate(self.coeffs):
            if not c:
                continue
            if i == 0:
                parts.append(format_fraction(c))
            else:
                power = f'z{self.order}' if i == 1 else f'z{self.order}^{i}'
                parts.append(power if c == 1 else f'{format_fraction(c)}*{power}')
        return ' + '.join(parts)

    def __repr__(self):
        return f'<CyclotomicNumber m={self.order}: {self}>'


def root_of_unity(m, j=1):
    """zeta_m^j in canonical form of order m"""
    if m < 1:
        raise ArithmeticDomainError(f'order must be positive, got {m}')
    return CyclotomicNumber.from_exponents(m, {j % m: 1})


def arith(a, b, op):
    """Field operation selected by name: add, sub, mul or div"""
    a, b = CyclotomicNumber.coerce(a), CyclotomicNumber.coerce(b)
    if op == 'add':
        return a + b
    if op == 'sub':
        return a - b
    if op == 'mul':
        return a * b
    if op == 'div':
        return a / b
    raise ArithmeticDomainError(f'unknown operation {op!r}')


def embed(a, m):
    return CyclotomicNumber.coerce(a).embed(m)


def conjugate(a):
    return CyclotomicNumber.coerce(a).conjugate()


def common_order(values):
    order = 1
    for v in values:
        if isinstance(v, CyclotomicNumber):
            order = math.lcm(order, v.order)
    return order


@lru_cache(maxsize=None)
def _sqrt_prime(p):
    if p == 2:
        return root_of_unity(8, 1) + root_of_unity(8, 7)
    gauss = CyclotomicNumber.from_exponents(
        p, {a: legendre_symbol(a, p) for a in range(1, p)})
    if p % 4 == 1:
        return gauss
    # G = i*sqrt(p) when p = 3 mod 4
    return -(gauss.times_root_of_unity(4, 1))


@lru_cache(maxsize=None)
def sqrt_integer(n):
    """Positive square root of n >= 1 as a cyclotomic number"""
    if n < 1:
        raise ArithmeticDomainError(f'square root of non-positive {n}')
    outside = 1
    result = CyclotomicNumber.one()
    for p, e in sorted(factorint(n).items()):
        outside *= p ** (e // 2)
        if e % 2:
            result = result * _sqrt_prime(p)
    return result * outside


def power_half(base, exponent):
    """base^(exponent/2) for positive integer base, any integer exponent"""
    value = Fraction(base) ** (exponent // 2)
    if exponent % 2 == 0:
        return CyclotomicNumber.from_rational(value)
    return sqrt_integer(base) * value
