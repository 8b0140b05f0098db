"""Truncated Fourier expansions and the operators acting on them.

Slash convention for integral A with det A > 0:
    f|A(z) = det(A)^(k/2) (cz + d)^(-k) f(Az)
so f|B_d = d^(k/2) f(dz), and U_p = p^(k/2 - 1) sum_j f|(1 j; 0 p) reads off
the coefficients a_{pn} (the powers of p cancel exactly).
"""
import logging
import math
from fractions import Fraction

from sympy import primefactors

from app.services.exactmath import (
    CyclotomicNumber, common_order, euler_phi, power_half, reduce_exponents)
from app.utils.errors import ExpansionError

logger = logging.getLogger(__name__)


def _integral_form(coeffs, m):
    """Common-denominator integer vectors for coefficients embedded in Q(zeta_m)"""
    embedded = [c.embed(m) for c in coeffs]
    den = math.lcm(*(c.denominator for c in embedded)) if embedded else 1
    rows = []
    for c in embedded:
        if c.is_zero():
            rows.append(None)
        else:
            f = den // c.denominator
            rows.append([(i, n * f) for i, n in enumerate(c.numerators) if n])
    return rows, den


class FourierExpansion:
    """Truncated expansion sum c_n q_w^n, known for 0 <= n <= precision"""
    __slots__ = ('weight', 'width', 'field_order', 'coeffs')

    def __init__(self, weight, coeffs, width=1, field_order=None):
        if width < 1:
            raise ExpansionError(f'width must be positive, got {width}')
        if not coeffs:
            raise ExpansionError('an expansion needs at least the constant term')
        coeffs = [CyclotomicNumber.coerce(c) for c in coeffs]
        order = common_order(coeffs)
        if field_order is not None:
            order = math.lcm(order, field_order)
        self.weight = weight
        self.width = width
        self.field_order = order
        self.coeffs = tuple(c.embed(order) for c in coeffs)

    @classmethod
    def zero(cls, weight, precision, width=1, field_order=1):
        return cls(weight, [CyclotomicNumber.zero(field_order)] * (precision + 1),
                   width, field_order)

    @classmethod
    def from_rationals(cls, weight, values, width=1):
        return cls(weight, [CyclotomicNumber.from_rational(v) for v in values], width)

    @property
    def precision(self):
        return len(self.coeffs) - 1

    def coefficient(self, n):
        if n > self.precision:
            raise ExpansionError(f'coefficient {n} beyond precision {self.precision}')
        return self.coeffs[n]

    __getitem__ = coefficient

    def is_zero(self):
        return all(c.is_zero() for c in self.coeffs)

    def valuation(self):
        """Index of the first nonzero coefficient, None for the zero expansion"""
        for n, c in enumerate(self.coeffs):
            if not c.is_zero():
                return n
        return None

    def truncate(self, precision):
        if precision > self.precision:
            raise ExpansionError(f'cannot raise precision {self.precision} to {precision}')
        return FourierExpansion(self.weight, self.coeffs[:precision + 1], self.width, self.field_order)

    def with_field_order(self, m):
        return FourierExpansion(self.weight, self.coeffs, self.width, m)

    # Width handling

    def refine_width(self, width):
        """Rewrite in q_width for a multiple width of the current one"""
        if width == self.width:
            return self
        if width % self.width:
            raise ExpansionError(f'width {self.width} does not divide {width}')
        r = width // self.width
        zero = CyclotomicNumber.zero(self.field_order)
        coeffs = [zero] * (self.precision * r + 1)
        for n, c in enumerate(self.coeffs):
            coeffs[n * r] = c
        return FourierExpansion(self.weight, coeffs, width, self.field_order)

    def minimal_period(self):
        """Smallest width w dividing the current one in which the expansion is a series"""
        g = self.width
        for n, c in enumerate(self.coeffs):
            if n and not c.is_zero():
                g = math.gcd(g, n)
                if g == 1:
                    break
        return self.width // g

    def restrict_width(self, width):
        """Rewrite in q_width for a divisor width of the current one"""
        if width == self.width:
            return self
        if self.width % width:
            raise ExpansionError(f'width {width} does not divide {self.width}')
        r = self.width // width
        for n, c in enumerate(self.coeffs):
            if n % r and not c.is_zero():
                raise ExpansionError(f'expansion is not a series in q_{width}: coefficient {n} is nonzero')
        coeffs = self.coeffs[::r]
        return FourierExpansion(self.weight, list(coeffs), width, self.field_order)

    # Arithmetic

    def scale(self, c):
        c = CyclotomicNumber.coerce(c)
        return FourierExpansion(self.weight, [c * a for a in self.coeffs], self.width)

    def __neg__(self):
        return self.scale(-1)

    def __add__(self, other):
        if not isinstance(other, FourierExpansion):
            return NotImplemented
        return linear_combine([(1, self), (1, other)])

    def __sub__(self, other):
        if not isinstance(other, FourierExpansion):
            return NotImplemented
        return linear_combine([(1, self), (-1, other)])

    def __mul__(self, other):
        if isinstance(other, FourierExpansion):
            return multiply(self, other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def __eq__(self, other):
        if not isinstance(other, FourierExpansion):
            return NotImplemented
        return (self.weight == other.weight and self.width == other.width
                and self.precision == other.precision and self.coeffs == other.coeffs)

    def __hash__(self):
        return hash((self.weight, self.width, self.coeffs))

    def to_dict(self):
        """Convert expansion to dictionary"""
        return {
            'weight': self.weight,
            'width': self.width,
            'field_order': self.field_order,
            'precision': self.precision,
            'coeffs': [c.to_dict() for c in self.coeffs]
        }

    @classmethod
    def from_dict(cls, data):
        coeffs = [CyclotomicNumber.from_dict(c) for c in data['coeffs']]
        precision = data.get('precision')
        if precision is not None and precision != len(coeffs) - 1:
            raise ExpansionError(f'precision {precision} does not match {len(coeffs)} coefficients')
        return cls(int(data['weight']), coeffs, int(data.get('width', 1)), data.get('field_order'))

    def __repr__(self):
        shown = ', '.join(str(c) for c in self.coeffs[:6])
        return f'<FourierExpansion k={self.weight} w={self.width} B={self.precision}: [{shown}, ...]>'


def reconcile_widths(expansions):
    width = math.lcm(*(f.width for f in expansions))
    return [f.refine_width(width) for f in expansions]


def linear_combine(terms):
    """Coefficientwise sum of c * f; widths refined to their lcm, precision the minimum"""
    terms = [(CyclotomicNumber.coerce(c), f) for c, f in terms]
    if not terms:
        raise ExpansionError('nothing to combine')
    weights = {f.weight for _, f in terms}
    if len(weights) > 1:
        raise ExpansionError(f'cannot combine mixed weights {sorted(weights)}')
    series = reconcile_widths([f for _, f in terms])
    precision = min(f.precision for f in series)
    order = math.lcm(common_order(c for c, _ in terms), *(f.field_order for f in series))
    phi = euler_phi(order)
    acc = [[0] * phi for _ in range(precision + 1)]
    den = 1
    scaled = []
    for (c, _), f in zip(terms, series):
        if c.is_zero():
            continue
        g = f.truncate(precision).scale(c).with_field_order(order)
        rows, d = _integral_form(g.coeffs, order)
        scaled.append((rows, d))
        den = math.lcm(den, d)
    for rows, d in scaled:
        factor = den // d
        for n, row in enumerate(rows):
            if row:
                target = acc[n]
                for i, v in row:
                    target[i] += v * factor
    coeffs = [CyclotomicNumber(order, vector, den) for vector in acc]
    return FourierExpansion(weights.pop(), coeffs, series[0].width, order)


def multiply(f, g):
    """Cauchy product truncated at the smaller precision; weights add"""
    f, g = reconcile_widths([f, g])
    precision = min(f.precision, g.precision)
    order = math.lcm(f.field_order, g.field_order)
    phi = euler_phi(order)
    rows_f, den_f = _integral_form(f.coeffs[:precision + 1], order)
    rows_g, den_g = _integral_form(g.coeffs[:precision + 1], order)
    support_g = [(j, row) for j, row in enumerate(rows_g) if row]
    coeffs = []
    raw = [None] * (precision + 1)
    for i, row_f in enumerate(rows_f):
        if not row_f:
            continue
        for j, row_g in support_g:
            n = i + j
            if n > precision:
                break
            target = raw[n]
            if target is None:
                target = raw[n] = [0] * (2 * phi - 1)
            for a, x in row_f:
                for b, y in row_g:
                    target[a + b] += x * y
    den = den_f * den_g
    for vector in raw:
        if vector is None:
            coeffs.append(CyclotomicNumber.zero(order))
        else:
            coeffs.append(CyclotomicNumber(order, reduce_exponents(order, vector), den))
    return FourierExpansion(f.weight + g.weight, coeffs, f.width, order)


def apply_B_d(f, d):
    """f|B_d = d^(k/2) f(dz); precision B*d"""
    if d < 1:
        raise ExpansionError(f'B_d needs d >= 1, got {d}')
    if d == 1:
        return f
    factor = power_half(d, f.weight)
    zero = CyclotomicNumber.zero(f.field_order)
    coeffs = [zero] * (f.precision * d + 1)
    for n, c in enumerate(f.coeffs):
        if not c.is_zero():
            coeffs[n * d] = factor * c
    return FourierExpansion(f.weight, coeffs, f.width)


def _require_unit_width(f, name):
    if f.width != 1:
        raise ExpansionError(f'{name} needs a width-1 expansion, got width {f.width}')


def apply_U_p(f, p):
    """n-th coefficient a_{pn}; precision floor(B/p)"""
    _require_unit_width(f, 'U_p')
    return FourierExpansion(f.weight, list(f.coeffs[::p]), 1, f.field_order)


def apply_T_p(f, p):
    """Hecke operator at a prime p not dividing the level, trivial character"""
    _require_unit_width(f, 'T_p')
    precision = f.precision // p
    scale = Fraction(p) ** (f.weight - 1)
    coeffs = []
    for n in range(precision + 1):
        c = f.coeffs[p * n]
        if n % p == 0:
            c = c + f.coeffs[n // p] * scale
        coeffs.append(c)
    return FourierExpansion(f.weight, coeffs, 1, f.field_order)


def twist(f, alpha):
    """f_alpha = sum a_n alpha(n) q^n"""
    _require_unit_width(f, 'twist')
    return FourierExpansion(f.weight, [c * alpha.evaluate(n) for n, c in enumerate(f.coeffs)], 1)


def translate(f, a, M):
    """f|(1 a/M; 0 1): coefficient of q_w^n times zeta_{Mw}^{na}"""
    m = M * f.width
    return FourierExpansion(
        f.weight, [c.times_root_of_unity(m, n * a) for n, c in enumerate(f.coeffs)], f.width)


def twist_operator(f, alpha):
    """S_alpha(f) = sum over a mod M of conj(alpha)(a) f|(1 a/M; 0 1)"""
    M = alpha.modulus
    conj = alpha.conjugate()
    terms = [(conj.evaluate(a), translate(f, a, M)) for a in range(M)
             if math.gcd(a, M) == 1]
    return linear_combine(terms)


def gamma0_index(N):
    """[SL_2(Z) : Gamma_0(N)] = N prod_{p | N} (1 + 1/p)"""
    index = Fraction(N)
    for p in primefactors(N):
        index *= Fraction(p + 1, p)
    return int(index)


def sturm_bound(N, k):
    return k * gamma0_index(N) // 12


def series_from_function(weight, precision, coefficient, width=1):
    """Expansion whose n-th coefficient is coefficient(n)"""
    return FourierExpansion(weight, [coefficient(n) for n in range(precision + 1)], width)

