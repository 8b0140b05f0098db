"""Expansions of Eisenstein series and their products at arbitrary cusps.

Every Eisenstein series is written as a combination of normalised lattice
slices G_l^v of some level L, v = (v1, v2) mod L:

    G_l^v(z) = (l-1)! L^l (-2 pi i)^(-l) sum_{(c,e) = v mod L, (c,e) != 0} (cz + e)^(-l)

whose q_L-expansion is algebraic. SL_2(Z) acts on the slices by v -> v*gamma,
so slashing a combination by a unimodular matrix only permutes indices. Any
integral matrix of positive determinant is factored as gamma*(a b; 0 d) and
the triangular part acts directly on q_L-expansions.

For l = 2 every slice also carries the non-holomorphic term 1/(4 pi y); a
combination is a modular form only when the sum of its coefficients vanishes.
"""
import logging
import math
from fractions import Fraction
from functools import lru_cache

from sympy import divisors, factorint
from sympy.core.numbers import igcdex

from app.models.labels import EisLabel, EisensteinBasisElement, GeneratorQuintuple
from app.models.representation import CuspExpansion, ProductRepresentation
from app.services.characters import bernoulli_polynomial
from app.services.exactmath import CyclotomicNumber, euler_phi, power_half, reduce_exponents
from app.services.qexp import FourierExpansion, linear_combine, multiply
from app.utils.errors import ExpansionError, RepresentationError, check

logger = logging.getLogger(__name__)


class UnimodularMatrix:
    """Integer matrix (a b; c d) with determinant 1"""
    __slots__ = ('a', 'b', 'c', 'd')

    def __init__(self, a, b, c, d):
        if a * d - b * c != 1:
            raise ExpansionError(f'({a} {b}; {c} {d}) does not have determinant 1')
        self.a, self.b, self.c, self.d = int(a), int(b), int(c), int(d)

    @classmethod
    def coerce(cls, value):
        if isinstance(value, UnimodularMatrix):
            return value
        return cls(*value)

    def __matmul__(self, other):
        o = UnimodularMatrix.coerce(other)
        return UnimodularMatrix(self.a * o.a + self.b * o.c, self.a * o.b + self.b * o.d,
                                self.c * o.a + self.d * o.c, self.c * o.b + self.d * o.d)

    def inverse(self):
        return UnimodularMatrix(self.d, -self.b, -self.c, self.a)

    def to_list(self):
        return [self.a, self.b, self.c, self.d]

    def __iter__(self):
        return iter(self.to_list())

    def __eq__(self, other):
        if not isinstance(other, UnimodularMatrix):
            return NotImplemented
        return self.to_list() == other.to_list()

    def __hash__(self):
        return hash(tuple(self.to_list()))

    def __repr__(self):
        return f'<UnimodularMatrix ({self.a} {self.b}; {self.c} {self.d})>'


IDENTITY = UnimodularMatrix(1, 0, 0, 1)
S_MATRIX = UnimodularMatrix(0, -1, 1, 0)


def matrix_product(A, B):
    """Product of two integral 2x2 matrices given as (a, b, c, d)"""
    a, b, c, d = A
    e, f, g, h = B
    return (a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)


def hermite_factor(A):
    """A = gamma * (a' b'; 0 d') with gamma unimodular, a' > 0, 0 <= b' < d'"""
    a, b, c, d = (int(x) for x in A)
    det = a * d - b * c
    if det <= 0:
        raise ExpansionError(f'matrix ({a} {b}; {c} {d}) needs positive determinant')
    g = math.gcd(a, c)
    p, r = a // g, c // g
    x, y, _ = igcdex(p, r)
    # gamma0 = (p, -y; r, x) has determinant p*x + r*y = 1
    gamma = UnimodularMatrix(p, -int(y), r, int(x))
    inv = gamma.inverse()
    top_b = inv.a * b + inv.b * d
    d_prime = det // g
    b_prime = top_b % d_prime
    t = (top_b - b_prime) // d_prime
    gamma = gamma @ (1, t, 0, 1)
    return gamma, g, b_prime, d_prime


def cusp_width(N, c):
    """N / gcd(c^2, N)"""
    return N // math.gcd(c * c, N)


def gamma_for_cusp(a, c):
    """A unimodular matrix sending infinity to a/c"""
    g = math.gcd(a, c)
    a, c = a // g, c // g
    x, y, _ = igcdex(a, c)
    # a*x + c*y = 1, so (a, -y; c, x)
    return UnimodularMatrix(a, -int(y), c, int(x))


def gamma_d(d):
    return UnimodularMatrix(1, 0, d, 1)


def cusp_representatives(N):
    """Pairs (a, c) with c | N and a a unit mod gcd(c, N/c), one per cusp of Gamma_0(N)"""
    cusps = []
    for c in divisors(N):
        m = math.gcd(c, N // c)
        seen = set()
        for a in range(1, N + 1):
            if math.gcd(a, c) == 1 and a % m not in seen:
                seen.add(a % m)
                cusps.append((a, c))
            if len(seen) == euler_phi(m):
                break
    return cusps


def format_cusp(a, c):
    if c == 0:
        return 'Infinity'
    g = math.gcd(a, c)
    a, c = a // g, c // g
    if c < 0:
        a, c = -a, -c
    return f'{a}/{c}' if c != 1 else f'{a}'


@lru_cache(maxsize=None)
def _polylog_constant(L, l, v2):
    """-(L^(l-1)/l) sum_{j=1..L} zeta_L^(v2 j) B_l(j/L)"""
    terms = {}
    for j in range(1, L + 1):
        key = (v2 * j) % L
        terms[key] = terms.get(key, 0) + bernoulli_polynomial(l, Fraction(j, L))
    return CyclotomicNumber.from_exponents(L, terms) * (-Fraction(L) ** (l - 1) / l)


def slice_constant_term(L, l, v1, v2):
    """Constant term of the normalised slice G_l^(v1,v2) at level L"""
    v1, v2 = v1 % L, v2 % L
    if l == 1:
        if v1:
            return CyclotomicNumber.from_rational(Fraction(1, 2) - Fraction(v1, L))
        return _polylog_constant(L, 1, v2) + Fraction(1, 2)
    if v1:
        return CyclotomicNumber.zero()
    return _polylog_constant(L, l, v2)


class GSeriesCombination:
    """normalizer * sum coef_v G_l^v at a common level"""

    def __init__(self, weight, level, terms, normalizer=1):
        if weight < 1:
            raise ExpansionError(f'lattice Eisenstein series need weight >= 1, got {weight}')
        self.weight = weight
        self.level = level
        merged = {}
        for (v1, v2), c in dict(terms).items():
            key = (v1 % level, v2 % level)
            merged[key] = merged.get(key, CyclotomicNumber.zero()) + c
        self.terms = {k: v for k, v in sorted(merged.items()) if not v.is_zero()}
        self.normalizer = CyclotomicNumber.coerce(normalizer)

    def __len__(self):
        return len(self.terms)

    def slash(self, gamma):
        """Index action v -> v * gamma"""
        a, b, c, d = UnimodularMatrix.coerce(gamma)
        terms = {(v1 * a + v2 * c, v1 * b + v2 * d): coef for (v1, v2), coef in self.terms.items()}
        return GSeriesCombination(self.weight, self.level, terms, self.normalizer)

    def refine_level(self, level):
        """Same function written with slices of a multiple level"""
        if level % self.level:
            raise ExpansionError(f'level {self.level} does not divide {level}')
        r = level // self.level
        L = self.level
        terms = {}
        for (v1, v2), coef in self.terms.items():
            for i in range(r):
                for j in range(r):
                    terms[(v1 + i * L, v2 + j * L)] = coef
        factor = Fraction(1, r) ** self.weight
        return GSeriesCombination(self.weight, level, terms, self.normalizer * factor)

    def lift(self, d):
        """The combination for f|B_d, at level d*L"""
        if d == 1:
            return self
        L = self.level
        terms = {}
        for (v1, v2), coef in self.terms.items():
            for j in range(d):
                terms[(d * v1, v2 + j * L)] = coef
        normalizer = self.normalizer * power_half(d, -self.weight)
        return GSeriesCombination(self.weight, d * L, terms, normalizer)

    def nonholomorphic_multiplier(self):
        """Coefficient of 1/(4 pi y); only weight 2 slices carry one"""
        if self.weight != 2:
            return CyclotomicNumber.zero()
        total = CyclotomicNumber.zero()
        for coef in self.terms.values():
            total = total + coef
        return total * self.normalizer

    def combine(self, other, sign=1):
        """self + sign * other at the lcm of the levels"""
        if other.weight != self.weight:
            raise ExpansionError('cannot combine lattice series of different weight')
        level = math.lcm(self.level, other.level)
        a, b = self.refine_level(level), other.refine_level(level)
        ratio = b.normalizer / a.normalizer
        terms = dict(a.terms)
        for key, coef in b.terms.items():
            terms[key] = terms.get(key, CyclotomicNumber.zero()) + coef * ratio * sign
        return GSeriesCombination(self.weight, level, terms, a.normalizer)

    def expand(self, precision):
        """Holomorphic q_L-expansion to the given precision"""
        return gseries_combination_expansion(self, precision)

    def __repr__(self):
        return f'<GSeriesCombination l={self.weight} L={self.level}: {len(self.terms)} slices>'


def gseries_combination_expansion(comb, precision):
    L, l = comb.level, comb.weight
    order = L
    for coef in comb.terms.values():
        order = math.lcm(order, coef.order)
    den = math.lcm(*(c.embed(order).denominator for c in comb.terms.values())) if comb.terms else 1
    step = order // L
    by_class = {}
    for (v1, v2), coef in comb.terms.items():
        c = coef.embed(order)
        factor = den // c.denominator
        sparse = [(i, n * factor) for i, n in enumerate(c.numerators) if n]
        by_class.setdefault(v1, []).append((v2, sparse))

    memo = {}

    def F(u, s):
        key = (u, s)
        if key not in memo:
            acc = {}
            for v2, sparse in by_class.get(u, ()):
                shift = s * v2 * step
                for i, n in sparse:
                    e = (i + shift) % order
                    acc[e] = acc.get(e, 0) + n
            memo[key] = [(e, n) for e, n in acc.items() if n]
        return memo[key]

    sign = -1 if l % 2 else 1
    coeffs = []
    constant = CyclotomicNumber.zero()
    for (v1, v2), coef in comb.terms.items():
        constant = constant + coef * slice_constant_term(L, l, v1, v2)
    coeffs.append(constant * comb.normalizer)
    for n in range(1, precision + 1):
        vector = [0] * order
        touched = False
        for c in _divisor_list(n):
            r = n // c
            power = r ** (l - 1)
            for e, v in F(c % L, r % L):
                vector[e] += power * v
                touched = True
            for e, v in F((-c) % L, (-r) % L):
                vector[e] += sign * power * v
                touched = True
        if touched:
            value = CyclotomicNumber(order, reduce_exponents(order, vector), den)
            coeffs.append(value * comb.normalizer)
        else:
            coeffs.append(CyclotomicNumber.zero(order))
    return FourierExpansion(l, coeffs, L)


@lru_cache(maxsize=4096)
def _divisor_list(n):
    small = [d for d in range(1, math.isqrt(n) + 1) if n % d == 0]
    return tuple(sorted(set(small + [n // d for d in small])))


def gseries_expansion(level, v, l, precision):
    """q_level-expansion of one slice and its non-holomorphic multiplier"""
    if l < 1:
        raise ExpansionError(f'lattice Eisenstein series need weight >= 1, got {l}')
    comb = GSeriesCombination(l, level, {tuple(v): CyclotomicNumber.one()})
    return comb.expand(precision), comb.nonholomorphic_multiplier()


def decompose_to_gseries(label):
    """E_l^{phi,psi}|B_d as a combination of slices of level d*M1*M2"""
    if isinstance(label, EisensteinBasisElement):
        return _basis_element_combination(label)
    phi, psi, l = label.phi, label.psi, label.l
    M1, M2 = phi.modulus, psi.modulus
    L = M1 * M2
    conj_psi = psi.conjugate()
    m = math.lcm(phi.order, conj_psi.order)
    terms = {}
    for a in range(M1):
        x = phi.exponent(a, m)
        if x is None:
            continue
        for v2 in range(L):
            y = conj_psi.exponent(v2, m)
            if y is None:
                continue
            terms[(M2 * a, v2)] = CyclotomicNumber.from_exponents(m, {(x + y) % m: 1})
    normalizer = (conj_psi.gauss_sum() * Fraction(M1) ** l).inverse()
    comb = GSeriesCombination(l, L, terms, normalizer).lift(label.d)
    if l == 2:
        check(comb.nonholomorphic_multiplier().is_zero(),
              f'non-holomorphic part of {label!r} does not cancel')
    return comb


def _e2_combination():
    return GSeriesCombination(2, 1, {(0, 0): CyclotomicNumber.one()})


def _basis_element_combination(element):
    if element.kind == 'eis':
        return decompose_to_gseries(element.label())
    e2 = _e2_combination()
    comb = e2.combine(e2.lift(element.d), sign=-1)
    check(comb.nonholomorphic_multiplier().is_zero(),
          f'non-holomorphic part of {element!r} does not cancel')
    return comb


def slash(comb, gamma):
    return comb.slash(gamma)


def apply_upper_triangular(f, a, b, d):
    """f|(a b; 0 d) without the det^(k/2) factor: q_L^n -> d^(-k) zeta_{Ld}^(nb) q_{Ld}^(na)"""
    if a == 1 and b == 0 and d == 1:
        return f
    width = f.width * d
    scale = Fraction(1, d) ** f.weight
    zero = CyclotomicNumber.zero()
    coeffs = [zero] * (f.precision * a + 1)
    for n, c in enumerate(f.coeffs):
        if not c.is_zero():
            coeffs[n * a] = c.times_root_of_unity(width, n * b) * scale
    return FourierExpansion(f.weight, coeffs, width)


def _eisenstein_factor(element, gamma, a, b, d, bound):
    comb = decompose_to_gseries(element).slash(gamma)
    precision = math.floor(bound * comb.level * d / a) + 1
    return apply_upper_triangular(comb.expand(precision), a, b, d)


def expansion_under_matrix(target, A, bound):
    """f|A as an expansion in q_W, with all terms of exponent n/W <= bound known

    target is an EisLabel, an EisensteinBasisElement or a ProductRepresentation;
    A is any integral matrix with positive determinant.
    """
    A = tuple(A)
    gamma, a, b, d = hermite_factor(A)
    det = A[0] * A[3] - A[1] * A[2]
    bound = Fraction(bound)
    if isinstance(target, (EisLabel, EisensteinBasisElement)):
        weight = target.l if isinstance(target, EisLabel) else target.k
        f = _eisenstein_factor(target, gamma, a, b, d, bound)
        return f.scale(power_half(det, weight))
    if isinstance(target, GeneratorQuintuple):
        target = ProductRepresentation(target.level, target.k, [(1, target)])
    pieces = []
    for coeff, quintuple in target.terms:
        if coeff.is_zero():
            continue
        first = _eisenstein_factor(quintuple.first_label(), gamma, a, b, d, bound)
        second = _eisenstein_factor(quintuple.second_label(), gamma, a, b, d, bound)
        pieces.append((coeff, multiply(first, second)))
    for coeff, element in target.eis_terms:
        if not coeff.is_zero():
            pieces.append((coeff, _eisenstein_factor(element, gamma, a, b, d, bound)))
    if not pieces:
        raise RepresentationError('representation has no nonzero terms')
    logger.debug('Slashed %d terms by %s (hermite a=%d b=%d d=%d)', len(pieces), A, a, b, d)
    return linear_combine(pieces).scale(power_half(det, target.weight))


def _target_level(target):
    return target.level


def normalize_width(raw, width, precision):
    """Rewrite a raw slashed expansion in q_width; returns (expansion, minimal period)"""
    period = raw.minimal_period()
    check(width % period == 0,
          f'expansion has period {period}, which does not divide the cusp width {width}')
    result = raw.restrict_width(period).refine_width(width)
    check(result.precision >= precision,
          f'slashed expansion reached precision {result.precision} < {precision}')
    result = result.truncate(precision)
    return result, result.minimal_period()


def _bound_for(precision, width):
    return Fraction(precision, width) + 2


def _require_verified(target):
    if isinstance(target, ProductRepresentation) and not target.is_verified:
        raise RepresentationError('representation must be verified before slashing')


def expansion_at_cusp(target, gamma, precision, level=None):
    """Expansion of f|gamma in q_w, w = N/gcd(c^2, N)"""
    _require_verified(target)
    gamma = UnimodularMatrix.coerce(gamma)
    N = level or _target_level(target)
    width = cusp_width(N, gamma.c)
    raw = expansion_under_matrix(target, gamma.to_list(), _bound_for(precision, width))
    expansion, period = normalize_width(raw, width, precision)
    return CuspExpansion(format_cusp(gamma.a, gamma.c), gamma.to_list(), expansion, period)


def al_matrix(N, S):
    """W_S^N = (N_S, 1; N z, N_S w) with N_S w - N_{S-bar} z = 1"""
    factors = factorint(N)
    S = set(S)
    missing = S - set(factors)
    if missing:
        raise ExpansionError(f'primes {sorted(missing)} do not divide {N}')
    N_S = math.prod(p ** factors[p] for p in S)
    rest = N // N_S
    w, minus_z, _ = igcdex(N_S, rest)
    return (N_S, 1, N * -int(minus_z), N_S * int(w))


def al_image(target, S, precision, level=None, matrix=None):
    """Width-1 expansion of f|W_S^N"""
    _require_verified(target)
    N = level or _target_level(target)
    A = matrix or al_matrix(N, S)
    raw = expansion_under_matrix(target, A, _bound_for(precision, 1))
    expansion, _ = normalize_width(raw, 1, precision)
    return expansion


def proportionality_constant(image, f):
    """lambda with image = lambda * f, checked on every known coefficient"""
    precision = min(image.precision, f.precision)
    pivot = f.truncate(precision).valuation()
    if pivot is None:
        raise RepresentationError('cannot read an eigenvalue off the zero expansion')
    ratio = image.coeffs[pivot] / f.coeffs[pivot]
    for n in range(precision + 1):
        if image.coeffs[n] != ratio * f.coeffs[n]:
            raise RepresentationError(f'not an eigenform at S: coefficient {n} breaks proportionality')
    return ratio


def al_eigenvalue(target, S, precision, reference=None, level=None):
    """Scalar lambda with f|W_S^N = lambda f"""
    image = al_image(target, S, precision, level)
    if reference is None:
        raw = expansion_under_matrix(target, IDENTITY.to_list(), _bound_for(precision, 1))
        reference, _ = normalize_width(raw, 1, precision)
    lam = proportionality_constant(image, reference)
    logger.debug('Atkin-Lehner eigenvalue at S=%s: %s', sorted(S), lam)
    return lam
