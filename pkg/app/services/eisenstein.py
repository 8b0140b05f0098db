"""q-expansions at infinity of the Eisenstein series E_l^{phi,psi}.

Normalisation (used everywhere in the package):
    E_l^{phi,psi} = e + 2 sum_{n>=1} sigma_{l-1,phi,psi}(n) q^n
    sigma_{l-1,phi,psi}(n) = sum_{d | n} phi(n/d) psi(d) d^(l-1)
with e = L(psi, 1-l) if M1 = 1, L(phi, 0) if M2 = 1 and l = 1, else 0.
"""
import logging
import math
from fractions import Fraction

from sympy import divisors, factorint

from app.models.labels import EisLabel, EisensteinBasisElement
from app.services.characters import enumerate_primitive, trivial_character
from app.services.exactmath import CyclotomicNumber, mobius, reduce_exponents
from app.services.qexp import FourierExpansion, apply_B_d, linear_combine
from app.utils.errors import LabelError

logger = logging.getLogger(__name__)


def _character_order(phi, psi):
    return math.lcm(phi.order, psi.order)


def sigma_divisor(n, phi, psi, l):
    """sum over d | n of phi(n/d) psi(d) d^(l-1)"""
    if n < 1:
        raise LabelError(f'divisor sums need n >= 1, got {n}')
    m = _character_order(phi, psi)
    terms = {}
    for d in divisors(n):
        a, b = phi.exponent(n // d, m), psi.exponent(d, m)
        if a is None or b is None:
            continue
        j = (a + b) % m
        terms[j] = terms.get(j, 0) + d ** (l - 1)
    return CyclotomicNumber.from_exponents(m, terms)


def _sigma_table(phi, psi, l, B):
    """sigma_{l-1,phi,psi}(n) for 1 <= n <= B by a divisor sieve"""
    m = _character_order(phi, psi)
    acc = [None] * (B + 1)
    for d in range(1, B + 1):
        b = psi.exponent(d, m)
        if b is None:
            continue
        power = d ** (l - 1)
        for quotient in range(1, B // d + 1):
            a = phi.exponent(quotient, m)
            if a is None:
                continue
            n = quotient * d
            if acc[n] is None:
                acc[n] = [0] * m
            acc[n][(a + b) % m] += power
    return [None if vector is None else CyclotomicNumber(m, reduce_exponents(m, vector))
            for vector in acc], m


def constant_term(phi, psi, l):
    """e_l^{phi,psi}"""
    if phi.modulus == 1:
        return psi.l_value_nonpositive(l)
    if psi.modulus == 1 and l == 1:
        return phi.l_value_nonpositive(1)
    return CyclotomicNumber.zero()


def _raw_expansion(phi, psi, l, B):
    sigmas, m = _sigma_table(phi, psi, l, B)
    coeffs = [constant_term(phi, psi, l)]
    for n in range(1, B + 1):
        s = sigmas[n]
        coeffs.append(CyclotomicNumber.zero(m) if s is None else s * 2)
    return FourierExpansion(l, coeffs, 1, m)


def eis_expansion(label, B):
    """Width-1 expansion of E_l^{phi,psi}|B_d to precision B"""
    if not isinstance(label, EisLabel):
        label = EisLabel(*label)
    base = _raw_expansion(label.phi, label.psi, label.l, B // label.d)
    logger.debug('Expanded %r to precision %d', label, B)
    if label.d == 1:
        return base
    lifted = apply_B_d(base, label.d)
    if lifted.precision < B:
        zero = CyclotomicNumber.zero(lifted.field_order)
        return FourierExpansion(lifted.weight, list(lifted.coeffs) + [zero] * (B - lifted.precision),
                                1, lifted.field_order)
    return lifted.truncate(B)


def e2_series(B):
    """Quasi-modular E_2 = -1/12 + 2 sum sigma_1(n) q^n; never a modular object on its own"""
    one = trivial_character()
    sigmas, _ = _sigma_table(one, one, 2, B)
    coeffs = [CyclotomicNumber.from_rational(Fraction(-1, 12))]
    coeffs.extend(s * 2 for s in sigmas[1:])
    return FourierExpansion(2, coeffs)


def e2_difference(d, B):
    """E_2(z) - d E_2(dz), a modular form of weight 2 on Gamma_0(d)"""
    if d < 2:
        raise LabelError(f'E_2 differences need d > 1, got {d}')
    e2 = e2_series(B)
    lifted = apply_B_d(e2_series(B // d), d)
    coeffs = list(e2.coeffs)
    for n in range(0, B + 1, d):
        coeffs[n] = coeffs[n] - lifted.coeffs[n]
    return FourierExpansion(2, coeffs)


def _lift_without_radicals(f, t, scale, B):
    """scale * t^w * f(t z) truncated at B"""
    zero = CyclotomicNumber.zero(f.field_order)
    coeffs = [zero] * (B + 1)
    factor = Fraction(t) ** f.weight
    for n in range(B // t + 1):
        coeffs[n * t] = f.coeffs[n] * factor * scale
    return FourierExpansion(f.weight, coeffs, 1, f.field_order)


def eis_imprimitive(alpha, N, w, B):
    """E_w^{1, conj(alpha_N)} for alpha primitive mod M dividing N

    Defined as sum over e | N/N_M of mu(e) alpha(e) t^w E_w^{1,conj alpha}(t z), t = N/(M e),
    where N_M is the M-primary part of N.
    """
    M = alpha.modulus
    if N % M:
        raise LabelError(f'modulus {M} does not divide level {N}')
    if not alpha.is_primitive():
        raise LabelError(f'{alpha!r} is not primitive')
    if alpha.parity != (-1) ** w:
        raise LabelError(f'parity of alpha does not match weight {w}')
    N_M = math.prod(p ** e for p, e in factorint(N).items() if M % p == 0)
    one = trivial_character()
    conj = alpha.conjugate()
    if M == 1 and w == 2:
        raise LabelError('E_2 with trivial characters is not a modular form')
    base = eis_expansion(EisLabel(one, conj, w), B)
    terms = []
    for e in divisors(N // N_M):
        mu = mobius(e)
        if mu:
            t = N // (M * e)
            terms.append((1, _lift_without_radicals(base, t, alpha.evaluate(e) * mu, B)))
    return linear_combine(terms)


def eisenstein_basis_elements(N, k):
    """Labels of the spanning set of the Eisenstein space of M_k(Gamma_0(N))"""
    if k % 2 or k < 2:
        raise LabelError(f'Eisenstein spaces are built for even k >= 2, got {k}')
    elements = []
    for M1 in divisors(N):
        if N % (M1 * M1):
            continue
        for phi in enumerate_primitive(M1):
            if k == 2 and M1 == 1:
                continue
            for d in divisors(N // (M1 * M1)):
                elements.append(EisensteinBasisElement('eis', k, d, phi))
    if k == 2:
        elements.extend(EisensteinBasisElement('e2diff', 2, d) for d in divisors(N) if d > 1)
    logger.debug('Eisenstein space N=%d k=%d: %d spanning elements', N, k, len(elements))
    return elements


def basis_element_expansion(element, B):
    if element.kind == 'e2diff':
        return e2_difference(element.d, B)
    return eis_expansion(element.label(), B)


def eisenstein_space_basis(N, k, B):
    return [basis_element_expansion(e, B) for e in eisenstein_basis_elements(N, k)]
