import hashlib
import json

from app.models.labels import EisensteinBasisElement, GeneratorQuintuple
from app.services.exactmath import CyclotomicNumber


def target_digest(expansion):
    """Stable digest of an expansion's coefficients"""
    payload = json.dumps(expansion.to_dict(), sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(payload.encode('utf-8')).hexdigest()


class ProductRepresentation:
    """Linear combination of Eisenstein products and Eisenstein basis elements"""

    def __init__(self, level, weight, terms, eis_terms=None, target_digest=None, verified_to=None):
        self.level = level
        self.weight = weight
        self.terms = [(CyclotomicNumber.coerce(c), q) for c, q in terms]
        self.eis_terms = [(CyclotomicNumber.coerce(c), e) for c, e in (eis_terms or [])]
        self.target_digest = target_digest
        self.verified_to = verified_to

    @property
    def is_verified(self):
        return self.verified_to is not None

    def nonzero(self):
        """Copy without zero coefficients"""
        return ProductRepresentation(
            self.level, self.weight,
            [(c, q) for c, q in self.terms if not c.is_zero()],
            [(c, e) for c, e in self.eis_terms if not c.is_zero()],
            self.target_digest, self.verified_to)

    def to_dict(self):
        """Convert representation to dictionary"""
        return {
            'level': self.level,
            'weight': self.weight,
            'terms': [{'coeff': c.to_dict(), 'quintuple': q.to_dict()} for c, q in self.terms],
            'eis_terms': [{'coeff': c.to_dict(), 'element': e.to_dict()} for c, e in self.eis_terms],
            'target_digest': self.target_digest,
            'verified_to': self.verified_to
        }

    @classmethod
    def from_dict(cls, data):
        terms = [(CyclotomicNumber.from_dict(t['coeff']), GeneratorQuintuple.from_dict(t['quintuple']))
                 for t in data.get('terms', [])]
        eis_terms = [(CyclotomicNumber.from_dict(t['coeff']), EisensteinBasisElement.from_dict(t['element']))
                     for t in data.get('eis_terms', [])]
        return cls(int(data['level']), int(data['weight']), terms, eis_terms,
                   data.get('target_digest'), data.get('verified_to'))

    def __repr__(self):
        return (f'<ProductRepresentation N={self.level} k={self.weight}: '
                f'{len(self.terms)} products, {len(self.eis_terms)} Eisenstein terms>')


class NotInSpan:
    """Inconsistency certificate: y with y.column = 0 for every column and y.target != 0"""

    def __init__(self, level, weight, precision, certificate, residual):
        self.level = level
        self.weight = weight
        self.precision = precision
        self.certificate = [CyclotomicNumber.coerce(y) for y in certificate]
        self.residual = CyclotomicNumber.coerce(residual)

    def to_dict(self):
        """Convert certificate to dictionary"""
        return {
            'level': self.level,
            'weight': self.weight,
            'precision': self.precision,
            'not_in_span': True,
            'certificate': [y.to_dict() for y in self.certificate],
            'residual': self.residual.to_dict()
        }

    def __bool__(self):
        return False

    def __repr__(self):
        return f'<NotInSpan N={self.level} k={self.weight} B={self.precision}>'


class CuspExpansion:
    """Expansion of f|gamma in q_w at the cusp gamma(infinity)"""

    def __init__(self, cusp, gamma, expansion, period=None):
        self.cusp = cusp
        self.gamma = tuple(gamma)
        self.expansion = expansion
        self.period = period

    @property
    def width(self):
        return self.expansion.width

    def to_dict(self):
        """Convert cusp expansion to dictionary"""
        return {
            'cusp': self.cusp,
            'gamma': list(self.gamma),
            'expansion': self.expansion.to_dict(),
            'period': self.period
        }

    def __repr__(self):
        return f'<CuspExpansion {self.cusp} w={self.width} period={self.period}>'
