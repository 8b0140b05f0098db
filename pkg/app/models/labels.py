from dataclasses import dataclass

from app.services.characters import DirichletCharacter, character_from_label
from app.utils.errors import LabelError


def _check_primitive(chi, name):
    if not chi.is_primitive():
        raise LabelError(f'{name} must be primitive, got {chi!r}')


def _character_ref(chi):
    label = chi.label
    if label is None:
        raise LabelError(f'{chi!r} has no CLI reference')
    return label


def _character_from(value):
    if isinstance(value, DirichletCharacter):
        return value
    return character_from_label(value)


@dataclass(frozen=True, repr=False)
class EisLabel:
    """E_l^{phi,psi}, optionally followed by B_d"""
    phi: DirichletCharacter
    psi: DirichletCharacter
    l: int
    d: int = 1

    def __post_init__(self):
        _check_primitive(self.phi, 'phi')
        _check_primitive(self.psi, 'psi')
        if self.l < 1:
            raise LabelError(f'weight must be positive, got {self.l}')
        if self.d < 1:
            raise LabelError(f'lift parameter must be positive, got {self.d}')
        if self.phi.parity * self.psi.parity != (-1) ** self.l:
            raise LabelError(f'parity of phi*psi does not match weight {self.l}')
        if self.is_trivial_pair() and self.l == 2:
            raise LabelError('E_2 with trivial characters is not a modular form')

    @property
    def M1(self):
        return self.phi.modulus

    @property
    def M2(self):
        return self.psi.modulus

    @property
    def level(self):
        return self.M1 * self.M2 * self.d

    def is_trivial_pair(self):
        return self.M1 == 1 and self.M2 == 1

    def with_lift(self, d):
        return EisLabel(self.phi, self.psi, self.l, d)

    def to_dict(self):
        """Convert label to dictionary"""
        return {
            'phi': _character_ref(self.phi),
            'psi': _character_ref(self.psi),
            'l': self.l,
            'd': self.d
        }

    @classmethod
    def from_dict(cls, data):
        return cls(_character_from(data['phi']), _character_from(data['psi']),
                   int(data['l']), int(data.get('d', 1)))

    def __repr__(self):
        return f'<EisLabel E_{self.l}^({_character_ref(self.phi)},{_character_ref(self.psi)})|B_{self.d}>'


@dataclass(frozen=True, repr=False)
class GeneratorQuintuple:
    """Product E_l^{phi,psi}|B_{d1 d} * E_{k-l}^{conj phi,conj psi}|B_{d2 d}"""
    phi: DirichletCharacter
    psi: DirichletCharacter
    l: int
    d1: int
    d2: int
    d: int
    k: int

    def __post_init__(self):
        if not 1 <= self.l < self.k:
            raise LabelError(f'l must lie in 1..{self.k - 1}, got {self.l}')
        if self.phi.modulus == 1 and self.psi.modulus == 1 and self.l in (2, self.k - 2):
            raise LabelError(f'trivial pair excluded at l = {self.l} for weight {self.k}')
        self.first_label()
        self.second_label()

    @property
    def sublevel(self):
        return self.d1 * self.phi.modulus * self.d2 * self.psi.modulus

    @property
    def level(self):
        return self.sublevel * self.d

    def first_label(self):
        return EisLabel(self.phi, self.psi, self.l, self.d1 * self.d)

    def second_label(self):
        return EisLabel(self.phi.conjugate(), self.psi.conjugate(), self.k - self.l, self.d2 * self.d)

    def sort_key(self):
        return (self.d, self.sublevel, self.phi.modulus, self.phi.exponents,
                self.psi.modulus, self.psi.exponents, self.l, self.d1, self.d2)

    def to_dict(self):
        """Convert quintuple to dictionary"""
        return {
            'phi': _character_ref(self.phi),
            'psi': _character_ref(self.psi),
            'l': self.l,
            'd1': self.d1,
            'd2': self.d2,
            'd': self.d,
            'k': self.k
        }

    @classmethod
    def from_dict(cls, data):
        return cls(_character_from(data['phi']), _character_from(data['psi']), int(data['l']),
                   int(data['d1']), int(data['d2']), int(data.get('d', 1)), int(data['k']))

    def __repr__(self):
        return (f'<GeneratorQuintuple ({_character_ref(self.phi)}, {_character_ref(self.psi)}, '
                f'l={self.l}, d1={self.d1}, d2={self.d2}) d={self.d} k={self.k}>')


@dataclass(frozen=True, repr=False)
class EisensteinBasisElement:
    """Spanning element of the Eisenstein space of weight k on Gamma_0(N)

    kind 'eis' is E_k^{phi,conj phi}|B_d; kind 'e2diff' is E_2(z) - d E_2(dz).
    """
    kind: str
    k: int
    d: int
    phi: DirichletCharacter = None

    def __post_init__(self):
        if self.kind not in ('eis', 'e2diff'):
            raise LabelError(f'unknown Eisenstein basis kind {self.kind!r}')
        if self.kind == 'e2diff' and (self.k != 2 or self.d < 2):
            raise LabelError('E_2 differences need weight 2 and d > 1')
        if self.kind == 'eis':
            self.label()

    def label(self):
        return EisLabel(self.phi, self.phi.conjugate(), self.k, self.d)

    @property
    def level(self):
        if self.kind == 'e2diff':
            return self.d
        return self.phi.modulus ** 2 * self.d

    @property
    def id(self):
        if self.kind == 'e2diff':
            return f'e2diff:{self.d}'
        return f'eis:{_character_ref(self.phi)}:{self.k}:{self.d}'

    def to_dict(self):
        """Convert basis element to dictionary"""
        data = {'kind': self.kind, 'k': self.k, 'd': self.d, 'id': self.id}
        if self.phi is not None:
            data['phi'] = _character_ref(self.phi)
        return data

    @classmethod
    def from_dict(cls, data):
        phi = data.get('phi')
        return cls(data['kind'], int(data['k']), int(data['d']),
                   _character_from(phi) if phi is not None else None)

    def __repr__(self):
        return f'<EisensteinBasisElement {self.id}>'
