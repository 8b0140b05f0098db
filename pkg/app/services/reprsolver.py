"""Generators of products of Eisenstein series and exact representation of targets.

Columns of the linear system are the q-expansions of the products
E_l^{phi,psi}|B_{d1 d} * E_{k-l}^{conj phi,conj psi}|B_{d2 d} for all
quintuples of level N_0 with N_0 d | N, followed by a spanning set of the
Eisenstein space. Elimination keeps a fully reduced column echelon basis,
so solutions set free variables to zero and inconsistency yields a dual
certificate.
"""
import logging
import math

from sympy import divisors, factorint

from app.models.labels import GeneratorQuintuple
from app.models.representation import NotInSpan, ProductRepresentation, target_digest
from app.services.characters import enumerate_primitive
from app.services.eisenstein import basis_element_expansion, eis_expansion, eisenstein_basis_elements
from app.services.exactmath import CyclotomicNumber
from app.services.qexp import FourierExpansion, linear_combine, multiply, sturm_bound
from app.utils.errors import ExpansionError, LabelError, check

logger = logging.getLogger(__name__)

DEFAULT_SLACK_ROWS = 5


def _squarefree_part(N0):
    """N_T: product of the primes p with v_p(N0) = 1"""
    return math.prod(p for p, e in factorint(N0).items() if e == 1)


def _quintuples_at(N0, d, k):
    N_T = _squarefree_part(N0)
    for M1 in divisors(N_T):
        phis = enumerate_primitive(M1)
        for d1 in divisors(N_T // M1):
            rest = N0 // (d1 * M1)
            for M2 in divisors(rest):
                d2 = rest // M2
                psis = enumerate_primitive(M2)
                for phi in phis:
                    for psi in psis:
                        parity = phi.parity * psi.parity
                        for l in range(1, k):
                            if (-1) ** l != parity:
                                continue
                            if M1 == 1 and M2 == 1 and l in (2, k - 2):
                                continue
                            yield GeneratorQuintuple(phi, psi, l, d1, d2, d, k)


def enumerate_generators(N, k):
    """Deterministic, duplicate-free list of generator quintuples for level N, weight k"""
    if k % 2 or k < 2:
        raise LabelError(f'generators are built for even k >= 2, got {k}')
    seen = set()
    generators = []
    for d in divisors(N):
        for N0 in divisors(N // d):
            for q in sorted(_quintuples_at(N0, d, k), key=GeneratorQuintuple.sort_key):
                key = (q.phi, q.psi, q.l, q.d1 * q.d, q.d2 * q.d)
                if key not in seen:
                    seen.add(key)
                    generators.append(q)
    logger.debug('Enumerated %d generator quintuples for N=%d k=%d', len(generators), N, k)
    return generators


class ExpansionBuilder:
    """Column expansions with per-label memoisation"""

    def __init__(self, precision):
        self.precision = precision
        self._labels = {}

    def label_expansion(self, label):
        if label not in self._labels:
            self._labels[label] = eis_expansion(label, self.precision)
        return self._labels[label]

    def product(self, quintuple):
        return multiply(self.label_expansion(quintuple.first_label()),
                        self.label_expansion(quintuple.second_label()))

    def element(self, element):
        return basis_element_expansion(element, self.precision)


def build_matrix(gens, B, eis_elements=()):
    """Columns (coefficient vectors through q^B) for generators then Eisenstein elements"""
    builder = ExpansionBuilder(B)
    columns = [builder.product(q) for q in gens]
    columns.extend(builder.element(e) for e in eis_elements)
    order = 1
    for column in columns:
        order = math.lcm(order, column.field_order)
    logger.debug('Matrix with %d rows and %d columns over Q(zeta_%d)', B + 1, len(columns), order)
    return [[c.embed(order) for c in column.coeffs] for column in columns], order


def _axpy(y, a, x):
    """y - a*x"""
    return [yi - a * xi if not xi.is_zero() else yi for yi, xi in zip(y, x)]


class EchelonBasis:
    """Fully reduced column echelon basis tracking combinations of the inserted columns"""

    def __init__(self, rows):
        self.rows = rows
        self.vectors = []
        self.pivots = []
        self.combos = []

    @property
    def rank(self):
        return len(self.vectors)

    def _reduce(self, vector):
        vector = list(vector)
        combo = {}
        for b, p, c in zip(self.vectors, self.pivots, self.combos):
            a = vector[p]
            if a.is_zero():
                continue
            vector = _axpy(vector, a, b)
            for j, coef in c.items():
                combo[j] = combo.get(j, CyclotomicNumber.zero()) - a * coef
        return vector, combo

    def add(self, vector, index):
        """Insert column `index`; returns False when it is already in the span"""
        if len(vector) != self.rows:
            raise ExpansionError(f'column has {len(vector)} rows, expected {self.rows}')
        residual, combo = self._reduce(vector)
        pivot = next((i for i, v in enumerate(residual) if not v.is_zero()), None)
        if pivot is None:
            return False
        combo[index] = combo.get(index, CyclotomicNumber.zero()) + 1
        inv = residual[pivot].inverse()
        residual = [v * inv for v in residual]
        combo = {j: c * inv for j, c in combo.items()}
        for i, b in enumerate(self.vectors):
            a = b[pivot]
            if not a.is_zero():
                self.vectors[i] = _axpy(b, a, residual)
                updated = dict(self.combos[i])
                for j, c in combo.items():
                    updated[j] = updated.get(j, CyclotomicNumber.zero()) - a * c
                self.combos[i] = updated
        self.vectors.append(residual)
        self.pivots.append(pivot)
        self.combos.append(combo)
        return True

    def solve(self, target):
        """(solution dict, None) or (None, (certificate, residual value))"""
        residual, combo = self._reduce(target)
        bad = next((i for i, v in enumerate(residual) if not v.is_zero()), None)
        if bad is None:
            solution = {j: -c for j, c in combo.items() if not c.is_zero()}
            return solution, None
        certificate = [CyclotomicNumber.zero() for _ in range(self.rows)]
        certificate[bad] = CyclotomicNumber.one()
        for b, p in zip(self.vectors, self.pivots):
            certificate[p] = certificate[p] - b[bad]
        return None, (certificate, residual[bad])


def span_basis(N, k, B):
    """Echelon basis of generators plus Eisenstein elements at precision B"""
    gens = enumerate_generators(N, k)
    elements = eisenstein_basis_elements(N, k)
    columns, _ = build_matrix(gens, B, elements)
    basis = EchelonBasis(B + 1)
    for index, column in enumerate(columns):
        basis.add(column, index)
    return basis, gens, elements


def working_precision(N, k, slack=DEFAULT_SLACK_ROWS):
    return sturm_bound(N, k) + slack


def rank_of_span(N, k, B=None, slack=DEFAULT_SLACK_ROWS):
    if B is None:
        B = working_precision(N, k, slack)
    if B < sturm_bound(N, k):
        raise ExpansionError(f'precision {B} is below the Sturm bound {sturm_bound(N, k)}')
    basis, _, _ = span_basis(N, k, B)
    logger.debug('Rank of span for N=%d k=%d at B=%d: %d', N, k, B, basis.rank)
    return basis.rank


def expand_representation(rep, B):
    """Re-expansion at infinity of a representation through q^B"""
    builder = ExpansionBuilder(B)
    pieces = [(c, builder.product(q)) for c, q in rep.terms if not c.is_zero()]
    pieces.extend((c, builder.element(e)) for c, e in rep.eis_terms if not c.is_zero())
    if not pieces:
        return FourierExpansion.zero(rep.weight, B)
    return linear_combine(pieces)


def verify_representation(rep, target, B):
    """True iff the representation matches target coefficientwise through q^B"""
    if B > target.precision:
        raise ExpansionError(f'target known to q^{target.precision}, cannot verify to q^{B}')
    if target.width != 1:
        return False
    expansion = expand_representation(rep, B)
    return all(a == b for a, b in zip(expansion.coeffs, target.coeffs[:B + 1]))


def solve_represent(target, N, k, slack=DEFAULT_SLACK_ROWS):
    """ProductRepresentation of target, or NotInSpan with a dual certificate

    The system is solved on the rows through the Sturm bound; the rows
    above it, up to slack of them, are then checked separately.
    """
    if target.width != 1:
        raise ExpansionError(f'targets must have width 1, got {target.width}')
    if target.weight != k:
        raise ExpansionError(f'target has weight {target.weight}, expected {k}')
    bound = sturm_bound(N, k)
    if target.precision < bound:
        raise ExpansionError(f'target precision {target.precision} is below the Sturm bound {bound}')
    B = min(target.precision, bound + slack)
    basis, gens, elements = span_basis(N, k, bound)
    solution, failure = basis.solve(list(target.coeffs[:bound + 1]))
    if failure is not None:
        certificate, residual = failure
        logger.info('Target not in span for N=%d k=%d (rank %d)', N, k, basis.rank)
        return NotInSpan(N, k, bound, certificate, residual)
    terms = [(solution[i], q) for i, q in enumerate(gens) if i in solution]
    offset = len(gens)
    eis_terms = [(solution[offset + i], e) for i, e in enumerate(elements) if offset + i in solution]
    rep = ProductRepresentation(N, k, terms, eis_terms, target_digest(target.truncate(B)))
    check(verify_representation(rep, target, bound), 'solver output fails verification on its own rows')
    if B == bound:
        logger.warning('No slack rows above the Sturm bound %d for N=%d k=%d; extend the target to check them',
                       bound, N, k)
    elif not verify_representation(rep, target, B):
        logger.warning('Target disagrees with its representation between q^%d and q^%d for N=%d k=%d',
                       bound + 1, B, N, k)
        full, _, _ = span_basis(N, k, B)
        _, failure = full.solve(list(target.coeffs[:B + 1]))
        check(failure is not None, 'slack rows disagree but the full system is consistent')
        return NotInSpan(N, k, B, *failure)
    rep.verified_to = B
    logger.info('Represented target for N=%d k=%d with %d products and %d Eisenstein terms (%d slack rows)',
                N, k, len(terms), len(eis_terms), B - bound)
    return rep


def solve_with_columns(target, N, columns, B):
    """Solve against an explicit list of quintuples and Eisenstein elements"""
    gens = [c for c in columns if isinstance(c, GeneratorQuintuple)]
    elements = [c for c in columns if not isinstance(c, GeneratorQuintuple)]
    matrix, _ = build_matrix(gens, B, elements)
    basis = EchelonBasis(B + 1)
    for index, column in enumerate(matrix):
        basis.add(column, index)
    solution, failure = basis.solve(list(target.coeffs[:B + 1]))
    if failure is not None:
        return NotInSpan(N, target.weight, B, *failure)
    zero = CyclotomicNumber.zero()
    terms = [(solution.get(i, zero), q) for i, q in enumerate(gens)]
    offset = len(gens)
    eis_terms = [(solution.get(offset + i, zero), e) for i, e in enumerate(elements)]
    rep = ProductRepresentation(N, target.weight, terms, eis_terms, target_digest(target.truncate(B)))
    check(verify_representation(rep, target, B), 'solver output fails verification on its own rows')
    rep.verified_to = B
    return rep
