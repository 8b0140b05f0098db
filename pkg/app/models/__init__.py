from app.models.labels import EisLabel, EisensteinBasisElement, GeneratorQuintuple
from app.models.representation import CuspExpansion, NotInSpan, ProductRepresentation

__all__ = ['EisLabel', 'EisensteinBasisElement', 'GeneratorQuintuple',
           'CuspExpansion', 'NotInSpan', 'ProductRepresentation']
