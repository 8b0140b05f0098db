from marshmallow import EXCLUDE, Schema, ValidationError, fields, post_load, validate, validates_schema

from app.models.labels import EisLabel, EisensteinBasisElement, GeneratorQuintuple
from app.models.representation import ProductRepresentation
from app.services.characters import DirichletCharacter, character_from_label
from app.services.exactmath import CyclotomicNumber, euler_phi, parse_fraction
from app.services.qexp import FourierExpansion
from app.utils.errors import EisprodError

COMMANDS = ('eis', 'product-basis', 'represent', 'rank', 'cusp-expand', 'al-eigenvalue', 'verify')


class CyclotomicField(fields.Field):
    """{"order": m, "coeffs": ["p/q", ...]} or a bare rational "p/q" """

    def _serialize(self, value, attr, obj, **kwargs):
        if value is None:
            return None
        return CyclotomicNumber.coerce(value).to_dict()

    def _deserialize(self, value, attr, data, **kwargs):
        try:
            if isinstance(value, dict):
                order = value.get('order')
                coeffs = value.get('coeffs')
                if not isinstance(order, int) or order < 1:
                    raise ValidationError('order must be a positive integer')
                if not isinstance(coeffs, list) or len(coeffs) != euler_phi(order):
                    raise ValidationError(f'Q(zeta_{order}) needs {euler_phi(order)} coefficients')
                return CyclotomicNumber.from_coeffs(order, [parse_fraction(c) for c in coeffs])
            if isinstance(value, (str, int)) and not isinstance(value, bool):
                return CyclotomicNumber.from_rational(parse_fraction(value))
        except EisprodError as e:
            raise ValidationError(e.message)
        raise ValidationError('expected a cyclotomic number or an exact fraction string')


class CharacterField(fields.Field):
    """Character reference "1" / "M:i" or the full generator-image encoding"""

    def _serialize(self, value, attr, obj, **kwargs):
        if value is None:
            return None
        return value.label or value.to_dict()

    def _deserialize(self, value, attr, data, **kwargs):
        try:
            if isinstance(value, dict):
                return DirichletCharacter.from_dict(value)
            return character_from_label(value)
        except (EisprodError, KeyError, TypeError) as e:
            raise ValidationError(f'invalid character {value!r}: {e}')


class BaseSchema(Schema):
    class Meta:
        unknown = EXCLUDE

    schema = fields.Integer()


class ExpansionSchema(BaseSchema):
    weight = fields.Integer(required=True, validate=validate.Range(min=1))
    width = fields.Integer(load_default=1, validate=validate.Range(min=1))
    field_order = fields.Integer(load_default=None, validate=validate.Range(min=1))
    precision = fields.Integer(load_default=None, validate=validate.Range(min=0))
    coeffs = fields.List(CyclotomicField(), required=True, validate=validate.Length(min=1))

    @validates_schema
    def validate_precision(self, data, **kwargs):
        precision = data.get('precision')
        if precision is not None and precision != len(data.get('coeffs', [])) - 1:
            raise ValidationError('precision must equal the number of coefficients minus one', 'precision')

    @post_load
    def make_expansion(self, data, **kwargs):
        return FourierExpansion(data['weight'], data['coeffs'], data['width'], data['field_order'])


class EisLabelSchema(BaseSchema):
    phi = CharacterField(required=True)
    psi = CharacterField(required=True)
    l = fields.Integer(required=True, validate=validate.Range(min=1))
    d = fields.Integer(load_default=1, validate=validate.Range(min=1))

    @post_load
    def make_label(self, data, **kwargs):
        return _build(EisLabel, data['phi'], data['psi'], data['l'], data['d'])


class QuintupleSchema(BaseSchema):
    phi = CharacterField(required=True)
    psi = CharacterField(required=True)
    l = fields.Integer(required=True, validate=validate.Range(min=1))
    d1 = fields.Integer(required=True, validate=validate.Range(min=1))
    d2 = fields.Integer(required=True, validate=validate.Range(min=1))
    d = fields.Integer(load_default=1, validate=validate.Range(min=1))
    k = fields.Integer(required=True, validate=validate.Range(min=2))

    @post_load
    def make_quintuple(self, data, **kwargs):
        return _build(GeneratorQuintuple, data['phi'], data['psi'], data['l'],
                      data['d1'], data['d2'], data['d'], data['k'])


class EisensteinElementSchema(BaseSchema):
    kind = fields.String(required=True, validate=validate.OneOf(['eis', 'e2diff']))
    k = fields.Integer(required=True, validate=validate.Range(min=2))
    d = fields.Integer(required=True, validate=validate.Range(min=1))
    phi = CharacterField(load_default=None)
    id = fields.String()

    @post_load
    def make_element(self, data, **kwargs):
        return _build(EisensteinBasisElement, data['kind'], data['k'], data['d'], data['phi'])


class TermSchema(BaseSchema):
    coeff = CyclotomicField(required=True)
    quintuple = fields.Nested(QuintupleSchema, required=True)


class EisTermSchema(BaseSchema):
    coeff = CyclotomicField(required=True)
    element = fields.Nested(EisensteinElementSchema, required=True)


class RepresentationSchema(BaseSchema):
    level = fields.Integer(required=True, validate=validate.Range(min=1))
    weight = fields.Integer(required=True, validate=validate.Range(min=1))
    terms = fields.List(fields.Nested(TermSchema), load_default=list)
    eis_terms = fields.List(fields.Nested(EisTermSchema), load_default=list)
    target_digest = fields.String(load_default=None, allow_none=True)
    verified_to = fields.Integer(load_default=None, allow_none=True)

    @post_load
    def make_representation(self, data, **kwargs):
        return ProductRepresentation(
            data['level'], data['weight'],
            [(t['coeff'], t['quintuple']) for t in data['terms']],
            [(t['coeff'], t['element']) for t in data['eis_terms']],
            data['target_digest'], data['verified_to'])


class JobSpecSchema(BaseSchema):
    command = fields.String(required=True, validate=validate.OneOf(COMMANDS))
    parameters = fields.Dict(keys=fields.String(), load_default=dict)
    cache_dir = fields.String(load_default=None, allow_none=True)


def _build(cls, *args):
    try:
        return cls(*args)
    except EisprodError as e:
        raise ValidationError(e.message)


# Job parameters: scalars are checked here, file parameters pass through raw

class ParameterSchema(Schema):
    class Meta:
        unknown = EXCLUDE


class EisParametersSchema(ParameterSchema):
    phi = fields.Raw(required=True)
    psi = fields.Raw(required=True)
    l = fields.Integer(required=True, validate=validate.Range(min=1))
    d = fields.Integer(validate=validate.Range(min=1))
    prec = fields.Integer(required=True, validate=validate.Range(min=0))


class LevelWeightParametersSchema(ParameterSchema):
    level = fields.Integer(required=True, validate=validate.Range(min=1))
    weight = fields.Integer(required=True, validate=validate.Range(min=1))


class RepresentParametersSchema(LevelWeightParametersSchema):
    target = fields.Raw(required=True)
    slack = fields.Integer(validate=validate.Range(min=0))


class RankParametersSchema(LevelWeightParametersSchema):
    prec = fields.Integer(allow_none=True, validate=validate.Range(min=0))
    slack = fields.Integer(validate=validate.Range(min=0))


class CuspExpandParametersSchema(ParameterSchema):
    level = fields.Integer(allow_none=True, validate=validate.Range(min=1))
    gamma = fields.Raw(required=True)
    prec = fields.Integer(required=True, validate=validate.Range(min=0))
    rep = fields.Raw(required=True)
    target = fields.Raw(allow_none=True)


class AlEigenvalueParametersSchema(ParameterSchema):
    level = fields.Integer(allow_none=True, validate=validate.Range(min=1))
    S = fields.Raw(required=True)
    prec = fields.Integer(allow_none=True, validate=validate.Range(min=0))
    rep = fields.Raw(required=True)
    target = fields.Raw(allow_none=True)


class VerifyParametersSchema(ParameterSchema):
    rep = fields.Raw(required=True)
    target = fields.Raw(required=True)
    prec = fields.Integer(allow_none=True, validate=validate.Range(min=0))


PARAMETER_SCHEMAS = {
    'eis': EisParametersSchema,
    'product-basis': LevelWeightParametersSchema,
    'represent': RepresentParametersSchema,
    'rank': RankParametersSchema,
    'cusp-expand': CuspExpandParametersSchema,
    'al-eigenvalue': AlEigenvalueParametersSchema,
    'verify': VerifyParametersSchema,
}
