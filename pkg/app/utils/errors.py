class EisprodError(Exception):
    """Base class for domain errors reported to the caller"""
    code = 'domain_error'

    def __init__(self, message, location=None):
        super().__init__(message)
        self.message = message
        self.location = location

    def to_dict(self):
        """Convert error to dictionary"""
        payload = {'code': self.code, 'message': self.message}
        if self.location is not None:
            payload['location'] = self.location
        return payload

    def __repr__(self):
        return f'<{type(self).__name__} {self.code}: {self.message}>'


class ArithmeticDomainError(EisprodError):
    code = 'arithmetic'


class CharacterError(EisprodError):
    code = 'character'


class ExpansionError(EisprodError):
    code = 'expansion'


class LabelError(EisprodError):
    code = 'label'


class RepresentationError(EisprodError):
    code = 'representation'


class InputFormatError(EisprodError):
    code = 'input_format'


def check(condition, message):
    """Raise AssertionError on a broken internal invariant"""
    if not condition:
        raise AssertionError(message)
