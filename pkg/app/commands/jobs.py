import json
import logging

import click
from flask import Blueprint, current_app
from marshmallow import ValidationError

from app.models.schemas import (
    PARAMETER_SCHEMAS, EisLabelSchema, ExpansionSchema, JobSpecSchema, RepresentationSchema)
from app.services.cuspexp import UnimodularMatrix, al_eigenvalue, expansion_at_cusp
from app.services.eisenstein import eis_expansion, eisenstein_basis_elements
from app.services.qexp import sturm_bound
from app.services.reprsolver import (
    DEFAULT_SLACK_ROWS, enumerate_generators, rank_of_span, solve_represent, verify_representation,
    working_precision)
from app.utils.cache import ExpansionCache
from app.utils.errors import EisprodError, InputFormatError, RepresentationError

logger = logging.getLogger(__name__)

jobs_bp = Blueprint('jobs', __name__, cli_group=None)

FILE_PARAMETERS = ('rep', 'target')


def get_cache(cache_dir):
    """Per-directory cache kept on the app so counters survive between jobs"""
    caches = current_app.extensions.setdefault('expansion_caches', {})
    if cache_dir not in caches:
        caches[cache_dir] = ExpansionCache(cache_dir, current_app.config['SCHEMA_VERSION'])
    return caches[cache_dir]


def load_json_file(path):
    try:
        with open(path, 'r', encoding='utf-8') as handle:
            return json.load(handle)
    except OSError as e:
        raise InputFormatError(f'cannot read file: {e.strerror}', location=path)
    except ValueError as e:
        raise InputFormatError(f'malformed JSON: {e}', location=path)


def _load(schema, data, location):
    try:
        return schema.load(data)
    except ValidationError as e:
        raise InputFormatError(json.dumps(e.messages, default=str), location=location)


def _parse_gamma(text):
    try:
        items = text if isinstance(text, list) else str(text).split(',')
        entries = [int(x) for x in items]
    except (TypeError, ValueError):
        raise InputFormatError(f'gamma must be four comma-separated integers, got {text!r}', location='--gamma')
    if len(entries) != 4:
        raise InputFormatError(f'gamma must have four entries, got {len(entries)}', location='--gamma')
    return UnimodularMatrix(*entries)


def _parse_primes(text):
    try:
        if isinstance(text, list):
            return sorted(int(p) for p in text)
        return sorted(int(p) for p in str(text).split(',') if p.strip())
    except (TypeError, ValueError):
        raise InputFormatError(f'S must be comma-separated primes, got {text!r}', location='--S')


def _verified_representation(params):
    """Representation from params, trusted only after verification against the target

    A verified_to stored in the file is not trusted on its own: without a
    target there is nothing to check it against.
    """
    rep = _load(RepresentationSchema(), params['rep'], 'rep')
    rep.verified_to = None
    bound = sturm_bound(rep.level, rep.weight)
    target = params.get('target')
    if target is None:
        raise RepresentationError(
            f'representation must be verified to the Sturm bound {bound}; pass its target', location='target')
    target = _load(ExpansionSchema(), target, 'target')
    B = min(target.precision, working_precision(rep.level, rep.weight))
    if not verify_representation(rep, target, B):
        raise RepresentationError(f'representation does not match the target through q^{B}')
    if B < bound:
        raise RepresentationError(f'target stops at q^{B}, below the Sturm bound {bound}', location='target')
    rep.verified_to = B
    return rep


# Job handlers: parameters in, JSON-ready dictionary out

def run_eis(params):
    label = _load(EisLabelSchema(), params, 'parameters')
    expansion = eis_expansion(label, params['prec'])
    return {'label': label.to_dict(), 'expansion': expansion.to_dict()}


def run_product_basis(params):
    N, k = params['level'], params['weight']
    return {
        'level': N,
        'weight': k,
        'generators': [q.to_dict() for q in enumerate_generators(N, k)],
        'eisenstein': [e.to_dict() for e in eisenstein_basis_elements(N, k)]
    }


def run_represent(params):
    target = _load(ExpansionSchema(), params['target'], 'target')
    N, k = params['level'], params['weight']
    result = solve_represent(target, N, k, slack=params.get('slack', DEFAULT_SLACK_ROWS))
    return result.to_dict()


def run_rank(params):
    N, k = params['level'], params['weight']
    slack = params.get('slack', DEFAULT_SLACK_ROWS)
    rank = rank_of_span(N, k, params.get('prec'), slack=slack)
    return {'level': N, 'weight': k, 'rank': rank}


def run_cusp_expand(params):
    rep = _verified_representation(params)
    gamma = _parse_gamma(params['gamma'])
    level = params.get('level') or rep.level
    return expansion_at_cusp(rep, gamma, params['prec'], level=level).to_dict()


def run_al_eigenvalue(params):
    rep = _verified_representation(params)
    level = params.get('level') or rep.level
    primes = _parse_primes(params['S'])
    prec = params.get('prec') or working_precision(level, rep.weight)
    value = al_eigenvalue(rep, primes, prec, level=level)
    return {'level': level, 'S': primes, 'eigenvalue': value.to_dict(), 'value': str(value)}


def run_verify(params):
    rep = _load(RepresentationSchema(), params['rep'], 'rep')
    target = _load(ExpansionSchema(), params['target'], 'target')
    prec = params.get('prec')
    B = prec if prec is not None else target.precision
    return {'verified': verify_representation(rep, target, B), 'precision': B}


HANDLERS = {
    'eis': run_eis,
    'product-basis': run_product_basis,
    'represent': run_represent,
    'rank': run_rank,
    'cusp-expand': run_cusp_expand,
    'al-eigenvalue': run_al_eigenvalue,
    'verify': run_verify,
}


def run(job):
    """Run a JobSpec dictionary; returns the JSON document to print"""
    loaded = _load(JobSpecSchema(), job, 'job')
    params = _load(PARAMETER_SCHEMAS[loaded['command']](), loaded['parameters'], 'parameters')
    for name in FILE_PARAMETERS:
        if isinstance(params.get(name), str):
            params[name] = load_json_file(params[name])
    cache_dir = loaded['cache_dir'] or current_app.config['EXPANSION_CACHE_DIR']
    cache = get_cache(cache_dir)
    handler = HANDLERS[loaded['command']]
    logger.debug('Running %s job', loaded['command'])
    result = cache.get_or_compute(loaded['command'], params, lambda: handler(params))
    return {'schema': current_app.config['SCHEMA_VERSION'], **result}


def emit(document, indent):
    if indent is None:
        indent = current_app.config['JSON_INDENT']
    click.echo(json.dumps(document, sort_keys=True, indent=indent))


def execute(command, parameters, cache_dir=None, indent=None):
    """Run one job and print its JSON; domain errors exit with status 2"""
    job = {'command': command, 'parameters': parameters, 'cache_dir': cache_dir}
    try:
        document = run(job)
    except EisprodError as e:
        emit({'schema': current_app.config['SCHEMA_VERSION'], 'error': e.to_dict()}, indent)
        raise SystemExit(2)
    emit(document, indent)


def _file_parameter(path, location):
    data = load_json_file(path)
    if not isinstance(data, dict):
        raise InputFormatError('expected a JSON object', location=location)
    return data


def _common_options(f):
    f = click.option('--json-indent', type=int, default=None, help='Indent emitted JSON')(f)
    f = click.option('--cache-dir', default=None, help='Directory of the expansion cache')(f)
    return f


def _with_files(command, parameters, files, cache_dir, json_indent):
    try:
        for name, path in files.items():
            if path is not None:
                parameters[name] = _file_parameter(path, path)
    except EisprodError as e:
        emit({'schema': current_app.config['SCHEMA_VERSION'], 'error': e.to_dict()}, json_indent)
        raise SystemExit(2)
    execute(command, parameters, cache_dir, json_indent)


@jobs_bp.cli.command('eis')
@click.option('--phi', default='1', help='Character reference for phi ("1" or "M:i")')
@click.option('--psi', default='1', help='Character reference for psi ("1" or "M:i")')
@click.option('--l', 'l', type=int, required=True, help='Weight l')
@click.option('--d', 'd', type=int, default=1, help='Lift B_d')
@click.option('--prec', type=int, required=True, help='Precision B')
@_common_options
def eis_command(phi, psi, l, d, prec, cache_dir, json_indent):
    """Expansion of E_l^{phi,psi}|B_d at infinity"""
    execute('eis', {'phi': phi, 'psi': psi, 'l': l, 'd': d, 'prec': prec}, cache_dir, json_indent)


@jobs_bp.cli.command('product-basis')
@click.option('--level', type=int, required=True)
@click.option('--weight', type=int, required=True)
@_common_options
def product_basis_command(level, weight, cache_dir, json_indent):
    """Generator quintuples and Eisenstein basis elements for (N, k)"""
    execute('product-basis', {'level': level, 'weight': weight}, cache_dir, json_indent)


@jobs_bp.cli.command('represent')
@click.option('--level', type=int, required=True)
@click.option('--weight', type=int, required=True)
@click.option('--target', 'target_path', required=True, help='Target expansion JSON')
@click.option('--out', 'out_path', default=None, help='Also write the result here')
@_common_options
def represent_command(level, weight, target_path, out_path, cache_dir, json_indent):
    """Represent a target as a combination of Eisenstein products"""
    parameters = {'level': level, 'weight': weight,
                  'slack': current_app.config['SOLVER_SLACK_ROWS']}
    if out_path is None:
        _with_files('represent', parameters, {'target': target_path}, cache_dir, json_indent)
        return
    try:
        parameters['target'] = _file_parameter(target_path, target_path)
        document = run({'command': 'represent', 'parameters': parameters, 'cache_dir': cache_dir})
    except EisprodError as e:
        emit({'schema': current_app.config['SCHEMA_VERSION'], 'error': e.to_dict()}, json_indent)
        raise SystemExit(2)
    with open(out_path, 'w', encoding='utf-8') as handle:
        json.dump(document, handle, sort_keys=True, indent=json_indent)
    emit(document, json_indent)


@jobs_bp.cli.command('rank')
@click.option('--level', type=int, required=True)
@click.option('--weight', type=int, required=True)
@click.option('--prec', type=int, default=None)
@_common_options
def rank_command(level, weight, prec, cache_dir, json_indent):
    """Rank of the span of products and Eisenstein series"""
    parameters = {'level': level, 'weight': weight, 'slack': current_app.config['SOLVER_SLACK_ROWS']}
    if prec is not None:
        parameters['prec'] = prec
    execute('rank', parameters, cache_dir, json_indent)


@jobs_bp.cli.command('cusp-expand')
@click.option('--level', type=int, default=None)
@click.option('--gamma', required=True, help='a,b,c,d')
@click.option('--prec', type=int, required=True)
@click.option('--rep', 'rep_path', required=True, help='Representation JSON')
@click.option('--target', 'target_path', default=None, help='Target the representation is verified against')
@_common_options
def cusp_expand_command(level, gamma, prec, rep_path, target_path, cache_dir, json_indent):
    """Expansion of a represented form at the cusp gamma(infinity)"""
    parameters = {'level': level, 'gamma': gamma, 'prec': prec}
    _with_files('cusp-expand', parameters, {'rep': rep_path, 'target': target_path},
                cache_dir, json_indent)


@jobs_bp.cli.command('al-eigenvalue')
@click.option('--level', type=int, default=None)
@click.option('--S', 'primes', required=True, help='Comma-separated primes')
@click.option('--prec', type=int, default=None)
@click.option('--rep', 'rep_path', required=True, help='Representation JSON')
@click.option('--target', 'target_path', default=None, help='Target the representation is verified against')
@_common_options
def al_eigenvalue_command(level, primes, prec, rep_path, target_path, cache_dir, json_indent):
    """Atkin-Lehner eigenvalue of a represented eigenform"""
    parameters = {'level': level, 'S': primes, 'prec': prec}
    _with_files('al-eigenvalue', parameters, {'rep': rep_path, 'target': target_path},
                cache_dir, json_indent)


@jobs_bp.cli.command('verify')
@click.option('--rep', 'rep_path', required=True, help='Representation JSON')
@click.option('--target', 'target_path', required=True, help='Target expansion JSON')
@click.option('--prec', type=int, default=None)
@_common_options
def verify_command(rep_path, target_path, prec, cache_dir, json_indent):
    """Check a representation against a target expansion"""
    parameters = {'prec': prec} if prec is not None else {}
    _with_files('verify', parameters, {'rep': rep_path, 'target': target_path}, cache_dir, json_indent)


@jobs_bp.cli.command('run-job')
@click.option('--job', 'job_path', required=True, help='JobSpec JSON file')
@click.option('--json-indent', type=int, default=None)
def run_job_command(job_path, json_indent):
    """Replay a serialized JobSpec"""
    try:
        job = _file_parameter(job_path, job_path)
        document = run(job)
    except EisprodError as e:
        emit({'schema': current_app.config['SCHEMA_VERSION'], 'error': e.to_dict()}, json_indent)
        raise SystemExit(2)
    emit(document, json_indent)
