import json
import logging

import pytest
from sympy import factorint, primerange

from app import create_app
from app.services.exactmath import CyclotomicNumber
from app.services.qexp import FourierExpansion, sturm_bound
from app.services.reprsolver import EchelonBasis, span_basis


def eta_delta_coefficients(B):
    """q prod (1 - q^n)^24 through q^B"""
    series = [1] + [0] * B
    for n in range(1, B + 1):
        for _ in range(24):
            for i in range(B, n - 1, -1):
                series[i] -= series[i - n]
    return [0] + series[:B]


def _point_count(ainvs, p):
    a1, a2, a3, a4, a6 = ainvs
    count = 1
    for x in range(p):
        rhs = x ** 3 + a2 * x * x + a4 * x + a6
        for y in range(p):
            if (y * y + a1 * x * y + a3 * y - rhs) % p == 0:
                count += 1
    return count


def elliptic_curve_coefficients(ainvs, N, B):
    """a_0..a_B of the newform attached to an elliptic curve of conductor N"""
    a_p = {p: p + 1 - _point_count(ainvs, p) for p in primerange(2, B + 1)}

    def prime_power(p, e):
        if N % p == 0:
            return a_p[p] ** e
        previous, current = 1, a_p[p]
        for _ in range(e - 1):
            previous, current = current, a_p[p] * current - p * previous
        return current if e else 1

    coeffs = [0]
    for n in range(1, B + 1):
        value = 1
        for p, e in factorint(n).items():
            value *= prime_power(p, e)
        coeffs.append(value)
    return coeffs


def hecke_eigenform(N, k, p, eigenvalue, leading):
    """The T_p-eigenform of M_k(Gamma_0(N)) with the given leading coefficients

    Solved inside the span of products and Eisenstein series, with
    T_p f = eigenvalue * f imposed through one row past the Sturm bound.
    The result is known through q^(p * (bound + 1)).
    """
    rows = sturm_bound(N, k) + 1
    basis, _, _ = span_basis(N, k, p * rows)
    power = p ** (k - 1)
    zero = CyclotomicNumber.zero()
    system = EchelonBasis(rows + 1 + len(leading))
    for index, v in enumerate(basis.vectors):
        column = [v[p * n] + (power * v[n // p] if n % p == 0 else zero) - eigenvalue * v[n]
                  for n in range(rows + 1)]
        column.extend(v[:len(leading)])
        assert system.add(column, index), f'T_{p}-eigenvalue {eigenvalue} is not simple in level {N}'
    solution, failure = system.solve(
        [zero] * (rows + 1) + [CyclotomicNumber.from_rational(c) for c in leading])
    assert failure is None
    coeffs = [sum((x * basis.vectors[i][n] for i, x in solution.items()), zero)
              for n in range(p * rows + 1)]
    return FourierExpansion(k, coeffs)


@pytest.fixture
def app():
    """Create application for testing"""
    app = create_app({
        'TESTING': True,
        'EXPANSION_CACHE_DIR': None,
        'LOG_LEVEL': logging.WARNING
    })

    with app.app_context():
        yield app


@pytest.fixture
def runner(app):
    """Create test CLI runner"""
    return app.test_cli_runner()


@pytest.fixture
def write_json(tmp_path):
    """Write a JSON document under tmp_path and return its path"""
    def write(name, document):
        path = tmp_path / name
        path.write_text(json.dumps(document))
        return str(path)
    return write


@pytest.fixture
def delta():
    return FourierExpansion.from_rationals(12, eta_delta_coefficients(12))


@pytest.fixture
def f11():
    return FourierExpansion.from_rationals(2, elliptic_curve_coefficients((0, -1, 1, -10, -20), 11, 20))


@pytest.fixture
def f32():
    return FourierExpansion.from_rationals(2, elliptic_curve_coefficients((0, 0, 0, -1, 0), 32, 20))


@pytest.fixture
def f37_rank_one():
    return FourierExpansion.from_rationals(2, elliptic_curve_coefficients((0, 0, 1, -1, 0), 37, 15))


@pytest.fixture
def f37_rank_zero():
    return FourierExpansion.from_rationals(2, elliptic_curve_coefficients((0, 1, 1, -23, -50), 37, 15))


@pytest.fixture
def f49():
    return FourierExpansion.from_rationals(2, elliptic_curve_coefficients((1, -1, 0, -2, -1), 49, 20))


@pytest.fixture(scope='module', params=[(-3444, 313358), (2700, -251890)], ids=['f16_1', 'f16_2'])
def f8_newform(request):
    a3, a5 = request.param
    return hecke_eigenform(8, 16, 3, a3, [0, 1, 0, a3, 0, a5, 0])


@pytest.fixture(scope='module')
def f36():
    return hecke_eigenform(36, 8, 5, -270, [0, 1, 0, 0, 0, -270])


@pytest.fixture(scope='module')
def f243():
    return hecke_eigenform(243, 4, 2, -3, [0, 1, -3, 0, 1, 3, 0, -10, 21, 0])
