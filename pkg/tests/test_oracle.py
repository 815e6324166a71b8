import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import eigh_tridiagonal

from bdspec import oracle
from bdspec.catalog import catalog, table71_v
from bdspec.errors import TruncationTooSmall, WrongBoundary
from bdspec.model import BoundaryCode, ChainModel


def _table_model(a, b, c):
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    c = np.asarray(c, float)
    n = len(a)

    def pick(arr):
        def rule(i):
            idx = np.clip(np.asarray(i, dtype=np.int64) - 1, 0, n - 1)
            return arr[idx]
        return rule

    return ChainModel(BoundaryCode.DD, 1, n, pick(b), pick(a), killing=pick(c))


@settings(max_examples=25, deadline=None)
@given(st.integers(3, 40), st.integers(0, 10 ** 6))
def test_principal_eigen_matches_lapack(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.uniform(0.1, 4.0, n)
    b = rng.uniform(0.1, 4.0, n)
    c = rng.uniform(0.0, 1.0, n)
    b[-1] = 0.0
    model = _table_model(a, b, c)
    got = oracle.principal_eigen(model, n)
    diag = a + b + c
    off = np.sqrt(b[:-1] * a[1:])
    ref = eigh_tridiagonal(diag, -off, select="i", select_range=(0, 0))[0][0]
    assert got.lam == pytest.approx(ref, abs=1e-10)
    assert got.residual <= 1e-8 * max(1.0, got.lam)


def test_closed_form_two_state_killing():
    b1, a2, c1, c2 = 1.0, 2.0, 1.0, 3.0
    got = oracle.principal_eigen(catalog("ex9_14", b1=b1, a2=a2, c1=c1, c2=c2), 2)
    exact = 0.5 * (a2 + b1 + c1 + c2 - math.sqrt((a2 + c2 - b1 - c1) ** 2 + 4 * a2 * b1))
    assert got.lam == pytest.approx(exact, abs=1e-11)


def test_closed_form_dd_two_state():
    a1, a2, b1, b2 = 1.0, 1.0, 2.0, 3.0
    got = oracle.principal_eigen(catalog("ex7_5_2"), 2)
    exact = 0.5 * (a1 + a2 + b1 + b2 - math.sqrt((a1 - a2 + b1 - b2) ** 2 + 4 * a2 * b1))
    assert got.lam == pytest.approx(exact, abs=1e-11)
    assert got.lam == pytest.approx(2.0, abs=1e-11)


def test_single_state_killing():
    got = oracle.principal_eigen(catalog("ex7_5_1", c=3.25), 2)
    assert got.lam == pytest.approx(3.25, abs=1e-12)


def test_three_state_cubic_eigenvalue():
    # the smallest root of the characteristic cubic, via the explicit formula
    p = dict(b1=1.0, b2=2.0, a2=1.0, a3=2.0, c1=0.5, c2=1.0, c3=2.0)
    got = oracle.principal_eigen(catalog("ex9_15", **p), 3)
    g1 = -(p["a2"] + p["a3"] + p["b1"] + p["b2"] + p["c1"] + p["c2"] + p["c3"])
    Q = np.array([
        [-(p["b1"] + p["c1"]), p["b1"], 0.0],
        [p["a2"], -(p["a2"] + p["b2"] + p["c2"]), p["b2"]],
        [0.0, p["a3"], -(p["a3"] + p["c3"])],
    ])
    ref = min(np.linalg.eigvals(-Q).real)
    assert got.lam == pytest.approx(ref, abs=1e-9)


def test_sturm_count_monotone_in_shift():
    rng = np.random.default_rng(7)
    diag = rng.uniform(0.5, 4.0, 60)
    off = rng.uniform(0.1, 2.0, 59)
    shifts = np.linspace(-1.0, 8.0, 200)
    counts = oracle.sturm_count(diag, off * off, shifts)
    assert np.all(np.diff(counts) >= 0)


def test_principal_eigvec_positive():
    got = oracle.principal_eigen(catalog("ex9_18"), 200)
    assert np.all(got.eigvec > 0) or np.all(got.eigvec < 0)


def test_truncation_monotone_and_limit():
    tr = oracle.truncation_limit(catalog("quadratic_nd"), [100, 200, 400, 800])
    assert tr.monotone_ok
    assert all(x >= 0.25 for x in tr.values)
    tr = oracle.truncation_limit(catalog("ex9_18"), [100, 200, 400])
    assert tr.limit == pytest.approx(5.0 / 6.0, abs=1e-9)
    fin = oracle.truncation_limit(catalog("ex7_6_1"), [2, 3, 4])
    assert max(fin.values) - min(fin.values) < 1e-12  # constant on finite chains


def test_shift_law_on_killing():
    base = oracle.principal_eigen(catalog("ex9_18"), 300).lam
    shifted = ChainModel(BoundaryCode.DD, 1, None,
                         catalog("ex9_18").birth, catalog("ex9_18").death,
                         killing=lambda i: catalog("ex9_18").killing(i) + 0.7)
    got = oracle.principal_eigen(shifted, 300).lam
    assert got == pytest.approx(base + 0.7, abs=1e-10)


def test_shooting_ex5_3_and_agreement():
    model = catalog("ex5_3", a=4.0, b=1.0)
    sh = oracle.shooting_rate(model, 200)
    assert sh.lam == pytest.approx(1.0, abs=1e-3)  # plain reflection: O(1/m^2)
    st_ = oracle.principal_eigen(model, 199, boundary_at_m="neumann_plain")
    assert sh.lam == pytest.approx(st_.lam, abs=1e-8)


def test_shooting_zero_shift_always_admissible():
    model = catalog("ex5_7")
    sh = oracle.shooting_rate(model, 500)
    assert sh.lam > 0.0
    assert np.all(sh.eigvec > 0)


def test_shooting_wrong_boundary():
    with pytest.raises(WrongBoundary):
        oracle.shooting_rate(catalog("const_nd"), 100)
    with pytest.raises(TruncationTooSmall):
        oracle.shooting_rate(catalog("ex5_3"), 1)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_shooting_sturm_agreement_random_dn(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(20, 80))

    def death(i):
        return 1.0 + 3.0 * np.sin(np.asarray(i, float) * 0.7 + seed % 10) ** 2

    def birth(i):
        return 0.5 + 2.0 * np.cos(np.asarray(i, float) * 0.3 + seed % 7) ** 2

    model = ChainModel(BoundaryCode.DN, 1, None, birth, death)
    sh = oracle.shooting_rate(model, m)
    st_ = oracle.principal_eigen(model, m - 1, boundary_at_m="neumann_plain")
    assert sh.lam == pytest.approx(st_.lam, abs=1e-8)


@pytest.mark.parametrize("row,lam,start", [
    ("table7_1_row1", (1.0 - math.sqrt(2.0)) ** 2, 2),
    ("table7_1_row2", 1.0, 1),
    ("table7_1_row3", 2.0, 1),
    ("table7_1_row4", 3.0, 1),
    ("table7_1_row5", 1.0 - (math.sqrt(5.0) - 1.0) / 2.0, 1),
    ("table7_1_row6", (math.sqrt(3.0) - math.sqrt(2.0)) ** 2, 4),
    ("table7_1_row7", 2.0, 1),
    ("table7_1_row9", 6.0 - math.sqrt(33.0), 2),
])
def test_eigen_identity_table71(row, lam, start):
    model = catalog(row)
    v = table71_v(row)

    def g(idx):
        idx = np.asarray(idx, dtype=np.int64)
        top = int(idx.max())
        vv = np.asarray(v(np.arange(1, top + 1)), dtype=float)
        gg = np.concatenate([[1.0], np.cumprod(vv)])
        return gg[idx - 1]

    res = oracle.eigen_identity_check(model, lam, g, start, 1000)
    assert res["difference_form"] < 1e-10


def test_eigen_identity_ex9_18():
    model = catalog("ex9_18")

    def g(idx):
        idx = np.asarray(idx, dtype=np.int64)
        top = int(idx.max())
        vv = 1.0 + (-1.0) ** np.arange(1.0, top + 1.0) / 3.0
        gg = np.concatenate([[1.0], np.cumprod(vv)])
        return gg[idx - 1]

    res = oracle.eigen_identity_check(model, 5.0 / 6.0, g, 1, 800)
    assert res["difference_form"] < 1e-12
    assert res["summed_form"] < 1e-10


def test_splitting_collapses_with_eigvec_gamma():
    model = catalog("bilateral_quadratic")
    sb = oracle.splitting_bracket(model, theta_grid=[-1, 0, 1], m=300)
    full = oracle.principal_eigen(model, 300).lam
    mid = 0.5 * (sb.lower + sb.upper)
    assert abs(mid - full) / full < 0.02
    assert sb.upper - sb.lower < 1e-6 * max(1.0, full) or \
        abs(sb.upper - full) / full < 1e-6


def test_splitting_requires_bilateral():
    with pytest.raises(WrongBoundary):
        oracle.splitting_bracket(catalog("const_nd"), [0])
