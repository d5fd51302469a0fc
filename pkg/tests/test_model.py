import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from relaylink.errors import InvalidParameterError
from relaylink.model import (SystemParams, build_profile, characteristic_coefficients, db_to_linear,
                             hyperexp_pdf, linear_to_db)

from oracles import partial_fraction_linear, partial_fraction_repeated

powers_st = st.lists(st.floats(0.05, 50), min_size=1, max_size=6)


def test_db_conversion():
    assert db_to_linear(0) == 1.0
    assert db_to_linear(10) == 10.0
    assert db_to_linear(30) == pytest.approx(1000.0, rel=1e-15)
    assert linear_to_db(100.0) == pytest.approx(20.0)


@pytest.mark.parametrize("kwargs", [
    dict(n_relay_antennas=0, n_interferers=0, rho1=1, rho2=1),
    dict(n_relay_antennas=2, n_interferers=-1, rho1=1, rho2=1),
    dict(n_relay_antennas=2, n_interferers=0, rho1=0, rho2=1),
    dict(n_relay_antennas=2, n_interferers=0, rho1=1, rho2=math.inf),
    dict(n_relay_antennas=2, n_interferers=0, rho1=1, rho2=1, gamma_th=-1),
    dict(n_relay_antennas=2, n_interferers=2, rho1=1, rho2=1, rho_i=(1.0,)),
    dict(n_relay_antennas=2, n_interferers=1, rho1=1, rho2=1, rho_i=(0.0,)),
    dict(n_relay_antennas=2.5, n_interferers=1, rho1=1, rho2=1, rho_i=(1.0,)),
])
def test_invalid_params_rejected(kwargs):
    with pytest.raises(InvalidParameterError):
        SystemParams(**kwargs)


def test_from_mu_links_rho2():
    p = SystemParams.from_mu(3, 2, 20.0, mu=0.5, rho_i=2.0)
    assert p.rho2 == 10.0
    assert p.mu == 0.5
    assert p.rho_i == (2.0, 2.0)
    assert p.equal_power == 2.0


def test_from_db():
    p = SystemParams.from_db(3, 2, 10.0, gamma_th_db=0.0, rho_i_db=(0.0, 10.0))
    assert p.rho1 == 10.0 and p.rho2 == 10.0 and p.gamma_th == 1.0
    assert p.rho_i == (1.0, 10.0)
    assert p.equal_power is None
    assert SystemParams.from_db(2, 0, 0.0, rho2_db=10.0).rho2 == 10.0


def test_replace_revalidates():
    p = SystemParams.from_mu(2, 1, 1.0)
    assert p.replace(rho1=5.0).rho1 == 5.0
    with pytest.raises(InvalidParameterError):
        p.replace(n_interferers=2)


def test_profile_equal_powers():
    prof = build_profile([1, 1, 1])
    assert prof.distinct_powers == (1.0,)
    assert prof.multiplicities == (3,)
    assert prof.char_coeffs == ((0.0, 0.0, 1.0),)


def test_profile_two_distinct():
    prof = build_profile([2, 1])
    assert prof.distinct_powers == (2.0, 1.0)
    chi = [row[0] for row in prof.char_coeffs]
    assert chi[0] == pytest.approx(2.0, rel=1e-14)
    assert chi[1] == pytest.approx(-1.0, rel=1e-14)
    # linear-system oracle gives the same pair
    assert partial_fraction_linear([2, 1]) == pytest.approx([2.0, -1.0], rel=1e-12)


def test_profile_single():
    prof = build_profile([5])
    assert prof.multiplicities == (1,) and prof.char_coeffs == ((1.0,),)


def test_profile_errors():
    with pytest.raises(InvalidParameterError):
        build_profile([1.0, -2.0])
    with pytest.raises(InvalidParameterError):
        build_profile([1.0], group_tol=0.0)
    with pytest.raises(InvalidParameterError):
        build_profile([1.0], group_tol=0.01)


def test_profile_merges_near_duplicates():
    prof = build_profile([1.0, 1.0 + 1e-12, 3.0])
    assert prof.multiplicities == (1, 2)
    assert prof.distinct_powers[1] == pytest.approx(1.0 + 5e-13, rel=1e-15)


def test_repeated_roots_against_least_squares_oracle():
    powers, mult = (3.0, 1.5, 0.5), (2, 3, 1)
    got = characteristic_coefficients(powers, mult)
    ref = partial_fraction_repeated(powers, mult)
    for row, ref_row in zip(got, ref):
        assert row == pytest.approx(ref_row, rel=1e-7, abs=1e-8)


@given(st.lists(st.floats(0.1, 20), min_size=1, max_size=5, unique=True))
def test_residue_formula_for_distinct_powers(powers):
    powers = sorted(powers, reverse=True)
    if any(a / b < 1 + 1e-2 for a, b in zip(powers, powers[1:])):
        return
    prof = build_profile(powers)
    assert prof.multiplicities == (1,) * len(powers)
    for i, p_i in enumerate(prof.distinct_powers):
        ref = math.prod(p_i / (p_i - p_k) for k, p_k in enumerate(prof.distinct_powers) if k != i)
        assert prof.char_coeffs[i][0] == pytest.approx(ref, rel=1e-10)


@given(powers_st)
def test_coefficients_sum_to_one(powers):
    prof = build_profile(powers)
    total = math.fsum(chi for _, _, chi in prof.terms())
    scale = max(1.0, max(abs(chi) for _, _, chi in prof.terms()))
    assert total == pytest.approx(1.0, abs=1e-9 * scale)
    assert sum(prof.multiplicities) == len(powers)
    assert all(a > b for a, b in zip(prof.distinct_powers, prof.distinct_powers[1:]))


@given(powers_st, st.randoms(use_true_random=False))
def test_profile_permutation_invariant(powers, rnd):
    shuffled = list(powers)
    rnd.shuffle(shuffled)
    assert build_profile(powers) == build_profile(shuffled)


@given(st.lists(st.sampled_from([0.5, 1.0, 2.0, 4.0]), min_size=1, max_size=5))
def test_pdf_integrates_to_one(powers):
    prof = build_profile(powers)
    top = 50 * max(powers)
    x = np.linspace(0, top, 200_001)
    y = hyperexp_pdf(prof, x)
    assert np.trapezoid(y, x) == pytest.approx(1.0, abs=1e-6)


def test_pdf_examples():
    assert hyperexp_pdf(build_profile([1]), 0.0) == pytest.approx(1.0)
    assert hyperexp_pdf(build_profile([1, 1]), 0.0) == 0.0
    # closed form e^{-1/2} - e^{-1}, frozen; checked against a histogram below
    assert hyperexp_pdf(build_profile([2, 1]), 1.0) == pytest.approx(0.23865121854119110, rel=1e-14)


def test_pdf_matches_histogram():
    rng = np.random.default_rng(0)
    u = 2 * rng.exponential(size=1_000_000) + rng.exponential(size=1_000_000)
    width = 0.05
    empirical = np.mean(np.abs(u - 1.0) < width / 2) / width
    assert empirical == pytest.approx(hyperexp_pdf(build_profile([2, 1]), 1.0), abs=0.005)
