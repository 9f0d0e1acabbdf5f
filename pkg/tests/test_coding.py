import math

import numpy as np
import pytest

from modl import coding
from modl.errors import InvalidArgument

import oracles


def test_log_factorial_basics():
    assert coding.log_factorial(0) == 0.0
    assert coding.log_factorial(1) == 0.0
    assert coding.log_factorial(4) == pytest.approx(math.log(24), abs=1e-12)
    assert coding.log_factorial(10) == pytest.approx(math.log(3628800), abs=1e-12)


def test_log_factorial_against_exact_table_range():
    for n in [2, 17, 99, 512, 1000, 2048, 9999, 10000]:
        assert coding.log_factorial(n) == pytest.approx(
            oracles.exact_log_factorial(n), abs=1e-10
        )


def test_log_factorial_large_ulp_bounded():
    mpmath = pytest.importorskip("mpmath")
    mpmath.mp.dps = 40
    for n in [20000, 123457, 500000, 1000000]:
        got = coding.log_factorial(n)
        true = float(mpmath.loggamma(n + 1))
        # Absolute 1e-10 is below one ulp of the result for n >~ 1e5;
        # require the representable equivalent there.
        tol = max(1e-10, 4 * math.ulp(true))
        assert abs(got - true) <= tol


def test_log_factorial_rejects_negative():
    with pytest.raises(InvalidArgument):
        coding.log_factorial(-1)


def test_log_binomial_examples():
    assert coding.log_binomial(5, 0) == 0.0
    assert coding.log_binomial(4, 2) == pytest.approx(math.log(6), abs=1e-12)
    assert coding.log_binomial(10, 3) == pytest.approx(math.log(120), abs=1e-12)


def test_log_binomial_contract_violation():
    with pytest.raises(InvalidArgument):
        coding.log_binomial(3, 4)
    with pytest.raises(InvalidArgument):
        coding.log_binomial(3, -1)


def test_log_binomial_symmetry():
    rng = np.random.default_rng(7)
    for _ in range(200):
        n = int(rng.integers(0, 3000))
        k = int(rng.integers(0, n + 1)) if n else 0
        a = coding.log_binomial(n, k)
        b = coding.log_binomial(n, n - k)
        assert abs(a - b) <= 1e-12


def test_log_binomial_pascal_consistency_bigint():
    for n in range(1, 61):
        for k in range(0, n + 1):
            lhs = coding.log_binomial(n, k)
            c = math.comb(n - 1, k - 1) if k >= 1 else 0
            c += math.comb(n - 1, k) if k <= n - 1 else 0
            assert c == math.comb(n, k)  # exact Pascal identity
            rhs = math.log(c) if c > 1 else 0.0
            assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(rhs))


def test_log_binomial_large_small_side():
    # Short-side path must stay accurate beyond the cached table.
    assert coding.log_binomial(10**6, 3) == pytest.approx(
        oracles.exact_log_binomial(10**6, 3), abs=1e-10
    )
    assert coding.log_binomial(2 * 10**6 + 1, 12) == pytest.approx(
        oracles.exact_log_binomial(2 * 10**6 + 1, 12), abs=1e-10
    )


def test_log_binomial_large_mid():
    got = coding.log_binomial(200000, 100000)
    true = oracles.exact_log_binomial(200000, 100000)
    assert abs(got - true) <= max(1e-10, 4 * math.ulp(true))


def test_log_multinomial_examples():
    assert coding.log_multinomial([3]) == 0.0
    assert coding.log_multinomial([2, 2]) == pytest.approx(math.log(6), abs=1e-12)
    assert coding.log_multinomial([1, 1, 1]) == pytest.approx(math.log(6), abs=1e-12)


def test_log_multinomial_matches_bigint():
    rng = np.random.default_rng(11)
    for _ in range(50):
        counts = [int(c) for c in rng.integers(0, 40, size=rng.integers(1, 6))]
        total = sum(counts)
        value = math.factorial(total)
        for c in counts:
            value //= math.factorial(c)
        expected = math.log(value) if value > 1 else 0.0
        assert coding.log_multinomial(counts) == pytest.approx(expected, abs=1e-10)
    with pytest.raises(InvalidArgument):
        coding.log_multinomial([])


def test_log_partition_count_examples():
    assert coding.log_partition_count(3, 1) == 0.0
    assert coding.log_partition_count(3, 2) == pytest.approx(math.log(4), abs=1e-12)
    assert coding.log_partition_count(4, 4) == pytest.approx(math.log(15), abs=1e-12)


def test_log_partition_count_against_bigint():
    for v in [1, 2, 5, 8, 13, 30]:
        for k in range(1, v + 1):
            assert coding.log_partition_count(v, k) == pytest.approx(
                oracles.exact_log_partition_count(v, k), abs=1e-8
            )


def test_log_partition_count_monotone_in_k():
    for v in [4, 9, 50, 300, 1000]:
        prev = -1.0
        prefix = coding.log_partition_count_prefix(v)
        for k in range(1, v + 1):
            val = prefix[k - 1]
            assert val >= prev - 1e-12
            prev = val
        assert prefix[0] == pytest.approx(0.0, abs=1e-12)


def test_log_partition_count_errors():
    with pytest.raises(InvalidArgument):
        coding.log_partition_count(3, 4)
    with pytest.raises(InvalidArgument):
        coding.log_partition_count(0, 1)


def test_all_outputs_nonnegative_finite():
    rng = np.random.default_rng(3)
    for _ in range(300):
        n = int(rng.integers(0, 500))
        k = int(rng.integers(0, n + 1)) if n else 0
        for val in (
            coding.log_factorial(n),
            coding.log_binomial(n, k),
            coding.log_multinomial(list(rng.integers(0, 9, size=3))),
        ):
            assert math.isfinite(val) and val >= 0.0


def test_nats_to_bits():
    assert coding.nats_to_bits(math.log(2)) == pytest.approx(1.0, abs=1e-15)
    assert coding.nats_to_bits(0.0) == 0.0


def test_table_view_is_readonly_and_consistent():
    view = coding.log_factorial_table(2000)
    assert not view.flags.writeable
    assert view[1000] == pytest.approx(oracles.exact_log_factorial(1000), abs=1e-10)
    assert len(view) == 2001
