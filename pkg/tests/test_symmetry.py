import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from objshape.metrics import distance_matrix
from objshape.population import elliptical_upper_bound
from objshape.sampling import sample_composition, sample_discrete, sample_vonmises
from objshape.shape import DegenerateSampleError, sample_shape
from objshape.symmetry import (
    InvalidRegimeError,
    NullDistribution,
    RadialMoments,
    chi2_survival,
    circular_uniformity_test,
    compositional_symmetry_test,
    discrete_shape_from_counts,
    discrete_uniformity_test,
    exp_mixture_survival,
    pearson_chi2,
    sphericity_sigma2,
    sphericity_test,
)


def gamma_q_oracle(a, x):
    """Regularized upper incomplete gamma: series below a+1, Lentz fraction above."""
    if x <= 0:
        return 1.0
    lg = math.lgamma(a)
    if x < a + 1:
        term = total = 1.0 / a
        ap = a
        for _ in range(10_000):
            ap += 1
            term *= x / ap
            total += term
            if abs(term) < abs(total) * 1e-17:
                break
        return 1.0 - total * math.exp(-x + a * math.log(x) - lg)
    tiny = 1e-300
    b = x + 1 - a
    c = 1 / tiny
    d = 1 / b
    h = d
    for i in range(1, 10_000):
        an = -i * (i - a)
        b += 2
        d = an * d + b
        d = tiny if abs(d) < tiny else d
        c = b + an / c
        c = tiny if abs(c) < tiny else c
        d = 1 / d
        delta = d * c
        h *= delta
        if abs(delta - 1) < 1e-17:
            break
    return math.exp(-x + a * math.log(x) - lg) * h


def rotation(rng, p):
    q, r = np.linalg.qr(rng.standard_normal((p, p)))
    return q * np.sign(np.diag(r))


class TestNullHelpers:
    def test_exp_mixture_values(self):
        a, b = 2 / 9, 1 / 9
        assert exp_mixture_survival(0.0, a, b) == 1.0
        assert exp_mixture_survival(0.2, a, b) == pytest.approx(
            2 * math.exp(-0.9) - math.exp(-1.8), abs=1e-15)
        assert exp_mixture_survival(0.2, a, b) == pytest.approx(0.64784, abs=1e-5)
        xs = np.linspace(0, 3, 61)
        s = [exp_mixture_survival(x, a, b) for x in xs]
        assert all(u >= v for u, v in zip(s, s[1:]))
        assert s[-1] < 1e-5
        with pytest.raises(ValueError):
            exp_mixture_survival(0.1, 0.2, 0.2)

    def test_exp_mixture_monte_carlo(self, rng):
        a, b = 2 / 9, 1 / 9
        draws = a * rng.exponential(size=10**6) + b * rng.exponential(size=10**6)
        for x in (0.1, 0.5, 1.0):
            assert exp_mixture_survival(x, a, b) == pytest.approx(np.mean(draws > x), abs=0.003)

    def test_chi2_examples(self):
        assert chi2_survival(0.0, 3) == 1.0
        assert chi2_survival(2 * math.log(4), 2) == pytest.approx(0.25, abs=1e-15)
        assert chi2_survival(9.4877, 4) == pytest.approx(0.05, abs=1e-4)
        for x in np.linspace(0.1, 30, 50):
            assert chi2_survival(x, 2) == pytest.approx(math.exp(-x / 2), rel=1e-12)

    def test_chi2_quantile_bisection(self):
        lo, hi = 0.0, 50.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            lo, hi = (mid, hi) if chi2_survival(mid, 4) > 0.05 else (lo, mid)
        assert lo == pytest.approx(9.4877, abs=1e-4)
        assert gamma_q_oracle(2.0, lo / 2) == pytest.approx(0.05, rel=1e-10)

    @pytest.mark.parametrize("df", [1, 2, 3, 4, 7, 10, 25])
    def test_chi2_against_series_oracle(self, df):
        for x in np.concatenate([np.geomspace(1e-3, 1, 10), np.linspace(1, 80, 60)]):
            want = gamma_q_oracle(df / 2, x / 2)
            got = chi2_survival(x, df)
            assert 0.0 <= got <= 1.0
            assert got == pytest.approx(want, rel=1e-10, abs=1e-300)

    def test_pearson(self):
        assert pearson_chi2([3, 3, 3]) == 0.0
        assert pearson_chi2([5, 3, 2]) == pytest.approx(1.4, abs=1e-12)
        for n, p in ((10, 3), (37, 6)):
            assert pearson_chi2([n] + [0] * (p - 1)) == pytest.approx(n * (p - 1), rel=1e-12)
        with pytest.raises(ValueError):
            pearson_chi2([])

    def test_null_descriptor_serialization(self):
        null = NullDistribution("chi_squared", {"df": 4}, rate="n")
        assert null.to_dict() == {"kind": "chi_squared", "rate": "n", "df": 4}
        assert null.sf(0.0) == 1.0
        assert NullDistribution("normal", {"mean": 0.0, "variance": 2.0}, "sqrt(n)").sf(0.0) \
            == 0.5


class TestRadialMoments:
    def test_gaussian_p2(self):
        m = RadialMoments.gaussian(2)
        assert (m.q2, m.q4, m.q6, m.q8) == (2, 8, 48, 384)
        assert m.beta == pytest.approx(2.0)

    def test_invalid(self):
        with pytest.raises(ValueError):
            RadialMoments(1.0, 0.5, 1.0, 1.0)
        with pytest.raises(ValueError):
            RadialMoments(-1.0, 1.0, 1.0, 1.0)


class TestSphericity:
    def test_constants_p2(self):
        # by hand: p^2 (p-1)^2 q2^2 = 16, {p(q4+q2^2)+2q2^2}^4 = 32^4,
        # bracket 4*64*4 - 4*8*2*16 + 4*320 = 1280, so 16*1280/32^4 = 1/256
        mom = RadialMoments.gaussian(2)
        assert elliptical_upper_bound(2, mom.beta) == pytest.approx(0.625, abs=1e-15)
        assert sphericity_sigma2(2, mom) == pytest.approx(1 / 256, rel=1e-13)

    def test_dirac_moments_give_zero_variance_error(self, rng):
        # uniform on the sphere in R^2: the bracket vanishes
        with pytest.raises((ValueError, InvalidRegimeError)):
            sphericity_test(rng.standard_normal((50, 2)), RadialMoments.dirac())

    def test_p1_refused(self, rng):
        with pytest.raises(InvalidRegimeError):
            sphericity_test(rng.standard_normal((50, 1)), RadialMoments.gaussian(1))

    def test_min_n(self, rng):
        x = rng.standard_normal((10, 2))
        with pytest.raises(InvalidRegimeError):
            sphericity_test(x, RadialMoments.gaussian(2))
        assert 0 <= sphericity_test(x, RadialMoments.gaussian(2), force=True).p_value <= 1

    def test_statistic_definition(self, rng):
        x = rng.standard_normal((200, 3))
        mom = RadialMoments.gaussian(3)
        res = sphericity_test(x, mom, alpha=0.05, estimator="v")
        o = sample_shape(x, "euclidean").value
        u = elliptical_upper_bound(3, mom.beta)
        assert res.shape == pytest.approx(o, rel=1e-14)
        assert res.statistic == pytest.approx(math.sqrt(200) * (u - o), rel=1e-12)
        s2 = sphericity_sigma2(3, mom)
        assert res.p_value == pytest.approx(stats.norm.sf(res.statistic / math.sqrt(s2)),
                                            rel=1e-10)
        assert res.null.rate == "sqrt(n)"
        assert res.reject == (res.p_value < 0.05)

    def test_distinct_index_estimator(self, rng):
        x = rng.standard_normal((60, 2))
        D = distance_matrix(x, "euclidean").values
        b = D**2
        n = 60
        triples = sum(b[i, j] * b[i, k] for i in range(n) for j in range(n) for k in range(n)
                      if len({i, j, k}) == 3) / (n * (n - 1) * (n - 2))
        pairs = np.sum(b[~np.eye(n, dtype=bool)] ** 2) / (n * (n - 1))
        res = sphericity_test(x, RadialMoments.gaussian(2))
        assert res.shape == pytest.approx(triples / pairs, rel=1e-12)
        with pytest.raises(ValueError):
            sphericity_test(x, RadialMoments.gaussian(2), estimator="w")

    def test_anisotropy_rejected(self, rng):
        x = rng.standard_normal((400, 2)) * [3.0, 1.0]
        assert sphericity_test(x, RadialMoments.gaussian(2), alpha=0.05).reject

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(0.01, 100), st.floats(-50, 50))
    def test_invariances(self, seed, scale, shift):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((40, 3))
        mom = RadialMoments.gaussian(3)
        base = sphericity_test(x, mom).statistic
        y = scale * x @ rotation(rng, 3).T + shift
        assert sphericity_test(y, mom).statistic == pytest.approx(base, abs=1e-9)
        assert sphericity_test(x[rng.permutation(40)], mom).statistic == pytest.approx(
            base, abs=1e-12)


class TestCircular:
    def test_definition(self, rng):
        ang = rng.uniform(0, 2 * np.pi, 300)
        res = circular_uniformity_test(ang)
        o = sample_shape(ang, "circle").value
        assert res.statistic == pytest.approx(300 * (2 / 3 - o), rel=1e-12)
        assert res.p_value == pytest.approx(exp_mixture_survival(res.statistic, 2 / 9, 1 / 9))
        assert res.null.kind == "weighted_exp_mixture"
        assert res.null.rate == "n"

    def test_zero_statistic(self):
        null = NullDistribution("weighted_exp_mixture", {"a": 2 / 9, "b": 1 / 9}, "n")
        assert null.sf(0.0) == 1.0

    def test_degenerate(self):
        with pytest.raises(DegenerateSampleError):
            circular_uniformity_test(np.full(30, 1.0))

    def test_power_concentrated(self, rng):
        rej = [circular_uniformity_test(sample_vonmises(rng, 20.0, 200), alpha=0.05).reject
               for _ in range(200)]
        assert np.mean(rej) >= 0.95

    def test_order_invariant(self, rng):
        ang = rng.uniform(0, 2 * np.pi, 50)
        a = circular_uniformity_test(ang).statistic
        assert circular_uniformity_test(ang[::-1]).statistic == pytest.approx(a, abs=1e-12)


class TestCompositional:
    def test_null_constants(self, rng):
        res = compositional_symmetry_test(sample_composition(rng, 100, np.ones(3)))
        assert res.null.params["variance"] == pytest.approx(1 / 256, rel=1e-14)
        assert res.extra["upper_bound"] == pytest.approx(0.625)
        assert res.null.rate == "sqrt(n)"

    def test_variance_formula(self, rng):
        for p in (3, 4, 6):
            res = compositional_symmetry_test(sample_composition(rng, 50, np.ones(p)))
            want = (p - 2) ** 2 / (2 * (p + 1) ** 3 * (p - 1))
            assert res.null.params["variance"] == pytest.approx(want, rel=1e-14)

    def test_p2_refused(self, rng):
        with pytest.raises(InvalidRegimeError, match="variance"):
            compositional_symmetry_test(sample_composition(rng, 100, np.ones(2)))

    def test_asymmetric_rejected(self, rng):
        x = sample_composition(rng, 500, np.array([1.5, 0.2, 0.2]))
        assert compositional_symmetry_test(x, alpha=0.05).reject


class TestDiscrete:
    def test_shape_from_counts_matches_estimator(self, rng):
        for p in (3, 5, 9):
            labels = rng.integers(1, p + 1, 80)
            counts = np.bincount(labels - 1, minlength=p)
            assert discrete_shape_from_counts(counts) == pytest.approx(
                sample_shape(labels, "discrete").value, rel=1e-13)

    def test_definition(self, rng):
        counts = np.bincount(rng.integers(0, 5, 400), minlength=5)
        res = discrete_uniformity_test(counts)
        o = discrete_shape_from_counts(counts)
        assert res.statistic == pytest.approx(5 * 4 / 3 * 400 * (1 - 1 / 5 - o), rel=1e-12)
        assert res.p_value == pytest.approx(stats.chi2.sf(res.statistic, 4), rel=1e-9)
        assert res.extra["pearson"] == pytest.approx(pearson_chi2(counts))

    def test_equal_counts(self):
        res = discrete_uniformity_test([40, 40, 40, 40])
        assert res.p_value > 0.99
        assert abs(res.statistic) < 1.0

    def test_refusals(self):
        with pytest.raises(InvalidRegimeError):
            discrete_uniformity_test([50, 50])
        with pytest.raises(InvalidRegimeError):
            discrete_uniformity_test([5, 3, 2])
        with pytest.raises((InvalidRegimeError, DegenerateSampleError)):
            discrete_uniformity_test([60, 0, 0])
        with pytest.raises(ValueError):
            discrete_uniformity_test([])

    def test_small_example_forced(self):
        res = discrete_uniformity_test([5, 3, 2], force=True)
        assert res.extra["pearson"] == pytest.approx(1.4)

    def test_counts_only(self, rng):
        labels = rng.integers(1, 5, 100)
        c = np.bincount(labels - 1, minlength=4)
        shuffled = rng.permutation(labels)
        assert np.array_equal(np.bincount(shuffled - 1, minlength=4), c)
        assert discrete_uniformity_test(c).statistic == pytest.approx(
            12 * 100 * (1 - 1 / 4 - sample_shape(shuffled, "discrete").value) / 2, rel=1e-12)

    def test_size_n1000(self, rng):
        rej = [discrete_uniformity_test(np.bincount(rng.integers(0, 5, 1000), minlength=5),
                                        alpha=0.05).reject for _ in range(2000)]
        assert 0.03 < np.mean(rej) < 0.07


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(0, 200), min_size=3, max_size=8))
def test_pvalues_in_unit_interval(counts):
    if sum(counts) < 20 or sum(c > 0 for c in counts) < 2:
        return
    res = discrete_uniformity_test(counts)
    assert 0.0 <= res.p_value <= 1.0
    assert res.to_dict()["schema"] == "objshape.test/1"


# -- null calibration at n = 1000 (slow) --------------------------------------


def _ks(stat_values, cdf):
    return stats.kstest(stat_values, cdf).pvalue


@pytest.mark.slow
def test_ks_sphericity():
    rng = np.random.default_rng(101)
    mom = RadialMoments.gaussian(2)
    s = [sphericity_test(rng.standard_normal((1000, 2)), mom).statistic for _ in range(2000)]
    assert _ks(s, stats.norm(scale=1 / 16).cdf) > 0.01


@pytest.mark.slow
def test_ks_circular():
    rng = np.random.default_rng(102)
    s = [circular_uniformity_test(rng.uniform(0, 2 * np.pi, 1000)).statistic
         for _ in range(2000)]
    assert _ks(s, lambda x: 1 - np.vectorize(exp_mixture_survival)(x, 2 / 9, 1 / 9)) > 0.01


@pytest.mark.slow
def test_ks_compositional():
    rng = np.random.default_rng(103)
    s = [compositional_symmetry_test(sample_composition(rng, 1000, np.ones(3))).statistic
         for _ in range(2000)]
    assert _ks(s, stats.norm(scale=1 / 16).cdf) > 0.01


@pytest.mark.slow
def test_ks_discrete():
    rng = np.random.default_rng(104)
    s = [discrete_uniformity_test(np.bincount(sample_discrete(rng, 1000, np.full(5, 0.2)) - 1,
                                              minlength=5)).statistic for _ in range(2000)]
    assert _ks(s, stats.chi2(4).cdf) > 0.01
