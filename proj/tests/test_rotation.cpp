#include "doctest.h"
#include "kflow/primes.hpp"
#include "kflow/rotation.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>

using namespace kflow;
using bf100 = boost::multiprecision::cpp_bin_float_100;

namespace {

// independent oracle: evaluate the continued fraction bottom-up in 100-digit floats,
// including the implicit tail of ones
bf100 cf_value(const rotation_number &r)
{
	bf100 x = (bf100(1) + boost::multiprecision::sqrt(bf100(5))) / 2; // [1;1,1,...]
	for (size_t n = r.depth(); n >= 1; --n)
		x = bf100(r.a(n)) + 1 / x;
	return 1 / x;
}

double oracle_mod_one(const rotation_number &r, const bigint &i)
{
	bf100 v = bf100(i) * cf_value(r);
	v -= boost::multiprecision::floor(v);
	return v.convert_to<double>();
}

} // namespace

TEST_CASE("denominators follow the recurrence with q_0 = 1, q_1 = a_1")
{
	auto g = rotation_number::from_partial_quotients({1, 1, 1, 1, 1});
	std::vector<int> want = {1, 2, 3, 5, 8};
	for (size_t n = 1; n <= 5; ++n)
		CHECK(g.q(n) == want[n - 1]);
	CHECK(g.value() == doctest::Approx(0.6180339887498949).epsilon(1e-15));

	auto s = rotation_number::from_partial_quotients({2, 2, 2, 2});
	std::vector<int> want2 = {2, 5, 12, 29};
	for (size_t n = 1; n <= 4; ++n)
		CHECK(s.q(n) == want2[n - 1]);

	auto one = rotation_number::from_partial_quotients({7});
	CHECK(one.q(1) == 7);
	CHECK(one.depth() == 1);
	CHECK(one.value() == doctest::Approx(1.0 / 7.0).epsilon(0.05));
}

TEST_CASE("invalid quotients are rejected")
{
	CHECK_THROWS_AS(rotation_number::from_partial_quotients({1, 0, 2}), error);
	CHECK_THROWS_AS(rotation_number::from_partial_quotients(std::vector<bigint>{}), error);
}

TEST_CASE("bracketing invariant and alternating residuals")
{
	std::vector<rotation_number> alphas = {
	    rotation_number::golden(30),
	    rotation_number::from_partial_quotients({2, 2, 2, 2, 2, 2, 2, 2}),
	    rotation_number::from_partial_quotients({3, 1, 4, 1, 5, 9, 2, 6, 5, 3, 5}),
	    rotation_number::from_partial_quotients(
	        std::vector<bigint>{bigint(1), bigint(5), bigint(300), bigint("1000000000000")})};
	for (auto &r : alphas) {
		for (size_t n = 0; n + 1 < r.max_level() && n < r.depth() + 20; ++n) {
			double d = r.norm_q(n);
			double qn1 = to_double(r.q(n + 1)), qn = to_double(r.q(n));
			CHECK(d <= 1.0 / qn1 * (1 + 1e-12));
			CHECK(d > 1.0 / (qn1 + qn) * (1 - 1e-12));
			if (n >= 1) {
				CHECK(r.beta(n) * r.beta(n - 1) < 0);
				CHECK(std::abs(r.beta(n)) < std::abs(r.beta(n - 1)));
			}
		}
	}
}

TEST_CASE("Ostrowski expansion")
{
	auto g = rotation_number::golden(20);
	auto zero = g.ostrowski(0);
	CHECK(zero.terms.empty());

	auto ten = g.ostrowski(10);
	REQUIRE(ten.terms.size() == 2);
	CHECK(g.q(ten.terms[0].first) == 8);
	CHECK(ten.terms[0].second == 1);
	CHECK(g.q(ten.terms[1].first) == 2);
	CHECK(ten.terms[1].second == 1);

	auto base = g.ostrowski(g.q(9));
	REQUIRE(base.terms.size() == 1);
	CHECK(base.terms[0].second == 1);

	auto r = rotation_number::from_partial_quotients({3, 1, 4, 1, 5, 9, 2, 6, 5, 3, 5});
	splitmix64 rng(7);
	uint64_t qk = r.q64(11);
	for (int t = 0; t < 2000; ++t) {
		uint64_t m = rng.below(qk);
		auto ex = r.ostrowski(m);
		CHECK(ex.recombine(r) == m);
		// greedy legality: b_s <= a_{s+1}, and b_s = a_{s+1} forces b_{s-1} = 0
		for (auto &[s, b] : ex.terms) {
			CHECK(b <= r.a(s + 1));
			if (b == r.a(s + 1) && s >= 1)
				CHECK(ex.coefficient(s - 1) == 0);
		}
	}
	CHECK_THROWS_AS(r.ostrowski(r.q(r.max_level() + 1) * 2), error);
}

TEST_CASE("multiple_mod_one against the 100-digit oracle")
{
	auto g = rotation_number::golden(30);
	CHECK(g.multiple_mod_one(0) == 0.0);
	CHECK(g.multiple_mod_one(1) == doctest::Approx(g.value()).epsilon(1e-15));
	CHECK(g.multiple_mod_one(5) == doctest::Approx(0.0901699437494742).epsilon(1e-13));

	auto r = rotation_number::from_partial_quotients({3, 1, 4, 1, 5, 9, 2, 6, 5, 3, 5, 8, 9, 7, 9});
	splitmix64 rng(11);
	bigint qmax = r.q(r.depth());
	for (int t = 0; t < 500; ++t) {
		bigint i = bigint(rng.next()) % (qmax * qmax);
		double want = oracle_mod_one(r, i);
		CHECK(circle_dist(r.multiple_mod_one(i), want) < 1e-12);
		CHECK(circle_dist(r.multiple_mod_one_exact(i), want) < 1e-15);
	}
	for (int t = 0; t < 1000; ++t) {
		uint64_t i = rng.below(uint64_t(1) << 40), j = rng.below(uint64_t(1) << 40);
		double lhs = r.multiple_mod_one(bigint(i) + j);
		double rhs = r.multiple_mod_one(i) + r.multiple_mod_one(j);
		CHECK(circle_dist(lhs, rhs) < 1e-11);
		CHECK(circle_dist(r.orbit(0.0, i), r.multiple_mod_one_exact(i)) < 1e-12);
	}
}

TEST_CASE("orbit_min_distance")
{
	auto g = rotation_number::golden(30);
	CHECK(g.orbit_min_distance(0.0, 17) == 0.0);
	CHECK(g.orbit_min_distance(0.5, 1) == doctest::Approx(0.1180339887498948).epsilon(1e-12));
	CHECK(g.orbit_min_distance(0.25, 0) == 0.25);
	// brute-force oracle on the high-precision value
	bf100 a = cf_value(g);
	for (double x : {0.1, 0.37, 0.91}) {
		double best = 1.0;
		for (int i = 0; i <= 1000; ++i) {
			bf100 v = bf100(x) + i * a;
			v -= boost::multiprecision::floor(v);
			double d = v.convert_to<double>();
			best = std::min(best, std::min(d, 1 - d));
		}
		CHECK(std::abs(g.orbit_min_distance(x, 1000) - best) < 1e-13);
	}
}

TEST_CASE("construct_alpha scaled_D")
{
	alpha_params p;
	p.mode = alpha_mode::scaled_D;
	p.growth = 2.0;
	p.depth = 4;
	p.seed = {1};
	auto r = construct_alpha(p);
	REQUIRE(!r.flagged().empty());
	for (size_t n : r.flagged())
		CHECK(r.q(n + 1) >= r.q(n) * r.q(n));

	p.depth = 1;
	auto d1 = construct_alpha(p);
	CHECK(d1.depth() == 1);
	CHECK(d1.flagged().empty());
}

TEST_CASE("construct_alpha scaled_C_A")
{
	alpha_params p;
	p.mode = alpha_mode::scaled_C_A;
	p.growth = 2.0;
	p.seed = {1, 2}; // q_1 = 1, q_2 = 3
	p.depth = 3;
	auto r = construct_alpha(p);
	REQUIRE(r.q(2) == 3);
	CHECK((r.q(3) == 5 || r.q(3) == 7));
	CHECK(r.q(3) % 3 == r.q(1) % 3);

	p.seed = {2};
	p.growth = 4.0;
	p.depth = 5;
	auto deep = construct_alpha(p);
	for (size_t n = 1; n <= 5; ++n) {
		CHECK(is_probable_prime(deep.q(n)));
		if (n >= 2 && n < 5)
			CHECK((deep.q(n + 1) - deep.q(n - 1)) % deep.q(n) == 0);
	}
	for (size_t n : deep.flagged()) {
		bigint g = growth_bound(deep.q(n), 4.0);
		CHECK(deep.q(n + 1) <= g);
		CHECK(2 * deep.q(n + 1) >= g);
	}

	alpha_params bad;
	bad.mode = alpha_mode::scaled_C_A;
	bad.seed = {2};
	bad.growth = 1.0;
	bad.depth = 2;
	CHECK_THROWS_AS(construct_alpha(bad), error);
}

TEST_CASE("JSON round trip")
{
	alpha_params p;
	p.mode = alpha_mode::scaled_C_A;
	p.seed = {2};
	p.growth = 4.0;
	p.depth = 5;
	auto r = construct_alpha(p);
	auto j = r.to_json();
	auto back = rotation_number::from_json(j);
	CHECK(back.depth() == r.depth());
	for (size_t n = 0; n <= r.depth(); ++n)
		CHECK(back.q(n) == r.q(n));
	CHECK(back.flagged() == r.flagged());
	CHECK(back.value() == r.value());
}
