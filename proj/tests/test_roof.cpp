#include "doctest.h"
#include "kflow/roof.hpp"

using namespace kflow;

namespace {

rotation_number fast_alpha()
{
	alpha_params p;
	p.mode = alpha_mode::scaled_C_A;
	p.seed = {2};
	p.growth = 4.0;
	p.depth = 4;
	return construct_alpha(p);
}

// central differences of order 4
double numeric_derivative(const roof &f, double x, int order)
{
	double h = 1e-4;
	return (-f.eval(x + 2 * h, order - 1) + 8 * f.eval(x + h, order - 1) -
	        8 * f.eval(x - h, order - 1) + f.eval(x - 2 * h, order - 1)) /
	       (12 * h);
}

} // namespace

TEST_CASE("power roof values")
{
	roof f(power_roof{-0.5, 1.0, 1e-300});
	CHECK(f(0.25) == doctest::Approx(3.1547005383792515).epsilon(1e-15));
	roof g(power_roof{-0.5, 1.0, 0.2});
	CHECK(g.integral() == doctest::Approx(4.2));
	CHECK(g.inf() == doctest::Approx(g(0.5)));

	roof n(power_roof::normalized(-0.5, 0.2));
	CHECK(n.integral() == doctest::Approx(1.0).epsilon(1e-15));
	roof n3(power_roof::normalized(-0.3, 0.5));
	CHECK(n3.integral() == doctest::Approx(1.0).epsilon(1e-15));
	CHECK_THROWS_AS(power_roof::normalized(-1.0, 0.2), error);
	CHECK_THROWS_AS(power_roof::normalized(-0.5, 1.5), error);

	for (double x : {0.1, 0.3, 0.5, 0.77, 0.9}) {
		CHECK(n.eval(x, 1) == doctest::Approx(numeric_derivative(n, x, 1)).epsilon(1e-7));
		CHECK(n.eval(x, 2) == doctest::Approx(numeric_derivative(n, x, 2)).epsilon(1e-6));
		CHECK(n3.eval(x, 1) == doctest::Approx(numeric_derivative(n3, x, 1)).epsilon(1e-7));
		CHECK(n(x) >= n.inf() - 1e-15);
	}
	CHECK(n(0.3) == doctest::Approx(n(0.7)).epsilon(1e-15));
	CHECK_THROWS_AS(n(0.0), error);
	CHECK_THROWS_AS(n(1.0), error);
}

TEST_CASE("Fourier roof closed form matches direct summation")
{
	auto alpha = fast_alpha();
	auto fr = fourier_roof::make(alpha, {{1, {0.1, 0.05}}, {2, {0.02, -0.03}}, {3, {0.001, 0.0}}});
	roof f(fr);
	CHECK(f.integral() == 1.0);
	CHECK(f.inf() == doctest::Approx(1.0 - std::abs(cplx(0.1, 0.05)) - std::abs(cplx(0.02, -0.03)) - 0.001));
	circle_fn g = [&](double x) { return f(x); };
	circle_fn gd = [&](double x) { return f.eval(x, 1); };
	splitmix64 rng(3);
	for (int t = 0; t < 20; ++t) {
		double x = rng.uniform();
		int64_t n = int64_t(rng.below(3000)) - 1500;
		CHECK(f.birkhoff(x, n, alpha) == doctest::Approx(birkhoff_sum(g, n, x, alpha)).epsilon(1e-10));
		CHECK(f.birkhoff(x, n, alpha, 1) ==
		      doctest::Approx(birkhoff_sum(gd, n, x, alpha)).epsilon(1e-9).scale(100));
	}
	CHECK(f.birkhoff(0.3, 0, alpha) == 0.0);
}

TEST_CASE("cocycle identity for positive and negative lengths")
{
	auto alpha = rotation_number::golden(30);
	roof f(power_roof::normalized());
	splitmix64 rng(5);
	for (int t = 0; t < 200; ++t) {
		double x = rng.uniform();
		int64_t m = int64_t(rng.below(200)) - 100, n = int64_t(rng.below(200)) - 100;
		double lhs = f.birkhoff(x, m + n, alpha);
		double rhs = f.birkhoff(x, m, alpha) + f.birkhoff(alpha.orbit(x, m), n, alpha);
		CHECK(lhs == doctest::Approx(rhs).epsilon(1e-11).scale(10));
	}
	// S_{-1}(g)(x) = -g(x - alpha)
	CHECK(f.birkhoff(0.4, -1, alpha) == doctest::Approx(-f(0.4 - alpha.value())));
}

TEST_CASE("Denjoy-Koksma bound for a bounded-variation function")
{
	auto alpha = rotation_number::from_partial_quotients({3, 1, 4, 1, 5, 9, 2, 6, 5, 3, 5});
	// sawtooth x -> frac(x): integral 1/2, variation 2
	circle_fn saw = [](double x) { return frac(x); };
	splitmix64 rng(9);
	for (size_t n = 1; n <= 10; ++n) {
		int64_t q = int64_t(alpha.q64(n));
		for (int t = 0; t < 20; ++t) {
			double x = rng.uniform();
			CHECK(std::abs(birkhoff_sum(saw, q, x, alpha) - 0.5 * double(q)) <= 2.0 + 1e-9);
		}
	}
}

TEST_CASE("time change and its roof")
{
	auto alpha = fast_alpha();
	auto v = time_change::make_default(alpha, {1, 2, 3});
	CHECK(v.truncation() == 3);
	CHECK(v.terms.size() == 6);
	CHECK(v.lower_bound() > 0.0);
	CHECK(std::abs(v.terms[0].a) == doctest::Approx(std::pow(11.0, -0.6)));
	auto fr = roof_from_timechange(v, true);
	CHECK(fr.terms.size() == 3);
	roof f(fr);
	for (double x : {0.1, 0.45, 0.8}) {
		double avg = 0;
		for (int j = 0; j < 1000; ++j)
			avg += v.eval(x, (j + 0.5) / 1000.0);
		CHECK(avg / 1000 == doctest::Approx(f(x)).epsilon(1e-12));
		CHECK(v.eval(x, 0.3) >= v.lower_bound());
	}
	auto back = time_change::from_json(v.to_json(), alpha);
	REQUIRE(back.terms.size() == v.terms.size());
	CHECK(back.eval(0.37, 0.61) == v.eval(0.37, 0.61));

	CHECK_THROWS_AS(time_change::make(alpha, {{1, 0, cplx(0.7, 0)}, {2, 0, cplx(0.4, 0)}}), error);
}

TEST_CASE("roof JSON round trip")
{
	auto alpha = fast_alpha();
	for (roof f : {roof(constant_roof{2.5}), roof(power_roof::normalized(-0.4, 0.3)),
	               roof(fourier_roof::make(alpha, {{2, {0.1, 0.2}}}))}) {
		auto back = roof::from_json(f.to_json(), alpha);
		CHECK(back.type() == f.type());
		CHECK(back(0.123) == f(0.123));
		CHECK(back.birkhoff(0.4, 50, alpha) == doctest::Approx(f.birkhoff(0.4, 50, alpha)));
	}
	CHECK_THROWS_AS(roof::from_json({{"kind", "triangle"}}, alpha), error);
}

TEST_CASE("quadratic expansion")
{
	auto alpha = fast_alpha();
	REQUIRE(alpha.q64(3) > 1000);
	roof c(constant_roof{1.5});
	auto rc = quadratic_expansion_check(c, 0.3, 4, 3, alpha, avoidance_scale(0.3, 4, 3, alpha));
	CHECK(rc.actual == doctest::Approx(4 * 1.5 * double(alpha.q64(3))));
	CHECK(rc.predicted == doctest::Approx(rc.actual));
	CHECK(rc.quad_term == 0.0);

	roof f(power_roof::normalized());
	splitmix64 rng(21);
	for (int t = 0; t < 5; ++t) {
		double x = rng.uniform();
		for (uint64_t k : {2, 3, 5}) {
			double L = avoidance_scale(x, k, 3, alpha);
			auto r = quadratic_expansion_check(f, x, k, 3, alpha, L);
			CHECK(std::min(std::abs(r.actual - r.predicted), std::abs(r.actual - r.predicted_tri)) <=
			      r.budget);
		}
	}
	CHECK_THROWS_AS(quadratic_expansion_check(f, 0.3, 1, 3, alpha, 100.0), error);
	// L below the avoidance scale breaks the hypothesis
	double L = avoidance_scale(0.3, 2, 3, alpha);
	try {
		quadratic_expansion_check(f, 0.3, 2, 3, alpha, 0.5 * L);
		FAIL("expected a hypothesis error");
	} catch (const error &e) {
		CHECK(e.code() == errc::hypothesis);
		CHECK(std::string(e.what()).find("index") != std::string::npos);
	}
}

TEST_CASE("derivative zeros: one per interval, agreeing with a sign-change scan")
{
	auto alpha = fast_alpha();
	roof f(power_roof::normalized());
	for (size_t n : {1, 2}) {
		uint64_t q = alpha.q64(n);
		auto zs = derivative_zero_locator(f, n, alpha, 2);
		REQUIRE(zs.size() == q);
		for (auto &z : zs) {
			CHECK(z.bracketed);
			double x = z.x < z.a ? z.x + 1.0 : z.x;
			CHECK(x > z.a);
			CHECK(x < z.b);
			CHECK(z.residual <= 1e-8 * std::pow(double(q), 3));
		}
		// oracle: count upward sign changes on a fine grid away from the singular points
		int ups = 0;
		double prev = f.birkhoff(0.5 / 20000, int64_t(q), alpha, 1);
		for (int i = 1; i < 20000; ++i) {
			double cur = f.birkhoff((i + 0.5) / 20000, int64_t(q), alpha, 1);
			if (prev < 0 && cur > 0)
				++ups;
			prev = cur;
		}
		CHECK(uint64_t(ups) == q);
	}
	CHECK_THROWS_AS(derivative_zero_locator(roof(constant_roof{}), 1, alpha), error);
}

TEST_CASE("small-derivative set stays near the zero's orbit")
{
	auto alpha = fast_alpha();
	roof f(power_roof::normalized());
	size_t n = 2;
	auto zs = derivative_zero_locator(f, n, alpha);
	double thr = std::pow(to_double(alpha.q(n + 1)), -0.1);
	auto r = small_derivative_set(f, n, alpha, zs[0].x, thr, 20000, 2);
	CHECK(r.grid == 20000);
	CHECK(r.violations == 0);
	CHECK(r.witness < 0);
	CHECK(r.cover.centers().size() == alpha.q64(n));
	auto none = small_derivative_set(f, n, alpha, zs[0].x, 0.0, 100);
	CHECK(none.below == 0);
}

TEST_CASE("masked roof")
{
	auto alpha = fast_alpha();
	roof f(power_roof::normalized());
	size_t n = 2;
	double delta = 0.1;
	auto g = masked_roof(f, alpha, n, delta);
	double q1 = to_double(alpha.q(n + 1));
	CHECK(g(0.0) == 0.0);
	CHECK(g(0.2 / q1) == 0.0);
	double r = std::pow(double(alpha.q64(n)), -1.0 - delta);
	double inside = 0.5 * r;
	CHECK(g(inside) == f(inside));
	CHECK(g(-inside) == f(-inside));
	// far from every -i alpha, i < q_n
	orbit_neighborhood nb(alpha, alpha.q64(n), r, 0.0, -1);
	splitmix64 rng(2);
	for (int t = 0; t < 100; ++t) {
		double x = rng.uniform();
		CHECK(g(x) == (nb.contains(x) && circle_norm(x) > 0.25 / q1 ? f(x) : 0.0));
	}
}
