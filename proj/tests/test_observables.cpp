#include "doctest.h"
#include "kflow/observables.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

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

const prime_table &table()
{
	static prime_table t = prime_table::build(200000);
	return t;
}

} // namespace

TEST_CASE("degenerate tower observables are constant")
{
	auto g = rotation_number::golden(30);
	roof f = power_roof::normalized();
	tower_observable::shape flat;
	flat.level = 0.7;
	flat.amp = 0.0;
	auto a = make_tower_observable(f, g, flat);
	tower_observable::shape zero_u;
	zero_u.level = -0.3;
	zero_u.u = circle_trig{};
	auto b = make_tower_observable(f, g, zero_u);
	splitmix64 rng(1);
	for (int i = 0; i < 100; ++i) {
		double y = rng.uniform(), s = rng.uniform() * f(y);
		CHECK(a(y, s) == 0.7);
		CHECK(b(y, s) == -0.3);
	}
	CHECK(a(0.0, 3.0) == 0.7);
	CHECK_THROWS_AS(tower_observable(f, {0.0, 1.0, -1.0, {}}), error);
}

TEST_CASE("default observable satisfies the three conditions")
{
	auto g = rotation_number::golden(30);
	for (roof f : {roof(power_roof::normalized()), roof(constant_roof{1.0}),
	               roof(fourier_roof::make(fast_alpha(), {{2, cplx(0.1, 0.05)}}))}) {
		auto alpha = f.fourier() ? fast_alpha() : g;
		auto psi = make_tower_observable(f, alpha);
		auto rep = psi.check_conditions(alpha);
		CHECK(rep.matching < 1e-30);
		CHECK(rep.continuity < 1e-6);
		CHECK(rep.decay <= 0.0);
		splitmix64 rng(2);
		for (int i = 0; i < 1000; ++i) {
			double y = rng.uniform();
			CHECK(std::abs(psi(y, f(y)) - psi.level()) < 1e-12);
			CHECK(psi(alpha.orbit(y, int64_t(1)), 0.0) == psi.level());
		}
	}
	auto psi = make_tower_observable(power_roof::normalized(), g);
	CHECK(psi.decay_bound(50.0) == doctest::Approx(std::exp(-10.0)));
	for (double r : {10.0, 100.0, 1000.0})
		CHECK(std::abs(psi(0.3, r)) <= psi.decay_bound(r));
}

TEST_CASE("closed-form fiber integral matches quadrature")
{
	roof f = power_roof::normalized();
	tower_observable::shape sh;
	sh.level = 0.25;
	sh.sigma = 2.0;
	sh.u = circle_trig{0.1, {{1, 1.0, 0.5}, {-3, 0.2, 0.3}}};
	tower_observable psi(f, sh);
	splitmix64 rng(3);
	for (int i = 0; i < 200; ++i) {
		double y = rng.uniform(), F = f(y);
		double lo = rng.uniform() * F, hi = lo + rng.uniform() * (F - lo);
		auto line = [&](double s) { return psi(y, s); };
		double want = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(line, lo, hi, 15, 1e-13);
		CHECK(psi.fiber(y, lo, hi) == doctest::Approx(want).epsilon(1e-10).scale(1.0));
	}
	// u with negative frequency is the conjugate shape
	circle_trig u{0.0, {{-2, 0.3, 0.4}}};
	CHECK(u(0.1) == doctest::Approx(0.3 * std::cos(0.4 * std::numbers::pi) - 0.4 * std::sin(0.4 * std::numbers::pi)));
}

TEST_CASE("space average")
{
	roof f = power_roof::normalized();
	tower_observable::shape c;
	c.level = 1.5;
	c.amp = 0.0;
	CHECK(space_average(tower_observable(f, c)) == doctest::Approx(1.5).epsilon(1e-14));
	CHECK(space_average(tower_observable(f, c), false) == doctest::Approx(1.5 * f.integral()));

	// Monte-Carlo oracle: y uniform, s uniform on the fiber, weight f(y)
	tower_observable psi(f, {});
	splitmix64 rng(4);
	const int n = 1000000;
	double m = 0.0, m2 = 0.0;
	for (int i = 0; i < n; ++i) {
		double y = rng.uniform();
		if (y == 0.0)
			continue;
		double F = f(y);
		double v = F * psi(y, rng.uniform() * F);
		m += v;
		m2 += v * v;
	}
	m /= n;
	double se = std::sqrt((m2 / n - m * m) / n);
	double got = space_average(psi, false);
	CHECK(std::abs(got - m) <= 3.0 * se);
	CHECK(se < 1e-3);
}

TEST_CASE("torus observable means")
{
	auto alpha = fast_alpha();
	auto v = time_change::make(alpha, {{2, 0, cplx(0.2, 0.1)}, {1, 1, cplx(-0.1, 0.15)}});
	torus_observable psi{0.3,
	                     {{11, 0, cplx(0.5, -0.2)}, {-2, -1, cplx(0.4, 0.3)}, {3, 2, cplx(1.0, 0.0)},
	                      {0, 0, cplx(0.05, 9.0)}}};
	CHECK(psi.mean_leb() == doctest::Approx(0.35));
	// a uniform grid integrates trig polynomials of low degree exactly
	const int G = 64;
	double leb = 0.0, mu = 0.0;
	for (int i = 0; i < G; ++i)
		for (int j = 0; j < G; ++j) {
			double x = double(i) / G, y = double(j) / G;
			leb += psi(x, y);
			mu += psi(x, y) * v.eval(x, y);
		}
	CHECK(psi.mean_leb() == doctest::Approx(leb / (G * G)).epsilon(1e-13));
	CHECK(psi.mean_mu(v) == doctest::Approx(mu / (G * G)).epsilon(1e-13));
	CHECK(psi.sup_bound() >= std::abs(psi(0.2, 0.7)));
}

TEST_CASE("prime orbit sums on the tower")
{
	auto g = rotation_number::golden(40);
	special_flow F(power_roof::normalized(), g);
	auto &P = table();
	flow_point start{0.3141, 0.2};
	auto one = [](double, double) { return 1.0; };
	CHECK(prime_orbit_sum(one, F, P, start, 100000) == doctest::Approx(P.theta(100000)).epsilon(1e-12));
	CHECK(prime_orbit_sum(one, F, P, start, 1) == 0.0);
	CHECK(prime_orbit_sum(one, F, P, start, 10000, -1, 1) ==
	      doctest::Approx(P.theta(10000)).epsilon(1e-12));

	auto psi = make_tower_observable(F.height(), g);
	tower_observable::shape other;
	other.level = 0.2;
	other.u = circle_trig{0.0, {{2, 0.0, 1.0}}};
	tower_observable phi(F.height(), other);
	auto combo = [&](double x, double s) { return 2.0 * psi(x, s) - 3.0 * phi(x, s); };
	double a = prime_orbit_sum(psi.as_fn(), F, P, start, 20000);
	double b = prime_orbit_sum(phi.as_fn(), F, P, start, 20000);
	double ab = prime_orbit_sum(combo, F, P, start, 20000);
	CHECK(ab == doctest::Approx(2 * a - 3 * b).epsilon(1e-8));
	CHECK(std::abs(a) <= psi.params().u.sup_bound() * P.theta(20000));

	// incremental stepping agrees with evaluating from the start each time
	std::vector<flow_point> pts;
	prime_orbit(F, P, start, 200, 1, 0, [&](uint64_t, const flow_point &q) { pts.push_back(q); });
	size_t i = 0;
	P.for_each_prime(2, 200, [&](uint64_t p) {
		CHECK(tower_metric(pts[i++], F.evaluate(start, double(p)).end) < 1e-9);
	});
	CHECK_THROWS_AS(prime_orbit(F, P, start, 100, 2, 0, [](uint64_t, const flow_point &) {}), error);
}

TEST_CASE("time integral of tower observables")
{
	auto g = rotation_number::golden(40);
	special_flow F(power_roof::normalized(), g);
	tower_observable::shape c;
	c.level = 0.6;
	c.amp = 0.0;
	tower_observable flat(F.height(), c);
	flow_point p{0.77, 0.1};
	CHECK(time_integral_fibers(F, flat.as_fiber(), p, 123.5) == doctest::Approx(0.6 * 123.5));
	auto psi = make_tower_observable(F.height(), g);
	for (int z : {1, -1})
		CHECK(time_integral_fibers(F, psi.as_fiber(), p, 40.0, z) ==
		      doctest::Approx(time_integral(F, psi.as_fn(), p, 40.0, z)).epsilon(1e-7));
}

TEST_CASE("box partitions")
{
	roof f = power_roof::normalized();
	tower_boxes tb(f, 32, 8.0);
	double s = 0.0;
	for (double r : tb.reference()) {
		CHECK(r >= 0.0);
		s += r;
	}
	CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
	CHECK(tb.tv(tb.reference()) == doctest::Approx(0.0).scale(1.0));
	CHECK(tb.index({0.5, 100.0}) == tb.size() - 1);
	// tail mass is int (f - 8)^+
	double tail = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
	    [&](double x) { return x == 0.0 || x == 1.0 ? 0.0 : std::max(0.0, f(x) - 8.0); }, 0.0, 1e-2, 20,
	    1e-12);
	CHECK(tb.reference().back() == doctest::Approx(2.0 * tail).epsilon(1e-3));

	auto alpha = fast_alpha();
	torus_boxes flat(time_change{}, 8);
	for (double r : flat.reference())
		CHECK(r == doctest::Approx(1.0 / 64));
	auto v = time_change::make_default(alpha, {1, 2, 3});
	torus_boxes mu(v, 16);
	double total = 0.0;
	for (double r : mu.reference())
		total += r;
	CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
	// cell masses from a fine midpoint rule
	double cell = 0.0;
	const int M = 400;
	for (int i = 0; i < M; ++i)
		for (int j = 0; j < M; ++j)
			cell += v.eval((3 + (i + 0.5) / M) / 16, (5 + (j + 0.5) / M) / 16);
	CHECK(mu.reference()[3 * 16 + 5] == doctest::Approx(cell / (M * M * 256.0)).epsilon(1e-4));
}

TEST_CASE("reparametrized prime sums")
{
	auto alpha = fast_alpha();
	reparam_flow F(alpha, time_change::make_default(alpha, {1, 2, 3}));
	auto &P = table();
	torus_point start{0.21, 0.43};
	torus_observable obs{0.0, {{1, 0, cplx(1.0, 0.0)}}};
	double direct = 0.0;
	P.for_each_prime(2, 3000, [&](uint64_t p) {
		auto q = F.evaluate(double(p), start);
		direct += obs(q.x, q.y) * std::log(double(p));
	});
	CHECK(prime_orbit_sum(obs.as_fn(), F, P, start, 3000) == doctest::Approx(direct).epsilon(1e-9));

	torus_fn g = [](double x, double y) { return std::cos(2 * std::numbers::pi * (x + y)); };
	auto cob = coboundary_observable(F, g, 20);
	auto sums = coboundary_prime_orbit(cob, P, start, {500, 2000});
	REQUIRE(sums.sums.size() == 2);
	double d500 = 0.0, d2000 = 0.0;
	P.for_each_prime(2, 2000, [&](uint64_t p) {
		auto q = F.evaluate(double(p), start);
		double v = cob.psi(q) * std::log(double(p));
		d2000 += v;
		if (p <= 500)
			d500 += v;
	});
	CHECK(sums.sums[0] == doctest::Approx(d500).epsilon(1e-8).scale(1.0));
	CHECK(sums.sums[1] == doctest::Approx(d2000).epsilon(1e-8).scale(1.0));
	CHECK(sums.sup_transfer > 0.0);
	CHECK(sums.sup_transfer <= 20.0 * 21 / 2 / 20 + 1e-12);
}

TEST_CASE("pnt report reductions")
{
	auto g = rotation_number::golden(40);
	special_flow F(power_roof::normalized(), g);
	auto &P = table();
	tower_observable::shape c;
	c.level = 2.0;
	c.amp = 0.0;
	tower_observable flat(F.height(), c);
	auto rep = pnt_report(flat, F, P, {0.4, 0.1}, {1000, 10000, 50000});
	REQUIRE(rep.rows.size() == 6);
	for (auto &r : rep.rows) {
		double want = 2.0 * std::abs(P.theta(r.N) / double(r.N) - 1.0);
		CHECK(r.D1 == doctest::Approx(want).epsilon(1e-9));
		CHECK(r.D2 < 1e-12);
		CHECK(r.box_tv >= 0.0);
		CHECK(r.box_tv <= 1.0);
	}
	auto psi = make_tower_observable(F.height(), g);
	auto rep2 = pnt_report(psi, F, P, {0.4, 0.1}, {1000, 20000});
	for (auto &r : rep2.rows) {
		CHECK(r.D3 <= r.D1 + r.D2 + 1e-12);
		CHECK(std::isfinite(r.box_tv));
	}
	CHECK(pnt_json(rep2).at("rows").size() == 4);
	CHECK_THROWS_AS(pnt_report(psi, F, P, {0.4, 0.1}, {300000}), error);
}
