#include "kflow/roof.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <thread>

namespace kflow {

namespace {

double centered(double s) { return s - std::round(s); }

// sum_{0 <= i < n} e(i s)
cplx geometric(int64_t n, double s)
{
	if (n == 0)
		return 0.0;
	double sn = std::sin(std::numbers::pi * s);
	if (sn == 0.0)
		return double(n);
	double ratio = std::sin(std::numbers::pi * double(n) * s) / sn;
	return ratio * e_of(0.5 * double(n - 1) * s);
}

// x^g with a fast path for the default exponent
inline double pw(double x, double g)
{
	if (g == -0.5)
		return 1.0 / std::sqrt(x);
	if (g == -1.5)
		return 1.0 / (x * std::sqrt(x));
	if (g == -2.5)
		return 1.0 / (x * x * std::sqrt(x));
	return std::pow(x, g);
}

double power_eval(const power_roof &r, double x, int order)
{
	x = frac(x);
	if (x == 0.0)
		throw error(errc::singularity, "power roof evaluated at its singularity x = 0");
	double y = 1.0 - x;
	double g = r.gamma;
	switch (order) {
	case 0:
		return r.kappa * (pw(x, g) + pw(y, g)) + r.c0;
	case 1:
		return r.kappa * g * (pw(x, g - 1) - pw(y, g - 1));
	case 2:
		return r.kappa * g * (g - 1) * (pw(x, g - 2) + pw(y, g - 2));
	default:
		throw error(errc::invalid_input, "roof derivative order must be 0, 1 or 2");
	}
}

cplx deriv_factor(const bigint &q, int order)
{
	cplx f = 1.0;
	cplx w(0.0, 2.0 * std::numbers::pi * to_double(q));
	for (int i = 0; i < order; ++i)
		f *= w;
	return f;
}

} // namespace

power_roof power_roof::normalized(double gamma, double c0)
{
	if (!(gamma > -1.0 && gamma < 0.0))
		throw error(errc::invalid_input, "power roof exponent must lie in (-1, 0)");
	if (!(c0 > 0.0 && c0 < 1.0))
		throw error(errc::invalid_input, "normalized power roof needs 0 < c0 < 1");
	return {gamma, (1.0 - c0) * (gamma + 1.0) / 2.0, c0};
}

fourier_roof fourier_roof::make(const rotation_number &alpha,
                                const std::vector<std::pair<size_t, cplx>> &level_coeffs)
{
	fourier_roof r;
	for (auto &[n, b] : level_coeffs)
		r.terms.push_back({n, alpha.q(n), centered(alpha.beta(n)), b});
	return r;
}

double fourier_roof::coefficient_sum() const
{
	double s = 0;
	for (auto &t : terms)
		s += std::abs(t.b);
	return s;
}

roof::roof(power_roof r) : v_(r)
{
	if (!(r.gamma > -1.0 && r.gamma < 0.0) || r.kappa <= 0.0 || r.c0 <= 0.0)
		throw error(errc::invalid_input, "power roof needs gamma in (-1,0), kappa > 0, c0 > 0");
}

roof::roof(fourier_roof r) : v_(std::move(r))
{
	if (fourier()->coefficient_sum() >= 1.0)
		throw error(errc::invalid_input, "Fourier roof coefficients too large for positivity");
}

double roof::eval(double x, int order) const
{
	if (order < 0 || order > 2)
		throw error(errc::invalid_input, "roof derivative order must be 0, 1 or 2");
	switch (type()) {
	case kind::constant:
		return order == 0 ? std::get<constant_roof>(v_).c : 0.0;
	case kind::power:
		return power_eval(*power(), x, order);
	case kind::fourier: {
		double s = order == 0 ? 1.0 : 0.0;
		for (auto &t : fourier()->terms)
			s += (t.b * deriv_factor(t.q, order) * e_of(frac_mul(t.q, x))).real();
		return s;
	}
	}
	return 0.0;
}

double roof::integral() const
{
	switch (type()) {
	case kind::constant:
		return std::get<constant_roof>(v_).c;
	case kind::power: {
		auto &p = *power();
		return 2.0 * p.kappa / (p.gamma + 1.0) + p.c0;
	}
	case kind::fourier:
		return 1.0;
	}
	return 0.0;
}

double roof::inf() const
{
	switch (type()) {
	case kind::constant:
		return std::get<constant_roof>(v_).c;
	case kind::power:
		return power_eval(*power(), 0.5, 0);
	case kind::fourier:
		return 1.0 - fourier()->coefficient_sum();
	}
	return 0.0;
}

double roof::birkhoff(double x, int64_t n, const rotation_number &alpha, int order) const
{
	if (n < 0)
		return -birkhoff(alpha.orbit(x, n), -n, alpha, order);
	switch (type()) {
	case kind::constant:
		return order == 0 ? std::get<constant_roof>(v_).c * double(n) : 0.0;
	case kind::fourier: {
		kahan_c acc;
		for (auto &t : fourier()->terms)
			acc.add(t.b * deriv_factor(t.q, order) * e_of(frac_mul(t.q, x)) * geometric(n, t.step));
		return (order == 0 ? double(n) : 0.0) + acc.value().real();
	}
	case kind::power: {
		auto &p = *power();
		kahan acc;
		for (int64_t i = 0; i < n; ++i) {
			double y = alpha.orbit(x, uint64_t(i));
			if (y == 0.0)
				throw error(errc::singularity,
				            "Birkhoff sum hits the singularity at index " + std::to_string(i));
			acc.add(power_eval(p, y, order));
		}
		return acc.value();
	}
	}
	return 0.0;
}

nlohmann::json roof::to_json() const
{
	switch (type()) {
	case kind::constant:
		return {{"kind", "constant"}, {"c", std::get<constant_roof>(v_).c}};
	case kind::power: {
		auto &p = *power();
		return {{"kind", "power"}, {"gamma", p.gamma}, {"kappa", p.kappa}, {"c0", p.c0}};
	}
	case kind::fourier: {
		nlohmann::json pairs = nlohmann::json::array();
		for (auto &t : fourier()->terms)
			pairs.push_back({t.q.str(), t.b.real(), t.b.imag()});
		return {{"kind", "fourier"}, {"pairs", pairs}};
	}
	}
	return {};
}

roof roof::from_json(const nlohmann::json &j, const rotation_number &alpha)
{
	std::string k = j.at("kind").get<std::string>();
	if (k == "constant")
		return roof(constant_roof{j.value("c", 1.0)});
	if (k == "power")
		return roof(power_roof{j.at("gamma").get<double>(), j.at("kappa").get<double>(),
		                       j.at("c0").get<double>()});
	if (k == "fourier") {
		fourier_roof r;
		for (auto &p : j.at("pairs")) {
			bigint q = p[0].is_string() ? bigint(p[0].get<std::string>()) : bigint(p[0].get<uint64_t>());
			fourier_term t;
			t.q = q;
			t.b = cplx(p[1].get<double>(), p[2].get<double>());
			size_t lvl = alpha.level_at_least(q);
			if (lvl <= alpha.max_level() && alpha.q(lvl) == q) {
				t.level = lvl;
				t.step = centered(alpha.beta(lvl));
			} else {
				t.level = size_t(-1);
				t.step = centered(alpha.multiple_mod_one(q));
			}
			r.terms.push_back(t);
		}
		return roof(std::move(r));
	}
	throw error(errc::parse, "unknown roof kind '" + k + "'");
}

double birkhoff_sum(const circle_fn &g, int64_t n, double x, const rotation_number &alpha)
{
	if (n < 0)
		return -birkhoff_sum(g, -n, alpha.orbit(x, n), alpha);
	kahan acc;
	for (int64_t i = 0; i < n; ++i) {
		try {
			acc.add(g(alpha.orbit(x, uint64_t(i))));
		} catch (const error &e) {
			if (e.code() == errc::singularity)
				throw error(errc::singularity, "Birkhoff sum hits a singularity at index " +
				                                   std::to_string(i));
			throw;
		}
	}
	return acc.value();
}

double birkhoff_sum(const roof &f, int64_t n, double x, const rotation_number &alpha)
{
	return f.birkhoff(x, n, alpha, 0);
}

circle_fn masked_roof(const roof &f, const rotation_number &alpha, size_t n, double delta)
{
	uint64_t q = alpha.q64(n);
	double radius = std::pow(double(q), -1.0 - delta);
	double central = 0.25 / to_double(alpha.q(n + 1));
	auto tower = std::make_shared<orbit_neighborhood>(alpha, q, radius, 0.0, -1);
	return [f, tower, central](double x) {
		if (!tower->contains(x) || circle_norm(x) <= central)
			return 0.0;
		return f.eval(x, 0);
	};
}

double time_change::eval(double x, double y) const
{
	double s = 1.0;
	for (auto &t : terms)
		s += (t.a * e_of(frac_mul(t.q, x) + double(t.m) * y)).real();
	return s;
}

double time_change::lower_bound() const
{
	double s = 0;
	for (auto &t : terms)
		s += std::abs(t.a);
	return 1.0 - s;
}

size_t time_change::truncation() const
{
	std::vector<size_t> lv;
	for (auto &t : terms)
		lv.push_back(t.level);
	std::sort(lv.begin(), lv.end());
	return size_t(std::unique(lv.begin(), lv.end()) - lv.begin());
}

time_change time_change::make(const rotation_number &alpha,
                              const std::vector<std::tuple<size_t, int, cplx>> &coeffs)
{
	time_change v;
	for (auto &[n, m, a] : coeffs)
		v.terms.push_back({n, alpha.q(n), centered(alpha.beta(n)), m, a});
	if (v.lower_bound() <= 0.0)
		throw error(errc::invalid_input, "time change coefficients too large for positivity");
	return v;
}

time_change time_change::make_default(const rotation_number &alpha,
                                      const std::vector<size_t> &levels, double exponent,
                                      bool with_m1)
{
	std::vector<std::tuple<size_t, int, cplx>> c;
	for (size_t n : levels) {
		double a = std::pow(to_double(alpha.q(n + 1)), -exponent);
		c.emplace_back(n, 0, cplx(a, 0.0));
		if (with_m1)
			c.emplace_back(n, 1, cplx(a, 0.0));
	}
	return make(alpha, c);
}

nlohmann::json time_change::to_json() const
{
	nlohmann::json c = nlohmann::json::array();
	for (auto &t : terms)
		c.push_back({t.q.str(), t.m, t.a.real(), t.a.imag()});
	return {{"coefficients", c}, {"truncation", truncation()}};
}

time_change time_change::from_json(const nlohmann::json &j, const rotation_number &alpha)
{
	std::vector<std::tuple<size_t, int, cplx>> c;
	for (auto &e : j.at("coefficients")) {
		bigint q = e[0].is_string() ? bigint(e[0].get<std::string>()) : bigint(e[0].get<uint64_t>());
		size_t lvl = alpha.level_at_least(q);
		if (lvl > alpha.max_level() || alpha.q(lvl) != q)
			throw error(errc::parse, "time change frequency " + q.str() +
			                             " is not a denominator of alpha");
		c.emplace_back(lvl, e[1].get<int>(), cplx(e[2].get<double>(), e[3].get<double>()));
	}
	return make(alpha, c);
}

fourier_roof roof_from_timechange(const time_change &v, bool verify)
{
	fourier_roof f;
	for (auto &t : v.terms)
		if (t.m == 0)
			f.terms.push_back({t.level, t.q, t.step, t.a});
	if (verify) {
		roof r(f);
		for (int i = 0; i < 100; ++i) {
			double x = frac((i + 0.5) / 100.0 + 0.0031415926);
			double quad = boost::math::quadrature::gauss<double, 64>::integrate(
			    [&](double y) { return v.eval(x, y); }, 0.0, 1.0);
			if (std::abs(quad - r.eval(x)) > 1e-10)
				throw error(errc::internal, "roof from time change disagrees with quadrature at x = " +
				                                std::to_string(x));
		}
	}
	return f;
}

double avoidance_scale(double x, uint64_t k, size_t n, const rotation_number &alpha)
{
	uint64_t len = k * alpha.q64(n);
	double m = alpha.orbit_min_distance(x, len - 1);
	if (m == 0.0)
		throw error(errc::singularity, "orbit hits the singularity");
	return (1.0 / m) * (1.0 + 1e-6);
}

quad_expansion_result quadratic_expansion_check(const roof &f, double x, uint64_t k, size_t n,
                                                const rotation_number &alpha, double L)
{
	uint64_t q = alpha.q64(n);
	double qd = double(q);
	double q1 = to_double(alpha.q(n + 1));
	double kmax = std::pow(q1, 0.75) / qd;
	if (k < 2 || double(k) > kmax)
		throw error(errc::invalid_input, "quadratic expansion needs 2 <= k <= q_{n+1}^{3/4}/q_n");
	if (!(L < q1 / 4.0))
		throw error(errc::invalid_input, "quadratic expansion needs L < q_{n+1}/4");
	for (uint64_t i = 0; i < k * q; ++i)
		if (circle_norm(alpha.orbit(x, i)) <= 1.0 / L)
			throw error(errc::hypothesis,
			            "orbit enters [-1/L, 1/L] at index " + std::to_string(i));

	quad_expansion_result r;
	double kd = double(k);
	r.actual = f.birkhoff(x, int64_t(k * q), alpha, 0);
	double s = f.birkhoff(x, int64_t(q), alpha, 0);
	double d = f.birkhoff(x, int64_t(q), alpha, 1);
	double beta = alpha.beta(n);
	r.quad_term = kd * kd * d * beta;
	r.predicted = kd * s + r.quad_term;
	r.predicted_tri = kd * s + 0.5 * kd * (kd - 1.0) * d * beta;
	r.budget = std::pow(L * qd * kd, 3.0) / (q1 * q1) + kd * L * L * qd * qd / q1;
	r.informative = r.budget < std::abs(r.quad_term);
	return r;
}

std::vector<derivative_zero> derivative_zero_locator(const roof &f, size_t n,
                                                     const rotation_number &alpha,
                                                     unsigned threads)
{
	if (!f.singular())
		throw error(errc::invalid_input, "derivative zero locator needs a power roof");
	uint64_t q = alpha.q64(n);
	std::vector<double> pts;
	pts.reserve(q);
	for (uint64_t i = 0; i < q; ++i)
		pts.push_back(alpha.orbit(0.0, -int64_t(i)));
	std::sort(pts.begin(), pts.end());

	std::vector<derivative_zero> out(q);
	auto g = [&](double x, int order) { return f.birkhoff(frac(x), int64_t(q), alpha, order); };

	auto solve = [&](uint64_t j) {
		derivative_zero z;
		z.a = pts[j];
		z.b = j + 1 < q ? pts[j + 1] : pts[0] + 1.0;
		double w = z.b - z.a;
		double lo = z.a + w * 1e-7, hi = z.b - w * 1e-7;
		double glo = g(lo, 1), ghi = g(hi, 1);
		if (!(glo < 0.0 && ghi > 0.0)) {
			z.bracketed = false;
			z.x = 0.5 * (z.a + z.b);
			z.residual = std::abs(g(z.x, 1));
			out[j] = z;
			return;
		}
		z.bracketed = true;
		double x = 0.5 * (lo + hi);
		double gx = g(x, 1);
		for (int it = 0; it < 60 && hi - lo > 1e-14 && gx != 0.0; ++it) {
			if (gx < 0)
				lo = x;
			else
				hi = x;
			double d2 = g(x, 2);
			double nx = d2 > 0 ? x - gx / d2 : 0.5 * (lo + hi);
			if (!(nx > lo && nx < hi))
				nx = 0.5 * (lo + hi);
			bool tiny = std::abs(nx - x) < 1e-16;
			x = nx;
			gx = g(x, 1);
			if (tiny)
				break;
		}
		z.x = frac(x);
		z.residual = std::abs(gx);
		out[j] = z;
	};

	threads = std::max(1u, threads);
	if (threads == 1 || q < 64) {
		for (uint64_t j = 0; j < q; ++j)
			solve(j);
	} else {
		std::vector<std::thread> pool;
		for (unsigned t = 0; t < threads; ++t)
			pool.emplace_back([&, t] {
				for (uint64_t j = t; j < q; j += threads)
					solve(j);
			});
		for (auto &th : pool)
			th.join();
	}
	return out;
}

small_set_result small_derivative_set(const roof &f, size_t n, const rotation_number &alpha,
                                      double zero, double threshold, uint64_t grid,
                                      unsigned threads)
{
	uint64_t q = alpha.q64(n);
	small_set_result r;
	r.grid = grid;
	if (threshold <= 0.0)
		return r;
	r.cover = orbit_neighborhood(alpha, q, 2.0 * threshold, zero, +1);
	threads = std::max(1u, threads);
	struct part {
		uint64_t below = 0, viol = 0, first = UINT64_MAX;
	};
	std::vector<part> parts(threads);
	auto work = [&](unsigned t) {
		for (uint64_t i = t; i < grid; i += threads) {
			double x = (double(i) + 0.5) / double(grid);
			double v = std::abs(f.birkhoff(x, int64_t(q), alpha, 1));
			if (v < threshold) {
				++parts[t].below;
				if (!r.cover.contains(x)) {
					++parts[t].viol;
					parts[t].first = std::min(parts[t].first, i);
				}
			}
		}
	};
	if (threads == 1) {
		work(0);
	} else {
		std::vector<std::thread> pool;
		for (unsigned t = 0; t < threads; ++t)
			pool.emplace_back(work, t);
		for (auto &th : pool)
			th.join();
	}
	uint64_t first = UINT64_MAX;
	for (auto &p : parts) {
		r.below += p.below;
		r.violations += p.viol;
		first = std::min(first, p.first);
	}
	if (first != UINT64_MAX)
		r.witness = (double(first) + 0.5) / double(grid);
	return r;
}

} // namespace kflow
