#include "kflow/observables.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <thread>

namespace kflow {

namespace {

constexpr double pi = std::numbers::pi;

// int_lo^hi exp(-s / sigma) sin^2(pi s / F) ds
double damped_sin2(double sigma, double F, double lo, double hi)
{
	double a = 1.0 / sigma, b = 2.0 * pi / F;
	auto plain = [&](double s) { return -sigma * std::exp(-a * s); };
	auto osc = [&](double s) {
		return std::exp(-a * s) * (b * std::sin(b * s) - a * std::cos(b * s)) / (a * a + b * b);
	};
	return 0.5 * (plain(hi) - plain(lo)) - 0.5 * (osc(hi) - osc(lo));
}

bool at_singularity(const roof &f, double y)
{
	return f.singular() && frac(y) == 0.0;
}

} // namespace

double circle_trig::operator()(double y) const
{
	double v = c;
	for (auto &t : terms) {
		double ph = 2.0 * pi * frac_mul(uint64_t(std::abs(t.k)), y);
		double sg = t.k < 0 ? -1.0 : 1.0;
		v += t.a * std::cos(ph) + sg * t.b * std::sin(ph);
	}
	return v;
}

double circle_trig::sup_bound() const
{
	double s = std::abs(c);
	for (auto &t : terms)
		s += std::hypot(t.a, t.b);
	return s;
}

tower_observable::tower_observable(roof f, shape sh) : f_(std::move(f)), sh_(std::move(sh))
{
	if (!(sh_.sigma > 0.0))
		throw error(errc::invalid_input, "tower observable needs sigma > 0");
	if (!std::isfinite(sh_.level) || !std::isfinite(sh_.amp))
		throw error(errc::invalid_input, "tower observable parameters must be finite");
}

double tower_observable::eval_with_height(double y, double s, double height) const
{
	if (sh_.amp == 0.0 || !std::isfinite(height))
		return sh_.level;
	double w = std::sin(pi * s / height);
	return sh_.level + sh_.amp * std::exp(-s / sh_.sigma) * sh_.u(y) * w * w;
}

double tower_observable::operator()(double y, double s) const
{
	if (sh_.amp == 0.0 || at_singularity(f_, y))
		return sh_.level;
	return eval_with_height(y, s, f_(y));
}

double tower_observable::fiber(double y, double lo, double hi) const
{
	double r = sh_.level * (hi - lo);
	if (sh_.amp == 0.0 || at_singularity(f_, y))
		return r;
	double uy = sh_.u(y);
	if (uy == 0.0)
		return r;
	return r + sh_.amp * uy * damped_sin2(sh_.sigma, f_(y), lo, hi);
}

double tower_observable::decay_bound(double r) const
{
	return std::abs(sh_.amp) * std::exp(-r / sh_.sigma) * sh_.u.sup_bound();
}

tower_fn tower_observable::as_fn() const
{
	return [self = *this](double y, double s) { return self(y, s); };
}

fiber_fn tower_observable::as_fiber() const
{
	return [self = *this](double y, double lo, double hi) { return self.fiber(y, lo, hi); };
}

nlohmann::json tower_observable::to_json() const
{
	nlohmann::json u = nlohmann::json::array();
	for (auto &t : sh_.u.terms)
		u.push_back({t.k, t.a, t.b});
	return {{"level", sh_.level}, {"amp", sh_.amp}, {"sigma", sh_.sigma},
	        {"u_const", sh_.u.c}, {"u_terms", u}, {"roof", f_.to_json()}};
}

tower_observable::condition_report tower_observable::check_conditions(const rotation_number &alpha,
                                                                      unsigned samples) const
{
	condition_report r;
	for (double s : {0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 50.0}) {
		double eps = 1e-12;
		r.continuity = std::max(r.continuity, std::abs((*this)(eps, s) - (*this)(-eps, s)));
	}
	splitmix64 rng(0x5eed);
	for (unsigned i = 0; i < samples; ++i) {
		double y = rng.uniform();
		if (at_singularity(f_, y))
			continue;
		double top = (*this)(y, f_(y));
		double bottom = (*this)(alpha.orbit(y, int64_t(1)), 0.0);
		r.matching = std::max(r.matching, std::abs(top - bottom));
		for (double h : {10.0, 100.0, 1000.0})
			r.decay = std::max(r.decay, std::abs((*this)(y, h) - sh_.level) - decay_bound(h));
	}
	if (r.continuity > 1e-6 || r.matching > 1e-12 || r.decay > 1e-15)
		throw error(errc::construction,
		            "tower observable fails its conditions (continuity " + std::to_string(r.continuity) +
		                ", matching " + std::to_string(r.matching) + ", decay " +
		                std::to_string(r.decay) + ")");
	return r;
}

tower_observable make_tower_observable(const roof &f, const rotation_number &alpha,
                                       tower_observable::shape sh)
{
	tower_observable obs(f, std::move(sh));
	obs.check_conditions(alpha);
	return obs;
}

double torus_observable::operator()(double x, double y) const
{
	double v = c;
	for (auto &t : terms) {
		double ph = frac_mul(uint64_t(std::abs(t.kx)), x) * (t.kx < 0 ? -1.0 : 1.0) +
		            frac_mul(uint64_t(std::abs(t.ky)), y) * (t.ky < 0 ? -1.0 : 1.0);
		v += (t.a * e_of(ph)).real();
	}
	return v;
}

double torus_observable::sup_bound() const
{
	double s = std::abs(c);
	for (auto &t : terms)
		s += std::abs(t.a);
	return s;
}

double torus_observable::mean_leb() const
{
	double m = c;
	for (auto &t : terms)
		if (t.kx == 0 && t.ky == 0)
			m += t.a.real();
	return m;
}

double torus_observable::mean_mu(const time_change &v) const
{
	// int Re(a e(k)) Re(b e(l)) = Re(a conj b)/2 when k = l, Re(a b)/2 when k = -l != 0
	double m = mean_leb();
	for (auto &t : terms) {
		for (auto &s : v.terms) {
			if (!fits_u64(s.q) || s.q > bigint(int64_t(1) << 62))
				continue;
			auto q = s.q.convert_to<int64_t>();
			if (t.kx == q && t.ky == s.m)
				m += 0.5 * (t.a * std::conj(s.a)).real();
			else if (t.kx == -q && t.ky == -s.m)
				m += 0.5 * (t.a * s.a).real();
		}
	}
	return m;
}

torus_fn torus_observable::as_fn() const
{
	return [self = *this](double x, double y) { return self(x, y); };
}

double space_average(const tower_observable &psi, bool normalized)
{
	const roof &f = psi.base_roof();
	double total_f = f.integral();
	double base = psi.level() * total_f;
	auto &sh = psi.params();
	if (sh.amp != 0.0) {
		auto g = [&](double y) {
			if (at_singularity(f, y))
				return 0.0;
			double F = f(y);
			return sh.u(y) * damped_sin2(sh.sigma, F, 0.0, F);
		};
		std::vector<double> cuts;
		if (f.singular()) {
			// geometric grading toward the singular point from both sides
			for (int k = 48; k >= 1; --k)
				cuts.push_back(std::ldexp(1.0, -k));
			size_t m = cuts.size();
			for (size_t i = m; i-- > 0;)
				cuts.push_back(1.0 - cuts[i]);
			cuts.insert(cuts.begin(), 0.0);
			cuts.push_back(1.0);
			std::sort(cuts.begin(), cuts.end());
			cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
		} else {
			unsigned pieces = 64;
			if (auto *fr = f.fourier())
				for (auto &t : fr->terms)
					if (fits_u64(t.q) && t.q < bigint(1 << 14))
						pieces = std::max(pieces, 4 * t.q.convert_to<unsigned>());
			for (unsigned i = 0; i <= pieces; ++i)
				cuts.push_back(double(i) / pieces);
		}
		double scale = sh.sigma * std::abs(sh.amp) * sh.u.sup_bound() + std::abs(base);
		kahan acc;
		double worst = 0.0, worst_at = 0.0;
		for (size_t i = 0; i + 1 < cuts.size(); ++i) {
			double err = 0.0;
			double a = cuts[i], b = cuts[i + 1];
			double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(g, a, b, 12, 1e-12,
			                                                                         &err);
			acc.add(v);
			if (err > worst) {
				worst = err;
				worst_at = 0.5 * (a + b);
			}
		}
		if (worst * double(cuts.size()) > 1e-6 * scale)
			throw error(errc::precision, "space average quadrature did not converge near y = " +
			                                 std::to_string(worst_at));
		base += sh.amp * acc.value();
	}
	return normalized ? base / total_f : base;
}

namespace {

struct walk_state {
	flow_point point;
	double t = 0.0; // flow time of point relative to the start
};

void walk_primes(const special_flow &F, const prime_table &primes, walk_state &st, uint64_t lo,
                 uint64_t hi, int z, uint64_t m,
                 const std::function<void(uint64_t, const flow_point &)> &visit)
{
	primes.for_each_prime(lo, hi, [&](uint64_t p) {
		double t = double(z) * (double(p) - double(m));
		try {
			st.point = F.evaluate(st.point, t - st.t).end;
		} catch (const error &e) {
			throw error(e.code(), std::string(e.what()) + " at prime " + std::to_string(p));
		}
		st.t = t;
		visit(p, st.point);
	});
}

} // namespace

void prime_orbit(const special_flow &F, const prime_table &primes, const flow_point &start,
                 uint64_t N, int z, uint64_t m,
                 const std::function<void(uint64_t, const flow_point &)> &visit)
{
	if (z != 1 && z != -1)
		throw error(errc::invalid_input, "direction must be +1 or -1");
	if (N < 2)
		return;
	walk_state st{start, 0.0};
	walk_primes(F, primes, st, 2, N, z, m, visit);
}

double prime_orbit_sum(const tower_fn &psi, const special_flow &F, const prime_table &primes,
                       const flow_point &start, uint64_t N, int z, uint64_t m)
{
	kahan acc;
	prime_orbit(F, primes, start, N, z, m, [&](uint64_t p, const flow_point &q) {
		acc.add(psi(q.x, q.s) * std::log(double(p)));
	});
	return acc.value();
}

double prime_orbit_sum(const torus_fn &psi, const reparam_flow &F, const prime_table &primes,
                       const torus_point &start, uint64_t N)
{
	kahan acc;
	if (N < 2)
		return 0.0;
	double u = 0.0, prev = 0.0;
	primes.for_each_prime(2, N, [&](uint64_t p) {
		double t = double(p);
		double guess = u + (t - prev) / F.speed_along(u, start);
		u = F.time_inverse(t, start, guess);
		prev = t;
		auto q = F.linear(u, start);
		acc.add(psi(q.x, q.y) * std::log(t));
	});
	return acc.value();
}

coboundary_prime_sums coboundary_prime_orbit(const coboundary &psi, const prime_table &primes,
                                             const torus_point &start,
                                             const std::vector<uint64_t> &N_grid)
{
	coboundary_prime_sums out;
	if (N_grid.empty())
		return out;
	if (!std::is_sorted(N_grid.begin(), N_grid.end()))
		throw error(errc::invalid_input, "N grid must be ascending");
	uint64_t Nc = psi.N();
	uint64_t len = N_grid.back() + Nc + 2;
	const auto &F = psi.flow();
	// g along the orbit at integer times: T_n T_p = T_{p + n}
	std::vector<double> G(len);
	double u = 0.0;
	for (uint64_t k = 0; k < len; ++k) {
		if (k > 0)
			u = F.time_inverse(double(k), start, u + 1.0 / F.speed_along(u, start));
		auto q = F.linear(u, start);
		G[k] = psi.g()(q.x, q.y);
	}
	std::vector<double> P(len + 1, 0.0);
	kahan run;
	for (uint64_t k = 0; k < len; ++k) {
		run.add(G[k]);
		P[k + 1] = run.value();
	}
	auto psi_at = [&](uint64_t p) {
		return -G[p] + (P[p + Nc + 1] - P[p + 1]) / double(Nc);
	};
	kahan acc;
	uint64_t last = 1;
	for (uint64_t N : N_grid) {
		if (N > last)
			primes.for_each_prime(last + 1, N, [&](uint64_t p) { acc.add(psi_at(p) * std::log(double(p))); });
		last = std::max(last, N);
		out.N.push_back(N);
		out.sums.push_back(acc.value());
	}
	uint64_t Mmax = std::min<uint64_t>(N_grid.back(), 10000);
	for (uint64_t M = 0; M <= Mmax; ++M) {
		double h = 0.0;
		for (uint64_t i = 0; i < Nc; ++i)
			h += double(Nc - i) * G[M + i];
		out.sup_transfer = std::max(out.sup_transfer, std::abs(h) / double(Nc));
	}
	return out;
}

tower_boxes::tower_boxes(const roof &f, unsigned cells, double h_max) : cells_(cells), h_max_(h_max)
{
	if (cells == 0 || !(h_max > 0.0))
		throw error(errc::invalid_input, "box partition needs cells > 0 and h_max > 0");
	ref_.assign(size_t(cells) * cells + 1, 0.0);
	const unsigned sub = 512;
	double dh = h_max / cells;
	double bounded = 0.0;
	for (unsigned i = 0; i < cells; ++i) {
		for (unsigned k = 0; k < sub; ++k) {
			double x = (i + (k + 0.5) / sub) / cells;
			double F = std::min(f(x), h_max);
			double w = 1.0 / (double(cells) * sub);
			for (unsigned j = 0; j < cells && j * dh < F; ++j)
				ref_[size_t(i) * cells + j] += w * (std::min(F, (j + 1) * dh) - j * dh);
			bounded += w * F;
		}
	}
	double total = f.integral();
	// the mass above h_max follows from the exact integral
	ref_.back() = std::max(0.0, total - bounded);
	for (auto &r : ref_)
		r /= total;
}

size_t tower_boxes::index(const flow_point &p) const
{
	if (p.s >= h_max_)
		return ref_.size() - 1;
	auto i = std::min<size_t>(cells_ - 1, size_t(frac(p.x) * cells_));
	auto j = std::min<size_t>(cells_ - 1, size_t(std::max(0.0, p.s) / h_max_ * cells_));
	return i * cells_ + j;
}

namespace {

double tv_distance(const std::vector<double> &w, const std::vector<double> &ref)
{
	double total = 0.0;
	for (double v : w)
		total += v;
	if (total <= 0.0)
		return 1.0;
	double d = 0.0;
	for (size_t i = 0; i < ref.size(); ++i)
		d += std::abs(w[i] / total - ref[i]);
	return 0.5 * d;
}

// int_{x0}^{x1} e(q x) dx / (x1 - x0)
cplx bin_average(const bigint &q, double x0, double x1)
{
	if (q == 0)
		return 1.0;
	double qd = to_double(q);
	cplx d = e_of(frac_mul(q, x1)) - e_of(frac_mul(q, x0));
	return d / (cplx(0.0, 2.0 * pi * qd) * (x1 - x0));
}

} // namespace

double tower_boxes::tv(const std::vector<double> &weights) const
{
	return tv_distance(weights, ref_);
}

torus_boxes::torus_boxes(const time_change &v, unsigned cells) : cells_(cells)
{
	if (cells == 0)
		throw error(errc::invalid_input, "box partition needs cells > 0");
	ref_.assign(size_t(cells) * cells, 1.0 / (double(cells) * cells));
	for (unsigned i = 0; i < cells; ++i) {
		double x0 = double(i) / cells, x1 = double(i + 1) / cells;
		for (unsigned j = 0; j < cells; ++j) {
			double y0 = double(j) / cells, y1 = double(j + 1) / cells;
			double add = 0.0;
			for (auto &t : v.terms) {
				cplx ax = bin_average(t.q, x0, x1);
				cplx ay = bin_average(bigint(t.m), y0, y1);
				add += (t.a * ax * ay).real();
			}
			ref_[size_t(i) * cells + j] *= 1.0 + add;
		}
	}
}

size_t torus_boxes::index(const torus_point &p) const
{
	auto i = std::min<size_t>(cells_ - 1, size_t(frac(p.x) * cells_));
	auto j = std::min<size_t>(cells_ - 1, size_t(frac(p.y) * cells_));
	return i * cells_ + j;
}

double torus_boxes::tv(const std::vector<double> &weights) const
{
	return tv_distance(weights, ref_);
}

pnt_result pnt_report(const tower_observable &psi, const special_flow &F, const prime_table &primes,
                      const flow_point &start, const std::vector<uint64_t> &N_grid,
                      const pnt_options &opt)
{
	if (!std::is_sorted(N_grid.begin(), N_grid.end()) ||
	    (!N_grid.empty() && N_grid.back() > primes.limit()))
		throw error(errc::out_of_range, "N grid must be ascending and within the sieve limit");
	pnt_result res;
	res.space_average = space_average(psi, true);
	tower_boxes boxes(F.height(), opt.cells, opt.h_max);
	auto fiber = psi.as_fiber();

	std::vector<std::vector<pnt_row>> per_z(opt.directions.size());
	auto run = [&](size_t zi) {
		int z = opt.directions[zi];
		std::vector<double> weights(boxes.size(), 0.0);
		walk_state st{start, 0.0};
		kahan prime_sum, integral;
		flow_point seg_start = start;
		uint64_t prev = 0;
		for (uint64_t N : N_grid) {
			walk_primes(F, primes, st, prev + 1, N, z, opt.shift, [&](uint64_t p, const flow_point &q) {
				double lw = std::log(double(p));
				prime_sum.add(psi(q.x, q.s) * lw);
				weights[boxes.index(q)] += lw;
			});
			double len = double(N - prev);
			if (len > 0) {
				integral.add(time_integral_fibers(F, fiber, seg_start, len, z));
				seg_start = F.evaluate(seg_start, double(z) * len).end;
			}
			prev = N;
			pnt_row r;
			r.N = N;
			r.z = z;
			r.prime_sum = prime_sum.value();
			r.time_integral = integral.value();
			double n = double(N), avg = res.space_average * n;
			r.D1 = std::abs(r.prime_sum - r.time_integral) / n;
			r.D2 = std::abs(r.time_integral - avg) / n;
			r.D3 = std::abs(r.prime_sum - avg) / n;
			r.box_tv = boxes.tv(weights);
			per_z[zi].push_back(r);
		}
	};
	if (opt.threads > 1 && opt.directions.size() > 1) {
		std::vector<std::thread> pool;
		std::vector<std::exception_ptr> errs(opt.directions.size());
		for (size_t zi = 0; zi < opt.directions.size(); ++zi)
			pool.emplace_back([&, zi] {
				try {
					run(zi);
				} catch (...) {
					errs[zi] = std::current_exception();
				}
			});
		for (auto &t : pool)
			t.join();
		for (auto &e : errs)
			if (e)
				std::rethrow_exception(e);
	} else {
		for (size_t zi = 0; zi < opt.directions.size(); ++zi)
			run(zi);
	}
	for (auto &rows : per_z)
		res.rows.insert(res.rows.end(), rows.begin(), rows.end());
	return res;
}

nlohmann::json pnt_json(const pnt_result &r)
{
	nlohmann::json rows = nlohmann::json::array();
	for (auto &x : r.rows)
		rows.push_back({{"N", x.N},
		                {"z", x.z},
		                {"prime_sum", x.prime_sum},
		                {"time_integral", x.time_integral},
		                {"D1", x.D1},
		                {"D2", x.D2},
		                {"D3", x.D3},
		                {"box_tv", x.box_tv}});
	return {{"space_average", r.space_average}, {"normalization", "int f"}, {"rows", rows}};
}

} // namespace kflow
