#include "kflow/reparam.hpp"

#include <algorithm>
#include <set>
#include <thread>

namespace kflow {

namespace {

template <class F>
void parallel_rows(unsigned rows, unsigned threads, F &&body)
{
	threads = std::max(1u, std::min(threads, rows));
	if (threads == 1) {
		for (unsigned r = 0; r < rows; ++r)
			body(0u, r);
		return;
	}
	std::vector<std::thread> pool;
	for (unsigned t = 0; t < threads; ++t)
		pool.emplace_back([&, t] {
			for (unsigned r = t; r < rows; r += threads)
				body(t, r);
		});
	for (auto &th : pool)
		th.join();
}

} // namespace

double torus_dist(const torus_point &a, const torus_point &b)
{
	return circle_dist(a.x, b.x) + circle_dist(a.y, b.y);
}

reparam_flow::reparam_flow(rotation_number alpha, time_change v)
    : alpha_(std::move(alpha)), v_(std::move(v))
{
	if (v_.lower_bound() <= 0.0)
		throw error(errc::invalid_input, "time change must be positive");
	for (auto &t : v_.terms) {
		if (t.level > alpha_.max_level() || alpha_.q(t.level) != t.q)
			throw error(errc::invalid_input, "time change frequency is not a denominator of alpha");
		mode md;
		md.q = t.q;
		md.m = t.m;
		md.a = t.a;
		double beta = alpha_.beta(t.level);
		md.step = beta - std::round(beta);
		md.freq = alpha_.p(t.level) + bigint(int64_t(std::round(beta))) + t.m;
		md.omega = to_double(md.freq) + md.step;
		if (fits_u64(md.q) && md.q < bigint(1) << 62)
			md.q_small = md.q.convert_to<int64_t>();
		if (fits_u64(md.freq) && md.freq < bigint(1) << 62)
			md.freq_small = md.freq.convert_to<int64_t>();
		if (md.omega == 0.0)
			throw error(errc::invalid_input, "time change mode constant along the flow");
		bound_ += std::abs(md.a) / (std::numbers::pi * std::abs(md.omega));
		modes_.push_back(md);
	}
}

double reparam_flow::phase(const mode &md, const torus_point &p) const
{
	double qx = md.q_small >= 0 ? frac_mul(uint64_t(md.q_small), p.x) : frac_mul(md.q, p.x);
	return qx + double(md.m) * p.y;
}

double reparam_flow::freq_times(const mode &md, double s)
{
	return md.freq_small >= 0 ? frac_mul(uint64_t(md.freq_small), s) : frac_mul(md.freq, s);
}

double reparam_flow::speed_along(double s, const torus_point &p) const
{
	double v = 1.0;
	for (auto &md : modes_)
		v += (md.a * e_of(phase(md, p) + freq_times(md, s) + md.step * s)).real();
	return v;
}

double reparam_flow::cocycle(double t, const torus_point &p) const
{
	// int_0^t e(phi + omega s) ds = e(phi + omega t / 2) sin(pi omega t) / (pi omega), with omega t
	// reduced mod 2
	kahan acc;
	acc.add(t);
	for (auto &md : modes_) {
		double th = 2.0 * freq_times(md, 0.5 * t) + md.step * t;
		double amp = std::sin(std::numbers::pi * th) / (std::numbers::pi * md.omega);
		acc.add((md.a * e_of(phase(md, p) + 0.5 * th)).real() * amp);
	}
	return acc.value();
}

double reparam_flow::time_inverse(double t, const torus_point &p, double guess) const
{
	double lo = t - bound_ - 1e-12 * (1.0 + std::abs(t));
	double hi = t + bound_ + 1e-12 * (1.0 + std::abs(t));
	double u = std::isnan(guess) ? t : std::clamp(guess, lo, hi);
	double tol = 1e-13 * (1.0 + std::abs(t));
	std::vector<double> ph(modes_.size());
	for (size_t k = 0; k < modes_.size(); ++k)
		ph[k] = phase(modes_[k], p);
	for (int it = 0; it < 80; ++it) {
		// cocycle and speed share the half-angle e(phi + th / 2) and e(th / 2)
		kahan acc;
		acc.add(u);
		double speed = 1.0;
		for (size_t k = 0; k < modes_.size(); ++k) {
			auto &md = modes_[k];
			double th = 2.0 * freq_times(md, 0.5 * u) + md.step * u;
			cplx half = md.a * e_of(ph[k] + 0.5 * th);
			double sn = std::sin(std::numbers::pi * th), cs = std::cos(std::numbers::pi * th);
			acc.add(half.real() * sn / (std::numbers::pi * md.omega));
			speed += half.real() * cs - half.imag() * sn;
		}
		double r = acc.value() - t;
		if (std::abs(r) <= tol)
			return u;
		if (r < 0)
			lo = u;
		else
			hi = u;
		double nu = u - r / speed;
		if (!(nu > lo && nu < hi))
			nu = 0.5 * (lo + hi);
		if (nu == u)
			return u;
		u = nu;
	}
	return u;
}

torus_point reparam_flow::linear(double u, const torus_point &p) const
{
	double hi = alpha_.value(), lo = alpha_.value_lo();
	double prod = u * hi;
	double err = std::fma(u, hi, -prod);
	double shift = frac(prod) + err + u * lo;
	return {frac(p.x + shift), frac(p.y + frac(u))};
}

torus_point reparam_flow::evaluate(double t, const torus_point &p) const
{
	return linear(time_inverse(t, p), p);
}

nlohmann::json reparam_flow::manifest() const
{
	auto j = v_.to_json();
	j["alpha"] = alpha_.to_json();
	return j;
}

reparam_flow reparam_flow::from_manifest(const nlohmann::json &j)
{
	auto alpha = rotation_number::from_json(j.at("alpha"));
	auto v = time_change::from_json(j, alpha);
	return reparam_flow(alpha, v);
}

coboundary::coboundary(const reparam_flow &flow, torus_fn g, uint64_t N)
    : flow_(flow), g_(std::move(g)), N_(N)
{
	if (N_ == 0)
		throw error(errc::invalid_input, "coboundary averaging length must be at least 1");
}

std::vector<double> coboundary::g_orbit(const torus_point &p, uint64_t first, uint64_t count) const
{
	std::vector<double> out(count);
	double u = first == 0 ? 0.0 : NAN;
	for (uint64_t i = 0; i < count; ++i) {
		uint64_t k = first + i;
		double guess = std::isnan(u) ? double(k) : u + 1.0 / flow_.speed_along(u, p);
		u = k == 0 ? 0.0 : flow_.time_inverse(double(k), p, guess);
		auto q = flow_.linear(u, p);
		out[i] = g_(q.x, q.y);
	}
	return out;
}

double coboundary::psi(const torus_point &p) const
{
	auto G = g_orbit(p, 1, N_);
	kahan s;
	for (double v : G)
		s.add(v);
	return -g_(p.x, p.y) + s.value() / double(N_);
}

double coboundary::transfer(const torus_point &p) const
{
	auto G = g_orbit(p, 0, N_);
	kahan s;
	for (uint64_t i = 0; i < N_; ++i)
		s.add(double(N_ - i) * G[i]);
	return -s.value() / double(N_);
}

coboundary::orbit_check coboundary::check_orbit(const torus_point &p, uint64_t Mmax) const
{
	auto G = g_orbit(p, 0, Mmax + N_ + 1);
	std::vector<long double> P(G.size() + 1, 0.0L);
	for (size_t i = 0; i < G.size(); ++i)
		P[i + 1] = P[i] + G[i];
	long double W = 0.0L;
	for (uint64_t i = 0; i < N_; ++i)
		W += (long double)(N_ - i) * G[i];
	long double invN = 1.0L / (long double)N_;
	long double h0 = -W * invN;

	orbit_check r;
	r.max_abs_transfer = double(std::abs(h0));
	long double S = 0.0L;
	for (uint64_t M = 1; M <= Mmax; ++M) {
		uint64_t j = M - 1;
		long double psi_j = -G[j] + (P[j + N_ + 1] - P[j + 1]) * invN;
		S += psi_j;
		W = W - (long double)N_ * G[j] + (P[j + N_ + 1] - P[j + 1]);
		long double hM = -W * invN;
		r.max_abs_sum = std::max(r.max_abs_sum, double(std::abs(S)));
		r.max_abs_transfer = std::max(r.max_abs_transfer, double(std::abs(hM)));
		r.telescoping_residual = std::max(r.telescoping_residual, double(std::abs(S - (h0 - hM))));
	}
	return r;
}

double coboundary::certificate(unsigned grid, unsigned threads) const
{
	std::vector<double> row_max(grid, 0.0);
	parallel_rows(grid, threads, [&](unsigned, unsigned i) {
		double best = 0.0;
		for (unsigned j = 0; j < grid; ++j) {
			torus_point p{(i + 0.5) / grid, (j + 0.5) / grid};
			auto G = g_orbit(p, 1, N_);
			kahan s;
			for (double v : G)
				s.add(v);
			best = std::max(best, std::abs(s.value() / double(N_)));
		}
		row_max[i] = best;
	});
	return grid ? *std::max_element(row_max.begin(), row_max.end()) : 0.0;
}

coboundary coboundary_observable(const reparam_flow &flow, torus_fn g, uint64_t N)
{
	return coboundary(flow, std::move(g), N);
}

double invariance_tv(const reparam_flow &flow, unsigned cells, unsigned sub, unsigned threads)
{
	if (cells == 0 || sub == 0)
		throw error(errc::invalid_input, "invariance_tv needs positive cells and sub");
	unsigned side = cells * sub;
	double w0 = 1.0 / (double(side) * double(side));
	size_t nc = size_t(cells) * cells;
	unsigned nt = std::max(1u, std::min(threads, side));
	std::vector<std::vector<double>> push(nt, std::vector<double>(nc, 0.0));
	std::vector<std::vector<double>> mass(nt, std::vector<double>(nc, 0.0));
	parallel_rows(side, nt, [&](unsigned t, unsigned i) {
		for (unsigned j = 0; j < side; ++j) {
			torus_point p{(i + 0.5) / side, (j + 0.5) / side};
			double w = flow.density(p) * w0;
			mass[t][size_t(i / sub) * cells + j / sub] += w;
			// the sample carries a square of side 1/side; deposit by overlap area
			auto q = flow.evaluate(1.0, p);
			double gx = q.x * side - 0.5, gy = q.y * side - 0.5;
			double fx = std::floor(gx), fy = std::floor(gy);
			double ax = gx - fx, ay = gy - fy;
			int64_t ix = int64_t(fx), iy = int64_t(fy);
			for (int dx = 0; dx < 2; ++dx)
				for (int dy = 0; dy < 2; ++dy) {
					double share = (dx ? ax : 1 - ax) * (dy ? ay : 1 - ay);
					int64_t sx = ((ix + dx) % int64_t(side) + side) % side;
					int64_t sy = ((iy + dy) % int64_t(side) + side) % side;
					push[t][size_t(sx / sub) * cells + size_t(sy / sub)] += w * share;
				}
		}
	});
	double tv = 0.0;
	for (size_t c = 0; c < nc; ++c) {
		double a = 0.0, b = 0.0;
		for (unsigned t = 0; t < nt; ++t) {
			a += push[t][c];
			b += mass[t][c];
		}
		tv += std::abs(a - b);
	}
	return 0.5 * tv;
}

std::vector<katok_row> katok_ratios(const reparam_flow &flow)
{
	const auto &alpha = flow.alpha();
	auto roof = roof_from_timechange(flow.v(), false);
	std::set<size_t> levels;
	size_t top = 0;
	for (auto &t : roof.terms) {
		levels.insert(t.level);
		top = std::max(top, t.level);
	}
	if (levels.empty())
		return {};
	for (size_t n : alpha.flagged())
		if (n <= top)
			levels.insert(n);

	std::vector<katok_row> rows;
	for (size_t n : levels) {
		katok_row r;
		r.level = n;
		r.q = alpha.q(n);
		r.flagged = alpha.is_flagged(n);
		double own = 0.0, all = 0.0;
		for (auto &t : roof.terms) {
			if (t.q % r.q != 0)
				continue;
			double c = 0.5 * std::abs(t.b);
			all += c;
			if (t.q == r.q)
				own += c;
		}
		r.coefficient = own;
		r.tail2 = all - own;
		if (own == 0.0) {
			r.zero_coefficient = true;
			r.ratio1 = r.ratio2 = r.ratio2_tail2 = NAN;
		} else {
			r.ratio1 = std::abs(alpha.beta(n)) / own;
			r.ratio2 = own / all;
			r.ratio2_tail2 = r.tail2 > 0.0 ? own / r.tail2 : INFINITY;
		}
		rows.push_back(r);
	}
	return rows;
}

nlohmann::json katok_json(const std::vector<katok_row> &rows)
{
	auto num = [](double v) -> nlohmann::json {
		if (std::isnan(v))
			return nullptr;
		if (std::isinf(v))
			return "inf";
		return v;
	};
	nlohmann::json a = nlohmann::json::array();
	for (auto &r : rows)
		a.push_back({{"level", r.level},
		             {"q", r.q.str()},
		             {"coefficient", r.coefficient},
		             {"ratio1", num(r.ratio1)},
		             {"ratio2", num(r.ratio2)},
		             {"ratio2_tail2", num(r.ratio2_tail2)},
		             {"tail2", r.tail2},
		             {"flagged", r.flagged},
		             {"zero_coefficient", r.zero_coefficient}});
	return a;
}

} // namespace kflow
