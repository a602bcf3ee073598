#include "kflow/special_flow.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <ostream>

namespace kflow {

namespace {

double falling(double g, int k)
{
	double r = 1.0;
	for (int i = 0; i < k; ++i)
		r *= g - i;
	return r;
}

// f^(k)(x) for k = 0..K
void power_derivs(const power_roof &p, double x, int K, double *out)
{
	x = frac(x);
	if (x == 0.0)
		throw error(errc::singularity, "orbit hits the singularity");
	double y = 1.0 - x;
	double px = std::pow(x, p.gamma), py = std::pow(y, p.gamma);
	double ff = 1.0;
	for (int k = 0; k <= K; ++k) {
		out[k] = p.kappa * ff * (px + (k % 2 ? -py : py)) + (k == 0 ? p.c0 : 0.0);
		ff *= p.gamma - k;
		px /= x;
		py /= y;
	}
}

void append_merged(interval_set &out, double lo, double hi)
{
	if (hi <= lo)
		return;
	if (!out.empty() && lo - out.back().hi <= 1e-9 * std::max(1.0, std::abs(lo))) {
		out.back().hi = std::max(out.back().hi, hi);
		return;
	}
	out.push_back({lo, hi});
}

} // namespace

special_flow::special_flow(roof f, rotation_number alpha, flow_options opt)
    : f_(std::move(f)), alpha_(std::move(alpha)), opt_(opt)
{
	if (f_.inf() <= 0.0)
		throw error(errc::invalid_input, "roof must be bounded away from zero");
	if (opt_.taylor_order < 1 || opt_.taylor_order > 12)
		throw error(errc::invalid_input, "taylor_order must lie in [1, 12]");
}

flow_point special_flow::point(double x, double s) const
{
	flow_point p{frac(x), s};
	validate(p);
	return p;
}

void special_flow::validate(const flow_point &p) const
{
	double top = f_(p.x);
	if (!(p.s >= 0.0 && p.s < top))
		throw error(errc::invalid_input, "flow point height " + std::to_string(p.s) +
		                                     " outside [0, f(x)) = [0, " + std::to_string(top) + ")");
}

flow_step special_flow::finish(const flow_point &p, double t, int64_t N, double consumed) const
{
	double h = (p.s + t) - consumed;
	double y = alpha_.orbit(p.x, N);
	double fy = f_(y);
	for (int fix = 0; fix < 8; ++fix) {
		if (h < 0.0) {
			if (h < -1e-7)
				throw error(errc::precision, "flow evaluation drifted below the fiber by " +
				                                 std::to_string(-h));
			--N;
			y = alpha_.orbit(p.x, N);
			fy = f_(y);
			h += fy;
			consumed -= fy;
		} else if (h >= fy) {
			if (h - fy > 1e-7)
				throw error(errc::precision, "flow evaluation drifted above the roof by " +
				                                 std::to_string(h - fy));
			h -= fy;
			consumed += fy;
			++N;
			y = alpha_.orbit(p.x, N);
			fy = f_(y);
		} else {
			return {{y, h}, N, consumed};
		}
	}
	throw error(errc::precision, "flow evaluation could not satisfy the defining inclusion");
}

flow_step special_flow::evaluate_naive(const flow_point &p, double t) const
{
	validate(p);
	double u = p.s + t;
	kahan consumed;
	int64_t N = 0;
	while (true) {
		double r = u - consumed.value();
		if (r >= 0.0) {
			double fy = f_(alpha_.orbit(p.x, N));
			if (r < fy)
				break;
			consumed.add(fy);
			++N;
		} else {
			--N;
			consumed.add(-f_(alpha_.orbit(p.x, N)));
		}
	}
	return finish(p, t, N, consumed.value());
}

flow_step special_flow::evaluate(const flow_point &p, double t) const
{
	if (!opt_.accelerate)
		return evaluate_naive(p, t);
	validate(p);
	switch (f_.type()) {
	case roof::kind::constant: {
		double c = f_.inf();
		return finish(p, t, int64_t(std::floor((p.s + t) / c)), std::floor((p.s + t) / c) * c);
	}
	case roof::kind::fourier:
		return evaluate_search(p, t);
	case roof::kind::power:
		return evaluate_power(p, t);
	}
	return evaluate_naive(p, t);
}

flow_step special_flow::evaluate_search(const flow_point &p, double t) const
{
	double u = p.s + t, inf = f_.inf();
	auto S = [&](int64_t n) { return f_.birkhoff(p.x, n, alpha_, 0); };
	int64_t lo, hi; // S(lo) <= u < S(hi)
	if (u >= 0) {
		lo = 0;
		hi = int64_t(u / inf) + 2;
	} else {
		lo = int64_t(std::floor(u / inf)) - 2;
		hi = 0;
	}
	while (hi - lo > 1) {
		int64_t mid = lo + (hi - lo) / 2;
		if (S(mid) <= u)
			lo = mid;
		else
			hi = mid;
	}
	return finish(p, t, lo, S(lo));
}

int special_flow::pick_level(double fibers) const
{
	if (opt_.block_level >= 0)
		return opt_.block_level >= 1 && size_t(opt_.block_level) <= alpha_.max_level()
		           ? opt_.block_level
		           : -1;
	int best = -1;
	for (size_t n = 1; n <= alpha_.max_level(); ++n) {
		if (!fits_u64(alpha_.q(n)))
			break;
		double q = double(alpha_.q64(n));
		if (q < 8)
			continue;
		if (q > fibers / 8)
			break;
		double shift = std::abs(alpha_.beta(n)) * fibers / q;
		if (shift <= 1e-3 * std::pow(q, -1.0 - opt_.delta))
			best = int(n);
	}
	return best;
}

// Blocks of q_n consecutive fibers are consumed at once.  A block starting m blocks after an
// anchor is the anchor block shifted by m beta_n, so its roof sum is a Taylor polynomial in
// m beta_n around the anchor's derivative sums, accepted only when the Lagrange remainder is
// negligible and the block stays outside the guard radius.
flow_step special_flow::evaluate_power(const flow_point &p, double t) const
{
	const power_roof &pr = *f_.power();
	double u = p.s + t;
	kahan consumed;
	int64_t N = 0;
	auto step = [&]() {
		double r = u - consumed.value();
		if (r >= 0.0) {
			double fy = f_(alpha_.orbit(p.x, N));
			if (r < fy)
				return false;
			consumed.add(fy);
			++N;
		} else {
			--N;
			consumed.add(-f_(alpha_.orbit(p.x, N)));
		}
		return true;
	};

	int lvl = pick_level(std::abs(u) / f_.integral());
	if (lvl < 0) {
		while (step()) {
		}
		return finish(p, t, N, consumed.value());
	}

	const uint64_t q = alpha_.q64(size_t(lvl));
	const int64_t qi = int64_t(q);
	const double beta = alpha_.beta(size_t(lvl));
	const double guard = std::pow(double(q), -1.0 - opt_.delta);
	const int K = opt_.taylor_order;
	double rc = 2.0 * pr.kappa * std::abs(falling(pr.gamma, K + 1)) * double(q);
	for (int k = 2; k <= K + 1; ++k)
		rc /= k;
	const double block_est = double(q) * f_.integral();

	struct anchor_t {
		bool ok = false;
		int64_t A = 0;
		std::vector<double> D;
		orbit_neighborhood pts;
	} anc;
	std::vector<double> buf(size_t(K) + 1);
	auto make_anchor = [&](int64_t A) {
		anc.A = A;
		std::vector<kahan> acc(size_t(K) + 1);
		for (int64_t i = 0; i < qi; ++i) {
			power_derivs(pr, alpha_.orbit(p.x, A + i), K, buf.data());
			for (int k = 0; k <= K; ++k)
				acc[size_t(k)].add(buf[size_t(k)]);
		}
		anc.D.resize(size_t(K) + 1);
		for (int k = 0; k <= K; ++k)
			anc.D[size_t(k)] = acc[size_t(k)].value();
		anc.pts = orbit_neighborhood(alpha_, q, 0.0, alpha_.orbit(p.x, A), +1);
		anc.ok = true;
	};
	auto block_sum = [&](int64_t start, double &B) {
		int64_t m = (start - anc.A) / qi;
		double h = double(m) * beta;
		double dmin = std::max(0.0, anc.pts.distance(-0.5 * h) - 0.5 * std::abs(h));
		if (dmin < guard)
			return false;
		if (m != 0) {
			double R = rc * std::pow(std::abs(h), K + 1) * std::pow(dmin, pr.gamma - K - 1);
			if (!(R <= 1e-13 * anc.D[0]))
				return false;
		}
		// Horner form of sum D_k h^k / k!
		B = 0.0;
		for (int k = K; k >= 0; --k)
			B = B * h / double(k + 1) + anc.D[size_t(k)];
		return true;
	};

	while (true) {
		double r = u - consumed.value();
		if (std::abs(r) < 1.1 * block_est) {
			if (!step())
				break;
			continue;
		}
		int64_t start = r >= 0 ? N : N - qi;
		double B = 0.0;
		bool have = false;
		if (anc.ok && (start - anc.A) % qi == 0)
			have = block_sum(start, B);
		if (!have && !(anc.ok && anc.A == start)) {
			make_anchor(start);
			have = block_sum(start, B);
		}
		if (!have) {
			// too close to the singularity: walk the block fiber by fiber
			bool more = true;
			for (int64_t i = 0; i < qi && more; ++i)
				more = step();
			if (!more)
				break;
			continue;
		}
		if (r >= 0 && r >= B) {
			consumed.add(B);
			N += qi;
		} else if (r < 0 && r + B < 0) {
			consumed.add(-B);
			N -= qi;
		} else {
			while (step()) {
			}
			break;
		}
	}
	return finish(p, t, N, consumed.value());
}

double tower_metric(const flow_point &a, const flow_point &b)
{
	return circle_dist(a.x, b.x) + std::abs(a.s - b.s);
}

bool section_avoidance(const special_flow &F, const flow_point &p, double t, int z, double rho)
{
	if (t < 0)
		throw error(errc::invalid_input, "section_avoidance needs t >= 0");
	if (rho <= 0.0)
		return true;
	int64_t N = F.evaluate(p, z >= 0 ? t : -t).N;
	double start = N < 0 ? F.alpha().orbit(p.x, N) : p.x;
	return F.alpha().orbit_min_distance(start, uint64_t(std::abs(N))) >= rho;
}

interval_set visit_intervals(const special_flow &F, const flow_point &p, double t_lo, double t_hi,
                             const std::function<bool(double)> &in_base, double min_height)
{
	interval_set out;
	if (t_hi < t_lo)
		return out;
	flow_step st = F.evaluate(p, t_lo);
	const auto &alpha = F.alpha();
	// fiber j starts at time t_lo - s + (sum of the previous heights)
	kahan start;
	start.add(t_lo);
	start.add(-st.end.s);
	for (int64_t j = 0;; ++j) {
		double y = j == 0 ? st.end.x : alpha.orbit(p.x, st.N + j);
		double top = F.height()(y);
		double s0 = start.value();
		if (s0 > t_hi)
			break;
		if (in_base(y))
			append_merged(out, std::max(t_lo, s0 + min_height), std::min(t_hi, s0 + top));
		start.add(top);
	}
	return out;
}

interval_set interval_difference(const interval_set &a, const interval_set &b)
{
	interval_set out;
	for (auto iv : a) {
		double lo = iv.lo;
		for (auto &c : b) {
			if (c.hi <= lo || c.lo >= iv.hi)
				continue;
			if (c.lo > lo)
				out.push_back({lo, c.lo});
			lo = std::max(lo, c.hi);
		}
		if (lo < iv.hi)
			out.push_back({lo, iv.hi});
	}
	return out;
}

double measure(const interval_set &s)
{
	double m = 0;
	for (auto &iv : s)
		m += iv.length();
	return m;
}

namespace {

nlohmann::json intervals_json(const interval_set &s)
{
	nlohmann::json a = nlohmann::json::array();
	for (auto &iv : s)
		a.push_back({iv.lo, iv.hi});
	return a;
}

} // namespace

nlohmann::json ab_report::to_json() const
{
	return {{"A", intervals_json(A)},
	        {"A0", intervals_json(A0)},
	        {"B", intervals_json(B)},
	        {"A_minus_A0", intervals_json(A_minus_A0)},
	        {"t0", t0},
	        {"t1", t1},
	        {"horizon", horizon},
	        {"deep_threshold", deep_threshold},
	        {"window_radius", window_radius},
	        {"central_radius", central_radius},
	        {"P1", P1},
	        {"P2", P2},
	        {"P3", P3},
	        {"A_minus_A0_measure", A_minus_A0_measure},
	        {"A_minus_A0_fraction", horizon > 0 ? A_minus_A0_measure / horizon : 0.0},
	        {"counterexample", counterexample}};
}

ab_report ab_decomposition(const special_flow &F, const flow_point &p, double horizon, size_t n,
                           double delta, double deep_threshold)
{
	const auto &alpha = F.alpha();
	if (horizon <= 0)
		throw error(errc::invalid_input, "horizon must be positive");
	if (delta <= 0)
		throw error(errc::invalid_input, "delta must be positive");
	if (auto pr = F.height().power(); pr && !(-pr->gamma * (1.0 + delta) < 1.0))
		throw error(errc::invalid_input, "delta must satisfy -gamma (1 + delta) < 1");
	if (n + 1 > alpha.max_level())
		throw error(errc::out_of_range, "level beyond the available denominators");

	ab_report r;
	r.horizon = horizon;
	r.deep_threshold = deep_threshold < 0 ? std::log(horizon) : deep_threshold;
	uint64_t q = alpha.q64(n);
	r.window_radius = std::pow(double(q), -1.0 - delta);
	r.central_radius = 0.25 / to_double(alpha.q(n + 1));

	orbit_neighborhood Ia(alpha, q, r.window_radius, 0.0, -1);
	double cr = r.central_radius;
	r.A = visit_intervals(F, p, 0.0, horizon, [&](double y) { return Ia.contains(y); });
	r.A0 = visit_intervals(F, p, 0.0, horizon, [&](double y) { return circle_norm(y) <= cr; },
	                       r.deep_threshold);
	r.B = interval_difference({{0.0, horizon}}, r.A);
	r.A_minus_A0 = interval_difference(r.A, r.A0);
	r.A_minus_A0_measure = measure(r.A_minus_A0);

	r.P1 = r.A.size() <= 1;
	if (!r.A.empty()) {
		r.t0 = r.A.front().lo;
		r.t1 = r.A.back().hi;
	}
	r.P2 = r.A0.size() <= 1;
	bool inside = measure(interval_difference(r.A0, r.A)) <= 1e-9 * horizon;
	r.P3 = r.A_minus_A0.size() <= 2 && inside;

	std::string ce;
	if (!r.P1)
		ce += "I_a tower visited in " + std::to_string(r.A.size()) + " separate intervals, first gap [" +
		      std::to_string(r.A[0].hi) + ", " + std::to_string(r.A[1].lo) + "); ";
	if (!r.P2)
		ce += "deep central window visited in " + std::to_string(r.A0.size()) + " intervals; ";
	if (!inside)
		ce += "deep central window not contained in the I_a tower; ";
	else if (r.A_minus_A0.size() > 2)
		ce += "A minus A0 has " + std::to_string(r.A_minus_A0.size()) + " components; ";
	r.counterexample = ce;
	return r;
}

nlohmann::json window_report::to_json() const
{
	return {{"windows", intervals_json(windows)},
	        {"lower", lower},
	        {"upper", upper},
	        {"min_ratio_lower", min_ratio_lower},
	        {"max_ratio_upper", max_ratio_upper},
	        {"contiguous", contiguous},
	        {"violating_u", violating_u}};
}

window_report window_decomposition(const special_flow &F, double x_tilde, uint64_t L, size_t n,
                                   uint64_t count, double delta, double t1)
{
	const auto &alpha = F.alpha();
	const roof &f = F.height();
	if (L == 0 || count == 0)
		throw error(errc::invalid_input, "window length and count must be positive");
	uint64_t q = alpha.q64(n);
	uint64_t len = L * q;
	double radius = std::pow(double(q), -1.0 - delta);
	orbit_neighborhood Ia(alpha, q, radius, 0.0, -1);

	double V = 0.0;
	if (auto pr = f.power())
		V = 4.0 * pr->kappa * std::pow(double(q), -pr->gamma * (1.0 + delta));
	else if (auto fr = f.fourier())
		for (auto &t : fr->terms)
			V += 4.0 * to_double(t.q) * std::abs(t.b);

	window_report r;
	r.lower = f.inf() * double(len);
	r.upper = double(len) * f.integral() + double(L) * V;
	r.min_ratio_lower = INFINITY;
	kahan pos;
	pos.add(t1);
	for (uint64_t u = 0; u < count; ++u) {
		double base = alpha.orbit(x_tilde, u * len);
		r.bases.push_back(base);
		if (r.violating_u < 0 && Ia.contains(base))
			r.violating_u = int64_t(u);
		double w = f.birkhoff(base, int64_t(len), alpha, 0);
		double lo = pos.value();
		pos.add(w);
		r.windows.push_back({lo, pos.value()});
		r.min_ratio_lower = std::min(r.min_ratio_lower, w / r.lower);
		r.max_ratio_upper = std::max(r.max_ratio_upper, w / r.upper);
	}
	for (size_t i = 1; i < r.windows.size(); ++i)
		r.contiguous = r.contiguous && r.windows[i].lo == r.windows[i - 1].hi;
	return r;
}

fiber_fn quadrature_fiber(tower_fn psi, double rel_tol)
{
	return [psi = std::move(psi), rel_tol](double x, double lo, double hi) {
		if (hi <= lo)
			return 0.0;
		double err = 0.0;
		double v = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
		    [&](double s) { return psi(x, s); }, lo, hi, 20, rel_tol, &err);
		if (!(err <= rel_tol * std::abs(v) + 1e-13 * (hi - lo)))
			throw error(errc::precision, "fiber quadrature did not converge");
		return v;
	};
}

double time_integral_fibers(const special_flow &F, const fiber_fn &fiber, const flow_point &p,
                            double T, int z)
{
	if (T < 0)
		throw error(errc::invalid_input, "time_integral needs T >= 0");
	flow_point cur = p;
	int64_t N0 = 0;
	if (z < 0) {
		auto st = F.evaluate(p, -T);
		cur = st.end;
		N0 = st.N;
	}
	kahan acc;
	double remaining = T;
	for (int64_t j = 0; remaining > 0; ++j) {
		double x = j == 0 ? cur.x : F.alpha().orbit(p.x, N0 + j);
		double s = j == 0 ? cur.s : 0.0;
		double seg = std::min(F.height()(x) - s, remaining);
		try {
			acc.add(fiber(x, s, s + seg));
		} catch (const error &e) {
			throw error(e.code(), std::string(e.what()) + " on fiber " + std::to_string(N0 + j) +
			                          " (x = " + std::to_string(x) + ")");
		}
		remaining -= seg;
	}
	return acc.value();
}

double time_integral(const special_flow &F, const tower_fn &psi, const flow_point &p, double T,
                     int z)
{
	return time_integral_fibers(F, quadrature_fiber(psi), p, T, z);
}

std::vector<trace_row> orbit_trace(const special_flow &F, const flow_point &p, double T,
                                   uint64_t samples)
{
	std::vector<trace_row> rows;
	if (samples == 0)
		return rows;
	double dt = T / double(samples);
	flow_point cur = p;
	int64_t N = 0;
	rows.push_back({0.0, cur.x, cur.s, 0});
	for (uint64_t i = 1; i <= samples; ++i) {
		auto st = F.evaluate(cur, dt);
		cur = st.end;
		N += st.N;
		rows.push_back({dt * double(i), cur.x, cur.s, N});
	}
	return rows;
}

void write_trace_csv(std::ostream &os, const std::vector<trace_row> &rows)
{
	os << "t,x,s,N\n";
	char buf[128];
	for (auto &r : rows) {
		std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%lld\n", r.t, r.x, r.s, (long long)r.N);
		os << buf;
	}
}

} // namespace kflow
