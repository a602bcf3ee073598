#include "kflow/rotation.hpp"
#include "kflow/primes.hpp"

#include <algorithm>
#include <boost/multiprecision/cpp_bin_float.hpp>

namespace kflow {

namespace {

using boost::multiprecision::cpp_rational;

double ratio_to_double(const bigint &num, const bigint &den)
{
	return cpp_rational(num, den).convert_to<double>();
}

bigint parse_bigint(const nlohmann::json &v)
{
	if (v.is_string())
		return bigint(v.get<std::string>());
	if (v.is_number_unsigned())
		return bigint(v.get<uint64_t>());
	if (v.is_number_integer())
		return bigint(v.get<int64_t>());
	throw error(errc::parse, "quotient must be an integer or a decimal string");
}

nlohmann::json dump_bigint(const bigint &v)
{
	if (v <= bigint(uint64_t(1) << 53))
		return v.convert_to<uint64_t>();
	return v.str();
}

} // namespace

double frac_mul(uint64_t q, double x)
{
	if (x == 0.0 || q == 0)
		return 0.0;
	int ex = 0;
	double f = std::frexp(x, &ex);
	int64_t m = int64_t(std::ldexp(f, 53));
	int k = 53 - ex; // x = m / 2^k
	if (k <= 0)
		return 0.0;
	bool neg = m < 0;
	unsigned __int128 prod = (unsigned __int128)(neg ? -m : m) * q;
	if (k < 128)
		prod &= (((unsigned __int128)1) << k) - 1;
	double r = std::ldexp(double(prod), -k);
	return neg ? frac(-r) : frac(r);
}

double frac_mul(const bigint &q, double x)
{
	if (fits_u64(q))
		return frac_mul(q.convert_to<uint64_t>(), x);
	if (x == 0.0)
		return 0.0;
	int ex = 0;
	double f = std::frexp(x, &ex);
	int64_t m = int64_t(std::ldexp(f, 53));
	int k = 53 - ex;
	if (k <= 0)
		return 0.0;
	bigint prod = q * m;
	bigint mod = bigint(1) << k;
	prod %= mod;
	if (prod < 0)
		prod += mod;
	return frac(std::ldexp(prod.convert_to<double>(), -k));
}

bigint ostrowski_expansion::recombine(const rotation_number &alpha) const
{
	bigint m = 0;
	for (auto &[s, b] : terms)
		m += b * alpha.q(s);
	return m;
}

bigint ostrowski_expansion::coefficient(size_t s) const
{
	for (auto &[i, b] : terms)
		if (i == s)
			return b;
	return 0;
}

rotation_number rotation_number::from_partial_quotients(const std::vector<bigint> &a,
                                                        std::vector<size_t> flagged)
{
	if (a.empty())
		throw error(errc::invalid_input, "partial quotient sequence is empty");
	for (size_t i = 0; i < a.size(); ++i)
		if (a[i] < 1)
			throw error(errc::invalid_input,
			            "partial quotient a_" + std::to_string(i + 1) + " must be positive");

	rotation_number r;
	r.depth_ = a.size();
	r.a_.assign(1, bigint(0));
	r.a_.insert(r.a_.end(), a.begin(), a.end());
	r.a_.insert(r.a_.end(), tail_length, bigint(1));

	// q_{-1} = 0, q_0 = 1; p_{-1} = 1, p_0 = 0
	size_t top = r.a_.size() - 1;
	r.q_.resize(top + 1);
	r.p_.resize(top + 1);
	bigint qm = 0, pm = 1;
	r.q_[0] = 1;
	r.p_[0] = 0;
	for (size_t n = 1; n <= top; ++n) {
		r.q_[n] = r.a_[n] * r.q_[n - 1] + (n >= 2 ? r.q_[n - 2] : qm);
		r.p_[n] = r.a_[n] * r.p_[n - 1] + (n >= 2 ? r.p_[n - 2] : pm);
	}
	r.num_ = r.p_[top];
	r.den_ = r.q_[top];

	r.beta_.resize(top + 1);
	for (size_t n = 0; n <= top; ++n)
		r.beta_[n] = ratio_to_double(r.q_[n] * r.num_ - r.p_[n] * r.den_, r.den_);

	r.hi_ = ratio_to_double(r.num_, r.den_);
	int ex = 0;
	double f = std::frexp(r.hi_, &ex);
	bigint mant = bigint(int64_t(std::ldexp(f, 53)));
	int k = 53 - ex;
	bigint scale = bigint(1) << k;
	r.lo_ = ratio_to_double(r.num_ * scale - mant * r.den_, r.den_ * scale);

	std::sort(flagged.begin(), flagged.end());
	flagged.erase(std::unique(flagged.begin(), flagged.end()), flagged.end());
	for (size_t n : flagged)
		if (n > r.depth_)
			throw error(errc::invalid_input, "flagged level beyond supplied depth");
	r.flagged_ = std::move(flagged);
	return r;
}

rotation_number rotation_number::from_partial_quotients(std::initializer_list<uint64_t> a)
{
	std::vector<bigint> v;
	for (auto x : a)
		v.emplace_back(x);
	return from_partial_quotients(v);
}

rotation_number rotation_number::golden(size_t depth)
{
	return from_partial_quotients(std::vector<bigint>(depth, bigint(1)));
}

const bigint &rotation_number::a(size_t n) const
{
	if (n == 0 || n >= a_.size())
		throw error(errc::out_of_range, "partial quotient index out of range");
	return a_[n];
}

const bigint &rotation_number::q(size_t n) const
{
	if (n >= q_.size())
		throw error(errc::out_of_range, "denominator q_" + std::to_string(n) +
		                                    " not available; extend quotients");
	return q_[n];
}

const bigint &rotation_number::p(size_t n) const
{
	if (n >= p_.size())
		throw error(errc::out_of_range, "numerator index out of range");
	return p_[n];
}

uint64_t rotation_number::q64(size_t n) const
{
	const bigint &v = q(n);
	if (!fits_u64(v))
		throw error(errc::out_of_range, "q_" + std::to_string(n) + " exceeds 64 bits");
	return v.convert_to<uint64_t>();
}

double rotation_number::beta(size_t n) const
{
	if (n >= beta_.size())
		throw error(errc::out_of_range, "residual index out of range");
	return beta_[n];
}

size_t rotation_number::level_at_least(const bigint &bound) const
{
	for (size_t n = 0; n <= max_level(); ++n)
		if (q_[n] >= bound)
			return n;
	return max_level() + 1;
}

double rotation_number::orbit(double x, uint64_t i) const
{
	if (i == 0)
		return frac(x);
	double di = double(i);
	double prod = di * hi_;
	double err = std::fma(di, hi_, -prod);
	double f = prod - std::floor(prod);
	return frac(x + f + (err + di * lo_));
}

double rotation_number::orbit(double x, int64_t i) const
{
	if (i >= 0)
		return orbit(x, uint64_t(i));
	double di = double(i);
	double prod = di * hi_;
	double err = std::fma(di, hi_, -prod);
	double f = prod - std::floor(prod);
	return frac(x + f + (err + di * lo_));
}

ostrowski_expansion rotation_number::ostrowski(const bigint &m) const
{
	if (m < 0)
		throw error(errc::invalid_input, "Ostrowski expansion needs a non-negative integer");
	size_t top = q_.size() - 1;
	if (m >= q_[top])
		throw error(errc::out_of_range,
		            "integer exceeds the largest precomputed denominator; extend quotients");
	ostrowski_expansion out;
	bigint rest = m;
	for (size_t s = top + 1; s-- > 0 && rest > 0;) {
		if (q_[s] > rest)
			continue;
		bigint b = rest / q_[s];
		rest -= b * q_[s];
		out.terms.emplace_back(s, b);
	}
	return out;
}

double rotation_number::multiple_mod_one(const bigint &i) const
{
	// i alpha = sum b_s (p_s + beta_s) = sum b_s beta_s mod 1
	auto ex = ostrowski(i);
	kahan acc;
	for (auto &[s, b] : ex.terms) {
		if (fits_u64(b)) {
			acc.add(double(b.convert_to<uint64_t>()) * beta_[s]);
		} else {
			// b_s <= a_{s+1}, so b_s beta_s is bounded; use the exact quotient
			acc.add(ratio_to_double(b * (q_[s] * num_ - p_[s] * den_), den_));
		}
	}
	return frac(acc.value());
}

double rotation_number::multiple_mod_one_exact(const bigint &i) const
{
	bigint r = (i * num_) % den_;
	if (r < 0)
		r += den_;
	return ratio_to_double(r, den_);
}

double rotation_number::orbit_min_distance(double x, uint64_t n) const
{
	if (n > (uint64_t(1) << 34))
		throw error(errc::out_of_range, "orbit_min_distance: orbit length too large");
	double best = circle_norm(x);
	for (uint64_t i = 1; i <= n && best > 0.0; ++i)
		best = std::min(best, circle_norm(orbit(x, i)));
	return best;
}

bool rotation_number::is_flagged(size_t n) const
{
	return std::binary_search(flagged_.begin(), flagged_.end(), n);
}

nlohmann::json rotation_number::to_json() const
{
	nlohmann::json qs = nlohmann::json::array();
	for (size_t n = 1; n <= depth_; ++n)
		qs.push_back(dump_bigint(a_[n]));
	return {{"quotients", qs}, {"flags", flagged_}};
}

rotation_number rotation_number::from_json(const nlohmann::json &j)
{
	if (!j.contains("quotients") || !j["quotients"].is_array())
		throw error(errc::parse, "rotation number JSON needs a 'quotients' array");
	std::vector<bigint> a;
	for (auto &v : j["quotients"])
		a.push_back(parse_bigint(v));
	std::vector<size_t> flags;
	if (j.contains("flags"))
		flags = j["flags"].get<std::vector<size_t>>();
	return from_partial_quotients(a, flags);
}

bigint growth_bound(const bigint &q, double exponent)
{
	if (exponent <= 0)
		throw error(errc::invalid_input, "growth exponent must be positive");
	double ip = 0;
	if (std::modf(exponent, &ip) == 0.0)
		return boost::multiprecision::pow(q, unsigned(ip));
	using bf = boost::multiprecision::cpp_bin_float_50;
	bf v = boost::multiprecision::pow(bf(q), bf(exponent));
	return bigint(boost::multiprecision::ceil(v));
}

rotation_number construct_alpha(const alpha_params &params)
{
	if (params.seed.empty())
		throw error(errc::invalid_input, "construct_alpha: empty seed");
	if (params.depth < params.seed.size())
		throw error(errc::invalid_input, "construct_alpha: depth shorter than seed");
	if (params.flag_every == 0)
		throw error(errc::invalid_input, "construct_alpha: flag_every must be >= 1");

	std::vector<bigint> a;
	std::vector<bigint> q = {1};
	bigint q_prev = 0; // q_{-1}
	for (uint64_t s : params.seed) {
		if (s == 0)
			throw error(errc::invalid_input, "construct_alpha: zero seed quotient");
		a.emplace_back(s);
		bigint next = bigint(s) * q.back() + (q.size() >= 2 ? q[q.size() - 2] : q_prev);
		q.push_back(next);
	}
	size_t n0 = params.seed.size();
	if (params.mode == alpha_mode::scaled_C_A && params.depth > n0 &&
	    !is_probable_prime(q.back()))
		throw error(errc::construction, "construct_alpha: seed denominator q_" +
		                                    std::to_string(n0) + " is not prime");

	std::vector<size_t> flags;
	for (size_t n = n0; n < params.depth; ++n) {
		const bigint &qn = q[n];
		const bigint &qm = q[n - 1];
		bigint g = growth_bound(qn, params.growth);
		bigint an;
		if (params.mode == alpha_mode::scaled_D) {
			bool flag = ((n - n0) % params.flag_every) == 0;
			if (flag) {
				an = (g - qm + qn - 1) / qn;
				if (an < 1)
					an = 1;
				flags.push_back(n);
			} else {
				an = 1;
			}
		} else {
			using bf = boost::multiprecision::cpp_bin_float_50;
			bigint lo = bigint(boost::multiprecision::ceil(bf(g) * bf(params.window_low)));
			bigint amin = lo > qm ? (lo - qm + qn - 1) / qn : bigint(1);
			if (amin < 1)
				amin = 1;
			bool found = false;
			for (bigint c = amin;; ++c) {
				bigint cand = c * qn + qm;
				if (cand > g)
					break;
				if (!is_probable_prime(cand))
					continue;
				if (params.residue_filter) {
					if (!params.table)
						throw error(errc::invalid_input,
						            "construct_alpha: residue filter needs a prime table");
					if (!fits_u64(cand) || !fits_u64(g))
						throw error(errc::resource, "construct_alpha: residue filter "
						                            "window exceeds the sieve");
					auto set = select_S_qr(*params.table, qn.convert_to<uint64_t>(),
					                       qm.convert_to<uint64_t>(), g.convert_to<uint64_t>(),
					                       params.filter_C, params.filter_A);
					if (std::find(set.begin(), set.end(), cand.convert_to<uint64_t>()) ==
					    set.end())
						continue;
				}
				an = c;
				found = true;
				break;
			}
			if (!found)
				throw error(errc::construction,
				            "construct_alpha: no admissible prime q_" + std::to_string(n + 1) +
				                " in window [" + lo.str() + ", " + g.str() + "] at level " +
				                std::to_string(n));
			flags.push_back(n);
		}
		a.push_back(an);
		q.push_back(an * qn + qm);
	}
	return rotation_number::from_partial_quotients(a, flags);
}

} // namespace kflow

namespace kflow {

orbit_neighborhood::orbit_neighborhood(const rotation_number &alpha, uint64_t count,
                                       double radius, double center, int sign)
    : radius_(radius)
{
	centers_.reserve(count);
	for (uint64_t i = 0; i < count; ++i)
		centers_.push_back(alpha.orbit(center, int64_t(i) * sign));
	std::sort(centers_.begin(), centers_.end());
}

double orbit_neighborhood::distance(double x) const
{
	if (centers_.empty())
		return std::numeric_limits<double>::infinity();
	x = frac(x);
	auto it = std::lower_bound(centers_.begin(), centers_.end(), x);
	double d = std::numeric_limits<double>::infinity();
	if (it != centers_.end())
		d = circle_dist(*it, x);
	else
		d = circle_dist(centers_.front(), x);
	if (it != centers_.begin())
		d = std::min(d, circle_dist(*(it - 1), x));
	else
		d = std::min(d, circle_dist(centers_.back(), x));
	return d;
}

} // namespace kflow
