#include "kflow/primes.hpp"

#include <algorithm>
#include <boost/multiprecision/miller_rabin.hpp>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <thread>
#include <unordered_map>

namespace kflow {

namespace {

uint64_t mulmod(uint64_t a, uint64_t b, uint64_t m)
{
	return uint64_t((unsigned __int128)a * b % m);
}

uint64_t powmod(uint64_t b, uint64_t e, uint64_t m)
{
	uint64_t r = 1;
	b %= m;
	while (e) {
		if (e & 1)
			r = mulmod(r, b, m);
		b = mulmod(b, b, m);
		e >>= 1;
	}
	return r;
}

constexpr char cache_magic[8] = {'K', 'F', 'S', 'I', 'E', 'V', 'E', '1'};

} // namespace

bool is_prime_u64(uint64_t n)
{
	if (n < 2)
		return false;
	for (uint64_t p : {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37})
		if (n % p == 0)
			return n == p;
	uint64_t d = n - 1;
	int s = 0;
	while ((d & 1) == 0) {
		d >>= 1;
		++s;
	}
	for (uint64_t a : {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37}) {
		uint64_t x = powmod(a, d, n);
		if (x == 1 || x == n - 1)
			continue;
		bool composite = true;
		for (int r = 1; r < s; ++r) {
			x = mulmod(x, x, n);
			if (x == n - 1) {
				composite = false;
				break;
			}
		}
		if (composite)
			return false;
	}
	return true;
}

bool is_probable_prime(const bigint &n)
{
	if (fits_u64(n))
		return is_prime_u64(n.convert_to<uint64_t>());
	std::mt19937_64 gen(0x5eedULL);
	return boost::multiprecision::miller_rabin_test(n, 32, gen);
}

prime_table prime_table::build(uint64_t limit, const options &opt)
{
	if (limit < 2)
		throw error(errc::invalid_input, "sieve limit must be at least 2");
	uint64_t need = limit / 16 + (limit / 128 + 2) * 8 + limit / 2 + std::min(opt.segment_bytes, limit / 2 + 64);
	if (need > opt.memory_budget)
		throw error(errc::resource, "sieve limit " + std::to_string(limit) + " needs " +
		                                std::to_string(need) + " bytes, over the memory budget");
	prime_table t;
	t.limit_ = limit;
	t.segment_ = opt.segment_bytes;

	uint64_t kmax = (limit - 1) / 2;
	t.bits_.assign(kmax / 64 + 1, 0);

	uint64_t root = uint64_t(std::sqrt(double(limit)));
	while (root * root > limit)
		--root;
	while ((root + 1) * (root + 1) <= limit)
		++root;
	std::vector<uint8_t> small(root + 1, 1);
	std::vector<uint64_t> base;
	for (uint64_t i = 3; i <= root; i += 2) {
		if (!small[i])
			continue;
		base.push_back(i);
		for (uint64_t j = i * i; j <= root; j += 2 * i)
			small[j] = 0;
	}

	uint64_t seg = std::max<uint64_t>(64, opt.segment_bytes / 64 * 64);
	uint64_t nseg = (kmax + 1 + seg - 1) / seg;

	auto sieve_segment = [&](uint64_t s, std::vector<uint8_t> &buf) {
		uint64_t k0 = s * seg;
		uint64_t k1 = std::min(kmax + 1, k0 + seg);
		buf.assign(k1 - k0, 1);
		for (uint64_t b : base) {
			uint64_t lo = 2 * k0 + 1;
			uint64_t start = std::max(b * b, (lo + b - 1) / b * b);
			if (start % 2 == 0)
				start += b;
			for (uint64_t k = (start - 1) / 2; k < k1; k += b)
				buf[k - k0] = 0;
		}
		if (k0 == 0)
			buf[0] = 0; // 1 is not prime
		for (uint64_t k = k0; k < k1; ++k)
			if (buf[k - k0])
				t.bits_[k / 64] |= uint64_t(1) << (k % 64);
	};

	unsigned threads = std::max(1u, opt.threads);
	if (threads == 1 || nseg == 1) {
		std::vector<uint8_t> buf;
		for (uint64_t s = 0; s < nseg; ++s)
			sieve_segment(s, buf);
	} else {
		std::vector<std::thread> pool;
		for (unsigned w = 0; w < threads; ++w)
			pool.emplace_back([&, w] {
				std::vector<uint8_t> buf;
				for (uint64_t s = w; s < nseg; s += threads)
					sieve_segment(s, buf);
			});
		for (auto &th : pool)
			th.join();
	}
	t.finish();
	return t;
}

void prime_table::finish()
{
	size_t words = bits_.size();
	count_word_.assign(words + 1, 0);
	uint64_t cnt = 0;
	for (size_t w = 0; w < words; ++w) {
		count_word_[w] = cnt;
		cnt += uint64_t(std::popcount(bits_[w]));
	}
	count_word_[words] = cnt;
	// prefix sums at every prime: rounding a monotone sequence keeps it monotone
	theta_prefix_.clear();
	theta_prefix_.reserve(cnt + 1);
	kahan acc;
	acc.add(std::log(2.0));
	theta_prefix_.push_back(acc.value());
	for (size_t w = 0; w < words; ++w) {
		uint64_t word = bits_[w];
		while (word) {
			int b = std::countr_zero(word);
			word &= word - 1;
			acc.add(std::log(double(2 * (64 * w + uint64_t(b)) + 1)));
			theta_prefix_.push_back(acc.value());
		}
	}
}

void prime_table::check(uint64_t x) const
{
	if (x > limit_)
		throw error(errc::resource, "query at " + std::to_string(x) +
		                                " exceeds sieve limit " + std::to_string(limit_));
}

bool prime_table::is_prime(uint64_t n) const
{
	check(n);
	if (n < 2)
		return false;
	if (n == 2)
		return true;
	if (n % 2 == 0)
		return false;
	uint64_t k = (n - 1) / 2;
	return (bits_[k / 64] >> (k % 64)) & 1;
}

double prime_table::theta(uint64_t x) const
{
	uint64_t n = pi(x);
	return n ? theta_prefix_[n - 1] : 0.0;
}

uint64_t prime_table::pi(uint64_t x) const
{
	check(x);
	if (x < 2)
		return 0;
	uint64_t kx = (x - 1) / 2;
	uint64_t w = kx / 64;
	uint64_t word = bits_[w];
	if (kx % 64 != 63)
		word &= (uint64_t(1) << (kx % 64 + 1)) - 1;
	return 1 + count_word_[w] + uint64_t(std::popcount(word));
}

void prime_table::save(const std::string &path) const
{
	std::ofstream out(path, std::ios::binary);
	if (!out)
		throw error(errc::resource, "cannot open cache file " + path);
	uint32_t version = cache_version, reserved = 0;
	uint64_t words = bits_.size();
	out.write(cache_magic, 8);
	out.write(reinterpret_cast<const char *>(&version), 4);
	out.write(reinterpret_cast<const char *>(&reserved), 4);
	out.write(reinterpret_cast<const char *>(&limit_), 8);
	out.write(reinterpret_cast<const char *>(&segment_), 8);
	out.write(reinterpret_cast<const char *>(&words), 8);
	out.write(reinterpret_cast<const char *>(bits_.data()), std::streamsize(words * 8));
	if (!out)
		throw error(errc::resource, "failed writing cache file " + path);
}

prime_table prime_table::load(const std::string &path)
{
	std::ifstream in(path, std::ios::binary);
	if (!in)
		throw error(errc::resource, "cannot open cache file " + path);
	char magic[8];
	uint32_t version = 0, reserved = 0;
	uint64_t words = 0;
	prime_table t;
	in.read(magic, 8);
	in.read(reinterpret_cast<char *>(&version), 4);
	in.read(reinterpret_cast<char *>(&reserved), 4);
	in.read(reinterpret_cast<char *>(&t.limit_), 8);
	in.read(reinterpret_cast<char *>(&t.segment_), 8);
	in.read(reinterpret_cast<char *>(&words), 8);
	if (!in || std::memcmp(magic, cache_magic, 8) != 0)
		throw error(errc::parse, "not a sieve cache file: " + path);
	if (version != cache_version)
		throw error(errc::parse, "unsupported sieve cache version " + std::to_string(version));
	if (t.limit_ < 2 || words != (t.limit_ - 1) / 2 / 64 + 1)
		throw error(errc::parse, "corrupt sieve cache header in " + path);
	t.bits_.resize(words);
	in.read(reinterpret_cast<char *>(t.bits_.data()), std::streamsize(words * 8));
	if (!in)
		throw error(errc::parse, "truncated sieve cache file " + path);
	t.finish();
	return t;
}

double theta_range(const prime_table &t, uint64_t lo, uint64_t hi)
{
	if (hi < lo)
		return 0.0;
	if (hi - lo > (uint64_t(1) << 22))
		return t.theta(hi) - (lo ? t.theta(lo - 1) : 0.0);
	kahan acc;
	t.for_each_prime(lo, hi, [&](uint64_t p) { acc.add(std::log(double(p))); });
	return acc.value();
}

double theta_interval(const prime_table &t, uint64_t N, uint64_t H)
{
	return theta_range(t, N + 1, N + H);
}

double theta_ap(const prime_table &t, uint64_t x, uint64_t q, uint64_t a)
{
	if (q == 0 || a >= q)
		throw error(errc::invalid_input, "theta_ap needs q >= 1 and 0 <= a < q");
	kahan acc;
	t.for_each_prime(0, x, [&](uint64_t p) {
		if (p % q == a)
			acc.add(std::log(double(p)));
	});
	return acc.value();
}

uint64_t euler_phi(uint64_t n)
{
	uint64_t r = n;
	for (uint64_t p = 2; p * p <= n; ++p) {
		if (n % p)
			continue;
		while (n % p == 0)
			n /= p;
		r -= r / p;
	}
	if (n > 1)
		r -= r / n;
	return r;
}

namespace {

// E(x_i, q) for each x in the ascending grid xs, in one pass over the primes
std::vector<double> ap_error_grid(const prime_table &t, const std::vector<double> &xs, uint64_t q)
{
	std::vector<double> out(xs.size(), 0.0);
	if (xs.empty())
		return out;
	double phi = double(euler_phi(q));
	bool dense = q <= (uint64_t(1) << 22);
	std::vector<double> cls(dense ? q : 0, 0.0);
	std::unordered_map<uint64_t, double> sparse;
	uint64_t nonempty = 0;
	double run = 0.0, top = 0.0;
	size_t xi = 0;

	auto class_extremes = [&](double x) {
		double lo = 0.0;
		if (nonempty == uint64_t(phi)) {
			lo = top;
			if (dense) {
				for (uint64_t a = 0; a < q; ++a)
					if (std::gcd(a, q) == 1)
						lo = std::min(lo, cls[a]);
			} else {
				for (auto &[a, v] : sparse)
					lo = std::min(lo, v);
			}
		}
		return std::max({run, std::abs(top - x / phi), std::abs(lo - x / phi)});
	};

	double xmax = xs.back();
	uint64_t pmax = uint64_t(std::ceil(xmax)) - 1;
	pmax = std::min(pmax, t.limit());
	t.for_each_prime(2, pmax, [&](uint64_t p) {
		while (xi < xs.size() && double(p) >= xs[xi]) {
			out[xi] = class_extremes(xs[xi]);
			++xi;
		}
		uint64_t a = p % q;
		if (std::gcd(a, q) != 1)
			return;
		double &v = dense ? cls[a] : sparse[a];
		if (v == 0.0)
			++nonempty;
		double pre = v - double(p) / phi;
		v += std::log(double(p));
		double post = v - double(p) / phi;
		run = std::max({run, std::abs(pre), std::abs(post)});
		top = std::max(top, v);
	});
	for (; xi < xs.size(); ++xi)
		out[xi] = class_extremes(xs[xi]);
	return out;
}

} // namespace

double ap_error(const prime_table &t, uint64_t x, uint64_t q)
{
	if (q == 0)
		throw error(errc::invalid_input, "ap_error needs q >= 1");
	if (x > t.limit() + 1)
		throw error(errc::resource, "ap_error: x beyond sieve limit");
	return ap_error_grid(t, {double(x)}, q)[0];
}

s_qr_report select_S_qr_report(const prime_table &t, uint64_t q, uint64_t r, uint64_t N,
                               double C, double A)
{
	if (q == 0)
		throw error(errc::invalid_input, "select_S_qr needs q >= 1");
	if (N > t.limit())
		throw error(errc::resource, "select_S_qr: window end beyond sieve limit");
	s_qr_report rep;
	std::vector<double> xs;
	for (double x = std::pow(double(N), 0.51); x <= double(t.limit()); x *= 2.0)
		xs.push_back(x);
	if (xs.empty())
		throw error(errc::resource, "select_S_qr: insufficient sieve range for x_1 = N^0.51");
	for (double x : xs)
		rep.x_grid.push_back(uint64_t(x));

	uint64_t lo = (N + 1) / 2;
	t.for_each_prime(lo, N, [&](uint64_t l) {
		if (l % q == r % q)
			rep.congruent.push_back(l);
	});
	rep.best_ratio = std::numeric_limits<double>::infinity();
	for (uint64_t l : rep.congruent) {
		auto errs = ap_error_grid(t, xs, l);
		double worst = 0.0;
		for (size_t i = 0; i < xs.size(); ++i) {
			double thr = C * xs[i] / (double(N) * std::pow(std::log(xs[i]), 2.0 * A));
			worst = std::max(worst, thr > 0 ? errs[i] / thr : std::numeric_limits<double>::infinity());
		}
		rep.best_ratio = std::min(rep.best_ratio, worst);
		if (worst <= 1.0)
			rep.members.push_back(l);
	}
	return rep;
}

std::vector<uint64_t> select_S_qr(const prime_table &t, uint64_t q, uint64_t r, uint64_t N,
                                  double C, double A)
{
	return select_S_qr_report(t, q, r, N, C, A).members;
}

cplx quad_phase_sum(const prime_table &t, const phase_coefficients &c)
{
	kahan_c acc;
	t.for_each_prime(c.N, c.N + c.H, [&](uint64_t p) {
		uint64_t m = p - c.N;
		double ph = frac_mul(m, c.gamma1) + frac_mul(m * m, c.gamma2);
		acc.add(std::log(double(p)) * e_of(ph));
	});
	return acc.value();
}

bool diophantine_gamma2_check(double gamma2, uint64_t N, uint64_t H, double B)
{
	if (H == 0)
		throw error(errc::invalid_input, "diophantine check needs H >= 1");
	double lb = std::pow(std::log(double(N)), B);
	double thr = lb / (double(H) * double(H));
	uint64_t R = uint64_t(std::floor(lb));
	for (uint64_t r = 1; r <= R; ++r)
		if (circle_norm(frac_mul(r, gamma2)) < thr)
			return false;
	return true;
}

double box_indicator_sum(const prime_table &t, const phase_coefficients &c, const arc &I,
                         const arc &J)
{
	kahan acc;
	t.for_each_prime(c.N, c.N + c.H, [&](uint64_t p) {
		uint64_t m = p - c.N;
		if (I.contains(frac_mul(m, c.gamma1)) && J.contains(frac_mul(m * m, c.gamma2)))
			acc.add(std::log(double(p)));
	});
	return acc.value();
}

interval_partition build_interval_partition(const prime_table &t, uint64_t q, double gamma1,
                                            uint64_t N, uint64_t H)
{
	if (q < 2)
		throw error(errc::invalid_input, "interval partition needs q >= 2");
	double q2 = double(q * q);
	double q7 = std::pow(double(q), 7.0);
	uint64_t families = uint64_t(std::floor(q7 / 2.0));
	if (families > (uint64_t(1) << 25))
		throw error(errc::resource, "interval partition: q^7/2 offset families exceed memory");
	// family l holds the cells [j/q^2 + 2l q^-9, j/q^2 + 2(l+1) q^-9)
	std::vector<double> hits(families, 0.0);
	interval_partition out;
	out.families = families;
	kahan total;
	t.for_each_prime(N, N + H, [&](uint64_t p) {
		double ph = frac_mul(p - N, gamma1);
		double w = std::log(double(p));
		total.add(w);
		uint64_t l = uint64_t(std::floor(frac(ph * q2) * q7 / 2.0));
		if (l < families)
			hits[l] += w;
	});
	out.total_weight = total.value();
	auto best = std::min_element(hits.begin(), hits.end());
	out.offset = uint64_t(best - hits.begin());
	out.offset_weight = *best;

	double shift = (2.0 * double(out.offset) + 1.0) * std::pow(double(q), -9.0);
	uint64_t n = q * q;
	for (uint64_t j = 0; j < n; ++j) {
		double a = double(j) / q2 + shift;
		double b = double(j + 1) / q2 + shift;
		out.intervals.push_back(arc::between(a, b));
	}
	return out;
}

ap_average short_interval_ap_average(const prime_table &t, uint64_t N, uint64_t H, uint64_t v)
{
	if (H < 2 || v < 1)
		throw error(errc::invalid_input, "short_interval_ap_average needs H >= 2, v >= 1");
	uint64_t W = std::max<uint64_t>(1, N / H);
	uint64_t span = W * H + H;
	if (span > t.limit() + 1)
		throw error(errc::resource, "short_interval_ap_average: windows exceed sieve limit");
	std::vector<uint64_t> classes;
	for (uint64_t a = 0; a < v; ++a)
		if (std::gcd(a, v) == 1)
			classes.push_back(a);
	double target = double(H) / double(euler_phi(v));
	std::vector<int> slot(v, -1);
	for (size_t i = 0; i < classes.size(); ++i)
		slot[classes[i]] = int(i);

	ap_average out;
	out.windows = W;
	double best = std::numeric_limits<double>::infinity();

	if (double(span) * double(classes.size()) <= 6e7) {
		// cumulative per-class sums at every integer, then every offset z in [0, H)
		size_t nc = classes.size();
		std::vector<double> cum((span + 1) * nc, 0.0);
		std::vector<kahan> acc(nc);
		uint64_t next = 0;
		auto fill_to = [&](uint64_t y) {
			for (; next <= y; ++next)
				for (size_t c = 0; c < nc; ++c)
					cum[next * nc + c] = acc[c].value();
		};
		t.for_each_prime(2, std::min(span, t.limit()), [&](uint64_t p) {
			fill_to(p - 1);
			int s = slot[p % v];
			if (s >= 0)
				acc[size_t(s)].add(std::log(double(p)));
		});
		fill_to(span);
		for (uint64_t z = 0; z < H; ++z) {
			double tot = 0.0;
			for (uint64_t j = 0; j < W; ++j) {
				uint64_t a = z + j * H, b = a + H;
				double sup = 0.0;
				for (size_t c = 0; c < nc; ++c)
					sup = std::max(sup, std::abs(cum[b * nc + c] - cum[a * nc + c] - target));
				tot += sup;
			}
			if (tot < best) {
				best = tot;
				out.z = z;
			}
		}
		out.candidates = H;
	} else {
		uint64_t grid = std::min<uint64_t>(H, 256);
		for (uint64_t g = 0; g < grid; ++g) {
			uint64_t z = g * H / grid;
			std::vector<double> sums(W * classes.size(), 0.0);
			t.for_each_prime(z + 1, z + W * H, [&](uint64_t p) {
				int s = slot[p % v];
				if (s < 0)
					return;
				uint64_t j = (p - z - 1) / H;
				sums[j * classes.size() + size_t(s)] += std::log(double(p));
			});
			double tot = 0.0;
			for (uint64_t j = 0; j < W; ++j) {
				double sup = 0.0;
				for (size_t c = 0; c < classes.size(); ++c)
					sup = std::max(sup, std::abs(sums[j * classes.size() + c] - target));
				tot += sup;
			}
			if (tot < best) {
				best = tot;
				out.z = z;
			}
		}
		out.candidates = grid;
	}
	out.average_error = best / double(W);
	return out;
}

} // namespace kflow
