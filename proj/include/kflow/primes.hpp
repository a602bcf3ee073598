#pragma once

#include "kflow/common.hpp"

#include <bit>
#include <string>
#include <vector>

namespace kflow {

bool is_prime_u64(uint64_t n);
bool is_probable_prime(const bigint &n);

// half-open arc [lo, lo + len) on the circle; len >= 1 is the full circle
struct arc {
	double lo = 0.0;
	double len = 0.0;

	static arc full() { return {0.0, 1.0}; }
	static arc between(double a, double b) { return {frac(a), b - a}; }
	bool contains(double x) const
	{
		if (len >= 1.0)
			return true;
		if (len <= 0.0)
			return false;
		return frac(x - lo) < len;
	}
};

class prime_table {
public:
	struct options {
		uint64_t segment_bytes = uint64_t(1) << 30;
		uint64_t memory_budget = uint64_t(1) << 31;
		unsigned threads = 1;
	};

	static prime_table build(uint64_t limit) { return build(limit, options{}); }
	static prime_table build(uint64_t limit, const options &opt);
	static prime_table load(const std::string &path);
	void save(const std::string &path) const;

	static constexpr uint32_t cache_version = 1;

	uint64_t limit() const { return limit_; }
	uint64_t segment_bytes() const { return segment_; }
	bool is_prime(uint64_t n) const;
	// sum of log p over p <= x
	double theta(uint64_t x) const;
	// number of primes <= x
	uint64_t pi(uint64_t x) const;

	// calls f(p) for every prime p in [lo, hi], ascending
	template <class F>
	void for_each_prime(uint64_t lo, uint64_t hi, F &&f) const
	{
		check(hi);
		if (lo <= 2 && 2 <= hi)
			f(uint64_t(2));
		if (lo < 3)
			lo = 3;
		if (lo > hi)
			return;
		uint64_t k0 = (lo - 1) / 2 + ((lo - 1) % 2 ? 1 : 0); // smallest odd >= lo
		uint64_t k1 = (hi - 1) / 2;                           // largest odd <= hi
		if (k0 > k1)
			return;
		for (uint64_t w = k0 / 64; w <= k1 / 64; ++w) {
			uint64_t word = bits_[w];
			if (w == k0 / 64)
				word &= ~uint64_t(0) << (k0 % 64);
			if (w == k1 / 64 && (k1 % 64) != 63)
				word &= (uint64_t(1) << (k1 % 64 + 1)) - 1;
			while (word) {
				int b = std::countr_zero(word);
				word &= word - 1;
				f(2 * (64 * w + uint64_t(b)) + 1);
			}
		}
	}

private:
	void check(uint64_t x) const;
	void finish();

	uint64_t limit_ = 0;
	uint64_t segment_ = 0;
	std::vector<uint64_t> bits_;       // bit k marks 2k+1 prime
	std::vector<uint64_t> count_word_; // number of odd primes below each word
	std::vector<double> theta_prefix_; // theta at the i-th prime
};

struct phase_coefficients {
	double gamma1 = 0.0;
	double gamma2 = 0.0;
	uint64_t N = 0;
	uint64_t H = 0;
};

// sum of log p over p in (N, N + H]
double theta_interval(const prime_table &t, uint64_t N, uint64_t H);
// sum of log p over p in [lo, hi]
double theta_range(const prime_table &t, uint64_t lo, uint64_t hi);
double theta_ap(const prime_table &t, uint64_t x, uint64_t q, uint64_t a);

uint64_t euler_phi(uint64_t n);

// max over coprime classes a of sup over real y < x of
// |sum_{p <= y, p = a (q)} log p - y / phi(q)|
double ap_error(const prime_table &t, uint64_t x, uint64_t q);

struct s_qr_report {
	std::vector<uint64_t> members;
	std::vector<uint64_t> congruent; // primes in [N/2, N] with l = r (q) before filtering
	std::vector<uint64_t> x_grid;
	double best_ratio = 0.0; // smallest max_n E(x_n, l) / threshold(x_n) seen
};

// primes l in [N/2, N] with l = r (mod q) passing E(x_n, l) <= C x_n / (N log^{2A} x_n)
// on the dyadic grid x_1 = N^{0.51}, x_{n+1} = 2 x_n, x_n <= limit
std::vector<uint64_t> select_S_qr(const prime_table &t, uint64_t q, uint64_t r, uint64_t N,
                                  double C, double A);
s_qr_report select_S_qr_report(const prime_table &t, uint64_t q, uint64_t r, uint64_t N,
                               double C, double A);

// sum over p in [N, N + H] of e(g1 (p - N) + g2 (p - N)^2) log p
cplx quad_phase_sum(const prime_table &t, const phase_coefficients &c);

bool diophantine_gamma2_check(double gamma2, uint64_t N, uint64_t H, double B);

double box_indicator_sum(const prime_table &t, const phase_coefficients &c, const arc &I,
                         const arc &J);

struct interval_partition {
	std::vector<arc> intervals;
	uint64_t offset = 0;       // chosen shift index among the q^7/2 families
	uint64_t families = 0;
	double offset_weight = 0;  // log-weighted hits of the chosen family
	double total_weight = 0;
};

interval_partition build_interval_partition(const prime_table &t, uint64_t q, double gamma1,
                                            uint64_t N, uint64_t H);

struct ap_average {
	double average_error = 0.0;
	uint64_t z = 0;
	uint64_t windows = 0;
	uint64_t candidates = 0; // number of offsets z examined
};

// windows (z + jH, z + (j+1)H] for j < floor(N/H); z chosen in [0, H) minimizing the
// summed sup-class deviation |theta_window(a) - H / phi(v)|
ap_average short_interval_ap_average(const prime_table &t, uint64_t N, uint64_t H, uint64_t v);

} // namespace kflow
