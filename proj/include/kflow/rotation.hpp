#pragma once

#include "kflow/common.hpp"

#include "json.hpp"
#include <vector>

namespace kflow {

class prime_table;
class rotation_number;

// M = sum of b[s] * q_s; only nonzero terms are kept, largest index first
struct ostrowski_expansion {
	std::vector<std::pair<size_t, bigint>> terms;

	bigint recombine(const rotation_number &alpha) const;
	bigint coefficient(size_t s) const;
};

// An irrational alpha = [0; a_1, a_2, ...] in (0,1). The supplied quotients are
// followed by an implicit tail of ones, so alpha is irrational and every supplied
// level has a successor denominator. Residuals beta_n = q_n alpha - p_n are
// computed exactly against a rational truncation deep inside that tail.
class rotation_number {
public:
	static constexpr size_t tail_length = 64;

	static rotation_number from_partial_quotients(const std::vector<bigint> &a,
	                                              std::vector<size_t> flagged = {});
	static rotation_number from_partial_quotients(std::initializer_list<uint64_t> a);
	static rotation_number golden(size_t depth = 40);
	static rotation_number from_json(const nlohmann::json &j);

	// number of supplied quotients
	size_t depth() const { return depth_; }
	// largest n for which q_n, q_{n+1} and beta_n are available
	size_t max_level() const { return q_.size() - 2; }

	const bigint &a(size_t n) const; // 1-based, a(n) = a_n
	const bigint &q(size_t n) const;
	const bigint &p(size_t n) const;
	uint64_t q64(size_t n) const;
	double beta(size_t n) const;
	double norm_q(size_t n) const { return std::abs(beta(n)); }

	// first level with q_n >= bound (max_level()+1 if none)
	size_t level_at_least(const bigint &bound) const;

	double value() const { return hi_; }
	double value_lo() const { return lo_; }

	// x + i alpha mod 1, accurate to a few ulps for i < 2^53
	double orbit(double x, uint64_t i) const;
	double orbit(double x, int64_t i) const;

	ostrowski_expansion ostrowski(const bigint &m) const;
	double multiple_mod_one(const bigint &i) const;
	// big-integer oracle (i P mod Q) / Q against the internal truncation P/Q
	double multiple_mod_one_exact(const bigint &i) const;

	double orbit_min_distance(double x, uint64_t n) const;

	const std::vector<size_t> &flagged() const { return flagged_; }
	bool is_flagged(size_t n) const;

	nlohmann::json to_json() const;

private:
	size_t depth_ = 0;
	std::vector<bigint> a_; // a_[0] unused
	std::vector<bigint> q_, p_;
	std::vector<double> beta_;
	std::vector<size_t> flagged_;
	bigint num_, den_; // the truncation P/Q
	double hi_ = 0.0, lo_ = 0.0;
};

enum class alpha_mode { scaled_D, scaled_C_A };

struct alpha_params {
	alpha_mode mode = alpha_mode::scaled_D;
	// growth rule g(q) = q^growth standing in for the super-exponential thresholds
	double growth = 2.0;
	// total number of quotients, seed included
	size_t depth = 4;
	std::vector<uint64_t> seed = {1};
	// scaled_D: flag every flag_every-th level after the seed
	size_t flag_every = 1;
	// scaled_C_A: q_{n+1} is a prime in [window_low * g(q_n), g(q_n)]
	double window_low = 0.5;
	// scaled_C_A: additionally require q_{n+1} in S(q_n, q_{n-1}) (needs a table)
	bool residue_filter = false;
	const prime_table *table = nullptr;
	double filter_C = 10.0;
	double filter_A = 2.0;
};

rotation_number construct_alpha(const alpha_params &params);

bigint growth_bound(const bigint &q, double exponent);

} // namespace kflow

namespace kflow {

// union of closed arcs of radius r around center + sign * i * alpha, 0 <= i < count
class orbit_neighborhood {
public:
	orbit_neighborhood() = default;
	orbit_neighborhood(const rotation_number &alpha, uint64_t count, double radius,
	                   double center = 0.0, int sign = -1);

	bool contains(double x) const { return distance(x) <= radius_; }
	// circle distance from x to the nearest center
	double distance(double x) const;
	double radius() const { return radius_; }
	const std::vector<double> &centers() const { return centers_; }

private:
	std::vector<double> centers_; // sorted in [0,1)
	double radius_ = 0.0;
};

} // namespace kflow
