#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

namespace kflow {

using bigint = boost::multiprecision::cpp_int;
using cplx = std::complex<double>;

enum class errc : int {
	ok = 0,
	invalid_input = 1,
	out_of_range = 2,
	singularity = 3,
	hypothesis = 4,
	precision = 5,
	resource = 6,
	construction = 7,
	parse = 8,
	internal = 9,
	unknown_experiment = 10,
};

class error : public std::runtime_error {
public:
	error(errc code, const std::string &msg) : std::runtime_error(msg), code_(code) {}
	errc code() const noexcept { return code_; }

private:
	errc code_;
};

inline double frac(double x) { return x - std::floor(x); }

// distance to the nearest integer
inline double circle_norm(double x)
{
	double f = frac(x);
	return f < 0.5 ? f : 1.0 - f;
}

inline double circle_dist(double x, double y) { return circle_norm(x - y); }

inline cplx e_of(double x)
{
	double t = 2.0 * std::numbers::pi * x;
	return {std::cos(t), std::sin(t)};
}

// Neumaier variant of Kahan summation
struct kahan {
	double sum = 0.0;
	double c = 0.0;
	void add(double v)
	{
		double t = sum + v;
		if (std::abs(sum) >= std::abs(v))
			c += (sum - t) + v;
		else
			c += (v - t) + sum;
		sum = t;
	}
	double value() const { return sum + c; }
};

struct kahan_c {
	kahan re, im;
	void add(cplx v)
	{
		re.add(v.real());
		im.add(v.imag());
	}
	cplx value() const { return {re.value(), im.value()}; }
};

// splitmix64, pinned so seeded samples reproduce across implementations
class splitmix64 {
public:
	explicit splitmix64(uint64_t seed) : state_(seed) {}
	uint64_t next()
	{
		uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
		z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
		z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
		return z ^ (z >> 31);
	}
	// uniform in [0,1) with 53 bits
	double uniform() { return double(next() >> 11) * 0x1.0p-53; }
	double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
	uint64_t below(uint64_t n) { return n ? next() % n : 0; }

private:
	uint64_t state_;
};

inline double to_double(const bigint &v) { return v.convert_to<double>(); }

inline bool fits_u64(const bigint &v)
{
	return v.sign() == 0 || (v.sign() > 0 && boost::multiprecision::msb(v) < 64);
}

// frac(q * x) for an exactly represented double x and integer q, without
// the rounding that q * x would incur for large q
double frac_mul(const bigint &q, double x);
double frac_mul(uint64_t q, double x);

} // namespace kflow
