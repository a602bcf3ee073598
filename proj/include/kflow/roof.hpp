#pragma once

#include "kflow/rotation.hpp"

#include <functional>
#include <variant>

namespace kflow {

struct constant_roof {
	double c = 1.0;
};

// f(x) = kappa (x^gamma + (1-x)^gamma) + c0 on (0,1), singular at 0
struct power_roof {
	double gamma = -0.5;
	double kappa = 0.2;
	double c0 = 0.2;

	// kappa chosen so the integral is 1
	static power_roof normalized(double gamma = -0.5, double c0 = 0.2);
};

// one harmonic b e(q x); step = q alpha mod 1 taken in (-1/2, 1/2]
struct fourier_term {
	size_t level = 0;
	bigint q;
	double step = 0.0;
	cplx b;
};

// f(x) = 1 + Re sum b e(q x)
struct fourier_roof {
	std::vector<fourier_term> terms;

	static fourier_roof make(const rotation_number &alpha,
	                         const std::vector<std::pair<size_t, cplx>> &level_coeffs);
	double coefficient_sum() const;
};

class roof {
public:
	enum class kind { constant, power, fourier };

	roof() : v_(constant_roof{}) {}
	roof(constant_roof r) : v_(r) {}
	roof(power_roof r);
	roof(fourier_roof r);

	kind type() const { return kind(v_.index()); }
	bool singular() const { return type() == kind::power; }
	const power_roof *power() const { return std::get_if<power_roof>(&v_); }
	const fourier_roof *fourier() const { return std::get_if<fourier_roof>(&v_); }

	// f, f', f'' at x; throws on the singularity of a power roof
	double eval(double x, int order = 0) const;
	double operator()(double x) const { return eval(x, 0); }
	double integral() const;
	// a lower bound for f (exact minimum for constant and power roofs)
	double inf() const;

	// S_n(f^(order))(x); closed form for Fourier roofs, direct summation otherwise
	double birkhoff(double x, int64_t n, const rotation_number &alpha, int order = 0) const;

	nlohmann::json to_json() const;
	static roof from_json(const nlohmann::json &j, const rotation_number &alpha);

private:
	std::variant<constant_roof, power_roof, fourier_roof> v_;
};

using circle_fn = std::function<double(double)>;

// S_n(g)(x) = sum_{0 <= i < n} g(x + i alpha); for n < 0, S_n(g)(x) = -S_{-n}(g)(x + n alpha)
double birkhoff_sum(const circle_fn &g, int64_t n, double x, const rotation_number &alpha);
double birkhoff_sum(const roof &f, int64_t n, double x, const rotation_number &alpha);

// chi_k f with chi_k = 1 on I_a minus the central window [-1/(4 q_{n+1}), 1/(4 q_{n+1})]
circle_fn masked_roof(const roof &f, const rotation_number &alpha, size_t n, double delta);

// v(x, y) = 1 + Re sum a e(q x + m y)
struct timechange_term {
	size_t level = 0;
	bigint q;
	double step = 0.0;
	int m = 0;
	cplx a;
};

class time_change {
public:
	std::vector<timechange_term> terms;

	double eval(double x, double y) const;
	// 1 - sum |a|, positive means v > 0
	double lower_bound() const;
	size_t truncation() const;

	// |a_{q_n,0}| = q_{n+1}^{-exponent} at each listed level, plus an equal m = 1 mode
	static time_change make_default(const rotation_number &alpha, const std::vector<size_t> &levels,
	                                double exponent = 0.6, bool with_m1 = true);
	static time_change make(const rotation_number &alpha,
	                        const std::vector<std::tuple<size_t, int, cplx>> &coeffs);

	nlohmann::json to_json() const;
	static time_change from_json(const nlohmann::json &j, const rotation_number &alpha);
};

// keeps the m = 0 modes; checks against 64-node quadrature of v(x, .) at 100 points
fourier_roof roof_from_timechange(const time_change &v, bool verify = true);

struct quad_expansion_result {
	double actual = 0.0;
	double predicted = 0.0;     // k^2 coefficient, as displayed
	double predicted_tri = 0.0; // k(k-1)/2 coefficient, from the telescoped sum
	double budget = 0.0;        // L^3 q^3 k^3 / q'^2 + k L^2 q^2 / q'
	double quad_term = 0.0;
	bool informative = false;   // budget smaller than the quadratic term
};

quad_expansion_result quadratic_expansion_check(const roof &f, double x, uint64_t k, size_t n,
                                                const rotation_number &alpha, double L);
// smallest L (with a small margin) for which the orbit of length k q_n avoids [-1/L, 1/L]
double avoidance_scale(double x, uint64_t k, size_t n, const rotation_number &alpha);

struct derivative_zero {
	double a = 0.0, b = 0.0; // partition interval [a, b), possibly wrapping
	double x = 0.0;
	double residual = 0.0;
	bool bracketed = false;
};

std::vector<derivative_zero> derivative_zero_locator(const roof &f, size_t n,
                                                     const rotation_number &alpha,
                                                     unsigned threads = 1);

struct small_set_result {
	orbit_neighborhood cover;
	uint64_t grid = 0;
	uint64_t below = 0;      // grid points with |S_{q_n}(f')| < threshold
	uint64_t violations = 0; // of those, points outside the cover
	double witness = -1.0;   // first violating point
};

small_set_result small_derivative_set(const roof &f, size_t n, const rotation_number &alpha,
                                      double zero, double threshold, uint64_t grid = 100000,
                                      unsigned threads = 1);

} // namespace kflow
