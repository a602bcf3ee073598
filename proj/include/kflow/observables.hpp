#pragma once

#include "kflow/primes.hpp"
#include "kflow/reparam.hpp"
#include "kflow/special_flow.hpp"

namespace kflow {

// u(y) = c + sum a cos(2 pi k y) + b sin(2 pi k y)
struct circle_trig {
	struct term {
		int k = 1;
		double a = 0.0;
		double b = 0.0;
	};
	double c = 0.0;
	std::vector<term> terms;

	double operator()(double y) const;
	double sup_bound() const;
};

// psi(y, s) = level + amp exp(-s / sigma) u(y) sin^2(pi s / f(y)) on the tower under f
class tower_observable {
public:
	struct shape {
		double level = 0.0; // value at infinite height
		double amp = 1.0;   // 0 gives the constant observable
		double sigma = 5.0;
		circle_trig u{0.0, {{1, 1.0, 0.0}}};
	};

	tower_observable(roof f, shape sh);

	double operator()(double y, double s) const;
	double eval_with_height(double y, double s, double height) const;
	// integral over u in [lo, hi] of psi(y, u), closed form
	double fiber(double y, double lo, double hi) const;
	double level() const { return sh_.level; }
	const shape &params() const { return sh_; }
	const roof &base_roof() const { return f_; }
	// |psi(y, r) - level| <= decay_bound(r)
	double decay_bound(double r) const;

	tower_fn as_fn() const;
	fiber_fn as_fiber() const;

	nlohmann::json to_json() const;

	struct condition_report {
		double continuity = 0.0; // max |psi(eps, s) - psi(-eps, s)| across x = 0
		double matching = 0.0;   // max |psi(y, f(y)) - psi(y + alpha, 0)| over sampled y
		double decay = 0.0;      // max of |psi(y, r) - level| - decay_bound(r), r = 10, 100, 1000
	};
	condition_report check_conditions(const rotation_number &alpha, unsigned samples = 1000) const;

private:
	roof f_;
	shape sh_;
};

// real trig polynomial on the torus, psi = c + Re sum a e(kx x + ky y)
struct torus_observable {
	struct term {
		int64_t kx = 0;
		int64_t ky = 0;
		cplx a;
	};
	double c = 0.0;
	std::vector<term> terms;

	double operator()(double x, double y) const;
	double sup_bound() const;
	double mean_leb() const;
	// mean against v dLeb / int v for a time change whose frequencies fit in 64 bits
	double mean_mu(const time_change &v) const;
	torus_fn as_fn() const;
};

// builds and verifies the three conditions, throwing a construction error on failure
tower_observable make_tower_observable(const roof &f, const rotation_number &alpha,
                                       tower_observable::shape sh = {});

// (int_T int_0^f(y) psi ds dy) / int f when normalized
double space_average(const tower_observable &psi, bool normalized = true);

// visits T_{z (p - m)}(start) for primes p <= N in increasing order, stepping the flow from the
// previous prime; the callback receives p and the point
void prime_orbit(const special_flow &F, const prime_table &primes, const flow_point &start,
                 uint64_t N, int z, uint64_t m,
                 const std::function<void(uint64_t, const flow_point &)> &visit);

double prime_orbit_sum(const tower_fn &psi, const special_flow &F, const prime_table &primes,
                       const flow_point &start, uint64_t N, int z = 1, uint64_t m = 0);

// sum over p <= N of psi(T_p start) log p for the reparametrized flow
double prime_orbit_sum(const torus_fn &psi, const reparam_flow &F, const prime_table &primes,
                       const torus_point &start, uint64_t N);

// same for a coboundary psi, through the values of g along the orbit of start at integer times
struct coboundary_prime_sums {
	std::vector<uint64_t> N;
	std::vector<double> sums;
	double sup_transfer = 0.0; // max |h| over the orbit points T_M start, M <= checked
};
coboundary_prime_sums coboundary_prime_orbit(const coboundary &psi, const prime_table &primes,
                                             const torus_point &start,
                                             const std::vector<uint64_t> &N_grid);

// weighted empirical measure of the prime orbit on cells x cells boxes of the tower truncated at
// h_max (plus one tail cell), total variation distance to Leb^f / int f
class tower_boxes {
public:
	tower_boxes(const roof &f, unsigned cells, double h_max);
	size_t size() const { return ref_.size(); }
	size_t index(const flow_point &p) const;
	const std::vector<double> &reference() const { return ref_; }
	double tv(const std::vector<double> &weights) const;

private:
	unsigned cells_;
	double h_max_;
	std::vector<double> ref_;
};

// same on the torus against mu = v dLeb
class torus_boxes {
public:
	torus_boxes(const time_change &v, unsigned cells);
	size_t size() const { return ref_.size(); }
	size_t index(const torus_point &p) const;
	const std::vector<double> &reference() const { return ref_; }
	double tv(const std::vector<double> &weights) const;

private:
	unsigned cells_;
	std::vector<double> ref_;
};

struct pnt_row {
	uint64_t N = 0;
	int z = 1;
	double prime_sum = 0.0;
	double time_integral = 0.0;
	double D1 = 0.0; // |prime sum - time integral| / N
	double D2 = 0.0; // |time integral - N space average| / N
	double D3 = 0.0; // |prime sum - N space average| / N
	double box_tv = 0.0;
};

struct pnt_options {
	std::vector<int> directions{1, -1};
	uint64_t shift = 0;
	unsigned cells = 32;
	double h_max = 8.0;
	unsigned threads = 1;
};

struct pnt_result {
	double space_average = 0.0;
	std::vector<pnt_row> rows; // for each z, for each N, ascending
};

pnt_result pnt_report(const tower_observable &psi, const special_flow &F, const prime_table &primes,
                      const flow_point &start, const std::vector<uint64_t> &N_grid,
                      const pnt_options &opt = {});

nlohmann::json pnt_json(const pnt_result &r);

} // namespace kflow
