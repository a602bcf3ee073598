#pragma once

#include "kflow/roof.hpp"

#include <iosfwd>

namespace kflow {

// (x, s) with 0 <= s < f(x)
struct flow_point {
	double x = 0.0;
	double s = 0.0;
};

struct flow_step {
	flow_point end;
	int64_t N = 0;         // number of roof crossings, negative for backward time
	double consumed = 0.0; // S_N(f)(x)
};

struct time_interval {
	double lo = 0.0;
	double hi = 0.0;
	double length() const { return hi - lo; }
};
using interval_set = std::vector<time_interval>;

struct flow_options {
	bool accelerate = true;
	int block_level = -1; // q_n block size for power roofs; -1 picks one per call
	double delta = 0.1;   // guard radius q_n^{-1-delta} around the singularity
	int taylor_order = 4;
};

class special_flow {
public:
	special_flow(roof f, rotation_number alpha, flow_options opt = {});

	const roof &height() const { return f_; }
	const rotation_number &alpha() const { return alpha_; }
	const flow_options &options() const { return opt_; }

	flow_point point(double x, double s) const;
	void validate(const flow_point &p) const;

	flow_step evaluate(const flow_point &p, double t) const;
	// fiber-by-fiber reference
	flow_step evaluate_naive(const flow_point &p, double t) const;

private:
	flow_step finish(const flow_point &p, double t, int64_t N, double consumed) const;
	flow_step evaluate_power(const flow_point &p, double t) const;
	flow_step evaluate_search(const flow_point &p, double t) const;
	int pick_level(double fibers) const;

	roof f_;
	rotation_number alpha_;
	flow_options opt_;
};

double tower_metric(const flow_point &a, const flow_point &b);

// true iff x + i alpha stays outside the open rho-ball around 0 for every i
// between 0 and N(x, s, z t)
bool section_avoidance(const special_flow &F, const flow_point &p, double t, int z, double rho);

// times in [t_lo, t_hi] at which the base lies in the set and the height is at least min_height,
// merged into maximal intervals
interval_set visit_intervals(const special_flow &F, const flow_point &p, double t_lo, double t_hi,
                             const std::function<bool(double)> &in_base, double min_height = 0.0);

interval_set interval_difference(const interval_set &a, const interval_set &b);
double measure(const interval_set &s);

struct ab_report {
	interval_set A, A0, B, A_minus_A0;
	double t0 = -1.0, t1 = -1.0; // first entry and exit of the I_a tower, -1 if never
	double horizon = 0.0;
	double deep_threshold = 0.0;
	double window_radius = 0.0; // q_n^{-1-delta}
	double central_radius = 0.0; // 1/(4 q_{n+1})
	bool P1 = false, P2 = false, P3 = false;
	double A_minus_A0_measure = 0.0;
	std::string counterexample;

	nlohmann::json to_json() const;
};

// deep_threshold < 0 means log(horizon)
ab_report ab_decomposition(const special_flow &F, const flow_point &p, double horizon, size_t n,
                           double delta, double deep_threshold = -1.0);

struct window_report {
	interval_set windows;
	std::vector<double> bases; // x~ + u L q_n alpha
	double lower = 0.0;        // (inf f) L q_n
	double upper = 0.0;        // L q_n int f + L V, V the variation allowance off I_a
	double min_ratio_lower = 0.0;
	double max_ratio_upper = 0.0;
	bool contiguous = true;
	int64_t violating_u = -1; // first window base inside I_a

	nlohmann::json to_json() const;
};

window_report window_decomposition(const special_flow &F, double x_tilde, uint64_t L, size_t n,
                                   uint64_t count, double delta = 0.1, double t1 = 0.0);

using tower_fn = std::function<double(double x, double s)>;
// integral of psi(x, u) over u in [lo, hi]
using fiber_fn = std::function<double(double x, double lo, double hi)>;

fiber_fn quadrature_fiber(tower_fn psi, double rel_tol = 1e-8);

// integral over t in [0, T] of psi(T_{z t}(p))
double time_integral(const special_flow &F, const tower_fn &psi, const flow_point &p, double T,
                     int z = 1);
double time_integral_fibers(const special_flow &F, const fiber_fn &fiber, const flow_point &p,
                            double T, int z = 1);

struct trace_row {
	double t = 0.0;
	double x = 0.0;
	double s = 0.0;
	int64_t N = 0;
};

std::vector<trace_row> orbit_trace(const special_flow &F, const flow_point &p, double T,
                                   uint64_t samples);
void write_trace_csv(std::ostream &os, const std::vector<trace_row> &rows);

} // namespace kflow
