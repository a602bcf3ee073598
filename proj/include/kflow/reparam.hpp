#pragma once

#include "kflow/roof.hpp"

namespace kflow {

struct torus_point {
	double x = 0.0;
	double y = 0.0;
};

// sum of the circle distances of the coordinates
double torus_dist(const torus_point &a, const torus_point &b);

using torus_fn = std::function<double(double x, double y)>;

// Linear flow in direction (alpha, 1) slowed down by a positive trigonometric polynomial v.
class reparam_flow {
public:
	reparam_flow(rotation_number alpha, time_change v);

	const rotation_number &alpha() const { return alpha_; }
	const time_change &v() const { return v_; }

	double density(const torus_point &p) const { return v_.eval(p.x, p.y); }
	// v(L_s p)
	double speed_along(double s, const torus_point &p) const;
	// integral of v(L_s p) over s in [0, t], closed form
	double cocycle(double t, const torus_point &p) const;
	// u with cocycle(u, p) = t; guess seeds the Newton iteration
	double time_inverse(double t, const torus_point &p, double guess = NAN) const;
	torus_point linear(double u, const torus_point &p) const;
	torus_point evaluate(double t, const torus_point &p) const;
	// sup over t, p of |cocycle(t, p) - t|
	double cocycle_bound() const { return bound_; }

	nlohmann::json manifest() const;
	static reparam_flow from_manifest(const nlohmann::json &j);

private:
	struct mode {
		bigint freq;   // integer part of q alpha + m
		bigint q;
		int64_t freq_small = -1, q_small = -1; // cached when they fit, -1 otherwise
		int m = 0;
		double step = 0.0;  // q alpha - nearest integer
		double omega = 0.0; // q alpha + m
		cplx a;
	};
	double phase(const mode &md, const torus_point &p) const;
	static double freq_times(const mode &md, double s);

	rotation_number alpha_;
	time_change v_;
	std::vector<mode> modes_;
	double bound_ = 0.0;
};

// psi = -g + (1/N) sum_{1 <= n <= N} g o T_n, which equals h - h o T_1 for the transfer function
// h = -(1/N) sum_{0 <= i < N} (N - i) g o T_i
class coboundary {
public:
	coboundary(const reparam_flow &flow, torus_fn g, uint64_t N);

	double psi(const torus_point &p) const;
	double transfer(const torus_point &p) const;
	uint64_t N() const { return N_; }
	const torus_fn &g() const { return g_; }
	const reparam_flow &flow() const { return flow_; }

	struct orbit_check {
		double max_abs_sum = 0.0;      // max over M of |S_M(psi)(p)| under T_1
		double max_abs_transfer = 0.0; // max |h| at the orbit points T_M p, M = 0..Mmax
		double telescoping_residual = 0.0; // max |S_M(psi)(p) - h(p) + h(T_M p)|
	};
	orbit_check check_orbit(const torus_point &p, uint64_t Mmax) const;

	// sup of |psi + g| over a grid x grid lattice of cell midpoints
	double certificate(unsigned grid, unsigned threads = 1) const;

private:
	// g(T_k p) for k = first..first+count-1
	std::vector<double> g_orbit(const torus_point &p, uint64_t first, uint64_t count) const;

	reparam_flow flow_;
	torus_fn g_;
	uint64_t N_;
};

coboundary coboundary_observable(const reparam_flow &flow, torus_fn g, uint64_t N);

// total variation between the T_1 pushforward of mu and mu on a cells x cells partition, each cell
// sampled by a sub x sub lattice
double invariance_tv(const reparam_flow &flow, unsigned cells, unsigned sub, unsigned threads = 1);

struct katok_row {
	size_t level = 0;
	bigint q;
	double coefficient = 0.0; // |f^(q_n)| = |b_{q_n}| / 2
	double ratio1 = 0.0;      // |alpha - p_n/q_n| q_n / |f^(q_n)|
	double ratio2 = 0.0;      // |f^(q_n)| / sum_{k >= 1} |f^(k q_n)|
	double ratio2_tail2 = 0.0; // |f^(q_n)| / sum_{k >= 2} |f^(k q_n)|, infinite when the tail vanishes
	double tail2 = 0.0;
	bool flagged = false;
	bool zero_coefficient = false;
};

std::vector<katok_row> katok_ratios(const reparam_flow &flow);
nlohmann::json katok_json(const std::vector<katok_row> &rows);

} // namespace kflow
