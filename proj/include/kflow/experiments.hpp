#pragma once

#include "kflow/config.hpp"
#include "kflow/observables.hpp"
#include "kflow/report.hpp"

#include <functional>

namespace kflow {

// [alpha] mode = golden | pell | quotients | scaled_D | scaled_C_A
rotation_number alpha_from_config(const experiment_config &cfg);
// [roof] kind = power | constant | fourier (fourier: levels and re/im lists)
roof roof_from_config(const experiment_config &cfg, const rotation_number &alpha);
// [timechange] levels, exponent, m1
time_change timechange_from_config(const experiment_config &cfg, const rotation_number &alpha);
// [observable] level, amp, sigma, u = "k:a:b, ..." with k = 0 for the constant part
tower_observable::shape observable_from_config(const experiment_config &cfg);
// [sieve] limit, cache; loads the cache when it covers the limit, otherwise builds (and saves)
prime_table table_from_config(const experiment_config &cfg, uint64_t min_limit = 0);

struct experiment_entry {
	std::string name;
	std::string summary;
	// (section, key, value) filled in when missing from the config
	std::vector<std::array<std::string, 3>> defaults;
	std::function<void(const experiment_config &, experiment_report &)> run;
};

const std::vector<experiment_entry> &experiment_registry();
const experiment_entry &find_experiment(const std::string &name);

// fills defaults, runs, stamps params and wall-clock time
experiment_report run_experiment(experiment_config cfg);

} // namespace kflow
