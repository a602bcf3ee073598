#include "kflow/kflow.h"

#include "CLI11.hpp"

#include <fmt/core.h>
#include <fmt/os.h>

#include <algorithm>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

namespace {

struct failure {
	kflow_status code;
	std::string message;
};

void check(kflow_status s)
{
	if (s != KFLOW_OK)
		throw failure{s, kflow_last_error()};
}

struct owned_string {
	char *p = nullptr;
	~owned_string() { kflow_string_free(p); }
	std::string str() const { return p ? p : ""; }
};

using config_ptr = std::unique_ptr<kflow_config, decltype(&kflow_config_free)>;

config_ptr make_config(const std::string &path)
{
	kflow_config *c = nullptr;
	check(path.empty() ? kflow_config_new(&c) : kflow_config_load(path.c_str(), &c));
	return {c, kflow_config_free};
}

// "section.key=value", or "key=value" for the top level
void apply_override(kflow_config *cfg, const std::string &item)
{
	auto eq = item.find('=');
	if (eq == std::string::npos)
		throw failure{KFLOW_PARSE, "--set expects section.key=value, got '" + item + "'"};
	std::string path = item.substr(0, eq), value = item.substr(eq + 1);
	auto dot = path.rfind('.');
	std::string sec = dot == std::string::npos ? "" : path.substr(0, dot);
	std::string key = dot == std::string::npos ? path : path.substr(dot + 1);
	check(kflow_config_set(cfg, sec.c_str(), key.c_str(), value.c_str()));
}

void write_file(const std::string &path, const std::string &text)
{
	auto out = fmt::output_file(path);
	out.print("{}", text);
}

int run_list()
{
	for (size_t i = 0; i < kflow_experiment_count(); ++i)
		fmt::print("{:<24} {}\n", kflow_experiment_name(i), kflow_experiment_summary(i));
	return 0;
}

int run_sieve(uint64_t limit, unsigned threads, const std::string &out, const std::vector<uint64_t> &queries)
{
	kflow_table *t = nullptr;
	check(kflow_table_build(limit, threads, &t));
	std::unique_ptr<kflow_table, decltype(&kflow_table_free)> guard(t, kflow_table_free);
	uint64_t pi = 0;
	double theta = 0.0;
	check(kflow_table_pi(t, limit, &pi));
	check(kflow_table_theta(t, limit, &theta));
	fmt::print("limit {}\npi {}\ntheta {:.6f}\ntheta/limit {:.8f}\n", limit, pi, theta,
	           limit ? theta / double(limit) : 0.0);
	for (auto n : queries) {
		int p = 0;
		check(kflow_table_is_prime(t, n, &p));
		fmt::print("{} {}\n", n, p ? "prime" : "composite");
	}
	if (!out.empty()) {
		check(kflow_table_save(t, out.c_str()));
		fmt::print("saved {}\n", out);
	}
	return 0;
}

int run_build_alpha(kflow_config *cfg, size_t levels, const std::string &out_json)
{
	kflow_alpha *a = nullptr;
	check(kflow_alpha_from_config(cfg, &a));
	std::unique_ptr<kflow_alpha, decltype(&kflow_alpha_free)> guard(a, kflow_alpha_free);
	double v = 0.0;
	check(kflow_alpha_value(a, &v));
	fmt::print("alpha {:.17g}\n", v);
	size_t top = std::min(kflow_alpha_max_level(a) + 1, levels);
	for (size_t n = 0; n <= top; ++n) {
		owned_string q;
		check(kflow_alpha_denominator(a, n, &q.p));
		fmt::print("q_{} {}\n", n, q.str());
	}
	if (!out_json.empty()) {
		owned_string j;
		check(kflow_alpha_json(a, &j.p));
		write_file(out_json, j.str() + "\n");
	}
	return 0;
}

int run_experiment(kflow_config *cfg, bool timing, const std::string &out_json, const std::string &out_csv)
{
	kflow_report *r = nullptr;
	check(kflow_run(cfg, &r));
	std::unique_ptr<kflow_report, decltype(&kflow_report_free)> guard(r, kflow_report_free);
	for (size_t i = 0; i < kflow_report_verdict_count(r); ++i) {
		const char *crit, *status, *detail;
		check(kflow_report_verdict(r, i, &crit, &status, &detail));
		fmt::print("{:<10} {}{}{}\n", status, crit, *detail ? ": " : "", detail);
	}
	if (timing)
		fmt::print("wall {:.2f} s\n", kflow_report_seconds(r));
	if (!out_json.empty()) {
		owned_string j;
		check(kflow_report_json(r, timing ? 1 : 0, &j.p));
		write_file(out_json, j.str());
	}
	if (!out_csv.empty()) {
		owned_string c;
		check(kflow_report_csv(r, &c.p));
		write_file(out_csv, c.str());
	}
	return kflow_report_passed(r) ? 0 : 1;
}

} // namespace

int main(int argc, char **argv)
{
	CLI::App app{"prime orbits of special and reparametrized flows"};
	app.set_version_flag("--version", kflow_version());
	app.require_subcommand(1);

	auto *list = app.add_subcommand("list", "list the registered experiments");

	uint64_t limit = 1000000;
	unsigned threads = 1;
	std::string sieve_out;
	std::vector<uint64_t> queries;
	auto *sieve = app.add_subcommand("sieve", "build a prime table and report pi and theta");
	sieve->add_option("--limit", limit, "sieve limit")->capture_default_str();
	sieve->add_option("--threads", threads, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);
	sieve->add_option("--out", sieve_out, "save the table to this path");
	sieve->add_option("--query", queries, "report primality of these integers");

	std::string config_path, out_json, out_csv, cache;
	std::vector<std::string> overrides;
	auto *alpha = app.add_subcommand("build-alpha", "construct a rotation number from the [alpha] section");
	alpha->add_option("--config", config_path, "experiment config file")->check(CLI::ExistingFile);
	alpha->add_option("--set", overrides, "override section.key=value");
	alpha->add_option("--out-json", out_json, "write the continued fraction data as JSON");
	size_t levels = 8;
	alpha->add_option("--levels", levels, "print denominators up to this level")->capture_default_str();

	std::string experiment;
	uint64_t seed = 0;
	unsigned run_threads = 0;
	bool no_timing = false;
	auto *run = app.add_subcommand("run", "run one experiment and print its verdicts");
	run->add_option("experiment", experiment, "experiment name (see list)");
	run->add_option("--config", config_path, "experiment config file")->check(CLI::ExistingFile);
	run->add_option("--set", overrides, "override section.key=value");
	run->add_option("--cache", cache, "prime table cache path");
	run->add_option("--out-json", out_json, "write the report as JSON");
	run->add_option("--out-csv", out_csv, "write the report as CSV");
	run->add_option("--seed", seed, "random seed");
	run->add_option("--threads", run_threads, "worker threads")->check(CLI::PositiveNumber);
	run->add_flag("--no-timing", no_timing, "omit wall-clock time from the outputs");

	CLI11_PARSE(app, argc, argv);

	try {
		if (*list)
			return run_list();
		if (*sieve)
			return run_sieve(limit, threads, sieve_out, queries);
		auto cfg = make_config(config_path);
		for (auto &o : overrides)
			apply_override(cfg.get(), o);
		if (*alpha)
			return run_build_alpha(cfg.get(), levels, out_json);
		if (!experiment.empty())
			check(kflow_config_set(cfg.get(), "", "experiment", experiment.c_str()));
		if (!cache.empty())
			check(kflow_config_set(cfg.get(), "sieve", "cache", cache.c_str()));
		if (run->count("--seed"))
			check(kflow_config_set(cfg.get(), "run", "seed", std::to_string(seed).c_str()));
		if (run_threads)
			check(kflow_config_set(cfg.get(), "run", "threads", std::to_string(run_threads).c_str()));
		return run_experiment(cfg.get(), !no_timing, out_json, out_csv);
	} catch (const failure &f) {
		fmt::print(stderr, "error [{}]: {}\n", kflow_status_name(f.code), f.message);
		return 2;
	} catch (const std::exception &e) {
		fmt::print(stderr, "error: {}\n", e.what());
		return 2;
	}
}
