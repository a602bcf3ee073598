#pragma once

#include "kflow/common.hpp"

#include "json.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace kflow {

inline constexpr int report_schema_version = 1;
inline constexpr const char *report_csv_header = "schema,experiment,kind,name,N,z,value,status";
inline constexpr const char *library_version = "0.1.0";

struct metric {
	std::string name;
	uint64_t N = 0;
	int z = 0;
	double value = 0.0;
};

enum class verdict_status { pass, fail, trend_pass, trend_fail, info };
const char *to_string(verdict_status s);

struct verdict {
	std::string criterion;
	verdict_status status = verdict_status::info;
	std::string detail;

	bool failed() const { return status == verdict_status::fail || status == verdict_status::trend_fail; }
};

struct experiment_report {
	std::string experiment;
	nlohmann::json params = nlohmann::json::object();
	std::vector<metric> metrics;
	std::vector<verdict> verdicts;
	nlohmann::json details = nlohmann::json::object();
	double wall_seconds = 0.0;

	void add(std::string name, double value, uint64_t N = 0, int z = 0);
	void check(std::string criterion, bool ok, std::string detail = {});
	void trend(std::string criterion, bool ok, std::string detail = {});
	void note(std::string criterion, std::string detail);
	bool passed() const;
	const verdict *find(const std::string &criterion) const;
	double value(const std::string &name, uint64_t N = 0, int z = 0) const;

	// timing lives under "timing" so the rest is byte-stable for a fixed config
	nlohmann::json to_json(bool with_timing = true) const;
	void write_csv(std::ostream &os) const;
};

void emit_report(const experiment_report &r, const std::string &json_path, const std::string &csv_path);

} // namespace kflow
