#include "kflow/report.hpp"

#include <fstream>
#include <ostream>

namespace kflow {

const char *to_string(verdict_status s)
{
	switch (s) {
	case verdict_status::pass:
		return "pass";
	case verdict_status::fail:
		return "fail";
	case verdict_status::trend_pass:
		return "trend_pass";
	case verdict_status::trend_fail:
		return "trend_fail";
	case verdict_status::info:
		return "info";
	}
	return "info";
}

void experiment_report::add(std::string name, double value, uint64_t N, int z)
{
	metrics.push_back({std::move(name), N, z, value});
}

void experiment_report::check(std::string criterion, bool ok, std::string detail)
{
	verdicts.push_back({std::move(criterion), ok ? verdict_status::pass : verdict_status::fail,
	                    std::move(detail)});
}

void experiment_report::trend(std::string criterion, bool ok, std::string detail)
{
	verdicts.push_back({std::move(criterion), ok ? verdict_status::trend_pass : verdict_status::trend_fail,
	                    std::move(detail)});
}

void experiment_report::note(std::string criterion, std::string detail)
{
	verdicts.push_back({std::move(criterion), verdict_status::info, std::move(detail)});
}

bool experiment_report::passed() const
{
	for (auto &v : verdicts)
		if (v.failed())
			return false;
	return true;
}

const verdict *experiment_report::find(const std::string &criterion) const
{
	for (auto &v : verdicts)
		if (v.criterion == criterion)
			return &v;
	return nullptr;
}

double experiment_report::value(const std::string &name, uint64_t N, int z) const
{
	for (auto &m : metrics)
		if (m.name == name && m.N == N && m.z == z)
			return m.value;
	throw error(errc::invalid_input, "report has no metric " + name);
}

namespace {

// JSON cannot hold inf or NaN
nlohmann::json number(double v)
{
	if (std::isnan(v))
		return nullptr;
	if (std::isinf(v))
		return v > 0 ? "inf" : "-inf";
	return v;
}

std::string csv_field(const std::string &s)
{
	if (s.find_first_of(",\"\n") == std::string::npos)
		return s;
	std::string out = "\"";
	for (char c : s) {
		if (c == '"')
			out += '"';
		out += c;
	}
	return out + "\"";
}

} // namespace

nlohmann::json experiment_report::to_json(bool with_timing) const
{
	nlohmann::json ms = nlohmann::json::array();
	for (auto &m : metrics)
		ms.push_back({{"name", m.name}, {"N", m.N}, {"z", m.z}, {"value", number(m.value)}});
	nlohmann::json vs = nlohmann::json::array();
	for (auto &v : verdicts)
		vs.push_back({{"criterion", v.criterion}, {"status", to_string(v.status)}, {"detail", v.detail}});
	nlohmann::json j = {{"schema", report_schema_version},
	                    {"version", library_version},
	                    {"experiment", experiment},
	                    {"params", params},
	                    {"metrics", ms},
	                    {"verdicts", vs},
	                    {"details", details}};
	if (with_timing)
		j["timing"] = {{"wall_seconds", wall_seconds}};
	return j;
}

void experiment_report::write_csv(std::ostream &os) const
{
	char buf[64];
	os << report_csv_header << "\n";
	for (auto &m : metrics) {
		std::snprintf(buf, sizeof buf, "%.17g", m.value);
		os << report_schema_version << "," << csv_field(experiment) << ",metric," << csv_field(m.name)
		   << "," << m.N << "," << m.z << "," << buf << ",\n";
	}
	for (auto &v : verdicts)
		os << report_schema_version << "," << csv_field(experiment) << ",verdict,"
		   << csv_field(v.criterion) << ",0,0,," << to_string(v.status) << "\n";
}

void emit_report(const experiment_report &r, const std::string &json_path, const std::string &csv_path)
{
	if (!json_path.empty()) {
		std::ofstream out(json_path);
		if (!out)
			throw error(errc::resource, "cannot write " + json_path);
		out << r.to_json().dump(2) << "\n";
	}
	if (!csv_path.empty()) {
		std::ofstream out(csv_path);
		if (!out)
			throw error(errc::resource, "cannot write " + csv_path);
		r.write_csv(out);
	}
}

} // namespace kflow
