#pragma once

#include "kflow/common.hpp"

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace kflow {

// Plain-text experiment configuration:
//
//   # comment
//   experiment = pnt_kochergin
//   [run]
//   seed = 1
//   [alpha]
//   mode = scaled_C_A
//
// Keys before the first section header live in the unnamed top-level section.
class experiment_config {
public:
	using section = std::map<std::string, std::string>;

	static experiment_config parse(std::istream &in, const std::string &source = "<input>");
	static experiment_config parse_string(const std::string &text);
	static experiment_config load(const std::string &path);

	std::string dump() const;
	void save(const std::string &path) const;

	std::string experiment() const { return get("", "experiment", ""); }
	bool has(const std::string &sec, const std::string &key) const;
	void set(const std::string &sec, const std::string &key, const std::string &value);
	// fills keys that are not already present
	void set_default(const std::string &sec, const std::string &key, const std::string &value);

	std::string get(const std::string &sec, const std::string &key, const std::string &def) const;
	double get_double(const std::string &sec, const std::string &key, double def) const;
	int64_t get_int(const std::string &sec, const std::string &key, int64_t def) const;
	uint64_t get_u64(const std::string &sec, const std::string &key, uint64_t def) const;
	bool get_bool(const std::string &sec, const std::string &key, bool def) const;
	std::vector<uint64_t> get_u64_list(const std::string &sec, const std::string &key,
	                                   std::vector<uint64_t> def) const;
	std::vector<double> get_double_list(const std::string &sec, const std::string &key,
	                                    std::vector<double> def) const;

	const std::map<std::string, section> &sections() const { return values_; }
	bool operator==(const experiment_config &o) const { return values_ == o.values_; }

private:
	std::map<std::string, section> values_;
};

bool valid_config_key(const std::string &key);

} // namespace kflow
