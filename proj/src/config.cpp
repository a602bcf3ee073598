#include "kflow/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace kflow {

namespace {

std::string trim(const std::string &s)
{
	size_t a = s.find_first_not_of(" \t\r");
	if (a == std::string::npos)
		return "";
	size_t b = s.find_last_not_of(" \t\r");
	return s.substr(a, b - a + 1);
}

std::string where(const std::string &sec, const std::string &key)
{
	return sec.empty() ? key : sec + "." + key;
}

std::vector<std::string> split_list(const std::string &v)
{
	std::vector<std::string> out;
	std::string cur;
	std::istringstream is(v);
	while (std::getline(is, cur, ','))
		if (auto t = trim(cur); !t.empty())
			out.push_back(t);
	return out;
}

bool parse_double(const std::string &s, double &out)
{
	auto t = trim(s);
	auto r = std::from_chars(t.data(), t.data() + t.size(), out);
	return r.ec == std::errc() && r.ptr == t.data() + t.size();
}

bool parse_u64(const std::string &s, uint64_t &out)
{
	auto t = trim(s);
	auto r = std::from_chars(t.data(), t.data() + t.size(), out);
	if (r.ec == std::errc() && r.ptr == t.data() + t.size())
		return true;
	// accept integral scientific notation such as 1e6
	double d;
	if (!parse_double(t, d) || d < 0 || d > 1.8e19 || std::floor(d) != d)
		return false;
	out = uint64_t(d);
	return true;
}

} // namespace

bool valid_config_key(const std::string &key)
{
	if (key.empty() || !(std::isalpha((unsigned char)key[0]) || key[0] == '_'))
		return false;
	for (char c : key)
		if (!(std::isalnum((unsigned char)c) || c == '_' || c == '-' || c == '.'))
			return false;
	return true;
}

experiment_config experiment_config::parse(std::istream &in, const std::string &source)
{
	experiment_config cfg;
	std::string line, sec;
	int lineno = 0;
	auto fail = [&](const std::string &msg) {
		throw error(errc::parse, source + ":" + std::to_string(lineno) + ": " + msg);
	};
	while (std::getline(in, line)) {
		++lineno;
		auto hash = line.find('#');
		if (hash != std::string::npos)
			line.erase(hash);
		auto t = trim(line);
		if (t.empty())
			continue;
		if (t.front() == '[') {
			if (t.back() != ']')
				fail("unterminated section header '" + t + "'");
			sec = trim(t.substr(1, t.size() - 2));
			if (!valid_config_key(sec))
				fail("malformed section name '" + sec + "'");
			cfg.values_[sec];
			continue;
		}
		auto eq = t.find('=');
		if (eq == std::string::npos)
			fail("expected 'key = value', got '" + t + "'");
		auto key = trim(t.substr(0, eq));
		if (!valid_config_key(key))
			fail("malformed key '" + key + "'");
		auto &s = cfg.values_[sec];
		if (s.count(key))
			fail("duplicate key '" + where(sec, key) + "'");
		s[key] = trim(t.substr(eq + 1));
	}
	return cfg;
}

experiment_config experiment_config::parse_string(const std::string &text)
{
	std::istringstream is(text);
	return parse(is);
}

experiment_config experiment_config::load(const std::string &path)
{
	std::ifstream in(path);
	if (!in)
		throw error(errc::parse, "cannot open config file " + path);
	return parse(in, path);
}

std::string experiment_config::dump() const
{
	std::ostringstream os;
	if (auto it = values_.find(""); it != values_.end())
		for (auto &[k, v] : it->second)
			os << k << " = " << v << "\n";
	for (auto &[name, s] : values_) {
		if (name.empty())
			continue;
		os << "\n[" << name << "]\n";
		for (auto &[k, v] : s)
			os << k << " = " << v << "\n";
	}
	return os.str();
}

void experiment_config::save(const std::string &path) const
{
	std::ofstream out(path);
	if (!out)
		throw error(errc::resource, "cannot write config file " + path);
	out << dump();
}

bool experiment_config::has(const std::string &sec, const std::string &key) const
{
	auto it = values_.find(sec);
	return it != values_.end() && it->second.count(key);
}

void experiment_config::set(const std::string &sec, const std::string &key, const std::string &value)
{
	if (!valid_config_key(key) || (!sec.empty() && !valid_config_key(sec)))
		throw error(errc::parse, "malformed key '" + where(sec, key) + "'");
	if (value.find('\n') != std::string::npos || value.find('#') != std::string::npos)
		throw error(errc::parse, "value for '" + where(sec, key) + "' cannot hold '#' or newlines");
	values_[sec][key] = trim(value);
}

void experiment_config::set_default(const std::string &sec, const std::string &key,
                                    const std::string &value)
{
	if (!has(sec, key))
		set(sec, key, value);
}

std::string experiment_config::get(const std::string &sec, const std::string &key,
                                   const std::string &def) const
{
	auto it = values_.find(sec);
	if (it == values_.end())
		return def;
	auto jt = it->second.find(key);
	return jt == it->second.end() ? def : jt->second;
}

double experiment_config::get_double(const std::string &sec, const std::string &key, double def) const
{
	if (!has(sec, key))
		return def;
	double d;
	if (!parse_double(get(sec, key, ""), d))
		throw error(errc::parse, "'" + where(sec, key) + "' is not a number");
	return d;
}

int64_t experiment_config::get_int(const std::string &sec, const std::string &key, int64_t def) const
{
	if (!has(sec, key))
		return def;
	auto t = get(sec, key, "");
	int64_t v;
	auto r = std::from_chars(t.data(), t.data() + t.size(), v);
	if (r.ec != std::errc() || r.ptr != t.data() + t.size())
		throw error(errc::parse, "'" + where(sec, key) + "' is not an integer");
	return v;
}

uint64_t experiment_config::get_u64(const std::string &sec, const std::string &key, uint64_t def) const
{
	if (!has(sec, key))
		return def;
	uint64_t v;
	if (!parse_u64(get(sec, key, ""), v))
		throw error(errc::parse, "'" + where(sec, key) + "' is not a non-negative integer");
	return v;
}

bool experiment_config::get_bool(const std::string &sec, const std::string &key, bool def) const
{
	if (!has(sec, key))
		return def;
	auto v = get(sec, key, "");
	if (v == "true" || v == "1" || v == "yes" || v == "on")
		return true;
	if (v == "false" || v == "0" || v == "no" || v == "off")
		return false;
	throw error(errc::parse, "'" + where(sec, key) + "' is not a boolean");
}

std::vector<uint64_t> experiment_config::get_u64_list(const std::string &sec, const std::string &key,
                                                      std::vector<uint64_t> def) const
{
	if (!has(sec, key))
		return def;
	std::vector<uint64_t> out;
	for (auto &item : split_list(get(sec, key, ""))) {
		uint64_t v;
		if (!parse_u64(item, v))
			throw error(errc::parse, "'" + where(sec, key) + "' holds a non-integer entry '" + item + "'");
		out.push_back(v);
	}
	return out;
}

std::vector<double> experiment_config::get_double_list(const std::string &sec, const std::string &key,
                                                       std::vector<double> def) const
{
	if (!has(sec, key))
		return def;
	std::vector<double> out;
	for (auto &item : split_list(get(sec, key, ""))) {
		double v;
		if (!parse_double(item, v))
			throw error(errc::parse, "'" + where(sec, key) + "' holds a non-numeric entry '" + item + "'");
		out.push_back(v);
	}
	return out;
}

} // namespace kflow
