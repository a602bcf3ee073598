#include "kflow/kflow.h"

#include "kflow/experiments.hpp"

#include <cstring>
#include <sstream>

struct kflow_config {
	kflow::experiment_config cfg;
};
struct kflow_table {
	kflow::prime_table table;
};
struct kflow_alpha {
	kflow::rotation_number alpha;
};
struct kflow_report {
	kflow::experiment_report report;
	std::vector<std::string> status; // keeps the c_str of to_string alive per verdict
};

namespace {

thread_local std::string last_error;

// runs f, translating exceptions into status codes and the thread-local message
template <class F>
kflow_status guard(F &&f)
{
	try {
		f();
		last_error.clear();
		return KFLOW_OK;
	} catch (const kflow::error &e) {
		last_error = e.what();
		return kflow_status(int(e.code()));
	} catch (const std::bad_alloc &) {
		last_error = "out of memory";
		return KFLOW_RESOURCE;
	} catch (const std::exception &e) {
		last_error = e.what();
		return KFLOW_INTERNAL;
	}
}

char *dup(const std::string &s)
{
	char *p = static_cast<char *>(std::malloc(s.size() + 1));
	if (!p)
		throw std::bad_alloc();
	std::memcpy(p, s.c_str(), s.size() + 1);
	return p;
}

void need(const void *p, const char *what)
{
	if (!p)
		throw kflow::error(kflow::errc::invalid_input, std::string(what) + " is null");
}

} // namespace

extern "C" {

const char *kflow_version(void)
{
	return kflow::library_version;
}

const char *kflow_status_name(kflow_status s)
{
	switch (s) {
	case KFLOW_OK:
		return "ok";
	case KFLOW_INVALID_INPUT:
		return "invalid_input";
	case KFLOW_OUT_OF_RANGE:
		return "out_of_range";
	case KFLOW_SINGULARITY:
		return "singularity";
	case KFLOW_HYPOTHESIS:
		return "hypothesis";
	case KFLOW_PRECISION:
		return "precision";
	case KFLOW_RESOURCE:
		return "resource";
	case KFLOW_CONSTRUCTION:
		return "construction";
	case KFLOW_PARSE:
		return "parse";
	case KFLOW_INTERNAL:
		return "internal";
	case KFLOW_UNKNOWN_EXPERIMENT:
		return "unknown_experiment";
	}
	return "unknown";
}

const char *kflow_last_error(void)
{
	return last_error.c_str();
}

void kflow_string_free(char *s)
{
	std::free(s);
}

kflow_status kflow_config_new(kflow_config **out)
{
	return guard([&] {
		need(out, "out");
		*out = new kflow_config{};
	});
}

kflow_status kflow_config_parse(const char *text, const char *source, kflow_config **out)
{
	return guard([&] {
		need(text, "text");
		need(out, "out");
		std::istringstream is(text);
		*out = new kflow_config{kflow::experiment_config::parse(is, source ? source : "<string>")};
	});
}

kflow_status kflow_config_load(const char *path, kflow_config **out)
{
	return guard([&] {
		need(path, "path");
		need(out, "out");
		*out = new kflow_config{kflow::experiment_config::load(path)};
	});
}

kflow_status kflow_config_set(kflow_config *cfg, const char *section, const char *key, const char *value)
{
	return guard([&] {
		need(cfg, "config");
		need(key, "key");
		need(value, "value");
		cfg->cfg.set(section ? section : "", key, value);
	});
}

kflow_status kflow_config_get(const kflow_config *cfg, const char *section, const char *key, char **out)
{
	return guard([&] {
		need(cfg, "config");
		need(key, "key");
		need(out, "out");
		std::string sec = section ? section : "";
		if (!cfg->cfg.has(sec, key))
			throw kflow::error(kflow::errc::invalid_input,
			                   "config has no key '" + (sec.empty() ? "" : sec + ".") + key + "'");
		*out = dup(cfg->cfg.get(sec, key, ""));
	});
}

kflow_status kflow_config_dump(const kflow_config *cfg, char **out)
{
	return guard([&] {
		need(cfg, "config");
		need(out, "out");
		*out = dup(cfg->cfg.dump());
	});
}

void kflow_config_free(kflow_config *cfg)
{
	delete cfg;
}

kflow_status kflow_table_build(uint64_t limit, unsigned threads, kflow_table **out)
{
	return guard([&] {
		need(out, "out");
		kflow::prime_table::options opt;
		opt.threads = threads ? threads : 1;
		*out = new kflow_table{kflow::prime_table::build(limit, opt)};
	});
}

kflow_status kflow_table_load(const char *path, kflow_table **out)
{
	return guard([&] {
		need(path, "path");
		need(out, "out");
		*out = new kflow_table{kflow::prime_table::load(path)};
	});
}

kflow_status kflow_table_from_config(const kflow_config *cfg, kflow_table **out)
{
	return guard([&] {
		need(cfg, "config");
		need(out, "out");
		*out = new kflow_table{kflow::table_from_config(cfg->cfg)};
	});
}

kflow_status kflow_table_save(const kflow_table *t, const char *path)
{
	return guard([&] {
		need(t, "table");
		need(path, "path");
		t->table.save(path);
	});
}

uint64_t kflow_table_limit(const kflow_table *t)
{
	return t ? t->table.limit() : 0;
}

kflow_status kflow_table_is_prime(const kflow_table *t, uint64_t n, int *out)
{
	return guard([&] {
		need(t, "table");
		need(out, "out");
		*out = t->table.is_prime(n) ? 1 : 0;
	});
}

kflow_status kflow_table_theta(const kflow_table *t, uint64_t x, double *out)
{
	return guard([&] {
		need(t, "table");
		need(out, "out");
		*out = t->table.theta(x);
	});
}

kflow_status kflow_table_pi(const kflow_table *t, uint64_t x, uint64_t *out)
{
	return guard([&] {
		need(t, "table");
		need(out, "out");
		*out = t->table.pi(x);
	});
}

void kflow_table_free(kflow_table *t)
{
	delete t;
}

kflow_status kflow_alpha_from_config(const kflow_config *cfg, kflow_alpha **out)
{
	return guard([&] {
		need(cfg, "config");
		need(out, "out");
		*out = new kflow_alpha{kflow::alpha_from_config(cfg->cfg)};
	});
}

size_t kflow_alpha_max_level(const kflow_alpha *a)
{
	return a ? a->alpha.max_level() : 0;
}

kflow_status kflow_alpha_denominator(const kflow_alpha *a, size_t n, char **out)
{
	return guard([&] {
		need(a, "alpha");
		need(out, "out");
		if (n > a->alpha.max_level() + 1)
			throw kflow::error(kflow::errc::out_of_range, "level beyond the available denominators");
		*out = dup(a->alpha.q(n).str());
	});
}

kflow_status kflow_alpha_value(const kflow_alpha *a, double *out)
{
	return guard([&] {
		need(a, "alpha");
		need(out, "out");
		*out = a->alpha.value();
	});
}

kflow_status kflow_alpha_json(const kflow_alpha *a, char **out)
{
	return guard([&] {
		need(a, "alpha");
		need(out, "out");
		*out = dup(a->alpha.to_json().dump(2));
	});
}

void kflow_alpha_free(kflow_alpha *a)
{
	delete a;
}

size_t kflow_experiment_count(void)
{
	return kflow::experiment_registry().size();
}

const char *kflow_experiment_name(size_t i)
{
	auto &reg = kflow::experiment_registry();
	return i < reg.size() ? reg[i].name.c_str() : nullptr;
}

const char *kflow_experiment_summary(size_t i)
{
	auto &reg = kflow::experiment_registry();
	return i < reg.size() ? reg[i].summary.c_str() : nullptr;
}

kflow_status kflow_run(const kflow_config *cfg, kflow_report **out)
{
	return guard([&] {
		need(cfg, "config");
		need(out, "out");
		auto r = std::make_unique<kflow_report>();
		r->report = kflow::run_experiment(cfg->cfg);
		for (auto &v : r->report.verdicts)
			r->status.push_back(kflow::to_string(v.status));
		*out = r.release();
	});
}

int kflow_report_passed(const kflow_report *r)
{
	return r && r->report.passed() ? 1 : 0;
}

size_t kflow_report_verdict_count(const kflow_report *r)
{
	return r ? r->report.verdicts.size() : 0;
}

kflow_status kflow_report_verdict(const kflow_report *r, size_t i, const char **criterion, const char **status,
                                  const char **detail)
{
	return guard([&] {
		need(r, "report");
		if (i >= r->report.verdicts.size())
			throw kflow::error(kflow::errc::out_of_range, "verdict index out of range");
		auto &v = r->report.verdicts[i];
		if (criterion)
			*criterion = v.criterion.c_str();
		if (status)
			*status = r->status[i].c_str();
		if (detail)
			*detail = v.detail.c_str();
	});
}

kflow_status kflow_report_json(const kflow_report *r, int with_timing, char **out)
{
	return guard([&] {
		need(r, "report");
		need(out, "out");
		*out = dup(r->report.to_json(with_timing != 0).dump(2) + "\n");
	});
}

kflow_status kflow_report_csv(const kflow_report *r, char **out)
{
	return guard([&] {
		need(r, "report");
		need(out, "out");
		std::ostringstream os;
		r->report.write_csv(os);
		*out = dup(os.str());
	});
}

double kflow_report_seconds(const kflow_report *r)
{
	return r ? r->report.wall_seconds : 0.0;
}

void kflow_report_free(kflow_report *r)
{
	delete r;
}

} // extern "C"
