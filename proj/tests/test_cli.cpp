#include "doctest.h"
#include "kflow/experiments.hpp"
#include "kflow/kflow.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <sys/wait.h>

using namespace kflow;

namespace {

std::string parse_error(const std::string &text)
{
	try {
		std::istringstream is(text);
		experiment_config::parse(is, "cfg.ini");
	} catch (const error &e) {
		CHECK(e.code() == errc::parse);
		return e.what();
	}
	return "";
}

struct shell_result {
	int status = -1;
	std::string out;
};

shell_result shell(const std::string &cmd)
{
	shell_result r;
	FILE *p = popen((cmd + " 2>&1").c_str(), "r");
	REQUIRE(p);
	char buf[4096];
	size_t n;
	while ((n = fread(buf, 1, sizeof buf, p)) > 0)
		r.out.append(buf, n);
	int st = pclose(p);
	r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
	return r;
}

std::string slurp(const std::string &path)
{
	std::ifstream in(path);
	std::stringstream ss;
	ss << in.rdbuf();
	return ss.str();
}

std::filesystem::path scratch()
{
	auto d = std::filesystem::temp_directory_path() / "kflow_test_cli";
	std::filesystem::create_directories(d);
	return d;
}

} // namespace

TEST_CASE("config parsing and typed getters")
{
	auto cfg = experiment_config::parse_string("experiment = dk_bound  # trailing comment\n"
	                                           "\n"
	                                           "[params]\n"
	                                           "N = 1e6\n"
	                                           "levels = 1, 2,3\n"
	                                           "ratio = 0.25\n"
	                                           "flag = yes\n"
	                                           "offset = -4\n");
	CHECK(cfg.experiment() == "dk_bound");
	CHECK(cfg.get_u64("params", "N", 0) == 1000000);
	CHECK(cfg.get_u64_list("params", "levels", {}) == std::vector<uint64_t>{1, 2, 3});
	CHECK(cfg.get_double("params", "ratio", 0.0) == 0.25);
	CHECK(cfg.get_bool("params", "flag", false));
	CHECK(cfg.get_int("params", "offset", 0) == -4);
	CHECK(cfg.get_double("params", "missing", 7.5) == 7.5);
	CHECK_THROWS_AS(cfg.get_u64("params", "ratio", 0), error);
	CHECK_THROWS_AS(cfg.get_bool("params", "ratio", false), error);
	CHECK_THROWS_AS(cfg.get_u64("params", "offset", 0), error);
}

TEST_CASE("config errors name the source line")
{
	CHECK(parse_error("a = 1\n[sec\nb = 2\n").find("cfg.ini:2:") == 0);
	CHECK(parse_error("a = 1\n\nno equals sign\n").find("cfg.ini:3:") == 0);
	auto dup = parse_error("[s]\nk = 1\n# c\nk = 2\n");
	CHECK(dup.find("cfg.ini:4:") == 0);
	CHECK(dup.find("duplicate key 's.k'") != std::string::npos);
	CHECK(parse_error("[s]\n9key = 1\n").find("cfg.ini:2: malformed key") == 0);
	CHECK(parse_error("[bad name]\n").find("cfg.ini:1:") == 0);
	CHECK(parse_error("ok = 1\n").empty());

	experiment_config cfg;
	CHECK_THROWS_AS(cfg.set("s", "bad key", "1"), error);
	CHECK_THROWS_AS(cfg.set("s", "k", "a # b"), error);
	CHECK_THROWS_AS(experiment_config::load("/nonexistent/kflow.ini"), error);
}

TEST_CASE("config dump round trips")
{
	experiment_config cfg;
	cfg.set("", "experiment", "katok_wm");
	cfg.set("alpha", "seed", "2, 3");
	cfg.set("alpha", "mode", "scaled_C_A");
	cfg.set("params", "ratio", "0.1");
	cfg.set_default("params", "ratio", "9");
	CHECK(cfg.get("params", "ratio", "") == "0.1");
	auto back = experiment_config::parse_string(cfg.dump());
	CHECK(back == cfg);
	auto path = (scratch() / "round.ini").string();
	cfg.save(path);
	CHECK(experiment_config::load(path) == cfg);
}

TEST_CASE("registry and lookup")
{
	auto &reg = experiment_registry();
	CHECK(reg.size() == 15);
	std::set<std::string> names;
	for (auto &e : reg) {
		names.insert(e.name);
		CHECK(!e.summary.empty());
		CHECK(e.run);
	}
	CHECK(names.size() == reg.size());
	CHECK(&find_experiment("pnt_kochergin") != nullptr);
	try {
		find_experiment("no_such_thing");
		FAIL("expected an unknown-experiment error");
	} catch (const error &e) {
		CHECK(e.code() == errc::unknown_experiment);
		CHECK(std::string(e.what()).find("dk_bound") != std::string::npos);
	}
	experiment_config cfg;
	CHECK_THROWS_AS(run_experiment(cfg), error);
}

TEST_CASE("config resolvers")
{
	auto cfg = experiment_config::parse_string("[alpha]\nmode = quotients\nquotients = 2, 2, 2\n");
	auto a = alpha_from_config(cfg);
	CHECK(a.q(1) == 2);
	CHECK(a.q(2) == 5);
	cfg.set("alpha", "mode", "bogus");
	CHECK_THROWS_AS(alpha_from_config(cfg), error);

	auto golden = experiment_config::parse_string("[alpha]\nmode = golden\n[roof]\nkind = constant\nc = 2\n");
	auto g = alpha_from_config(golden);
	CHECK(roof_from_config(golden, g).integral() == doctest::Approx(2.0));
	golden.set("roof", "kind", "power");
	CHECK(roof_from_config(golden, g).integral() == doctest::Approx(1.0).epsilon(1e-9));

	auto obs = experiment_config::parse_string("[observable]\nlevel = 0.5\nu = 0:0.25:0, 1:1:0, 3:0:0.5\n");
	auto sh = observable_from_config(obs);
	CHECK(sh.level == 0.5);
	CHECK(sh.u.c == 0.25);
	CHECK(sh.u.terms.size() == 2);
	obs.set("observable", "u", "1:1");
	CHECK_THROWS_AS(observable_from_config(obs), error);
}

TEST_CASE("reports are deterministic and serialize cleanly")
{
	auto cfg = experiment_config::parse_string("experiment = katok_wm\n");
	auto a = run_experiment(cfg), b = run_experiment(cfg);
	CHECK(a.passed());
	CHECK(a.params.at("alpha.mode") == "scaled_C_A");
	CHECK(a.to_json(false).dump() == b.to_json(false).dump());
	CHECK(a.to_json(true).contains("timing"));
	CHECK(!a.to_json(false).contains("timing"));
	std::ostringstream ca, cb;
	a.write_csv(ca);
	b.write_csv(cb);
	CHECK(ca.str() == cb.str());
	CHECK(ca.str().rfind(std::string(report_csv_header) + "\n", 0) == 0);

	experiment_report r;
	r.experiment = "x";
	r.add("nan", NAN);
	r.add("inf", INFINITY, 10, -1);
	r.check("quote,comma", false, "detail");
	r.note("n", "info only");
	CHECK(!r.passed());
	auto j = r.to_json(false);
	CHECK(j["metrics"][0]["value"].is_null());
	CHECK(j["metrics"][1]["value"] == "inf");
	CHECK(r.value("inf", 10, -1) == INFINITY);
	CHECK_THROWS_AS(r.value("inf"), error);
	std::ostringstream os;
	r.write_csv(os);
	CHECK(os.str().find("\"quote,comma\"") != std::string::npos);
}

TEST_CASE("C API: status codes, ownership and runs")
{
	kflow_config *cfg = nullptr;
	CHECK(kflow_config_parse("a = 1\n[x\n", "c.ini", &cfg) == KFLOW_PARSE);
	CHECK(cfg == nullptr);
	CHECK(std::string(kflow_last_error()).find("c.ini:2:") == 0);
	CHECK(kflow_config_parse(nullptr, nullptr, &cfg) == KFLOW_INVALID_INPUT);

	REQUIRE(kflow_config_parse("experiment = no_such\n", nullptr, &cfg) == KFLOW_OK);
	CHECK(std::string(kflow_last_error()).empty());
	kflow_report *rep = nullptr;
	CHECK(kflow_run(cfg, &rep) == KFLOW_UNKNOWN_EXPERIMENT);
	CHECK(rep == nullptr);
	REQUIRE(kflow_config_set(cfg, "", "experiment", "katok_wm") == KFLOW_OK);
	CHECK(kflow_config_set(cfg, "s", "bad key", "1") == KFLOW_PARSE);
	char *s = nullptr;
	REQUIRE(kflow_config_get(cfg, "", "experiment", &s) == KFLOW_OK);
	CHECK(std::string(s) == "katok_wm");
	kflow_string_free(s);
	CHECK(kflow_config_get(cfg, "nope", "k", &s) == KFLOW_INVALID_INPUT);

	REQUIRE(kflow_run(cfg, &rep) == KFLOW_OK);
	CHECK(kflow_report_passed(rep) == 1);
	REQUIRE(kflow_report_verdict_count(rep) == 2);
	const char *crit = nullptr, *status = nullptr, *detail = nullptr;
	REQUIRE(kflow_report_verdict(rep, 0, &crit, &status, &detail) == KFLOW_OK);
	CHECK(std::string(crit) == "katok_wm.ratio1");
	CHECK(std::string(status) == "pass");
	CHECK(kflow_report_verdict(rep, 5, &crit, &status, &detail) == KFLOW_OUT_OF_RANGE);
	char *json = nullptr, *csv = nullptr;
	REQUIRE(kflow_report_json(rep, 0, &json) == KFLOW_OK);
	CHECK(nlohmann::json::parse(json)["experiment"] == "katok_wm");
	REQUIRE(kflow_report_csv(rep, &csv) == KFLOW_OK);
	CHECK(std::string(csv).rfind(report_csv_header, 0) == 0);
	kflow_string_free(json);
	kflow_string_free(csv);
	kflow_report_free(rep);

	kflow_alpha *a = nullptr;
	REQUIRE(kflow_alpha_from_config(cfg, &a) == KFLOW_OK);
	REQUIRE(kflow_alpha_denominator(a, 3, &s) == KFLOW_OK);
	CHECK(std::string(s) == "7537");
	kflow_string_free(s);
	CHECK(kflow_alpha_denominator(a, 100000, &s) == KFLOW_OUT_OF_RANGE);
	kflow_alpha_free(a);
	kflow_config_free(cfg);

	kflow_table *t = nullptr;
	REQUIRE(kflow_table_build(1000, 1, &t) == KFLOW_OK);
	uint64_t pi = 0;
	double theta = 0;
	int prime = -1;
	CHECK(kflow_table_pi(t, 1000, &pi) == KFLOW_OK);
	CHECK(pi == 168);
	CHECK(kflow_table_theta(t, 100, &theta) == KFLOW_OK);
	CHECK(theta == doctest::Approx(83.7283901));
	CHECK(kflow_table_is_prime(t, 997, &prime) == KFLOW_OK);
	CHECK(prime == 1);
	auto path = (scratch() / "t.bin").string();
	CHECK(kflow_table_save(t, path.c_str()) == KFLOW_OK);
	kflow_table_free(t);
	REQUIRE(kflow_table_load(path.c_str(), &t) == KFLOW_OK);
	CHECK(kflow_table_limit(t) == 1000);
	kflow_table_free(t);
	CHECK(kflow_table_load("/nonexistent/t.bin", &t) != KFLOW_OK);

	CHECK(kflow_experiment_count() == 15);
	CHECK(kflow_experiment_name(15) == nullptr);
	CHECK(std::string(kflow_status_name(KFLOW_HYPOTHESIS)) == "hypothesis");
}

TEST_CASE("command line binary")
{
	const std::string cli = KFLOW_CLI_PATH;
	auto dir = scratch();

	auto list = shell(cli + " list");
	CHECK(list.status == 0);
	CHECK(list.out.find("pnt_kochergin") != std::string::npos);

	auto sieve = shell(cli + " sieve --limit 1000 --query 997 --query 999");
	CHECK(sieve.status == 0);
	CHECK(sieve.out.find("pi 168") != std::string::npos);
	CHECK(sieve.out.find("997 prime") != std::string::npos);
	CHECK(sieve.out.find("999 composite") != std::string::npos);

	auto alpha = shell(cli + " build-alpha --set alpha.mode=pell --levels 3");
	CHECK(alpha.status == 0);
	CHECK(alpha.out.find("q_3 12") != std::string::npos);

	auto unknown = shell(cli + " run no_such_thing");
	CHECK(unknown.status == 2);
	CHECK(unknown.out.find("unknown_experiment") != std::string::npos);

	auto bad = (dir / "bad.ini").string();
	std::ofstream(bad) << "experiment = katok_wm\n[alpha]\nmode scaled\n";
	auto parse = shell(cli + " run --config " + bad);
	CHECK(parse.status == 2);
	CHECK(parse.out.find(bad + ":3:") != std::string::npos);

	auto j1 = (dir / "r1.json").string(), j2 = (dir / "r2.json").string(), c1 = (dir / "r1.csv").string();
	auto r1 = shell(cli + " run katok_wm --no-timing --seed 5 --out-json " + j1 + " --out-csv " + c1);
	auto r2 = shell(cli + " run katok_wm --no-timing --seed 5 --out-json " + j2);
	CHECK(r1.status == 0);
	CHECK(r1.out.find("katok_wm.ratio2") != std::string::npos);
	CHECK(slurp(j1) == slurp(j2));
	CHECK(nlohmann::json::parse(slurp(j1))["params"]["run.seed"] == "5");
	CHECK(slurp(c1).rfind(report_csv_header, 0) == 0);

	auto failing = shell(cli + " run katok_wm --set params.ratio2_min=2");
	CHECK(failing.status == 1);
	CHECK(failing.out.find("fail") != std::string::npos);

	CHECK(shell(cli + " run katok_wm --set nokeyvalue").status == 2);
}
