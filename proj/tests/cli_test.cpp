#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "fbmilt/cli.hpp"

using namespace fbmilt;
using namespace fbmilt::cli;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "fbmilt_cli_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

int run_main(const std::vector<std::string>& args, std::string* out = nullptr, std::string* err = nullptr) {
  std::vector<const char*> argv{"fbmilt"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream o, e;
  const int code = main_entry(static_cast<int>(argv.size()), argv.data(), o, e);
  if (out) *out = o.str();
  if (err) *err = e.str();
  return code;
}

}  // namespace

TEST(ParseArgs, ListsDefaultsAndFields) {
  const auto rc = parse_args({"phase", "--hurst", "0.25,0.5", "--dim", "2,3,4"});
  EXPECT_EQ(rc.command, Command::phase);
  EXPECT_EQ(rc.hurst, (std::vector<double>{0.25, 0.5}));
  EXPECT_EQ(rc.dim, (std::vector<int>{2, 3, 4}));
  EXPECT_EQ(rc.horizon, 1.0);
  EXPECT_EQ(rc.count, 12);
  EXPECT_FALSE(rc.eps0.has_value());

  const auto mc = parse_args({"estimate", "--reps", "50", "--method", "cholesky", "--seed", "9"});
  EXPECT_TRUE(mc.reps_given);
  EXPECT_EQ(mc.reps, 50);
  EXPECT_EQ(mc.method, SamplerMethod::cholesky);
  EXPECT_EQ(mc.seed, 9u);
}

TEST(ParseArgs, ErrorsNameTheOffendingKey) {
  auto field_of = [](const std::vector<std::string>& a) {
    try {
      parse_args(a);
    } catch (const ParameterError& e) {
      return std::string(e.field()) + "|" + e.what();
    }
    return std::string("no error");
  };
  const auto dim = field_of({"moments", "--dim", "1"});
  EXPECT_EQ(dim.substr(0, 4), "dim|");
  EXPECT_NE(dim.find("d >= 2"), std::string::npos);
  EXPECT_EQ(field_of({"moments", "--eps", "x"}).substr(0, 4), "eps|");
  EXPECT_EQ(field_of({"moments", "--hurst", "1.0"}).substr(0, 6), "hurst|");
  EXPECT_EQ(field_of({"moments", "--hurst", "0.3,0.4"}).substr(0, 6), "hurst|");
  EXPECT_EQ(field_of({"estimate", "--eps", "0"}).substr(0, 4), "eps|");
  EXPECT_EQ(field_of({"moments", "--format", "xml"}).substr(0, 7), "format|");
  EXPECT_EQ(field_of({"moments", "--nope", "1"}).substr(0, 10), "arguments|");
  EXPECT_EQ(field_of({"sweep", "--factor", "2"}).substr(0, 7), "factor|");
}

TEST(ParseArgs, ConfigFileAndPrecedence) {
  const auto cfg = scratch("run.cfg");
  std::ofstream(cfg) << "# comment line\nhurst = 0.3\ngrid_n = 64   # trailing\nreps=20\n";
  const auto a = parse_args({"estimate", "--config", cfg.string()});
  EXPECT_EQ(a.hurst[0], 0.3);
  EXPECT_EQ(a.grid_n, 64);
  EXPECT_EQ(a.reps, 20);
  const auto b = parse_args({"estimate", "--config", cfg.string(), "--hurst", "0.7"});
  EXPECT_EQ(b.hurst[0], 0.7);
  EXPECT_EQ(b.grid_n, 64);

  const auto bad = scratch("bad.cfg");
  std::ofstream(bad) << "hurst = 0.3\ncolour = red\n";
  try {
    parse_args({"moments", "--config", bad.string()});
    FAIL();
  } catch (const ParameterError& e) {
    EXPECT_EQ(e.field(), "colour");
  }
}

TEST(Run, MomentsJsonRoundTrip) {
  const auto out = scratch("m.json");
  std::string summary;
  ASSERT_EQ(run_main({"moments", "--hurst", "0.5", "--dim", "2", "--eps", "1", "--out", out.string()}, &summary), 0);
  EXPECT_NE(summary.find("m1"), std::string::npos);
  const auto j = nlohmann::json::parse(slurp(out));
  EXPECT_EQ(j["version"], kVersion);
  EXPECT_EQ(j["config"]["hurst"][0], 0.5);
  EXPECT_NEAR(j["results"]["m1"]["value"].get<double>(), 0.0832775, 1e-6);
  EXPECT_FALSE(j["results"]["m1"]["diverged"].get<bool>());
  EXPECT_TRUE(j["results"]["m2"].is_object());
  EXPECT_TRUE(j["results"]["mc"].is_null());

  ASSERT_EQ(run_main({"moments", "--eps", "0", "--out", out.string()}), 0);
  const auto z = nlohmann::json::parse(slurp(out));
  EXPECT_NEAR(z["results"]["m1"]["value"].get<double>(), std::log(2.0) / std::acos(-1.0), 1e-6);
  EXPECT_TRUE(z["results"]["m2"].is_null());
}

TEST(Run, OutputIsDeterministicApartFromTimestamp) {
  const auto a = scratch("a.json"), b = scratch("b.json");
  const std::vector<std::string> base{"estimate", "--hurst", "0.4", "--eps", "0.5", "--reps", "300", "--seed", "5"};
  auto with_out = [&](const std::filesystem::path& p, const std::string& workers) {
    auto v = base;
    v.insert(v.end(), {"--workers", workers, "--out", p.string()});
    return v;
  };
  ASSERT_EQ(run_main(with_out(a, "1")), 0);
  ASSERT_EQ(run_main(with_out(b, "2")), 0);
  const std::regex stamp("\"generated_at\": \"[^\"]*\"");
  const std::regex outp("\"out\": \"[^\"]*\"");
  const std::regex work("\"workers\": [0-9]+");
  auto strip = [&](std::string s) {
    s = std::regex_replace(s, stamp, "");
    s = std::regex_replace(s, outp, "");
    return std::regex_replace(s, work, "");
  };
  EXPECT_EQ(strip(slurp(a)), strip(slurp(b)));
  const auto j = nlohmann::json::parse(slurp(a));
  EXPECT_EQ(j["results"]["mc"]["reps"], 300);
  EXPECT_GT(j["results"]["mc"]["se"].get<double>(), 0.0);
}

TEST(Run, SweepCsvHeaderAndMonteCarloColumn) {
  const auto out = scratch("s.csv");
  ASSERT_EQ(run_main({"sweep", "--count", "3", "--format", "csv", "--out", out.string()}), 0);
  std::istringstream lines(slurp(out));
  std::string header, row;
  std::getline(lines, header);
  EXPECT_EQ(header, "eps,m1,m1_err,m2,m2_err,variance,cauchy_gap,mc_mean,mc_se");
  std::getline(lines, row);
  EXPECT_EQ(row.back(), ',');  // no MC column unless reps is given

  ASSERT_EQ(run_main({"sweep", "--count", "3", "--reps", "100", "--format", "csv", "--out", out.string()}), 0);
  std::istringstream again(slurp(out));
  std::getline(again, header);
  std::getline(again, row);
  EXPECT_NE(row.back(), ',');
}

TEST(Run, SimulateWritesBothPaths) {
  const auto out = scratch("pair.csv");
  ASSERT_EQ(run_main({"simulate", "--hurst", "0.3", "--dim", "3", "--grid-n", "8", "--format", "csv", "--out",
                      out.string()}),
            0);
  const auto tilde = out.parent_path() / "pair_tilde.csv";
  ASSERT_TRUE(std::filesystem::exists(tilde));
  std::istringstream a(slurp(out));
  std::string header;
  std::getline(a, header);
  EXPECT_EQ(header, "time,x1,x2,x3");
  EXPECT_NE(slurp(out), slurp(tilde));
}

TEST(Run, PhaseVerdictAndExitCodes) {
  std::string summary, err;
  EXPECT_EQ(run_main({"phase", "--hurst", "0.5", "--dim", "2"}, &summary), 0);
  EXPECT_NE(summary.find("Convergent"), std::string::npos);
  EXPECT_EQ(run_main({"moments", "--dim", "1"}, &summary, &err), 2);
  EXPECT_NE(err.find("dim"), std::string::npos);
  EXPECT_EQ(run_main({"moments", "--bogus"}), 2);
  EXPECT_EQ(run_main({"unknown-command"}), 2);
  const auto dir_out = std::filesystem::temp_directory_path().string();
  EXPECT_EQ(run_main({"moments", "--out", dir_out}), 2);
  EXPECT_EQ(run_main({"--help"}, &summary), 0);
  EXPECT_NE(summary.find("Usage"), std::string::npos);
}

TEST(Run, VerifyLemmasPasses) {
  std::string summary;
  EXPECT_EQ(run_main({"verify-lemmas"}, &summary), 0);
  EXPECT_EQ(summary.find("FAIL"), std::string::npos);
}

TEST(Lemmas, SuitesPassAndCountTheirCases) {
  for (const auto& c : verify_lemmas(3)) {
    EXPECT_TRUE(c.pass()) << c.name << " worst " << c.worst;
    EXPECT_GT(c.checked, 0) << c.name;
  }
  EXPECT_EQ(verify_gamma_bound().checked, 5 * 3 * 241);
  EXPECT_EQ(verify_superadditivity(1000, 4).checked, 3000);
}
