// Copyright 2026 The AGIA Risk Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "agia/cli.hpp"

#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "agia/bounds.hpp"
#include "gtest/gtest.h"
#include "json.hpp"
#include "table.hpp"

namespace agia::cli {
namespace {

constexpr double kLn2 = std::numbers::ln2;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result call(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> rows;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) rows.push_back(line);
  return rows;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream in(line);
  for (std::string cell; std::getline(in, cell, ',');) cells.push_back(cell);
  return cells;
}

// CSV output (no quoted fields) as one name -> text map per data row.
std::vector<std::map<std::string, std::string>> table(const std::string& csv) {
  const auto rows = lines(csv);
  std::vector<std::map<std::string, std::string>> records;
  if (rows.empty()) return records;
  const auto header = split(rows[0]);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto cells = split(rows[i]);
    EXPECT_EQ(cells.size(), header.size());
    std::map<std::string, std::string> r;
    for (std::size_t k = 0; k < header.size() && k < cells.size(); ++k) {
      r[header[k]] = cells[k];
    }
    records.push_back(r);
  }
  return records;
}

double num(const std::map<std::string, std::string>& r, const std::string& k) {
  const auto it = r.find(k);
  EXPECT_NE(it, r.end()) << k;
  return it == r.end() ? std::nan("") : std::strtod(it->second.c_str(), nullptr);
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() /
         ("agia_cli_test_" + std::to_string(::getpid()) + "_" + name);
}

void expect_usage_error(const Result& r) {
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_TRUE(r.out.empty()) << r.out;
  EXPECT_EQ(lines(r.err).size(), 1u) << r.err;
  EXPECT_EQ(r.err.rfind("error: ", 0), 0u) << r.err;
}

TEST(Table, FormatsRealsLosslessly) {
  EXPECT_EQ(format_real(0.1), "0.10000000000000001");
  EXPECT_EQ(std::strtod(format_real(1.0 / 3).c_str(), nullptr), 1.0 / 3);
  EXPECT_EQ(format_real(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(format_real(-std::numeric_limits<double>::infinity()), "-inf");
}

TEST(Table, CsvQuotingFollowsRfc4180) {
  EXPECT_EQ(csv_field("plain"), "plain");
  EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(csv_field("two\nlines"), "\"two\nlines\"");
}

TEST(Table, JsonLinesKeepNonFiniteAsStrings) {
  std::ostringstream out;
  TableWriter w(out, Format::kJson);
  w.write({{"a", std::int64_t{3}},
           {"b", std::numeric_limits<double>::infinity()},
           {"c", std::string("x\"y")}});
  const auto j = nlohmann::json::parse(out.str());
  EXPECT_EQ(j["a"], 3);
  EXPECT_EQ(j["b"], "inf");
  EXPECT_EQ(j["c"], "x\"y");
}

TEST(Bound, ReferenceValues) {
  // N = 2: P(MSE <= eta) = 1 - exp(-eta) at sigma = m = 1.
  auto r = call({"bound", "--metric", "mse", "--n", "2", "--sigma", "1",
                 "--min-norm", "1", "--eta", "1.386294"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  auto rows = table(r.out);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_NEAR(num(rows[0], "gamma"), 1 - std::exp(-1.386294), 1e-12);
  EXPECT_EQ(rows[0]["metric"], "mse");
  EXPECT_EQ(num(rows[0], "eta"), 1.386294);

  r = call({"bound", "--n", "2", "--sigma", "1", "--eta", "0"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(num(table(r.out)[0], "gamma"), 0.0);

  r = call({"bound", "--metric", "psnr", "--n", "2", "--sigma", "1",
            "--eta-db", "1e9", "--data-range", "1"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_LT(num(table(r.out)[0], "gamma"), 1e-300);
}

TEST(Bound, IsAThinLosslessAdapter) {
  const auto r = call({"bound", "--n", "17", "--sigma", "0.37", "--min-norm",
                       "2.5", "--eta", "0.1"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const RiskParams<double> params(17, 0.37, 1.0, 2.5);
  EXPECT_EQ(num(table(r.out)[0], "gamma"), rero_gamma_mse(params, 0.1).gamma);
}

TEST(Bound, PsnrMatchesMseAtEquivalentThreshold) {
  const double eta_db = 10 * std::log10(1 / kLn2);
  const auto r = call({"bound", "--metric", "psnr", "--n", "2", "--sigma", "1",
                       "--eta-db", format_real(eta_db), "--data-range", "1"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NEAR(num(table(r.out)[0], "gamma"), 0.5, 1e-12);
}

TEST(Bound, UsageErrors) {
  expect_usage_error(call({"bound", "--n", "2", "--sigma", "1"}));
  expect_usage_error(call({"bound", "--n", "2", "--sigma", "-1", "--eta", "1"}));
  expect_usage_error(call({"bound", "--n", "0", "--sigma", "1", "--eta", "1"}));
  expect_usage_error(call({"bound", "--metric", "psnr", "--n", "2", "--sigma",
                           "1", "--eta-db", "10"}));
  expect_usage_error(call({"bound", "--metric", "psnr", "--n", "2", "--sigma",
                           "1", "--eta", "1", "--data-range", "1"}));
  expect_usage_error(call({"bound", "--metric", "ssim", "--n", "2", "--sigma",
                           "1", "--eta", "1"}));
  expect_usage_error(call({"bound", "--n", "2", "--sigma", "1", "--eta", "1",
                           "--bogus"}));
  expect_usage_error(call({}));
}

TEST(Bound, NamesTheViolatedPrecondition) {
  const auto r = call({"bound", "--n", "2", "--sigma", "0", "--eta", "1"});
  EXPECT_NE(r.err.find("sigma"), std::string::npos) << r.err;
}

TEST(Calibrate, ReferenceValues) {
  auto r = call({"calibrate", "--n", "2", "--min-norm", "1", "--eta", "1",
                 "--gamma", "0.5"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const double sigma = num(table(r.out)[0], "sigma");
  EXPECT_NEAR(sigma, 1 / std::sqrt(kLn2), 1e-12);

  r = call({"calibrate", "--n", "2", "--min-norm", "1", "--eta", "4", "--gamma",
            "0.5"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NEAR(num(table(r.out)[0], "sigma"), 2 * sigma, 1e-12);

  expect_usage_error(call({"calibrate", "--n", "2", "--eta", "1", "--gamma", "1"}));
  expect_usage_error(call({"calibrate", "--n", "2", "--eta", "1", "--gamma", "0"}));
}

TEST(Calibrate, RoundTripsThroughBound) {
  const auto c = call({"calibrate", "--n", "64", "--min-norm", "3", "--eta",
                       "0.02", "--gamma", "0.1"});
  ASSERT_EQ(c.code, kExitOk) << c.err;
  const std::string sigma = table(c.out)[0]["sigma"];
  const auto b = call({"bound", "--n", "64", "--min-norm", "3", "--eta", "0.02",
                       "--sigma", sigma});
  ASSERT_EQ(b.code, kExitOk) << b.err;
  EXPECT_NEAR(num(table(b.out)[0], "gamma"), 0.1, 1e-9);
}

TEST(Corridor, ReferenceValues) {
  auto r = call({"corridor", "--n", "2", "--sigma", "1", "--min-norm", "1",
                 "--gamma-prior", "0.5"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  auto row = table(r.out)[0];
  EXPECT_EQ(num(row, "eta_lower"), 0.0);
  EXPECT_NEAR(num(row, "eta_upper"), kLn2, 1e-12);

  r = call({"corridor", "--n", "2", "--sigma", "1", "--gamma-prior", "1e-12"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_LT(num(table(r.out)[0], "eta_upper"), 1e-11);

  double prev = 0;
  for (const char* g : {"0.1", "0.3", "0.6", "0.9"}) {
    r = call({"corridor", "--n", "8", "--sigma", "0.5", "--gamma-prior", g});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    const double upper = num(table(r.out)[0], "eta_upper");
    EXPECT_GT(upper, prev);
    prev = upper;
  }
  expect_usage_error(call({"corridor", "--n", "2", "--sigma", "1",
                           "--gamma-prior", "1"}));
}

TEST(Corridor, PsnrColumnsUseInfinitySentinel) {
  const auto r = call({"corridor", "--metric", "psnr", "--n", "2", "--sigma",
                       "1", "--gamma-prior", "0.5", "--data-range", "1"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  auto row = table(r.out)[0];
  EXPECT_EQ(row["psnr_db_upper"], "inf");
  EXPECT_NEAR(num(row, "psnr_db_lower"), -10 * std::log10(kLn2), 1e-12);
}

TEST(Simulate, MedianInsideTheoreticalInterquartileBand) {
  const auto r = call({"simulate", "--n", "4", "--clip-norm", "1",
                       "--min-norm", "1.01", "--m-rows", "1", "--rest-norm",
                       "0", "--sigma", "0.1", "--trials", "500", "--seed", "1"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  auto row = table(r.out)[0];
  EXPECT_NEAR(num(row, "target_norm"), 1.01, 1e-12);
  EXPECT_GT(num(row, "mse_median"), num(row, "mse_q1_theory"));
  EXPECT_LT(num(row, "mse_median"), num(row, "mse_q3_theory"));
  EXPECT_LT(num(row, "ks_statistic"), num(row, "ks_critical"));
  EXPECT_NEAR(num(row, "mse_mean_theory"), 0.01 * 1.0201, 1e-15);
}

TEST(Simulate, NoiselessLimit) {
  auto r = call({"simulate", "--n", "4", "--sigma", "1e-15", "--trials", "50"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  auto row = table(r.out)[0];
  EXPECT_LT(num(row, "mse_mean"), 1e-25);
  EXPECT_GT(num(row, "psnr_median"), 250);

  // Exact recovery: every PSNR is the +inf sentinel.
  const auto dump = temp_file("noiseless.csv");
  r = call({"simulate", "--target", "0.5,-0.5", "--sigma", "1e-300", "--trials",
            "5", "--dump", dump.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  row = table(r.out)[0];
  EXPECT_EQ(num(row, "psnr_sentinels"), 5);
  EXPECT_EQ(row["psnr_median"], "nan");
  std::ifstream in(dump);
  std::stringstream text;
  text << in.rdbuf();
  const auto rows = table(text.str());
  ASSERT_EQ(rows.size(), 5u);
  for (auto r2 : rows) EXPECT_EQ(r2["psnr"], "inf");
  std::filesystem::remove(dump);
}

TEST(Simulate, DumpHasOneRowPerTrial) {
  const auto dump = temp_file("dump.csv");
  const auto r = call({"simulate", "--n", "16", "--sigma", "0.3", "--trials",
                       "40", "--dump", dump.string(), "--seed", "9"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  std::ifstream in(dump);
  std::stringstream text;
  text << in.rdbuf();
  const auto all = lines(text.str());
  ASSERT_EQ(all.size(), 41u);
  EXPECT_EQ(all[0], "trial,mse,psnr");
  const auto rows = table(text.str());
  double sum = 0;
  for (std::size_t t = 0; t < rows.size(); ++t) {
    auto row = rows[t];
    EXPECT_EQ(num(row, "trial"), static_cast<double>(t));
    sum += num(row, "mse");
  }
  EXPECT_NEAR(num(table(r.out)[0], "mse_mean"), sum / 40, 1e-15);
  std::filesystem::remove(dump);

  expect_usage_error(call({"simulate", "--n", "4", "--sigma", "1", "--dump",
                           "/nonexistent-dir/x.csv"}));
}

TEST(Simulate, ByteIdenticalAcrossRunsAndThreads) {
  const std::vector<std::string> args{"simulate", "--n",      "32", "--sigma",
                                      "0.2",      "--m-rows", "3",  "--trials",
                                      "777",      "--seed",   "42", "--format",
                                      "json"};
  const auto a = call(args);
  const auto b = call(args);
  ASSERT_EQ(a.code, kExitOk) << a.err;
  EXPECT_EQ(a.out, b.out);
  auto serial = args;
  serial.insert(serial.end(), {"--threads", "1"});
  auto parallel = args;
  parallel.insert(parallel.end(), {"--threads", "5"});
  EXPECT_EQ(call(serial).out, call(parallel).out);
  auto other = args;
  other[10] = "43";
  EXPECT_NE(call(other).out, a.out);
}

TEST(Simulate, JsonRecordParses) {
  const auto r = call({"simulate", "--n", "4", "--sigma", "0.5", "--trials",
                       "20", "--format", "json"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  ASSERT_EQ(lines(r.out).size(), 1u);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["trials"], 20);
  EXPECT_EQ(j["include_bias"], "false");
  EXPECT_TRUE(j["mse_mean"].is_number());
}

TEST(Simulate, UsageErrors) {
  expect_usage_error(call({"simulate", "--target", "0,0,0", "--sigma", "1"}));
  expect_usage_error(call({"simulate", "--sigma", "1"}));
  expect_usage_error(call({"simulate", "--n", "3", "--target", "1,2", "--sigma", "1"}));
  expect_usage_error(call({"simulate", "--n", "3", "--sigma", "1", "--trials", "0"}));
  expect_usage_error(call({"simulate", "--n", "3", "--sigma", "1", "--m-rows", "0"}));
  expect_usage_error(call({"simulate", "--n", "3", "--sigma", "1", "--rest-norm", "-1"}));
}

TEST(Sweep, SigmaRowsDecreaseInGamma) {
  const auto r = call({"sweep", "--vary", "sigma", "--grid",
                       "0.1,0.2,0.5,1,2,5,10", "--n", "4", "--eta", "0.5"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto rows = table(r.out);
  ASSERT_EQ(rows.size(), 7u);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_LT(num(rows[i], "gamma"), num(rows[i - 1], "gamma"));
  }
  EXPECT_EQ(lines(r.out)[0], "sigma,gamma");
}

TEST(Sweep, CalibratedSigmaIncreasesInEta) {
  const auto r = call({"sweep", "--vary", "eta", "--grid",
                       "0.01,0.02,0.05,0.1,0.2", "--n", "3072", "--gamma", "0.1"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto rows = table(r.out);
  ASSERT_EQ(rows.size(), 5u);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_GT(num(rows[i], "sigma_calibrated"),
              num(rows[i - 1], "sigma_calibrated"));
  }
}

TEST(Sweep, RestNormRowsNonDecreasingInMeanMse) {
  const auto r = call({"sweep", "--vary", "rest-norm", "--grid",
                       "0,0.5,1,2,4,8", "--n", "4", "--min-norm", "1.01",
                       "--sigma", "0.1", "--trials", "10000"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto rows = table(r.out);
  ASSERT_EQ(rows.size(), 6u);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_GE(num(rows[i], "mse_mean"), num(rows[i - 1], "mse_mean"));
    EXPECT_GE(num(rows[i], "mse_mean"), num(rows[i], "mse_floor") * 0.95);
  }
}

TEST(Sweep, MRowsAndExplicitColumns) {
  const auto r = call({"sweep", "--vary", "m", "--grid", "1,2,4", "--n", "4",
                       "--sigma", "0.1", "--clip-norm", "10", "--trials", "200",
                       "--columns", "clip_factor,ks_statistic"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(lines(r.out)[0], "m_rows,clip_factor,ks_statistic");
  EXPECT_EQ(table(r.out)[2]["m_rows"], "4");
}

TEST(Sweep, MalformedSpecs) {
  const std::vector<std::string> base{"sweep", "--n", "4", "--eta", "0.5"};
  auto with = [&](std::vector<std::string> extra) {
    auto args = base;
    args.insert(args.end(), extra.begin(), extra.end());
    return call(args);
  };
  expect_usage_error(with({"--vary", "sigma", "--grid", "1,0.5"}));
  expect_usage_error(with({"--vary", "sigma", "--grid", "1,1"}));
  expect_usage_error(with({"--vary", "sigma"}));
  expect_usage_error(with({"--vary", "sigma", "--grid", "1", "--sigma", "2"}));
  expect_usage_error(with({"--vary", "m", "--grid", "1,2.5", "--sigma", "1"}));
  expect_usage_error(with({"--vary", "kappa", "--grid", "1"}));
  expect_usage_error(with({"--vary", "sigma", "--grid", "1", "--columns", "nope"}));
  expect_usage_error(with({"--vary", "gamma", "--grid", "0.1", "--columns", "eta_upper"}));
}

TEST(ConfigFile, FlagsOverrideFileValues) {
  const auto path = temp_file("config.ini");
  {
    std::ofstream f(path);
    f << "# shared settings\n"
         "n = 2\n"
         "sigma = 5\n"
         "min_norm = 1\n"
         "\n"
         "eta = \"1.386294\"\n";
  }
  auto r = call({"bound", "--config", path.string(), "--sigma", "1"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  auto row = table(r.out)[0];
  EXPECT_EQ(num(row, "sigma"), 1.0);
  EXPECT_EQ(num(row, "n"), 2.0);
  EXPECT_NEAR(num(row, "gamma"), 1 - std::exp(-1.386294), 1e-12);

  r = call({"bound", "--config=" + path.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(num(table(r.out)[0], "sigma"), 5.0);
  std::filesystem::remove(path);
}

TEST(ConfigFile, RejectsUnknownKeysAndMissingFiles) {
  const auto path = temp_file("bad.ini");
  {
    std::ofstream f(path);
    f << "n = 2\nkappa = 3\n";
  }
  auto r = call({"bound", "--config", path.string(), "--sigma", "1", "--eta", "1"});
  expect_usage_error(r);
  EXPECT_NE(r.err.find("kappa"), std::string::npos);
  {
    std::ofstream f(path);
    f << "just some words\n";
  }
  expect_usage_error(call({"bound", "--config", path.string()}));
  std::filesystem::remove(path);
  expect_usage_error(call({"bound", "--config", path.string()}));
}

TEST(Help, PrintsToOutputAndSucceeds) {
  const auto r = call({"sweep", "--help"});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_NE(r.out.find("--vary"), std::string::npos);
}

TEST(Diagnostics, ColorOnlyWhenRequested) {
  std::ostringstream out, err;
  run({"bound"}, out, err, {.color = true});
  EXPECT_NE(err.str().find("\033["), std::string::npos);
  EXPECT_EQ(call({"bound"}).err.find("\033["), std::string::npos);
}

}  // namespace
}  // namespace agia::cli
