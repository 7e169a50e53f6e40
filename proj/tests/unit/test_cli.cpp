// Copyright 2026 The sifkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>

#include "support.hpp"

using namespace sifkit;
using sifkit::testing::problem_path;

namespace {

struct Run {
  int status;
  std::string out;
};

Run run(const std::string& args, bool merge_stderr = false) {
  std::string cmd = std::string("\"") + SIFKIT_CLI_PATH + "\" " + args + (merge_stderr ? " 2>&1" : " 2>/dev/null");
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe);
  std::string out;
  char buf[4096];
  std::size_t got;
  while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, got);
  int raw = pclose(pipe);
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, out};
}

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("decode writes a dump that loads back", "[cli]") {
  auto out = std::filesystem::temp_directory_path() / "sifkit_cli_rosenbr.json";
  Run r = run("decode " + problem_path("ROSENBR.SIF") + " --out " + out.string());
  REQUIRE(r.status == 0);
  ProblemDump d = load_json(sifkit::testing::read_file(out.string()));
  CHECK(d.problem.pb.name == "ROSENBR");
  CHECK(d.problem.pb.x0 == std::vector<double>{-1.2, 1.0});
  CHECK(dump_json(d) == sifkit::testing::read_file(out.string()));

  Run info = run("info " + out.string());
  CHECK(info.status == 0);
  CHECK(Json::parse(info.out)["n"] == 2);
  std::filesystem::remove(out);
}

TEST_CASE("decode options and parameters reach the dump", "[cli]") {
  Run r = run("decode " + problem_path("CHAINROS.SIF") + " --param N=4");
  REQUIRE(r.status == 0);
  Json j = Json::parse(r.out);
  CHECK(j["problem"]["n"] == 4);

  Run kept = run("decode " + problem_path("LINPROG.SIF") + " --keep-corder --keep-cformat");
  REQUIRE(kept.status == 0);
  Json k = Json::parse(kept.out);
  CHECK(k["problem"]["cnames"] == Json::parse(R"(["BAL","CAP1","DEM","CAP2","LOWX"])"));
  CHECK_FALSE(k["problem"].contains("clower"));
}

TEST_CASE("decode reports every error and exits with their count", "[cli]") {
  Run r = run("decode " + problem_path("BADFILE.SIF"), true);
  CHECK(r.status == 3);
  CHECK(count(r.out, "error: ") == 3);
  CHECK(r.out.find("line 26: MalformedRecord") != std::string::npos);
  CHECK(r.out.find("line 34: UndefinedElementType") != std::string::npos);
  CHECK(r.out.find("line 41: DanglingElementUse") != std::string::npos);
}

TEST_CASE("info summarizes a SIF file", "[cli]") {
  Run r = run("info " + problem_path("LINPROG.SIF"));
  REQUIRE(r.status == 0);
  Json j = Json::parse(r.out);
  CHECK(j["m"] == 5);
  CHECK(j["nle"] == 2);
  CHECK(j["neq"] == 1);
  CHECK(j["nge"] == 2);
}

TEST_CASE("eval actions", "[cli]") {
  const std::string ros = problem_path("ROSENBR.SIF");
  Json f = Json::parse(run("eval " + ros + " fx").out);
  CHECK(f["f"].get<double>() == Catch::Approx(24.2).epsilon(1e-12));

  Json fg = Json::parse(run("eval " + ros + " fgx --x 1,1").out);
  CHECK(fg["f"] == 0.0);
  CHECK(fg["g"] == Json::parse("[0.0,0.0]"));

  Json fH = Json::parse(run("eval " + ros + " fHxv --x 1,1 --v 1,0").out);
  CHECK(fH["Hv"][0].get<double>() == Catch::Approx(802.0));
  CHECK(fH["Hv"][1].get<double>() == Catch::Approx(-400.0));

  const std::string con = problem_path("CONGPS.SIF");
  Problem p = sifkit::testing::load_problem("CONGPS.SIF");
  Evaluator ev(p);
  std::vector<double> all = ev.constraints(p.pb.x0, 0).values;
  Json c = Json::parse(run("eval " + con + " cIx --I 2,0").out);
  REQUIRE(c["c"].size() == 2);
  CHECK(c["c"][0].get<double>() == all[2]);
  CHECK(c["c"][1].get<double>() == all[0]);

  Json L = Json::parse(run("eval " + con + " Lxy --y 1,2,3").out);
  const std::vector<double> y{1, 2, 3};
  CHECK(L["L"].get<double>() == Catch::Approx(ev.lagrangian(p.pb.x0, y, 0).value).epsilon(1e-15));
}

TEST_CASE("eval argument errors", "[cli]") {
  const std::string ros = problem_path("ROSENBR.SIF");
  Run unknown = run("eval " + ros + " nope", true);
  CHECK(unknown.status != 0);
  CHECK(unknown.out.find("UnknownAction") != std::string::npos);
  CHECK(run("eval " + ros + " fx --x 1,2,3").status != 0);
  CHECK(run("eval " + problem_path("CONGPS.SIF") + " Lxy").status != 0);
  CHECK(run("eval " + problem_path("CONGPS.SIF") + " cIx").status != 0);
  CHECK(run("eval " + ros + " cx").status != 0);
  Run missing = run("info /nonexistent/NOPE.SIF", true);
  CHECK(missing.status != 0);
  CHECK(missing.out.find("error: ") == 0);
}

TEST_CASE("check passes on a good problem and fails on a corrupt one", "[cli]") {
  Run good = run("check " + problem_path("ROSENBR.SIF") + " --trials 3 --seed 7");
  CHECK(good.status == 0);
  CHECK(good.out.find("points=4 seed=7") != std::string::npos);
  CHECK(good.out.find("all checks passed") != std::string::npos);

  Run bad = run("check " + sifkit::testing::data_path("CORRUPT.SIF"));
  CHECK(bad.status == 1);
  CHECK(bad.out.find("some checks failed") != std::string::npos);
  CHECK(count(bad.out, "FAIL") >= 2);
}
