#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "ptfh/dataset.hpp"
#include "ptfh/estimation.hpp"
#include "ptfh/report_io.hpp"

using namespace ptfh;

namespace {

Dataset parse_text(const std::string& text) {
  std::istringstream in(text);
  return parse_dataset(in);
}

std::string error_of(const std::string& text) {
  try {
    parse_text(text);
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

int run_cli(const std::string& args) {
  const char* cli = std::getenv("PTFH_CLI");
  REQUIRE(cli != nullptr);
  const std::string cmd = std::string(cli) + " " + args + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_SUITE("dataset-cli") {

TEST_CASE("basic parse with a D column") {
  const Dataset ds = parse_text(
      "area_id,y,x1,D\n"
      "a,1.5,0.2,0.3\n"
      "b,2.5,1.2,0.4\n"
      "c,3.5,2.2,0.5\n");
  CHECK(ds.records.size() == 3);
  CHECK(ds.n_x == 1);
  CHECK(ds.has_d);
  CHECK(ds.records[0].x == std::vector<double>{1.0, 0.2});  // intercept added
  CHECK(ds.records[2].D == 0.5);
  CHECK(ds.records[1].area_id == "b");
}

TEST_CASE("replicate columns") {
  const Dataset ds = parse_text(
      "area_id,y,x1,z1,z2,z3\n"
      "a,1.5,0.2,1.0,2.0,3.0\n"
      "b,2.5,1.2,1.1,2.1,3.1\n");
  CHECK(ds.n_z == 3);
  CHECK_FALSE(ds.has_d);
  CHECK(ds.records[0].replicates == std::vector<double>{1.0, 2.0, 3.0});
}

TEST_CASE("rejections carry the offending location") {
  CHECK(error_of("area_id,y,x1,D,z1,z2\na,1,1,1,1,1\n").find("D and z") !=
        std::string::npos);
  CHECK(error_of("area_id,y,x1\na,1,1\n").find("variance") != std::string::npos);
  const std::string bad_row7 =
      "area_id,y,x1,D\n"
      "a,1,1,1\nb,1,1,1\nc,1,1,1\nd,1,1,1\ne,1,1,1\nf,1,1,1\n"
      "g,0,1,1\n";
  const std::string msg = error_of(bad_row7);
  CHECK(msg.find("7") != std::string::npos);
  CHECK(msg.find("y must be positive") != std::string::npos);

  CHECK(error_of("area_id,y,x1,x1,D\na,1,1,1,1\n").find("duplicate") !=
        std::string::npos);
  CHECK(error_of("area_id,y,x1,D\na,1,,1\n").find("missing value") !=
        std::string::npos);
  CHECK(error_of("area_id,y,x1,D\na,1,oops,1\n").find("malformed") !=
        std::string::npos);
  CHECK(error_of("area_id,y,x1,D\na,1,1\n").find("expected 4 fields") !=
        std::string::npos);
  CHECK(error_of("area_id,y,x1,z1\na,1,1,1\n").find("single replicate") !=
        std::string::npos);
  CHECK(error_of("area_id,y,x1,bogus\na,1,1,1\n").find("unrecognized") !=
        std::string::npos);
}

TEST_CASE("emit and parse round trip") {
  const Dataset ds = parse_text(
      "area_id,y,x1,x2,z1,z2\n"
      "\"a,tricky\",1.5,0.25,-3.125,1.0,2.0\n"
      "plain,0.3333333333333333,7e-3,1e6,0.5,0.75\n");
  std::ostringstream out;
  emit_dataset(ds, out);
  const Dataset again = parse_text(out.str());
  CHECK(ds == again);
}

TEST_CASE("windows line endings are tolerated") {
  const Dataset ds = parse_text("area_id,y,x1,D\r\na,1.5,0.2,0.3\r\nb,2,1,1\r\n");
  CHECK(ds.records.size() == 2);
}

TEST_CASE("cli exit codes") {
  const char* fixture = std::getenv("PTFH_FIXTURE");
  REQUIRE(fixture != nullptr);
  CHECK(run_cli(std::string("fit --data ") + fixture + " --out /tmp/ptfh_cli_t1") == 0);
  CHECK(run_cli("fit --data /nonexistent.csv --out /tmp/ptfh_cli_t2") == 3);
  CHECK(run_cli("fit --no-such-flag") == 2);
  CHECK(run_cli("") == 2);
  CHECK(run_cli(std::string("mse --model fh --data ") + fixture +
                " --out /tmp/ptfh_cli_t3") == 2);
}

TEST_CASE("cli error payload is machine readable") {
  const char* cli = std::getenv("PTFH_CLI");
  REQUIRE(cli != nullptr);
  const std::string cmd = std::string(cli) +
                          " fit --data /nonexistent.csv --out /tmp/ptfh_cli_t4 "
                          "2>/tmp/ptfh_cli_t4_err.json";
  (void)std::system(cmd.c_str());
  std::ifstream err("/tmp/ptfh_cli_t4_err.json");
  std::stringstream buf;
  buf << err.rdbuf();
  CHECK(buf.str().find("\"error\"") != std::string::npos);
  CHECK(buf.str().find("\"exit_code\":3") != std::string::npos);
}

}  // TEST_SUITE
