#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

namespace {

std::string cli() { return CC_CLI_PATH; }

int run(const std::string& args) {
  const std::string cmd = cli() + " " + args + " > /tmp/cc_cli_out.txt 2>&1";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("validate passes on a fresh build") {
  CHECK(run("validate") == 0);
  const auto out = slurp("/tmp/cc_cli_out.txt");
  CHECK(out.find("FAIL") == std::string::npos);
}

TEST_CASE("invalid flags give the usage exit code") {
  CHECK(run("sigma-scan --size 13 --samples 2 --out /tmp/cc_bad") == 2);
  CHECK(run("definitely-not-a-command") != 0);
}

TEST_CASE("dump-geometry emits the expected tables") {
  CHECK(run("dump-geometry --size 4 --out /tmp/cc_geo") == 0);
  const auto links = slurp("/tmp/cc_geo_links.csv");
  CHECK(links.find("id,tail,head,orientation,class") == 0);
  int lines = 0;
  for (char ch : links)
    if (ch == '\n') ++lines;
  CHECK(lines == 33);  // header + 32 links
}

TEST_CASE("sigma-scan output is deterministic and well-formed") {
  const std::string flags =
      "sigma-scan --size 12 --samples 40 --seed 5 --rmax 5 --workers 2";
  CHECK(run(flags + " --out /tmp/cc_s1") == 0);
  CHECK(run(flags + " --out /tmp/cc_s2") == 0);
  const auto a = slurp("/tmp/cc_s1.csv");
  const auto b = slurp("/tmp/cc_s2.csv");
  CHECK(a == b);  // byte-identical for equal flags and seed
  CHECK(a.find("dx,dy,re_szz,im_szz,re_uzz,im_uzz,n_samples,stderr_re_szz") ==
        0);
  const auto manifest = slurp("/tmp/cc_s1_manifest.json");
  CHECK(manifest.find("\"command\": \"sigma-scan\"") != std::string::npos);
  CHECK(manifest.find("\"summary\"") != std::string::npos);
}

TEST_CASE("multifractal CSV format") {
  CHECK(run("multifractal --size 24 --samples 25 --mean --seed 3 --workers 2 "
            "--out /tmp/cc_mf") == 0);
  const auto csv = slurp("/tmp/cc_mf.csv");
  CHECK(csv.find("q,Xq,Xq_err,Dq,Dq_err") == 0);
  const auto manifest = slurp("/tmp/cc_mf_manifest.json");
  CHECK(manifest.find("\"X\"") != std::string::npos);
  CHECK(manifest.find("\"X_err\"") != std::string::npos);
}

TEST_CASE("conductance CSV and summary") {
  CHECK(run("conductance --size 8 --samples 60 --seed 4 --workers 2 --out "
            "/tmp/cc_g") == 0);
  const auto csv = slurp("/tmp/cc_g.csv");
  CHECK(csv.find("size,mean_g,stderr_g,n_samples") == 0);
  const auto manifest = slurp("/tmp/cc_g_manifest.json");
  CHECK(manifest.find("\"estimate\"") != std::string::npos);
}

TEST_CASE("circulation table") {
  CHECK(run("circulation --size 16 --samples 50 --seed 6 --workers 2 --out "
            "/tmp/cc_c") == 0);
  const auto csv = slurp("/tmp/cc_c.csv");
  CHECK(csv.find("rho,perimeter,mean,stderr,mean_abs,normalized") == 0);
}

TEST_CASE("fock-check passes") {
  CHECK(run("fock-check --links 2 --nmax 28 --mu -1 --seed 9") == 0);
  const auto out = slurp("/tmp/cc_cli_out.txt");
  CHECK(out.find("FAIL") == std::string::npos);
}

TEST_CASE("plot renders synthetic power-law data") {
  {
    std::ofstream csv("/tmp/cc_plot_in.csv");
    csv << "r,value\n";
    for (int r = 1; r <= 16; ++r)
      csv << r << "," << 4.0 / (r * r) << "\n";
  }
  CHECK(run("plot --in /tmp/cc_plot_in.csv --x r --y value --svg "
            "/tmp/cc_plot.svg --loglog --ref-slope -2") == 0);
  const auto svg = slurp("/tmp/cc_plot.svg");
  CHECK(svg.find("<svg") == 0);
  CHECK(svg.find("circle") != std::string::npos);
  CHECK(svg.find("crimson") != std::string::npos);  // reference slope line
}

TEST_CASE("config file supplies defaults, flags win") {
  {
    std::ofstream cfg("/tmp/cc_cfg.ini");
    cfg << "size=4\n";
  }
  CHECK(run("dump-geometry --config /tmp/cc_cfg.ini --out /tmp/cc_geo2") == 0);
  const auto links = slurp("/tmp/cc_geo2_links.csv");
  int lines = 0;
  for (char ch : links)
    if (ch == '\n') ++lines;
  CHECK(lines == 33);
  // A flag overrides the file.
  CHECK(run("dump-geometry --config /tmp/cc_cfg.ini --size 6 --out "
            "/tmp/cc_geo3") == 0);
  const auto links6 = slurp("/tmp/cc_geo3_links.csv");
  lines = 0;
  for (char ch : links6)
    if (ch == '\n') ++lines;
  CHECK(lines == 73);  // header + 72 links
}
