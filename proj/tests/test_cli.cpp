#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include "oracles.hpp"
#include "remnantflow/png_io.hpp"

using namespace rf;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Run cli(const std::string& args) {
  static const fs::path dir = fs::temp_directory_path() / "rf_cli_io";
  fs::create_directories(dir);
  const std::string cmd = std::string("\"") + RF_CLI_PATH + "\" " + args + " > \"" + (dir / "out").string() +
                          "\" 2> \"" + (dir / "err").string() + "\"";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(dir / "out");
  r.err = slurp(dir / "err");
  return r;
}

}  // namespace

TEST_CASE("every subcommand has help") {
  CHECK(cli("--help").code == 0);
  for (const char* sub : {"synth", "preprocess", "train", "infer", "refine", "eval", "overlay", "export", "serve"}) {
    const Run r = cli(std::string(sub) + " --help");
    CHECK_MESSAGE(r.code == 0, sub);
    CHECK(r.out.find("Usage") != std::string::npos);
  }
  const Run bad = cli("synth --n");
  CHECK(bad.code == 1);
  CHECK(bad.err.rfind("RF-ERR: validation: ", 0) == 0);
}

TEST_CASE("synth, eval and export end to end") {
  const fs::path root = fs::temp_directory_path() / "rf_cli_e2e";
  fs::remove_all(root);
  const std::string r = "\"" + root.string() + "\"";
  REQUIRE(cli("synth --n 6 --size 32 --seed 3 --split 0.5,0,0.5 --out " + r + "/a").code == 0);
  REQUIRE(cli("synth --n 6 --size 32 --seed 3 --split 0.5,0,0.5 --out " + r + "/b").code == 0);
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(root / "a")) {
    if (!e.is_regular_file() || e.path().filename() == "manifest.json") continue;  // records its own root
    ++files;
    CHECK(slurp(e.path()) == slurp(root / "b" / fs::relative(e.path(), root / "a")));
  }
  CHECK(files == 12);

  // Predictions identical to ground truth.
  fs::create_directories(root / "pred");
  for (const auto& e : fs::directory_iterator(root / "a" / "masks"))
    fs::copy_file(e.path(), root / "pred" / e.path().filename());
  const Run ev = cli("eval --manifest " + r + "/a/manifest.json --pred " + r + "/pred --label self --report " + r +
                     "/report.json --min-ssim 0.99");
  CHECK(ev.code == 0);
  CHECK(ev.out.find("| SSIM | 1.0000 |") != std::string::npos);
  CHECK(ev.out.find("| IoU | 1.0000 |") != std::string::npos);
  CHECK(fs::exists(root / "report.json"));

  const Run cmp = cli("eval --manifest " + r + "/a/manifest.json --pred " + r + "/pred --label x --compare " + r +
                      "/report.json");
  CHECK(cmp.out.find("| Metric | x (n=3) | self (n=3) |") != std::string::npos);

  fs::create_directories(root / "partial");
  const Run missing = cli("eval --manifest " + r + "/a/manifest.json --pred " + r + "/partial --label none");
  CHECK(missing.code == 1);

  // Threshold failure: an all-black prediction set.
  fs::create_directories(root / "blank");
  for (const auto& e : fs::directory_iterator(root / "a" / "masks")) {
    BinaryMask m = read_mask_png(e.path());
    m.setConstant(false);
    m(0, 0) = true;
    write_mask_png(root / "blank" / e.path().filename(), m);
  }
  CHECK(cli("eval --manifest " + r + "/a/manifest.json --pred " + r + "/blank --label blank --min-iou 0.5").code == 3);

  const fs::path mask = *fs::directory_iterator(root / "a" / "masks");
  CHECK(cli("export --mask \"" + mask.string() + "\" --format dxf --out " + r + "/m.dxf").code == 0);
  CHECK(slurp(root / "m.dxf").find("AC1009") != std::string::npos);
  CHECK(cli("export --mask \"" + mask.string() + "\" --format pdf --out " + r + "/m.pdf").code == 1);
  fs::remove_all(root);
}

TEST_CASE("refine with the mock provider closes a gap") {
  const fs::path root = fs::temp_directory_path() / "rf_cli_refine";
  fs::remove_all(root);
  fs::create_directories(root);
  BinaryMask ring = oracle::box(40, 40, 5, 5, 30, 30);
  ring.block(12, 12, 16, 16).setConstant(false);
  ring.block(5, 20, 7, 1).setConstant(false);  // 1-px cut through the frame
  CHECK(oracle::components(ring, false, false) == 1);
  write_mask_png(root / "in.png", ring);
  const std::string r = "\"" + root.string() + "\"";
  const Run run = cli("refine --in " + r + "/in.png --out " + r + "/out.png --text \"close the gaps\"");
  CHECK(run.code == 0);
  const BinaryMask out = read_mask_png(root / "out.png");
  CHECK(oracle::components(out, false, false) == 2);
  CHECK(cli("refine --in " + r + "/in.png --out " + r + "/out2.png --text \"close the gaps\"").code == 0);
  CHECK(slurp(root / "out.png") == slurp(root / "out2.png"));
  const Run unclear = cli("refine --in " + r + "/in.png --out " + r + "/o3.png --text \"weather\"");
  CHECK(unclear.code == 1);
  fs::remove_all(root);
}

TEST_CASE("infer with a missing checkpoint") {
  const Run r = cli("infer --checkpoint /nonexistent/model.ckpt --in x.png --out y.png");
  CHECK(r.code == 1);
  CHECK(r.err.rfind("RF-ERR: not_found: ", 0) == 0);
}
