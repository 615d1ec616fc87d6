#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;

namespace {

const fs::path& work_dir() {
  static const fs::path dir = [] {
    auto p = fs::temp_directory_path() / ("fracconv_cli_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

int run(const std::string& args) {
  const std::string cmd = std::string("\"") + FRACCONV_CLI + "\" " + args + " > \"" + (work_dir() / "log.txt").string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string log_text() {
  std::ifstream in(work_dir() / "log.txt");
  return {std::istreambuf_iterator<char>(in), {}};
}

fs::path write_config(const std::string& name, const std::string& text) {
  const auto p = work_dir() / name;
  std::ofstream(p) << text;
  return p;
}

}  // namespace

TEST_CASE("list prints the registry") {
  CHECK(run("list") == 0);
  CHECK(log_text().find("stroock-varopoulos") != std::string::npos);
}

TEST_CASE("run and replay succeed with exit code 0") {
  const auto cfg = write_config("ok.json", R"({"experiment": "zero-nonlinearity", "members": 3, "grid": {"n": 32}})");
  const auto out = work_dir() / "out";
  CHECK(run("run " + cfg.string() + " --seed 9 --workers 2 --out " + out.string()) == 0);
  CHECK(fs::exists(out / "manifest.json"));
  CHECK(run("replay " + (out / "manifest.json").string() + " --workers 1") == 0);
  CHECK(log_text().find("replay") != std::string::npos);
}

TEST_CASE("a failing check exits with 1") {
  // Two Picard iterations cannot reach tol = 1e-8, so the convergence check fails.
  const auto cfg = write_config(
      "fail.json", R"({"experiment": "picard-contraction", "members": 2, "grid": {"n": 64}, "params": {"iteration_cap": 2}})");
  CHECK(run("run " + cfg.string()) == 1);
  CHECK(log_text().find("FAIL") != std::string::npos);
}

TEST_CASE("configuration errors exit with 2") {
  CHECK(run("run " + write_config("typo.json", R"({"experiment": "zero-nonlinearty"})").string()) == 2);
  CHECK(log_text().find("zero-nonlinearity") != std::string::npos);
  CHECK(run("run " + write_config("bad.json", "{not json").string()) == 2);
  CHECK(run("run " + (work_dir() / "missing.json").string()) == 2);
  CHECK(run("run " + write_config("key.json", R"({"experiment": "zero-nonlinearity", "grid": {"size": 3}})").string()) == 2);
  CHECK(run("frobnicate") == 2);
  CHECK(run("run") == 2);
  fs::remove_all(work_dir());
}
