// anzlab: scenario runner for the pairing lab.
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "pairlab/scenario.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pairlab;

namespace {

constexpr int kExitFail = 1;
constexpr int kExitSpec = 2;

#ifndef CATALOG_DIR
#define CATALOG_DIR "catalog"
#endif

double tol_scale() {
  const char* env = std::getenv("LAB_TOL_SCALE");
  if (!env || !*env) return 1.0;
  char* end = nullptr;
  const double s = std::strtod(env, &end);
  if (*end != '\0' || !(s > 0.0) || !std::isfinite(s))
    throw LabError(ErrorKind::SpecError, std::string("LAB_TOL_SCALE must be a positive number, got '") + env + "'");
  return s;
}

std::vector<fs::path> scenario_files(const fs::path& p) {
  if (!fs::exists(p)) throw LabError(ErrorKind::SpecError, "no such file or directory: " + p.string());
  if (!fs::is_directory(p)) return {p};
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(p))
    if (e.is_regular_file() && e.path().extension() == ".json") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

// write to a sibling temporary and rename over the target
void write_atomic(const fs::path& target, const std::string& content) {
  fs::path tmp = target;
  tmp += ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

std::string environment_stamp() {
  std::ostringstream s;
#if defined(__VERSION__)
  s << "compiler " << __VERSION__;
#endif
  s << "; c++ " << __cplusplus;
  return s.str();
}

struct Loaded {
  fs::path path;
  Scenario scenario;
};

int cmd_run(const std::string& path, bool keep_going, bool stable, int jobs, const std::string& out_dir) {
  const double scale = tol_scale();
  std::vector<Loaded> todo;
  for (const auto& f : scenario_files(path)) {
    try {
      todo.push_back({f, load_scenario(f.string())});
    } catch (const LabError& e) {
      if (!keep_going) {
        std::cerr << "anzlab: " << f.string() << ": " << e.what() << "\n";
        return kExitSpec;
      }
      std::cerr << "anzlab: skipping " << f.string() << ": " << e.what() << "\n";
    }
  }
  fs::create_directories(out_dir);

  std::vector<std::vector<CheckReport>> results(todo.size());
  std::vector<std::string> errors(todo.size());
  std::atomic<std::size_t> next{0};
  std::mutex log;
  auto worker = [&] {
    for (std::size_t i = next++; i < todo.size(); i = next++) {
      const Scenario& s = todo[i].scenario;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        results[i] = run_scenario(s, scale);
      } catch (const std::exception& e) {
        errors[i] = e.what();
        continue;
      }
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      json rep{{"scenario", s.id}, {"environment", {{"build", environment_stamp()}, {"tol_scale", scale}}}};
      bool all = true;
      for (const auto& r : results[i]) {
        json cj = to_json(r);
        if (!stable) cj["timing_s"] = r.seconds;
        rep["checks"].push_back(cj);
        all = all && r.pass;
      }
      if (!rep.contains("checks")) rep["checks"] = json::array();
      rep["pass"] = all;
      if (!stable) rep["timing_s"] = secs;
      write_atomic(fs::path(out_dir) / (s.id + ".json"), rep.dump(2) + "\n");
      std::lock_guard<std::mutex> lk(log);
      std::cerr << (all ? "PASS " : "FAIL ") << s.id << "\n";
    }
  };
  std::vector<std::thread> pool;
  for (int k = 0; k < std::max(1, jobs); ++k) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  int code = 0;
  std::ostringstream csv;
  csv << "scenario,check,residual,pass\n";
  for (std::size_t i = 0; i < todo.size(); ++i) {
    if (!errors[i].empty()) {
      std::cerr << "anzlab: " << todo[i].scenario.id << ": " << errors[i] << "\n";
      if (!keep_going) return kExitSpec;
      continue;
    }
    for (const auto& r : results[i]) {
      csv << r.scenario << "," << r.check << "," << fmt(r.residual) << "," << (r.pass ? "true" : "false") << "\n";
      if (!r.pass) code = kExitFail;
    }
  }
  write_atomic(fs::path(out_dir) / "aggregate.csv", csv.str());
  return code;
}

int cmd_list(const std::string& path) {
  for (const auto& f : scenario_files(path)) {
    try {
      const Scenario s = load_scenario(f.string());
      std::cout << s.id << (s.description.empty() ? "" : "\t" + s.description) << "\n";
    } catch (const LabError& e) {
      std::cerr << "anzlab: " << f.string() << ": " << e.what() << "\n";
      return kExitSpec;
    }
  }
  return 0;
}

Scenario find_scenario(const std::string& name, const std::string& catalog) {
  if (fs::is_regular_file(name)) return load_scenario(name);
  for (const auto& f : scenario_files(catalog)) {
    Scenario s = load_scenario(f.string());
    if (s.id == name) return s;
  }
  throw LabError(ErrorKind::SpecError, "no scenario '" + name + "' in " + catalog);
}

int cmd_series(const std::string& name, const std::string& check, const std::string& out, const std::string& catalog) {
  const Scenario s = find_scenario(name, catalog);
  const Series series = emit_series(s, check);
  std::ostringstream csv;
  csv << series.parameter << "," << series.value << "\n";
  for (const auto& [p, v] : series.rows) csv << fmt(p) << "," << fmt(v) << "\n";
  write_atomic(out, csv.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generalized pairing lab: scenario runner"};
  app.require_subcommand(1);

  std::string run_path, out_dir = "reports";
  bool keep_going = false, stable = false;
  int jobs = 1;
  auto* run = app.add_subcommand("run", "run the checks of a scenario file or directory");
  run->add_option("path", run_path, "scenario file or directory")->required();
  run->add_flag("--keep-going", keep_going, "skip malformed scenarios instead of stopping");
  run->add_flag("--stable", stable, "omit timings so reports compare byte for byte");
  run->add_option("--jobs", jobs, "parallel workers")->check(CLI::PositiveNumber);
  run->add_option("--out", out_dir, "report directory");

  std::string list_path = CATALOG_DIR;
  auto* list = app.add_subcommand("list", "print the scenario ids of a catalog");
  list->add_option("path", list_path, "catalog directory");

  std::string s_name, s_check, s_out, catalog = CATALOG_DIR;
  auto* series = app.add_subcommand("series", "write the (parameter, value) table of a check as CSV");
  series->add_option("scenario", s_name, "scenario id or file")->required();
  series->add_option("check", s_check, "check name")->required();
  series->add_option("out", s_out, "output CSV")->required();
  series->add_option("--catalog", catalog, "catalog directory for id lookup");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitSpec;
  }

  try {
    if (*run) return cmd_run(run_path, keep_going, stable, jobs, out_dir);
    if (*list) return cmd_list(list_path);
    if (*series) return cmd_series(s_name, s_check, s_out, catalog);
  } catch (const LabError& e) {
    std::cerr << "anzlab: " << e.what() << "\n";
    return e.kind() == ErrorKind::SpecError || e.kind() == ErrorKind::UnknownCheck ? kExitSpec : kExitFail;
  } catch (const std::exception& e) {
    std::cerr << "anzlab: " << e.what() << "\n";
    return kExitFail;
  }
  return 0;
}
