// dtk: command-line front end for the experiment runner.
//
//   dtk <subcommand> [--config PATH] [--seed U64] [--out DIR] [--workers N] [--check]
//
// Exit codes: 0 success, 1 input error, 2 guarantee violation under --check.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "dtk/experiment.hpp"

namespace {

struct Flags {
  std::string config;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out;
  std::size_t workers = 1;
  bool check = false;
};

dtk::json load_config(const std::string& path) {
  if (path.empty()) return dtk::json::object();
  std::ifstream in(path);
  if (!in) throw dtk::SchemaError("cannot open config file '" + path + "'");
  try {
    return dtk::json::parse(in);
  } catch (const dtk::json::parse_error& e) {
    throw dtk::SchemaError("config '" + path + "' is not valid JSON: " + e.what());
  }
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
  out << text;
}

int execute(const std::string& command, const Flags& f) {
  dtk::exp::RunOptions opt;
  if (f.seed_set) opt.seed = f.seed;
  opt.workers = f.workers;
  opt.check = f.check;
  const dtk::exp::ExperimentOutput r = dtk::exp::run(command, load_config(f.config), opt);
  const std::string report = r.report.dump(2) + "\n";
  if (f.out.empty()) {
    std::cout << report;
  } else {
    std::filesystem::create_directories(f.out);
    write_file(std::filesystem::path(f.out) / "report.json", report);
    if (!r.csv.empty()) write_file(std::filesystem::path(f.out) / (command + ".csv"), r.csv);
  }
  if (f.check && r.violations > 0) {
    std::cerr << "dtk " << command << ": " << r.violations << " guarantee violation(s)\n";
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app("dtk: density estimation experiments", "dtk");
  app.require_subcommand(1);
  app.set_version_flag("--version", dtk::kVersion);
  Flags f;
  for (const auto& name : dtk::exp::commands()) {
    CLI::App* sub = app.add_subcommand(name, "run the " + name + " experiment");
    sub->add_option("--config", f.config, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option_function<std::uint64_t>("--seed", [&](const std::uint64_t& s) {
      f.seed = s;
      f.seed_set = true;
    }, "master seed (overrides the config)");
    sub->add_option("--out", f.out, "output directory for report.json and CSV tables");
    sub->add_option("--workers", f.workers, "worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--check", f.check, "exit with code 2 when a guarantee is violated");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return execute(command, f);
  } catch (const dtk::SchemaError& e) {
    std::cerr << "dtk " << command << ": input error: " << e.what() << "\n";
  } catch (const dtk::CapExceeded& e) {
    std::cerr << "dtk " << command << ": cap exceeded: " << e.what() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "dtk " << command << ": " << e.what() << "\n";
  }
  return 1;
}
