// nsf_cli: simulate / diagnose / twin / fit / selftest.
//
// Exit status: 0 success, 2 config error, 3 numerical abort, 4 io error,
// 5 domain error, 6 assertion failure (selftest), 1 anything else.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nsf/acceptance.hpp"
#include "nsf/pipeline.hpp"

namespace {

struct Common {
  std::string config;
  std::string out = "nsf_out";
  std::optional<std::uint64_t> seed;
  int threads = 1;
  bool strict_regime = false;
};

nsf::Scenario load(const Common& c) {
  if (c.config.empty()) throw nsf::Error(nsf::ErrorKind::config, "--config is required for this subcommand");
  nsf::Scenario sc = nsf::load_scenario(c.config);
  if (c.seed) sc.seed = *c.seed;
  return sc;
}

int report(const nsf::RunResult& r, const std::string& what, const std::string& out) {
  if (r.status) {
    std::fprintf(stderr, "nsf_cli: %s: %s\n", nsf::to_string(*r.status), r.message.c_str());
    return int(*r.status);
  }
  std::printf("%s: ok, %zu steps, outputs in %s\n", what.c_str(), r.steps, out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pseudo-spectral Navier-Stokes-Fourier solver and verification harness"};
  app.require_subcommand(1);
  app.fallthrough();

  Common c;
  app.add_option("--config", c.config, "scenario JSON (a run manifest is accepted too)");
  app.add_option("--out", c.out, "output directory")->envname("NSF_OUT_DIR")->capture_default_str();
  app.add_option("--seed", c.seed, "override the scenario seed (u64)");
  app.add_option("--threads", c.threads, "recorded in the manifest; the solver itself runs single-threaded")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_flag("--strict-regime", c.strict_regime, "reject viscosities with mu <= lambda/2");
  app.footer("Environment: NSF_OUT_DIR sets the output directory when --out is not given.\n"
             "Exit status: 0 ok, 2 config, 3 numerical abort, 4 io, 5 domain, 6 selftest failure.");

  auto* sim = app.add_subcommand("simulate", "run a scenario and write diagnostics, checkpoint, report, manifest");
  auto* diag = app.add_subcommand("diagnose", "diagnostics row for a checkpointed state");
  std::string checkpoint;
  diag->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  auto* tw = app.add_subcommand("twin", "twin-run stability experiment (epsilon, s, delta_max from the config)");
  auto* ft = app.add_subcommand("fit", "fit a power-law decay exponent to one CSV column");
  std::string input, channel;
  std::optional<double> t_a, t_b;
  ft->add_option("--input", input, "CSV with a '# schema:' line and a time column")->required();
  ft->add_option("--channel", channel, "column to fit")->required();
  ft->add_option("--t-a", t_a, "window start (default: first sample)");
  ft->add_option("--t-b", t_b, "window end (default: last sample)");
  auto* st = app.add_subcommand("selftest", "run the acceptance criteria");
  std::vector<int> criteria;
  st->add_option("--criteria", criteria, "subset of criteria 1-10 (default: all)")->check(CLI::Range(1, 10));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return int(nsf::ErrorKind::config);
  }

  nsf::PipelineOptions po{c.threads, c.strict_regime};
  const std::filesystem::path out = c.out;
  try {
    if (*sim) return report(nsf::simulate(load(c), out, po), "simulate", c.out);
    if (*diag) {
      nsf::Scenario sc;
      if (!c.config.empty()) sc = load(c);
      return report(nsf::diagnose(checkpoint, sc, out, po), "diagnose", c.out);
    }
    if (*tw) return report(nsf::twin(load(c), out, po), "twin", c.out);
    if (*ft) {
      const nsf::RunResult r = nsf::fit(input, channel, t_a, t_b, out, po);
      const auto j = nsf::read_json(out / "fit.json");
      std::printf("fit: %s exponent %.6g (rms %.3g%s)\n", channel.c_str(), j["exponent"].get<double>(),
                  j["rms"].get<double>(), j["poor_fit"].get<bool>() ? ", poor fit" : "");
      return report(r, "fit", c.out);
    }
    if (*st) {
      std::filesystem::create_directories(out);
      const auto res = nsf::acceptance::run_all(out / "selftest_work", criteria, stdout);
      nsf::write_json(out / "selftest.json", nsf::acceptance::to_json(res));
      int failed = 0;
      for (const auto& r : res) failed += !r.pass;
      std::printf("selftest: %zu criteria, %d failed\n", res.size(), failed);
      return failed == 0 ? 0 : int(nsf::ErrorKind::assertion);
    }
  } catch (const nsf::Error& e) {
    std::fprintf(stderr, "nsf_cli: %s: %s\n", nsf::to_string(e.kind()), e.what());
    return int(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "nsf_cli: error: %s\n", e.what());
    return 1;
  }
  return 1;
}
