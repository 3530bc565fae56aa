#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "app/config.hpp"
#include "app/pipeline.hpp"
#include "refscore/errors.hpp"
#include "refscore/parallel.hpp"
#include "refscore/synthetic.hpp"

namespace {

enum ExitCode { kOk = 0, kConfig = 2, kData = 3, kInternal = 4 };

int fail(int code, const std::string& message) {
  std::cerr << "refscore: " << message << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace refscore;

  CLI::App cli{"Peer-review score prediction experiments for journal articles"};
  cli.require_subcommand(1);
  cli.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  unsigned threads = 1;
  cli.add_option("--config", config_path, "JSON config (a synthetic spec for synth, a run config otherwise)");
  cli.add_option("--seed", seed, "Master seed; overrides the config");
  cli.add_option("--out", out, "Output file (synth) or directory (other commands)");
  cli.add_option("--threads", threads, "Worker threads; results do not depend on it")->check(CLI::Range(1u, 1024u));

  auto* synth = cli.add_subcommand("synth", "Write a synthetic JSONL corpus");
  auto* run = cli.add_subcommand("run", "Run a strategy and write the report bundle");
  auto* terms = cli.add_subcommand("terms", "Write per-class chi-square term associations");
  auto* agreement = cli.add_subcommand("agreement", "Duplicate-copy score agreement");
  auto* homogeneity = cli.add_subcommand("homogeneity", "Same-journal score agreement");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return cli.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return cli.exit(e);
  } catch (const CLI::Success& e) {
    return cli.exit(e);
  } catch (const CLI::ParseError& e) {
    cli.exit(e);
    return kConfig;
  }

  try {
    set_thread_count(threads);
    if (config_path.empty()) throw ConfigError("--config is required");

    if (synth->parsed()) {
      if (!seed) throw ConfigError("synth needs --seed");
      if (out.empty()) throw ConfigError("synth needs --out <file>");
      SyntheticSpec spec;
      try {
        spec = SyntheticSpec::from_json(app::read_json_file(config_path));
      } catch (const ConfigError& e) {
        throw ConfigError(fmt::format("{}: {}", config_path, e.what()));
      }
      const auto text = app::synth_jsonl(spec, *seed);
      std::ofstream file(out, std::ios::binary | std::ios::trunc);
      file << text;
      if (!file) throw Error(fmt::format("cannot write '{}'", out));
      return kOk;
    }

    auto config = app::load_run_config(config_path, seed);
    if (!out.empty()) config.output_dir = out;

    app::Bundle bundle;
    if (run->parsed()) {
      bundle = app::build_run_bundle(config);
    } else if (terms->parsed()) {
      bundle = app::build_terms_bundle(config);
    } else if (agreement->parsed()) {
      bundle = app::build_agreement_bundle(config);
    } else if (homogeneity->parsed()) {
      bundle = app::build_homogeneity_bundle(config);
    }
    bundle.write_to(config.output_dir);
    std::cout << fmt::format("wrote {} files to {}\n", bundle.files().size(), config.output_dir.string());
    return kOk;
  } catch (const ConfigError& e) {
    return fail(kConfig, fmt::format("config error: {}", e.what()));
  } catch (const DataError& e) {
    return fail(kData, fmt::format("data error: {}", e.what()));
  } catch (const std::exception& e) {
    return fail(kInternal, fmt::format("internal error: {}", e.what()));
  }
}
