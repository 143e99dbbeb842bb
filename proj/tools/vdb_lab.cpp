#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "vdb/cli/experiments.hpp"
#include "vdb/cli/metrics_log.hpp"
#include "vdb/nn/types.hpp"

namespace {

struct CommonOptions {
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* app, CommonOptions& o) {
  app->add_option("--config", o.config, "key = value configuration file");
  app->add_option("--set", o.sets, "override one field, key=value (repeatable)");
  app->add_option("--seed", o.seed, "master seed");
  app->add_option("--out", o.out, "output directory");
}

vdb::RunConfig build_config(const std::string& kind, const CommonOptions& o,
                            const std::vector<std::pair<std::string, std::string>>& flags) {
  vdb::RunConfig c = o.config.empty() ? vdb::RunConfig() : vdb::RunConfig::load(o.config);
  if (c.has("experiment") && c.values().at("experiment") != kind)
    throw vdb::ConfigError("config file is for experiment '" + c.values().at("experiment") + "', not '" + kind + "'");
  c.set("experiment", kind);
  for (const auto& [k, v] : flags) c.set(k, v);
  for (const auto& s : o.sets) c.set_assignment(s);
  if (o.seed) c.set("seed", std::to_string(*o.seed));
  return c;
}

std::filesystem::path default_dir(const std::string& kind, const vdb::RunConfig& c) {
  const auto it = c.values().find("seed");
  return vdb::default_output_root() / (kind + "-seed" + (it == c.values().end() ? "0" : it->second));
}

int report(const vdb::RunOutcome& o, const std::filesystem::path& dir) {
  for (const auto& [k, v] : o.summary) std::cout << k << " = " << vdb::format_metric(v) << '\n';
  if (o.exit_code != vdb::kExitOk) std::cerr << "vdb-lab: " << o.message << '\n';
  std::cout << "output: " << dir.string() << '\n';
  return o.exit_code;
}

template <typename T>
std::vector<T> split_list(const std::string& s, const std::string& what) {
  std::vector<T> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t end = std::min(s.find(',', start), s.size());
    const std::string item = s.substr(start, end - start);
    if (!item.empty()) {
      if constexpr (std::is_same_v<T, std::string>) {
        out.push_back(item);
      } else {
        std::size_t used = 0;
        unsigned long long v = 0;
        try {
          v = std::stoull(item, &used);
        } catch (const std::exception&) {
          used = 0;
        }
        if (used != item.size() || item[0] == '-') throw vdb::ConfigError(what + ": '" + item + "' is not a seed");
        out.push_back(static_cast<T>(v));
      }
    }
    start = end + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variational discriminator bottleneck experiments"};
  app.set_version_flag("--version", vdb::version_string());
  app.require_subcommand(1);

  // Flags that map straight onto config keys, filled only when given.
  std::vector<std::pair<std::string, std::string>> flags;
  auto flag = [&flags](CLI::App* sub, const std::string& name, const std::string& key, const std::string& help) {
    sub->add_option_function<std::string>(name, [&flags, key](const std::string& v) { flags.emplace_back(key, v); },
                                          help);
  };

  CommonOptions opts;
  std::vector<std::pair<std::string, CLI::App*>> runs;
  for (const std::string& kind : vdb::experiment_kinds()) {
    CLI::App* sub = app.add_subcommand(kind, "run the " + kind + " experiment");
    add_common(sub, opts);
    runs.emplace_back(kind, sub);
  }
  CLI::App* vgan = app.get_subcommand("vgan");
  flag(vgan, "--target", "vgan.target", "ring8, two-gaussians or gaussian");
  flag(vgan, "--ic", "vgan.ic", "information constraint (inf disables the bottleneck)");
  flag(vgan, "--beta-mode", "vgan.beta_mode", "adaptive, zero or fixed:<beta>");
  flag(vgan, "--variance", "vgan.variance", "per_input or shared");
  flag(vgan, "--steps", "vgan.steps", "training steps");
  CLI::App* fig2 = app.get_subcommand("fig2");
  flag(fig2, "--ic", "fig2.ic", "comma-separated constraints");
  flag(fig2, "--steps", "fig2.steps", "training steps per constraint");
  for (const std::string kind : {"vail", "vairl"}) {
    CLI::App* sub = app.get_subcommand(kind);
    flag(sub, "--maze", "maze", "c, s or box, optionally mirrored");
    flag(sub, "--ic", kind + ".ic", "information constraint");
    flag(sub, "--gp", kind + ".gp", "gradient penalty weight");
    flag(sub, "--beta-mode", kind + ".beta_mode", "adaptive or zero");
    flag(sub, "--demos", "demos", "demonstration file (skips expert training)");
  }
  CLI::App* tr = app.get_subcommand("transfer");
  flag(tr, "--reward", "transfer.reward", "recovered reward checkpoint");
  flag(tr, "--maze", "maze", "maze to train in");
  CLI::App* bounds = app.get_subcommand("bounds");
  flag(bounds, "--k", "bounds.k", "number of modes");
  flag(bounds, "--ic-grid", "bounds.ic_grid", "lo:hi:n");
  CLI::App* gc = app.get_subcommand("gradcheck");
  flag(gc, "--configs", "gradcheck.configs", "random configurations per case");

  CLI::App* sw = app.add_subcommand("sweep", "run one experiment over a grid of values and seeds");
  std::string sw_kind, sw_axis, sw_values, sw_seeds = "0,1,2,3,4";
  sw->add_option("--experiment", sw_kind, "experiment kind")->required();
  sw->add_option("--axis", sw_axis, "config key to vary")->required();
  sw->add_option("--values", sw_values, "comma-separated values")->required();
  sw->add_option("--seeds", sw_seeds, "comma-separated seeds");
  CommonOptions sw_opts;
  sw->add_option("--config", sw_opts.config, "base configuration file");
  sw->add_option("--set", sw_opts.sets, "override one field, key=value (repeatable)");
  sw->add_option("--out", sw_opts.out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? vdb::kExitOk : vdb::kExitUsage;
  }

  try {
    if (sw->parsed()) {
      const vdb::RunConfig base = build_config(sw_kind, sw_opts, {});
      const auto values = split_list<std::string>(sw_values, "--values");
      const auto seeds = split_list<std::uint64_t>(sw_seeds, "--seeds");
      const std::filesystem::path dir =
          sw_opts.out.empty() ? vdb::default_output_root() / ("sweep-" + sw_kind) : std::filesystem::path(sw_opts.out);
      const vdb::SweepOutcome s = vdb::sweep(base, sw_axis, values, seeds, dir);
      for (const auto& r : s.rows) {
        std::cout << sw_axis << '=' << r.value << " seed " << r.seed << " exit " << r.outcome.exit_code << '\n';
        if (r.outcome.exit_code != vdb::kExitOk) std::cerr << "vdb-lab: " << r.outcome.message << '\n';
      }
      std::cout << "output: " << dir.string() << '\n';
      return s.exit_code;
    }
    for (const auto& [kind, sub] : runs) {
      if (!sub->parsed()) continue;
      vdb::RunConfig c = build_config(kind, opts, flags);
      std::filesystem::path dir = opts.out.empty() ? default_dir(kind, c) : std::filesystem::path(opts.out);
      // For bounds, --out names the report file when it has an extension.
      if (kind == "bounds" && dir.has_extension()) {
        c.set("bounds.report", dir.filename().string());
        dir = dir.has_parent_path() ? dir.parent_path() : std::filesystem::path(".");
      }
      return report(vdb::run(c, dir), dir);
    }
  } catch (const vdb::ConfigError& e) {
    std::cerr << "vdb-lab: " << e.what() << '\n';
    return vdb::kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "vdb-lab: " << e.what() << '\n';
    return vdb::kExitUsage;
  }
  return vdb::kExitUsage;
}
