// Copyright 2026 The safe_ope Authors
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

#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "harness/commands.hpp"
#include "harness/config.hpp"
#include "harness/format.hpp"
#include "safe_ope/errors.hpp"

namespace h = safe_ope::harness;

namespace {

struct CommonOptions {
  std::string config_file;
  std::vector<std::string> overrides;
  std::string output;
  bool full = false;
  bool dry_run = false;
};

h::ExperimentConfig resolve(const CommonOptions& o) {
  h::ExperimentConfig config;
  if (!o.config_file.empty()) h::apply_config_file(config, o.config_file);
  if (o.full) h::apply_full_protocol(config);
  for (const auto& assignment : o.overrides) h::apply_override(config, assignment);
  if (!o.output.empty()) config.output = o.output;
  h::validate(config);
  return config;
}

std::string schema_text() {
  std::string out = "Config keys (file lines 'key = value', or --set key=value):\n";
  for (const auto& k : h::config_keys()) out += "  " + k.name + "  " + k.description + "\n";
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Safety-constrained behavior policy synthesis for off-policy evaluation"};
  app.set_version_flag("--version", h::tool_version());
  app.require_subcommand(1);
  bool show_schema = false;
  app.add_flag("--schema", show_schema, "print the config schema and exit");

  using Runner = std::function<int(const h::ExperimentConfig&, std::ostream&)>;
  struct Command {
    const char* name;
    const char* help;
    Runner run;
  };
  const std::vector<Command> commands = {
      {"synth", "synthesize a SCOPE or ODI behavior policy for one target", h::run_synth},
      {"evaluate", "run the estimator comparison protocol", h::run_evaluate},
      {"verify", "check closed forms and guarantees against the enumeration oracle", h::run_verify},
      {"gen-offline", "generate an offline dataset (CSV)", h::run_gen_offline},
      {"fqe-synth", "synthesize from offline data via fitted Q-evaluation", h::run_fqe_synth},
  };

  CommonOptions options;
  const Runner* selected = nullptr;
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("-c,--config", options.config_file, "key = value config file");
    sub->add_option("-s,--set", options.overrides, "override, key=value (repeatable)");
    sub->add_option("-o,--output", options.output, "output directory");
    sub->add_flag("--dry-run", options.dry_run, "print the resolved config and exit");
    if (std::string(c.name) == "evaluate") {
      sub->add_flag("--full", options.full, "30 target policies x 30 runs");
    }
    sub->callback([&selected, &c] { selected = &c.run; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help() << (show_schema ? schema_text() : "");
    return h::kSuccess;
  } catch (const CLI::CallForVersion&) {
    std::cout << h::tool_version() << '\n';
    return h::kSuccess;
  } catch (const CLI::ParseError& e) {
    if (show_schema) {
      std::cout << schema_text();
      return h::kSuccess;
    }
    app.exit(e);
    return h::kConfigError;
  }

  try {
    const h::ExperimentConfig config = resolve(options);
    if (options.dry_run) {
      std::cout << h::to_text(config);
      return h::kSuccess;
    }
    return (*selected)(config, std::cout);
  } catch (const safe_ope::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return h::kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return h::kCheckFailure;
  }
}
