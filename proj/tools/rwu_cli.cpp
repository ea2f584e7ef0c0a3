#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "rwu/cli.hpp"
#include "rwu/config.hpp"
#include "rwu/version.hpp"

namespace {

std::string flag_name(const std::string& key) {
  std::string f = "--" + key;
  for (auto& ch : f)
    if (ch == '_') ch = '-';
  return f;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random-walk U-statistics: simulation and limit-law checks"};
  app.set_version_flag("--version", std::string(rwu::kVersion));
  app.require_subcommand(1);

  struct Sub {
    CLI::App* app = nullptr;
    std::string config_path;
    std::map<std::string, std::string> values;
  };
  const std::map<std::string, std::string> about{
      {"sample-stable", "stable sampler draws and their ECF against the closed-form cf"},
      {"estimate-constants", "Monte Carlo K_beta or c3 for a walk"},
      {"ustat-transient", "U_n / a_n ensemble and G statistics for a transient walk"},
      {"ustat-planar", "U_n / a_n ensemble for the planar simple walk"},
      {"ustat-localtime", "U_n / a_n ensemble against the sheet functional of the local time"},
      {"sheet-integrals", "step-function sheet integrals against their exact law"},
      {"point-process", "pair point process counts and voids, Poisson truncation limit"},
      {"validate-kernel", "empirical tail constants and truncation check for a kernel"},
  };
  std::map<std::string, Sub> subs;
  for (const auto& name : rwu::subcommands()) {
    Sub& s = subs[name];
    s.app = app.add_subcommand(name, about.at(name));
    s.app->add_option("--config", s.config_path, "key=value file (earlier outputs work too)");
    for (const auto& k : rwu::known_keys()) s.app->add_option(flag_name(k.key), s.values[k.key], k.help);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error kind=config code=" << rwu::kExitConfig << " reason=\"" << e.what() << "\"\n";
    return rwu::kExitConfig;
  }

  for (auto& [name, s] : subs) {
    if (!s.app->parsed()) continue;
    try {
      std::map<std::string, std::string> overrides;
      for (const auto& k : rwu::known_keys())
        if (s.app->count(flag_name(k.key))) overrides[k.key] = s.values[k.key];
      const auto file = s.config_path.empty() ? std::map<std::string, std::string>{} : rwu::load_config_file(s.config_path);
      return rwu::run(rwu::make_config(name, file, overrides));
    } catch (const std::exception& e) {
      const int code = rwu::exit_code_for(e);
      std::cerr << "error kind=" << rwu::kind_for(code) << " code=" << code << " reason=\"" << e.what() << "\"\n";
      return code;
    }
  }
  return rwu::kExitConfig;
}
