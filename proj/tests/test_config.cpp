#include "msopt/config.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace msopt;

namespace {

const char* kOptimize = R"(# Brockett run
[experiment]
seed = 42

[oracle]
kind = empirical
sigma = 0.05   # noise level

[manifold]
kind = orthogonal
n = 5

[objective]
kind = brockett

[algorithm]
kind = dlf
eta = 3000
t_step = 1e-4
)";

std::string error_of(const std::string& text, const std::string& command) {
  try {
    parse_config(text, command, "test.cfg");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, ParsesValuesAndDefaults) {
  const ExperimentConfig cfg = parse_config(kOptimize, "optimize");
  EXPECT_EQ(cfg.command(), "optimize");
  EXPECT_EQ(cfg.integer("experiment.seed"), 42);
  EXPECT_EQ(cfg.real("oracle.sigma"), 0.05);
  EXPECT_EQ(cfg.count("manifold.n"), 5u);
  EXPECT_EQ(cfg.text("experiment.kind"), "optimize");
  EXPECT_EQ(cfg.text("output.dir"), "out");
  EXPECT_EQ(cfg.real("algorithm.gamma"), 1e-3);
  EXPECT_TRUE(cfg.boolean("manifold.normalize"));
  EXPECT_THROW(cfg.real_list("algorithm.offsets"), ConfigError);  // validate-only key
}

TEST(Config, LandingGainAndStepDefaults) {
  const ExperimentConfig cfg = parse_config(kOptimize, "optimize");
  EXPECT_EQ(cfg.real("algorithm.eta"), 3e3);
  EXPECT_EQ(cfg.real("algorithm.t_step"), 1e-4);
  const ExperimentConfig bare =
      parse_config("[oracle]\nkind=exact\n[manifold]\nkind=circle\n[objective]\nkind=zero\n[algorithm]\nkind=dlf\n",
                   "optimize");
  EXPECT_EQ(bare.real("algorithm.eta"), 3e3);
  EXPECT_EQ(bare.real("algorithm.t_step"), 1e-4);
}

TEST(Config, EmptyConfigListsRequiredKeys) {
  const std::string err = error_of("", "optimize");
  for (const char* key : {"oracle.kind", "manifold.kind", "objective.kind", "algorithm.kind"})
    EXPECT_NE(err.find(key), std::string::npos) << err;
}

TEST(Config, DuplicateKeyReportsBothLines) {
  const std::string err = error_of("[oracle]\nkind = exact\n\nkind = empirical\n", "optimize");
  EXPECT_NE(err.find("line 2"), std::string::npos) << err;
  EXPECT_NE(err.find("line 4"), std::string::npos) << err;
}

TEST(Config, StrictRejections) {
  EXPECT_NE(error_of("[oracle]\nflavour = x\n", "optimize").find("test.cfg:2"), std::string::npos);
  EXPECT_NE(error_of("[bogus]\n", "optimize").find("test.cfg:1"), std::string::npos);
  EXPECT_NE(error_of("kind = exact\n", "optimize"), "");
  EXPECT_NE(error_of("[oracle]\nkind exact\n", "optimize"), "");
  EXPECT_NE(error_of("[oracle]\nkind = magic\n", "optimize").find("magic"), std::string::npos);
  EXPECT_NE(error_of("[oracle]\nsigma = abc\n", "optimize").find("sigma"), std::string::npos);
  // Accepted by other subcommands only.
  EXPECT_NE(error_of("[oracle]\nepochs = 5\n", "optimize").find("epochs"), std::string::npos);
  EXPECT_NE(error_of("[experiment]\nkind = validate\n", "optimize").find("does not match"), std::string::npos);
}

TEST(Config, EchoRoundTrip) {
  const ExperimentConfig cfg = parse_config(kOptimize, "optimize");
  const ExperimentConfig again = parse_config(cfg.echo(), "optimize");
  EXPECT_EQ(cfg, again);
  EXPECT_EQ(cfg.echo(), again.echo());
  for (const std::string& cmd : subcommands()) {
    ExperimentConfig minimal;
    // Every subcommand's full default set round-trips too.
    std::string text;
    if (cmd == "optimize") text = kOptimize;
    if (cmd == "validate") text = "[oracle]\nkind=exact\n[manifold]\nkind=sphere\n[algorithm]\nkind=landing_check\n";
    if (cmd == "train-score") text = "[oracle]\ndataset=data.csv\n";
    if (cmd == "sample") text = "[oracle]\nnetwork=net.msopt\n";
    if (cmd == "generate-data") text = "[manifold]\nkind=unicycle\n";
    minimal = parse_config(text, cmd);
    EXPECT_EQ(parse_config(minimal.echo(), cmd), minimal) << cmd;
  }
}

TEST(Config, OverridesAreValidated) {
  ExperimentConfig cfg = parse_config(kOptimize, "optimize");
  cfg.set("experiment.seed", "7");
  EXPECT_EQ(cfg.integer("experiment.seed"), 7);
  EXPECT_THROW(cfg.set("experiment.seed", "x"), ConfigError);
  EXPECT_THROW(cfg.set("oracle.epochs", "3"), ConfigError);
}

TEST(Config, HelpListsEverySchemaKey) {
  for (const std::string& cmd : subcommands()) {
    const std::string help = schema_help(cmd);
    for (const KeySpec& s : config_schema()) {
      const bool accepted = std::find(s.commands.begin(), s.commands.end(), cmd) != s.commands.end();
      if (accepted) {
        EXPECT_NE(help.find("    " + s.key + " "), std::string::npos) << cmd << " " << s.qualified();
      }
    }
  }
}

TEST(Config, LoadFromFile) {
  const auto path = std::filesystem::temp_directory_path() / "msopt_tests" / "load.cfg";
  std::filesystem::create_directories(path.parent_path());
  std::ofstream(path) << kOptimize;
  EXPECT_EQ(load_config(path, "optimize"), parse_config(kOptimize, "optimize"));
  EXPECT_THROW(load_config(path.parent_path() / "missing.cfg", "optimize"), ConfigError);
}
