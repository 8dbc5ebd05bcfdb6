#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "eccnn/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Edge-conditioned segmentation workflow"};
  app.set_version_flag("--version", "eccnn 0.1.0");

  eccnn::CommandRequest req;
  int precision = 32;
  app.add_option("command", req.command, "gen | train | eval | infer | gradcheck | ablate | bench | stats")
      ->required()
      ->check(CLI::IsMember(eccnn::command_names()));
  app.add_option("--config", req.config, "Configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", req.seed, "Seed for data, weights and training");
  app.add_option("--out", req.out, "Output directory");
  app.add_option("--axis", req.axis, "Ablation axis")->check(CLI::IsMember({"conditioning", "stage", "init"}));
  app.add_option("--stages", req.stages, "Conditioned stages, e.g. conv2_x,conv3_x (or none)");
  app.add_option("--depth", req.depth, "Backbone depth")->check(CLI::IsMember({"mini", "mini-deep"}));
  app.add_option("--edges", req.edges, "computed | manifest | edge-map file or directory");
  app.add_option("--data", req.data, "Dataset manifest");
  app.add_option("--checkpoint", req.checkpoint, "Model checkpoint")->check(CLI::ExistingFile);
  app.add_option("--predictions", req.predictions, "Directory of predicted masks (eval)")
      ->check(CLI::ExistingDirectory);
  app.add_option("--input", req.input, "Single image (infer)");
  app.add_option("--set", req.overrides, "Override section.key=value");
  app.add_option("--precision", precision, "Floating-point width of the numeric core")
      ->check(CLI::IsMember({32, 64}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? eccnn::kExitOk : eccnn::kExitUsage;
  }

  // Finite-difference checks are only meaningful in double precision.
  if (req.command == "gradcheck") precision = 64;
  return precision == 64 ? eccnn::f64::run_command(req, std::cout, std::cerr)
                         : eccnn::f32::run_command(req, std::cout, std::cerr);
}
