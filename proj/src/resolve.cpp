#include "eccnn/commands.hpp"
#include "eccnn/errors.hpp"

namespace eccnn {

ConfigFile resolve_config(const CommandRequest& request) {
  ConfigFile file = request.config ? ConfigFile::load(*request.config) : ConfigFile{};
  if (request.seed) {
    const std::string s = std::to_string(*request.seed);
    for (const char* section : {"data", "model", "train"}) file.section(section).set("seed", s);
  }
  if (request.stages) file.section("model").set("gft_stages", *request.stages);
  if (request.depth) file.section("model").set("depth", *request.depth);
  for (const auto& o : request.overrides) {
    const auto eq = o.find('=');
    const auto dot = o.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
      throw UsageError("--set expects section.key=value, got '" + o + "'");
    }
    file.section(trim(o.substr(0, dot))).set(trim(o.substr(dot + 1, eq - dot - 1)), trim(o.substr(eq + 1)));
  }
  return file;
}

}  // namespace eccnn
