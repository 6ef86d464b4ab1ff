#include "taskforge/config.hpp"

#include <cstdlib>
#include <stdexcept>

#include "taskforge/textdoc.hpp"

namespace taskforge {

const EngineConfig& EngineConfig::instance() {
  static const EngineConfig cfg;
  return cfg;
}

void RunConfig::load_file(const std::filesystem::path& path) {
  TextDoc doc = TextDoc::parse_file(path);
  doc.expect_format("config/1");
  const Section* run = doc.first_section("run");
  if (!run) throw std::runtime_error(path.string() + ": missing [run] section");
  if (run->has("seed")) seed = static_cast<std::uint64_t>(run->get_int("seed"));
  if (run->has("scale")) scale = run->get_double("scale");
  if (run->has("out")) out_dir = run->get("out");
  if (run->has("workers")) workers = static_cast<int>(run->get_int("workers"));
  if (run->has("categories")) categories = run->get_tokens("categories");
  if (scale <= 0) throw std::runtime_error("config: scale must be positive");
  if (workers < 1) throw std::runtime_error("config: workers must be >= 1");
}

void RunConfig::apply_env() {
  if (const char* v = std::getenv("TASKFORGE_SEED")) seed = std::strtoull(v, nullptr, 10);
  if (const char* v = std::getenv("TASKFORGE_SCALE")) {
    scale = std::strtod(v, nullptr);
    if (scale <= 0) throw std::runtime_error("TASKFORGE_SCALE must be positive");
  }
  if (const char* v = std::getenv("TASKFORGE_OUT")) out_dir = v;
  if (const char* v = std::getenv("TASKFORGE_WORKERS")) {
    workers = static_cast<int>(std::strtol(v, nullptr, 10));
    if (workers < 1) throw std::runtime_error("TASKFORGE_WORKERS must be >= 1");
  }
  if (const char* v = std::getenv("TASKFORGE_CATEGORIES")) categories = split_tokens(v);
}

std::filesystem::path data_dir() {
  if (const char* v = std::getenv("TASKFORGE_DATA")) return v;
#ifdef TASKFORGE_DATA_DIR
  return TASKFORGE_DATA_DIR;
#else
  return "data";
#endif
}

}  // namespace taskforge
