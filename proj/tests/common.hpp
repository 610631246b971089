#pragma once

#include <filesystem>
#include <initializer_list>
#include <string>

#include "wcrl/config.hpp"

namespace testing_env {

inline std::filesystem::path level_path(const std::string& name) {
  return std::filesystem::path(WCRL_DATA_DIR) / "levels" / name;
}

inline wcrl::EnvConfig config(std::initializer_list<const char*> levels, int height = 11,
                              int width = 16) {
  wcrl::EnvConfig c;
  for (const char* l : levels) c.inputs.push_back(level_path(l));
  c.level_height = height;
  c.level_width = width;
  return c;
}

}  // namespace testing_env
