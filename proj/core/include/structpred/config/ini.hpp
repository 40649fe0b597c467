#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <string>
#include <vector>

namespace structpred::config {

struct IniEntry {
  std::string section;  // empty before the first header
  std::string key;
  std::string value;
  std::size_t line = 0;
};

// "[section]" headers and "key = value" lines; '#' and ';' start comment
// lines. Keys may not repeat within a section.
std::vector<IniEntry> parse_ini(std::istream& in, const std::string& source = "<config>");
std::vector<IniEntry> parse_ini(const std::filesystem::path& path);

}  // namespace structpred::config
