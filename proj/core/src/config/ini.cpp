#include "structpred/config/ini.hpp"

#include <fstream>
#include <set>

#include "structpred/error.hpp"

namespace structpred::config {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

std::vector<IniEntry> parse_ini(std::istream& in, const std::string& source) {
  std::vector<IniEntry> entries;
  std::set<std::pair<std::string, std::string>> seen;
  std::string section;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    const std::string where = source + ":" + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        fail(ErrorCode::kConfig, where + "malformed section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorCode::kConfig, where + "expected key = value");
    IniEntry e{section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)), line_no};
    if (e.key.empty()) fail(ErrorCode::kConfig, where + "empty key");
    if (!seen.insert({e.section, e.key}).second) {
      fail(ErrorCode::kConfig, where + "duplicate key '" +
                                   (e.section.empty() ? e.key : e.section + "." + e.key) + "'");
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

std::vector<IniEntry> parse_ini(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open config " + path.string());
  return parse_ini(in, path.string());
}

}  // namespace structpred::config
