#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace structpred::data {

// Named file lists, e.g. TRN / DEV / TST or TST-IN / TST-OOD. Section ranges
// used to build these lists are documentation outside the artifact.
struct SplitSpec {
  std::map<std::string, std::vector<std::filesystem::path>> splits;

  void add(const std::string& name, std::filesystem::path file);
  const std::vector<std::filesystem::path>& files(const std::string& name) const;
  bool has(const std::string& name) const { return splits.count(name) != 0; }

  // No file may appear in two splits.
  void validate() const;
};

}  // namespace structpred::data
