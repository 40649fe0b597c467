#include "structpred/data/split.hpp"

#include "structpred/error.hpp"

namespace structpred::data {

void SplitSpec::add(const std::string& name, std::filesystem::path file) {
  splits[name].push_back(std::move(file));
}

const std::vector<std::filesystem::path>& SplitSpec::files(const std::string& name) const {
  auto it = splits.find(name);
  if (it == splits.end()) fail(ErrorCode::kConfig, "no split named " + name);
  return it->second;
}

void SplitSpec::validate() const {
  std::map<std::string, std::string> owner;
  for (const auto& [name, files] : splits) {
    for (const auto& f : files) {
      const std::string key = f.lexically_normal().string();
      auto [it, inserted] = owner.emplace(key, name);
      if (!inserted && it->second != name) {
        fail(ErrorCode::kConfig, "file " + key + " appears in both " + it->second +
                                     " and " + name);
      }
    }
  }
}

}  // namespace structpred::data
