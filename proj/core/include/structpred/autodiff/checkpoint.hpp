#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "structpred/autodiff/parameter.hpp"

namespace structpred::ad {

// Binary parameter file: "SPCK", u32 version, then per parameter u32 name
// length, UTF-8 name, u32 rank, u32 dims, little-endian f32 payload.
inline constexpr char kCheckpointMagic[4] = {'S', 'P', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointRecord {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<float> values;
};

std::vector<CheckpointRecord> read_checkpoint(const std::filesystem::path& path);
void write_checkpoint(const std::filesystem::path& path,
                      const std::vector<CheckpointRecord>& records);

// Several stores may share one file; their parameter names must be disjoint.
template <Real T>
void save_parameters(const std::filesystem::path& path,
                     const std::vector<const ParameterStore<T>*>& stores);
template <Real T>
void save_parameters(const std::filesystem::path& path, const ParameterStore<T>& store) {
  save_parameters<T>(path, std::vector<const ParameterStore<T>*>{&store});
}

// Fails unless the file holds exactly the stores' parameters with matching
// shapes.
template <Real T>
void load_parameters(const std::filesystem::path& path,
                     const std::vector<ParameterStore<T>*>& stores);
template <Real T>
void load_parameters(const std::filesystem::path& path, ParameterStore<T>& store) {
  load_parameters<T>(path, std::vector<ParameterStore<T>*>{&store});
}

}  // namespace structpred::ad
