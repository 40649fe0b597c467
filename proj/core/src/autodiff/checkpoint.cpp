#include "structpred/autodiff/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "structpred/error.hpp"

namespace structpred::ad {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

void put_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t get_u32(std::istream& in, const std::filesystem::path& path) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) {
    fail(ErrorCode::kCheckpoint, "truncated checkpoint " + path.string());
  }
  return v;
}

}  // namespace

std::vector<CheckpointRecord> read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open checkpoint " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kCheckpointMagic, 4) != 0) {
    fail(ErrorCode::kCheckpoint, "bad checkpoint magic in " + path.string());
  }
  const std::uint32_t version = get_u32(in, path);
  if (version != kCheckpointVersion) {
    fail(ErrorCode::kCheckpoint, "unsupported checkpoint version " +
                                     std::to_string(version));
  }
  std::vector<CheckpointRecord> records;
  while (in.peek() != std::char_traits<char>::eof()) {
    CheckpointRecord rec;
    const std::uint32_t name_len = get_u32(in, path);
    rec.name.resize(name_len);
    if (!in.read(rec.name.data(), name_len))
      fail(ErrorCode::kCheckpoint, "truncated checkpoint " + path.string());
    const std::uint32_t rank = get_u32(in, path);
    std::size_t count = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      rec.dims.push_back(get_u32(in, path));
      count *= rec.dims.back();
    }
    rec.values.resize(count);
    if (!in.read(reinterpret_cast<char*>(rec.values.data()),
                 static_cast<std::streamsize>(count * sizeof(float)))) {
      fail(ErrorCode::kCheckpoint, "truncated payload for '" + rec.name + "'");
    }
    records.push_back(std::move(rec));
  }
  return records;
}

void write_checkpoint(const std::filesystem::path& path,
                      const std::vector<CheckpointRecord>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot write checkpoint " + path.string());
  out.write(kCheckpointMagic, 4);
  put_u32(out, kCheckpointVersion);
  for (const auto& rec : records) {
    put_u32(out, static_cast<std::uint32_t>(rec.name.size()));
    out.write(rec.name.data(), static_cast<std::streamsize>(rec.name.size()));
    put_u32(out, static_cast<std::uint32_t>(rec.dims.size()));
    for (auto d : rec.dims) put_u32(out, d);
    out.write(reinterpret_cast<const char*>(rec.values.data()),
              static_cast<std::streamsize>(rec.values.size() * sizeof(float)));
  }
}

template <Real T>
void save_parameters(const std::filesystem::path& path,
                     const std::vector<const ParameterStore<T>*>& stores) {
  std::vector<CheckpointRecord> records;
  for (const auto* store : stores) {
    for (const auto& p : store->params()) {
      CheckpointRecord rec;
      rec.name = p->name;
      for (auto d : p->tensor.shape()) rec.dims.push_back(static_cast<std::uint32_t>(d));
      for (T v : p->tensor.data()) rec.values.push_back(static_cast<float>(v));
      records.push_back(std::move(rec));
    }
  }
  write_checkpoint(path, records);
}

template <Real T>
void load_parameters(const std::filesystem::path& path,
                     const std::vector<ParameterStore<T>*>& stores) {
  const auto records = read_checkpoint(path);
  std::size_t expected = 0;
  for (const auto* store : stores) expected += store->size();
  if (records.size() != expected) {
    fail(ErrorCode::kCheckpoint, "checkpoint has " + std::to_string(records.size()) +
                                     " parameters, model defines " +
                                     std::to_string(expected));
  }
  for (const auto& rec : records) {
    Parameter<T>* p = nullptr;
    for (auto* store : stores) {
      if ((p = store->find(rec.name)) != nullptr) break;
    }
    if (p == nullptr) {
      fail(ErrorCode::kCheckpoint, "checkpoint parameter '" + rec.name +
                                       "' is not defined by the model");
    }
    Shape shape(rec.dims.begin(), rec.dims.end());
    if (shape != p->tensor.shape()) {
      fail(ErrorCode::kCheckpoint, "shape mismatch for '" + rec.name + "': checkpoint " +
                                       shape_string(shape) + ", model " +
                                       shape_string(p->tensor.shape()));
    }
    auto dst = p->tensor.mutable_data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<T>(rec.values[i]);
  }
}

template void save_parameters(const std::filesystem::path&,
                              const std::vector<const ParameterStore<float>*>&);
template void save_parameters(const std::filesystem::path&,
                              const std::vector<const ParameterStore<double>*>&);
template void load_parameters(const std::filesystem::path&,
                              const std::vector<ParameterStore<float>*>&);
template void load_parameters(const std::filesystem::path&,
                              const std::vector<ParameterStore<double>*>&);

}  // namespace structpred::ad
