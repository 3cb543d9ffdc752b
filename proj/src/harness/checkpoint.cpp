#include "harness/checkpoint.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>

#include "core/errors.hpp"

namespace grl {

namespace {

constexpr char kMagic[8] = {'G', 'R', 'L', 'C', 'K', 'P', 'T', '1'};

void write_u64(std::ostream& out, uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_i64(std::ostream& out, int64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_str(std::ostream& out, const std::string& s) {
  write_u64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

uint64_t read_u64(std::istream& in, const std::string& path) {
  uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw IoError("truncated checkpoint: " + path);
  return v;
}

int64_t read_i64(std::istream& in, const std::string& path) {
  int64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw IoError("truncated checkpoint: " + path);
  return v;
}

std::string read_str(std::istream& in, const std::string& path) {
  const uint64_t len = read_u64(in, path);
  if (len > (1ULL << 32)) throw IoError("corrupt checkpoint string length in " + path);
  std::string s(len, '\0');
  in.read(s.data(), static_cast<std::streamsize>(len));
  if (!in) throw IoError("truncated checkpoint: " + path);
  return s;
}

}  // namespace

void CheckpointData::put_string(const std::string& name, const std::string& value) {
  strings.push_back({name, value});
}

void CheckpointData::put_int(const std::string& name, int64_t value) {
  ints.push_back({name, value});
}

void CheckpointData::put_array(const std::string& name, const Shape& shape,
                               const std::vector<double>& values) {
  check_shape(numel(shape) == static_cast<int64_t>(values.size()),
              "checkpoint array '" + name + "' has " + std::to_string(values.size()) +
                  " values for shape " + shape_str(shape));
  arrays.push_back({name, shape, values});
}

const std::string& CheckpointData::get_string(const std::string& name) const {
  for (const auto& [n, v] : strings) {
    if (n == name) return v;
  }
  throw IoError("checkpoint is missing string entry '" + name + "'");
}

int64_t CheckpointData::get_int(const std::string& name) const {
  for (const auto& [n, v] : ints) {
    if (n == name) return v;
  }
  throw IoError("checkpoint is missing integer entry '" + name + "'");
}

const CheckpointData::Array* CheckpointData::find_array(const std::string& name) const {
  for (const auto& a : arrays) {
    if (a.name == name) return &a;
  }
  return nullptr;
}

const CheckpointData::Array& CheckpointData::get_array(const std::string& name) const {
  const Array* a = find_array(name);
  if (!a) throw IoError("checkpoint is missing array entry '" + name + "'");
  return *a;
}

void save_checkpoint(const std::string& path, const CheckpointData& data) {
  // Write to a sibling temp file first so an interrupted save never leaves a
  // half-written checkpoint at the target path.
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint: " + tmp);
    out.write(kMagic, sizeof(kMagic));
    write_u64(out, data.strings.size());
    for (const auto& [name, value] : data.strings) {
      write_str(out, name);
      write_str(out, value);
    }
    write_u64(out, data.ints.size());
    for (const auto& [name, value] : data.ints) {
      write_str(out, name);
      write_i64(out, value);
    }
    write_u64(out, data.arrays.size());
    for (const auto& a : data.arrays) {
      write_str(out, a.name);
      write_u64(out, a.shape.size());
      for (int64_t d : a.shape) write_i64(out, d);
      out.write(reinterpret_cast<const char*>(a.values.data()),
                static_cast<std::streamsize>(a.values.size() * sizeof(double)));
    }
    if (!out) throw IoError("failed while writing checkpoint: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

CheckpointData load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw IoError("not a checkpoint file (bad magic): " + path);
  }
  CheckpointData data;
  const uint64_t n_strings = read_u64(in, path);
  for (uint64_t i = 0; i < n_strings; ++i) {
    const std::string name = read_str(in, path);
    data.strings.push_back({name, read_str(in, path)});
  }
  const uint64_t n_ints = read_u64(in, path);
  for (uint64_t i = 0; i < n_ints; ++i) {
    const std::string name = read_str(in, path);
    data.ints.push_back({name, read_i64(in, path)});
  }
  const uint64_t n_arrays = read_u64(in, path);
  for (uint64_t i = 0; i < n_arrays; ++i) {
    CheckpointData::Array a;
    a.name = read_str(in, path);
    const uint64_t rank = read_u64(in, path);
    if (rank > 16) throw IoError("corrupt checkpoint array rank in " + path);
    for (uint64_t d = 0; d < rank; ++d) a.shape.push_back(read_i64(in, path));
    const int64_t count = numel(a.shape);
    if (count < 0 || count > (1LL << 32)) {
      throw IoError("corrupt checkpoint array shape in " + path);
    }
    a.values.resize(count);
    in.read(reinterpret_cast<char*>(a.values.data()),
            static_cast<std::streamsize>(a.values.size() * sizeof(double)));
    if (!in) throw IoError("truncated checkpoint: " + path);
    data.arrays.push_back(std::move(a));
  }
  return data;
}

}  // namespace grl
