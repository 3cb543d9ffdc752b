#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/shape.hpp"

namespace grl {

// Ordered collection of named strings, integers and double arrays. The
// on-disk encoding is a function of the entry order alone, so writing a
// loaded checkpoint back out reproduces the original file byte for byte.
struct CheckpointData {
  struct Array {
    std::string name;
    Shape shape;
    std::vector<double> values;
  };

  std::vector<std::pair<std::string, std::string>> strings;
  std::vector<std::pair<std::string, int64_t>> ints;
  std::vector<Array> arrays;

  void put_string(const std::string& name, const std::string& value);
  void put_int(const std::string& name, int64_t value);
  void put_array(const std::string& name, const Shape& shape, const std::vector<double>& values);

  const std::string& get_string(const std::string& name) const;
  int64_t get_int(const std::string& name) const;
  const Array& get_array(const std::string& name) const;
  const Array* find_array(const std::string& name) const;
};

void save_checkpoint(const std::string& path, const CheckpointData& data);
CheckpointData load_checkpoint(const std::string& path);

}  // namespace grl
