#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "core/tensor.hpp"

namespace grl {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

// Base for layers and models. Parameters, buffers and children are listed
// in registration order; that order is canonical for checkpoints and the
// optimizer, so constructors must register in a stable sequence.
class Module {
 public:
  virtual ~Module() = default;

  // Recursive, names joined with '/'.
  std::vector<NamedTensor> named_parameters() const;
  std::vector<NamedTensor> named_buffers() const;
  std::vector<Tensor> parameters() const;
  int64_t parameter_count() const;

  void set_training(bool on);
  bool training() const { return training_; }

 protected:
  Tensor register_param(const std::string& name, Tensor t);
  Tensor register_buffer(const std::string& name, Tensor t);
  void register_child(const std::string& name, Module& child);

 private:
  void collect(const std::string& prefix, bool params,
               std::vector<NamedTensor>& out) const;

  std::vector<std::pair<std::string, Tensor>> params_;
  std::vector<std::pair<std::string, Tensor>> buffers_;
  std::vector<std::pair<std::string, Module*>> children_;
  bool training_ = true;
};

}  // namespace grl
