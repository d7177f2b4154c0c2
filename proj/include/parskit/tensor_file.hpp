#pragma once

#include <string>
#include <vector>

#include "parskit/matrix.hpp"

namespace parskit {

// Flat tensor container: a text header naming every tensor with its shape,
// then the raw values as little-endian float64 in header order, row-major.
//
//   parskit tensors v1
//   count 2
//   tensor wq 8 8
//   tensor wq.lora_A 2 8
//   data
//   <binary>
//
// Written byte-identically on every platform.

struct NamedTensor {
  std::string name;
  Matrix values;
};

std::vector<NamedTensor> read_tensor_file(const std::string& path);
void write_tensor_file(const std::string& path,
                       const std::vector<NamedTensor>& tensors);

}  // namespace parskit
