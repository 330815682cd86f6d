#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace sohklstm {

/// Named view into a trainable tensor's storage. The pointer aliases the
/// owning parameter struct; views are invalidated by reallocation.
struct TensorRef {
  std::string name;
  double* data = nullptr;
  std::vector<std::size_t> shape;

  std::size_t size() const {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
  }
};

}  // namespace sohklstm
