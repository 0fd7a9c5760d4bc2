#pragma once

#include <map>
#include <string>

#include "temsearch/tensor.hpp"

namespace temsearch::ad {

// Binary parameter container: magic, length-prefixed JSON manifest
// (array names, shapes, offsets, plus free-form string metadata), then the
// raw float32 payloads little-endian in manifest order. Round-trips are
// bit-exact: floats are moved as their underlying 32-bit patterns.
struct Checkpoint {
  std::map<std::string, Tensor> arrays;
  std::map<std::string, std::string> meta;

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);
};

}  // namespace temsearch::ad
