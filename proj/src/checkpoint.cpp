#include "temsearch/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "json.hpp"

namespace temsearch::ad {

namespace {

constexpr char kMagic[8] = {'T', 'E', 'M', 'C', 'K', 'P', 'T', '1'};

void put_u64(std::ostream& os, uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 8);
}

uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return v;
}

void put_floats(std::ostream& os, const std::vector<float>& xs) {
  std::vector<unsigned char> buf(xs.size() * 4);
  for (size_t i = 0; i < xs.size(); ++i) {
    const uint32_t u = std::bit_cast<uint32_t>(xs[i]);
    buf[i * 4 + 0] = static_cast<unsigned char>(u & 0xff);
    buf[i * 4 + 1] = static_cast<unsigned char>((u >> 8) & 0xff);
    buf[i * 4 + 2] = static_cast<unsigned char>((u >> 16) & 0xff);
    buf[i * 4 + 3] = static_cast<unsigned char>((u >> 24) & 0xff);
  }
  os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

void get_floats(std::istream& is, std::vector<float>& xs) {
  std::vector<unsigned char> buf(xs.size() * 4);
  is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!is) throw std::runtime_error("checkpoint: truncated array payload");
  for (size_t i = 0; i < xs.size(); ++i) {
    const uint32_t u = static_cast<uint32_t>(buf[i * 4 + 0]) | (static_cast<uint32_t>(buf[i * 4 + 1]) << 8) |
                       (static_cast<uint32_t>(buf[i * 4 + 2]) << 16) |
                       (static_cast<uint32_t>(buf[i * 4 + 3]) << 24);
    xs[i] = std::bit_cast<float>(u);
  }
}

}  // namespace

void Checkpoint::save(const std::string& path) const {
  nlohmann::json manifest;
  manifest["arrays"] = nlohmann::json::array();
  for (const auto& [name, tensor] : arrays) {
    manifest["arrays"].push_back({{"name", name}, {"shape", tensor.shape}});
  }
  manifest["meta"] = meta;
  const std::string mbytes = manifest.dump();

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("checkpoint: cannot open '" + path + "' for writing");
  os.write(kMagic, 8);
  put_u64(os, mbytes.size());
  os.write(mbytes.data(), static_cast<std::streamsize>(mbytes.size()));
  for (const auto& [name, tensor] : arrays) put_floats(os, tensor.data);
  os.flush();
  if (!os) throw std::runtime_error("checkpoint: write failed for '" + path + "'");
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0)
    throw std::runtime_error("checkpoint: '" + path + "' is not a checkpoint file");

  const uint64_t mlen = get_u64(is);
  std::string mbytes(mlen, '\0');
  is.read(mbytes.data(), static_cast<std::streamsize>(mlen));
  if (!is) throw std::runtime_error("checkpoint: truncated manifest");

  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(mbytes);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("checkpoint: bad manifest: " + std::string(e.what()));
  }

  Checkpoint ck;
  for (const auto& [key, value] : manifest.at("meta").items()) ck.meta[key] = value.get<std::string>();
  for (const auto& entry : manifest.at("arrays")) {
    const std::string name = entry.at("name").get<std::string>();
    const std::vector<int> shape = entry.at("shape").get<std::vector<int>>();
    Tensor t(shape, 0.0f);
    get_floats(is, t.data);
    ck.arrays.emplace(name, std::move(t));
  }
  return ck;
}

}  // namespace temsearch::ad
