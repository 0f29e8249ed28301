#include "pelab/atw.hpp"

#include <zlib.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "pelab/errors.hpp"
#include "pelab/fileio.hpp"

namespace pelab {

namespace fs = std::filesystem;
using nlohmann::json;

static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);

namespace {

std::string coords(std::size_t l, std::size_t h, std::size_t i, std::size_t j) {
  std::ostringstream ss;
  ss << "(layer=" << l << ", head=" << h << ", row=" << i << ", col=" << j << ")";
  return ss.str();
}

float decode_le_float(const unsigned char* p) {
  std::uint32_t bits = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                       (static_cast<std::uint32_t>(p[2]) << 16) |
                       (static_cast<std::uint32_t>(p[3]) << 24);
  return std::bit_cast<float>(bits);
}

void encode_le_float(float v, unsigned char* p) {
  auto bits = std::bit_cast<std::uint32_t>(v);
  p[0] = static_cast<unsigned char>(bits & 0xFFu);
  p[1] = static_cast<unsigned char>((bits >> 8) & 0xFFu);
  p[2] = static_cast<unsigned char>((bits >> 16) & 0xFFu);
  p[3] = static_cast<unsigned char>((bits >> 24) & 0xFFu);
}

std::size_t positive_dim(const json& manifest, const char* key) {
  if (!manifest.contains(key) || !manifest[key].is_number_integer()) {
    throw FormatError(std::string("ATW manifest: missing integer field '") + key + "'");
  }
  auto v = manifest[key].get<long long>();
  if (v <= 0) throw FormatError(std::string("ATW manifest: '") + key + "' must be positive");
  return static_cast<std::size_t>(v);
}

}  // namespace

std::uint32_t crc32_of(std::span<const unsigned char> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes a uInt length; feed in chunks for payloads above 4 GiB.
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    std::size_t chunk = std::min<std::size_t>(bytes.size() - pos, 1u << 30);
    crc = ::crc32(crc, bytes.data() + pos, static_cast<uInt>(chunk));
    pos += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

WeightMatrix AttentionTensor::slice(std::size_t layer, std::size_t head) const {
  std::vector<double> v(n * n);
  const std::size_t base = offset(layer, head, 0, 0);
  for (std::size_t k = 0; k < n * n; ++k) v[k] = static_cast<double>(values[base + k]);
  return WeightMatrix(n, std::move(v));
}

std::vector<std::size_t> AttentionTensor::kept_positions() const {
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < n; ++i) {
    if (!special_mask[i]) kept.push_back(i);
  }
  return kept;
}

WeightMatrix AttentionTensor::masked_slice(std::size_t layer, std::size_t head) const {
  const auto kept = kept_positions();
  if (kept.empty()) {
    throw ValidationError("attention tensor '" + model_name + "': every position is masked");
  }
  if (kept.size() == n) return slice(layer, head);

  const std::size_t m = kept.size();
  WeightMatrix out(m);
  for (std::size_t a = 0; a < m; ++a) {
    double sum = 0.0;
    for (std::size_t b = 0; b < m; ++b) {
      double v = static_cast<double>(at(layer, head, kept[a], kept[b]));
      out(a, b) = v;
      sum += v;
    }
    if (!(sum > 0.0)) {
      throw ValidationError("attention tensor '" + model_name + "': row " +
                            std::to_string(kept[a]) + " has no mass on unmasked columns " +
                            coords(layer, head, kept[a], 0));
    }
    for (std::size_t b = 0; b < m; ++b) out(a, b) /= sum;
  }
  return out;
}

void AttentionTensor::validate() {
  if (layers == 0 || heads == 0 || n == 0) {
    throw FormatError("attention tensor: L, H and n must be positive");
  }
  if (tokens.size() != n || special_mask.size() != n) {
    throw FormatError("attention tensor: tokens (" + std::to_string(tokens.size()) +
                      ") and special_mask (" + std::to_string(special_mask.size()) +
                      ") must both have length n=" + std::to_string(n));
  }
  if (values.size() != layers * heads * n * n) {
    throw FormatError("attention tensor: shape mismatch, expected " +
                      std::to_string(layers * heads * n * n) + " values, got " +
                      std::to_string(values.size()));
  }
  double worst = 0.0;
  for (std::size_t l = 0; l < layers; ++l) {
    for (std::size_t h = 0; h < heads; ++h) {
      for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          float v = at(l, h, i, j);
          if (!std::isfinite(v)) {
            throw FormatError("attention tensor: non-finite value at " + coords(l, h, i, j));
          }
          if (v < 0.0f) {
            throw FormatError("attention tensor: negative weight at " + coords(l, h, i, j));
          }
          sum += static_cast<double>(v);
        }
        if (special_mask[i]) continue;
        double err = std::abs(sum - 1.0);
        if (err > kRowSumTolerance) {
          throw FormatError("attention tensor: row sums to " + std::to_string(sum) + " at " +
                            coords(l, h, i, 0));
        }
        worst = std::max(worst, err);
      }
    }
  }
  row_sum_max_error = worst;
}

AttentionTensor tensor_from_matrix(const WeightMatrix& m, const std::string& model_name) {
  AttentionTensor t;
  t.model_name = model_name;
  t.layers = 1;
  t.heads = 1;
  t.n = m.size();
  t.special_mask.assign(t.n, false);
  t.tokens.reserve(t.n);
  for (std::size_t i = 0; i < t.n; ++i) t.tokens.push_back(std::to_string(i));
  t.values.reserve(t.n * t.n);
  for (double v : m.values()) t.values.push_back(static_cast<float>(v));
  t.validate();
  return t;
}

AttentionTensor load_atw(const fs::path& manifest_path) {
  json manifest;
  try {
    manifest = json::parse(read_text_file(manifest_path));
  } catch (const json::exception& e) {
    throw FormatError("ATW manifest " + manifest_path.string() + ": " + e.what());
  }
  if (!manifest.is_object() || manifest.value("magic", "") != "ATW1") {
    throw FormatError("ATW manifest " + manifest_path.string() + ": missing magic \"ATW1\"");
  }
  if (manifest.value("dtype", "") != "f32") {
    throw FormatError("ATW manifest: unsupported dtype (expected \"f32\")");
  }
  if (manifest.value("layout", "") != "LHNN") {
    throw FormatError("ATW manifest: unsupported layout (expected \"LHNN\")");
  }

  AttentionTensor t;
  t.model_name = manifest.value("model_name", "");
  t.layers = positive_dim(manifest, "L");
  t.heads = positive_dim(manifest, "H");
  t.n = positive_dim(manifest, "n");

  try {
    t.tokens = manifest.at("tokens").get<std::vector<std::string>>();
    for (const auto& flag : manifest.at("special_mask")) {
      if (flag.is_boolean()) {
        t.special_mask.push_back(flag.get<bool>());
      } else if (flag.is_number_integer()) {
        t.special_mask.push_back(flag.get<long long>() != 0);
      } else {
        throw FormatError("ATW manifest: special_mask entries must be booleans");
      }
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("ATW manifest: bad tokens/special_mask: ") + e.what());
  }
  if (t.tokens.size() != t.n || t.special_mask.size() != t.n) {
    throw FormatError("ATW manifest: tokens/special_mask length differs from n=" +
                      std::to_string(t.n));
  }

  if (!manifest.contains("bin") || !manifest["bin"].is_string()) {
    throw FormatError("ATW manifest: missing \"bin\" file name");
  }
  fs::path bin_path = manifest["bin"].get<std::string>();
  if (bin_path.is_relative()) bin_path = manifest_path.parent_path() / bin_path;
  const auto bytes = read_binary_file(bin_path);

  const std::size_t count = t.layers * t.heads * t.n * t.n;
  if (bytes.size() != count * 4) {
    std::ostringstream ss;
    ss << "ATW shape mismatch: manifest declares " << t.layers << "x" << t.heads << "x" << t.n
       << "x" << t.n << " (" << count * 4 << " bytes) but " << bin_path.string() << " has "
       << bytes.size() << " bytes";
    if (bytes.size() % 4 == 0) ss << " (" << bytes.size() / 4 << " floats)";
    throw FormatError(ss.str());
  }
  if (manifest.contains("crc32")) {
    if (!manifest["crc32"].is_number_unsigned() && !manifest["crc32"].is_number_integer()) {
      throw FormatError("ATW manifest: crc32 must be an integer");
    }
    auto expected = manifest["crc32"].get<std::uint64_t>();
    auto actual = crc32_of(bytes);
    if (expected != actual) {
      throw FormatError("ATW checksum mismatch for " + bin_path.string() + ": manifest " +
                        std::to_string(expected) + ", payload " + std::to_string(actual));
    }
  } else {
    throw FormatError("ATW manifest: missing crc32");
  }

  t.values.resize(count);
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(t.values.data(), bytes.data(), bytes.size());
  } else {
    for (std::size_t k = 0; k < count; ++k) t.values[k] = decode_le_float(&bytes[k * 4]);
  }
  t.validate();
  return t;
}

void save_atw(const AttentionTensor& t, const fs::path& manifest_path) {
  AttentionTensor checked = t;
  checked.validate();

  std::vector<unsigned char> bytes(t.values.size() * 4);
  for (std::size_t k = 0; k < t.values.size(); ++k) encode_le_float(t.values[k], &bytes[k * 4]);

  fs::path bin_name = manifest_path.stem();
  bin_name += ".bin";
  const fs::path bin_path = manifest_path.parent_path() / bin_name;

  json mask = json::array();
  for (bool b : t.special_mask) mask.push_back(b);

  json manifest = {
      {"magic", "ATW1"},
      {"model_name", t.model_name},
      {"L", t.layers},
      {"H", t.heads},
      {"n", t.n},
      {"dtype", "f32"},
      {"layout", "LHNN"},
      {"tokens", t.tokens},
      {"special_mask", mask},
      {"bin", bin_name.string()},
      {"crc32", crc32_of(bytes)},
  };
  write_binary_file(bin_path, bytes);
  write_text_file(manifest_path, manifest.dump(1) + "\n");
}

std::vector<fs::path> load_atw_index(const fs::path& index_path) {
  json index;
  try {
    index = json::parse(read_text_file(index_path));
  } catch (const json::exception& e) {
    throw FormatError("ATW index " + index_path.string() + ": " + e.what());
  }
  if (!index.is_object() || !index.contains("dumps") || !index["dumps"].is_array()) {
    throw FormatError("ATW index " + index_path.string() + ": expected {\"dumps\": [...]}");
  }
  std::vector<fs::path> out;
  for (const auto& entry : index["dumps"]) {
    if (!entry.is_string()) throw FormatError("ATW index: dump entries must be strings");
    fs::path p = entry.get<std::string>();
    if (p.is_relative()) p = index_path.parent_path() / p;
    out.push_back(p);
  }
  return out;
}

}  // namespace pelab
