#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

#include "xicm/dynamics.hpp"
#include "xicm/errors.hpp"

namespace xicm {
namespace {

constexpr std::string_view kMagic = "XICMFEAT";
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out += static_cast<char>((v >> (8 * i)) & 0xffu);
}

void put_string(std::string& out, std::string_view s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out += s;
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::size_t offset() const { return pos_; }

  std::string_view take(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n)
      throw FormatError(pos_, std::string("truncated while reading ") + what + " (need " + std::to_string(n) +
                                  " bytes, have " + std::to_string(bytes_.size() - pos_) + ")");
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::uint32_t u32(const char* what) {
    auto s = take(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(s[i])) << (8 * i);
    return v;
  }

  std::uint8_t u8(const char* what) { return static_cast<std::uint8_t>(take(1, what)[0]); }

  std::string string(const char* what) {
    const std::uint32_t n = u32(what);
    return std::string(take(n, what));
  }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_features(const FeatureTable& table) {
  table.check();
  std::string out(kMagic);
  put_u32(out, kVersion);
  out += static_cast<char>(table.mode);
  put_u32(out, table.vis_dim);
  put_u32(out, table.lang_dim);
  put_u32(out, static_cast<std::uint32_t>(table.features.size()));
  put_string(out, table.source);
  for (const auto& f : table.features) {
    put_string(out, f.demo_id);
    for (const auto* part : {&f.vis, &f.lang})
      for (float v : *part) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

FeatureTable decode_features(std::string_view bytes) {
  Reader r(bytes);
  if (r.take(kMagic.size(), "magic") != kMagic) throw FormatError(0, "bad magic, not a feature file");
  const auto version_at = r.offset();
  if (auto v = r.u32("version"); v != kVersion)
    throw FormatError(version_at, "unsupported version " + std::to_string(v));
  FeatureTable t;
  const auto mode_at = r.offset();
  const auto mode = r.u8("mode");
  if (mode < 1 || mode > 7) throw FormatError(mode_at, "unknown mode tag " + std::to_string(mode));
  t.mode = static_cast<FeatureMode>(mode);
  t.vis_dim = r.u32("vis_dim");
  t.lang_dim = r.u32("lang_dim");
  const auto count_at = r.offset();
  const std::uint32_t count = r.u32("count");
  t.source = r.string("source");
  try {
    FeatureTable header = t;
    header.check();
  } catch (const DimensionError& e) {
    throw FormatError(mode_at, e.what());
  }
  const std::size_t per = static_cast<std::size_t>(t.vis_dim) + t.lang_dim;
  if (per != 0 && count > bytes.size() / (4 * per + 4)) throw FormatError(count_at, "count exceeds file size");
  t.features.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    DynamicsFeature f;
    f.demo_id = r.string("feature id");
    f.vis.resize(t.vis_dim);
    f.lang.resize(t.lang_dim);
    for (auto* part : {&f.vis, &f.lang}) {
      for (auto& v : *part) {
        const auto at = r.offset();
        v = std::bit_cast<float>(r.u32("feature component"));
        if (!std::isfinite(v)) throw FormatError(at, "non-finite component in feature '" + f.demo_id + "'");
      }
    }
    t.features.push_back(std::move(f));
  }
  if (r.offset() != bytes.size()) throw FormatError(r.offset(), "trailing bytes after last feature");
  return t;
}

void export_features(const FeatureTable& table, const std::filesystem::path& path) {
  const std::string bytes = encode_features(table);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

FeatureTable import_features(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_features(ss.str());
}

}  // namespace xicm
