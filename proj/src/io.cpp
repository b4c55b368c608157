#include "uap/io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>

#include "uap/errors.hpp"

namespace uap {

namespace {

std::vector<unsigned char> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string(), 0);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return bytes;
}

void spill(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("short write to " + path.string());
}

class Reader {
 public:
  Reader(const std::vector<unsigned char>& bytes, std::string name)
      : bytes_(bytes), name_(std::move(name)) {}

  std::uint64_t offset() const { return pos_; }

  const unsigned char* take(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) {
      throw ParseError(name_ + ": truncated while reading " + what, pos_);
    }
    const unsigned char* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }

  std::uint32_t u32_be(const char* what) {
    const unsigned char* p = take(4, what);
    return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) |
           (std::uint32_t{p[2]} << 8) | std::uint32_t{p[3]};
  }
  std::uint32_t u32_le(const char* what) {
    const unsigned char* p = take(4, what);
    return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) |
           (std::uint32_t{p[3]} << 24);
  }
  std::uint16_t u16_le(const char* what) {
    const unsigned char* p = take(2, what);
    return static_cast<std::uint16_t>(std::uint16_t{p[0]} | (std::uint16_t{p[1]} << 8));
  }
  std::uint8_t u8(const char* what) { return *take(1, what); }
  float f32_le(const char* what) {
    const std::uint32_t raw = u32_le(what);
    return std::bit_cast<float>(raw);
  }

  void expect_done() {
    if (pos_ != bytes_.size()) {
      throw ParseError(name_ + ": trailing bytes after payload", pos_);
    }
  }

 private:
  const std::vector<unsigned char>& bytes_;
  std::string name_;
  std::uint64_t pos_ = 0;
};

class Writer {
 public:
  void u32_be(std::uint32_t v) {
    bytes_.push_back(static_cast<unsigned char>(v >> 24));
    bytes_.push_back(static_cast<unsigned char>(v >> 16));
    bytes_.push_back(static_cast<unsigned char>(v >> 8));
    bytes_.push_back(static_cast<unsigned char>(v));
  }
  void u32_le(std::uint32_t v) {
    bytes_.push_back(static_cast<unsigned char>(v));
    bytes_.push_back(static_cast<unsigned char>(v >> 8));
    bytes_.push_back(static_cast<unsigned char>(v >> 16));
    bytes_.push_back(static_cast<unsigned char>(v >> 24));
  }
  void u16_le(std::uint16_t v) {
    bytes_.push_back(static_cast<unsigned char>(v));
    bytes_.push_back(static_cast<unsigned char>(v >> 8));
  }
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void f32_le(float v) { u32_le(std::bit_cast<std::uint32_t>(v)); }
  void ascii(const char* s) {
    while (*s) bytes_.push_back(static_cast<unsigned char>(*s++));
  }
  const std::vector<unsigned char>& bytes() const { return bytes_; }

 private:
  std::vector<unsigned char> bytes_;
};

constexpr std::uint64_t kMaxElements = 1ull << 31;  // dimension-overflow guard

void check_count(std::uint64_t total, const std::string& name, std::uint64_t offset) {
  if (total == 0 || total > kMaxElements) {
    throw ParseError(name + ": dimension overflow (" + std::to_string(total) + " elements)",
                     offset);
  }
}

// Narrow to float without letting rounding enlarge the magnitude.
float narrow_toward_zero(double v) {
  float f = static_cast<float>(v);
  if (std::isfinite(f) && std::abs(static_cast<double>(f)) > std::abs(v)) {
    f = std::nextafterf(f, 0.0f);
  }
  return f;
}

}  // namespace

Dataset load_idx_images(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  Reader r(bytes, path.string());
  const std::uint64_t magic_at = r.offset();
  const std::uint32_t magic = r.u32_be("magic");
  if (magic != 0x00000803u) {
    throw ParseError(path.string() + ": bad image magic " + std::to_string(magic) +
                         ", expected 2051",
                     magic_at);
  }
  const std::uint64_t dims_at = r.offset();
  const std::uint32_t count = r.u32_be("image count");
  const std::uint32_t rows = r.u32_be("row count");
  const std::uint32_t cols = r.u32_be("column count");
  const std::uint64_t total = std::uint64_t{count} * rows * cols;
  check_count(total, path.string(), dims_at);
  Dataset d;
  d.shape = {static_cast<int>(rows), static_cast<int>(cols), 1};
  d.count = static_cast<int>(count);
  d.pixels.resize(total);
  const unsigned char* p = r.take(total, "pixel payload");
  for (std::uint64_t k = 0; k < total; ++k) {
    d.pixels[k] = static_cast<float>(p[k]) / 255.0f;
  }
  r.expect_done();
  return d;
}

std::vector<int> load_idx_labels(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  Reader r(bytes, path.string());
  const std::uint64_t magic_at = r.offset();
  const std::uint32_t magic = r.u32_be("magic");
  if (magic != 0x00000801u) {
    throw ParseError(path.string() + ": bad label magic " + std::to_string(magic) +
                         ", expected 2049",
                     magic_at);
  }
  const std::uint32_t count = r.u32_be("label count");
  check_count(count, path.string(), 4);
  const unsigned char* p = r.take(count, "label payload");
  std::vector<int> labels(count);
  for (std::uint32_t k = 0; k < count; ++k) labels[k] = p[k];
  r.expect_done();
  return labels;
}

void write_idx_images(const std::filesystem::path& path, const Dataset& data) {
  validate_dataset(data);
  if (data.shape.channels != 1) {
    throw ShapeError("write_idx_images: IDX images are single-channel");
  }
  Writer w;
  w.u32_be(0x00000803u);
  w.u32_be(static_cast<std::uint32_t>(data.count));
  w.u32_be(static_cast<std::uint32_t>(data.shape.height));
  w.u32_be(static_cast<std::uint32_t>(data.shape.width));
  for (float v : data.pixels) {
    const double scaled = std::lround(static_cast<double>(v) * 255.0);
    w.u8(static_cast<std::uint8_t>(std::clamp(scaled, 0.0, 255.0)));
  }
  spill(path, w.bytes());
}

void write_idx_labels(const std::filesystem::path& path, std::span<const int> labels) {
  Writer w;
  w.u32_be(0x00000801u);
  w.u32_be(static_cast<std::uint32_t>(labels.size()));
  for (int v : labels) {
    if (v < 0 || v > 255) throw std::invalid_argument("write_idx_labels: label outside [0,255]");
    w.u8(static_cast<std::uint8_t>(v));
  }
  spill(path, w.bytes());
}

namespace {

struct UaptPayload {
  TensorShape shape;
  int count = 0;
  std::vector<float> values;
};

UaptPayload load_uapt_payload(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  Reader r(bytes, path.string());
  const unsigned char* magic = r.take(4, "magic");
  if (std::memcmp(magic, "UAPT", 4) != 0) {
    throw ParseError(path.string() + ": bad magic, expected UAPT", 0);
  }
  const std::uint64_t version_at = r.offset();
  const std::uint8_t version = r.u8("version");
  if (version != 1) {
    throw ParseError(path.string() + ": unsupported UAPT version " + std::to_string(version),
                     version_at);
  }
  const std::uint64_t dims_at = r.offset();
  const std::uint32_t h = r.u32_le("height");
  const std::uint32_t w = r.u32_le("width");
  const std::uint32_t c = r.u32_le("channels");
  const std::uint32_t n = r.u32_le("tensor count");
  const std::uint64_t total = std::uint64_t{h} * w * c * n;
  check_count(total, path.string(), dims_at);
  UaptPayload payload;
  payload.shape = {static_cast<int>(h), static_cast<int>(w), static_cast<int>(c)};
  payload.count = static_cast<int>(n);
  payload.values.resize(total);
  for (std::uint64_t k = 0; k < total; ++k) payload.values[k] = r.f32_le("tensor payload");
  r.expect_done();
  return payload;
}

}  // namespace

Dataset load_uapt_dataset(const std::filesystem::path& path) {
  UaptPayload payload = load_uapt_payload(path);
  Dataset d;
  d.shape = payload.shape;
  d.count = payload.count;
  d.pixels = std::move(payload.values);
  for (float v : d.pixels) {
    if (!(v >= 0.0f && v <= 1.0f)) {
      throw std::invalid_argument(path.string() +
                                  ": dataset pixel outside [0,1]; not an image archive");
    }
  }
  return d;
}

void write_uapt(const std::filesystem::path& path, const TensorShape& shape, int count,
                std::span<const float> values) {
  if (values.size() != static_cast<std::size_t>(count) * shape.size()) {
    throw ShapeError("write_uapt: value buffer does not match count x shape");
  }
  Writer w;
  w.ascii("UAPT");
  w.u8(1);
  w.u32_le(static_cast<std::uint32_t>(shape.height));
  w.u32_le(static_cast<std::uint32_t>(shape.width));
  w.u32_le(static_cast<std::uint32_t>(shape.channels));
  w.u32_le(static_cast<std::uint32_t>(count));
  for (float v : values) w.f32_le(v);
  spill(path, w.bytes());
}

std::vector<int> load_uapl_labels(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  Reader r(bytes, path.string());
  const unsigned char* magic = r.take(4, "magic");
  if (std::memcmp(magic, "UAPL", 4) != 0) {
    throw ParseError(path.string() + ": bad magic, expected UAPL", 0);
  }
  const std::uint64_t version_at = r.offset();
  const std::uint8_t version = r.u8("version");
  if (version != 1) {
    throw ParseError(path.string() + ": unsupported UAPL version " + std::to_string(version),
                     version_at);
  }
  const std::uint32_t count = r.u32_le("label count");
  check_count(count, path.string(), 5);
  std::vector<int> labels(count);
  for (std::uint32_t k = 0; k < count; ++k) labels[k] = r.u16_le("label payload");
  r.expect_done();
  return labels;
}

void write_uapl_labels(const std::filesystem::path& path, std::span<const int> labels) {
  Writer w;
  w.ascii("UAPL");
  w.u8(1);
  w.u32_le(static_cast<std::uint32_t>(labels.size()));
  for (int v : labels) {
    if (v < 0 || v > std::numeric_limits<std::uint16_t>::max()) {
      throw std::invalid_argument("write_uapl_labels: label outside u16 range");
    }
    w.u16_le(static_cast<std::uint16_t>(v));
  }
  spill(path, w.bytes());
}

void write_perturbation(const std::filesystem::path& path, const UniversalPerturbation& p) {
  std::vector<float> narrowed(p.values.size());
  for (std::size_t k = 0; k < p.values.size(); ++k) {
    narrowed[k] = narrow_toward_zero(p.values[k]);
  }
  write_uapt(path, p.shape, 1, narrowed);
}

UniversalPerturbation load_perturbation(const std::filesystem::path& path) {
  UaptPayload payload = load_uapt_payload(path);
  if (payload.count != 1) {
    throw ParseError(path.string() + ": perturbation file must hold exactly one tensor, has " +
                         std::to_string(payload.count),
                     9);
  }
  UniversalPerturbation p;
  p.shape = payload.shape;
  p.values.assign(payload.values.begin(), payload.values.end());
  p.epsilon = linf_norm(p.values);
  return p;
}

FeedForwardModel load_model(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  Reader r(bytes, path.string());
  const unsigned char* magic = r.take(4, "magic");
  if (std::memcmp(magic, "NNW1", 4) != 0) {
    throw ParseError(path.string() + ": bad magic, expected NNW1", 0);
  }
  const std::uint32_t layer_count = r.u32_le("layer count");
  if (layer_count == 0 || layer_count > 64) {
    throw ParseError(path.string() + ": implausible layer count " + std::to_string(layer_count),
                     4);
  }
  FeedForwardModel model;
  for (std::uint32_t l = 0; l < layer_count; ++l) {
    const std::uint64_t tag_at = r.offset();
    const std::uint8_t tag = r.u8("activation tag");
    if (tag > 1) {
      throw ParseError(path.string() + ": unknown activation tag " + std::to_string(tag), tag_at);
    }
    const std::uint64_t dims_at = r.offset();
    const std::uint32_t rows = r.u32_le("weight rows");
    const std::uint32_t cols = r.u32_le("weight cols");
    check_count(std::uint64_t{rows} * cols, path.string(), dims_at);
    DenseLayer layer;
    layer.activation = tag == 1 ? Activation::Relu : Activation::Identity;
    layer.weights.resize(rows, cols);
    for (std::uint32_t i = 0; i < rows; ++i) {
      for (std::uint32_t j = 0; j < cols; ++j) {
        layer.weights(i, j) = r.f32_le("weight payload");
      }
    }
    layer.bias.resize(cols);
    for (std::uint32_t j = 0; j < cols; ++j) layer.bias(j) = r.f32_le("bias payload");
    model.layers.push_back(std::move(layer));
  }
  r.expect_done();
  validate_model(model);
  return model;
}

void write_model(const std::filesystem::path& path, const FeedForwardModel& model) {
  validate_model(model);
  Writer w;
  w.ascii("NNW1");
  w.u32_le(static_cast<std::uint32_t>(model.layers.size()));
  for (const auto& layer : model.layers) {
    w.u8(layer.activation == Activation::Relu ? 1 : 0);
    w.u32_le(static_cast<std::uint32_t>(layer.weights.rows()));
    w.u32_le(static_cast<std::uint32_t>(layer.weights.cols()));
    for (Eigen::Index i = 0; i < layer.weights.rows(); ++i) {
      for (Eigen::Index j = 0; j < layer.weights.cols(); ++j) {
        w.f32_le(static_cast<float>(layer.weights(i, j)));
      }
    }
    for (Eigen::Index j = 0; j < layer.bias.size(); ++j) {
      w.f32_le(static_cast<float>(layer.bias(j)));
    }
  }
  spill(path, w.bytes());
}

Dataset load_images_auto(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), "UAPT", 4) == 0) {
    return load_uapt_dataset(path);
  }
  return load_idx_images(path);
}

std::vector<int> load_labels_auto(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), "UAPL", 4) == 0) {
    return load_uapl_labels(path);
  }
  return load_idx_labels(path);
}

void write_ledger(const std::filesystem::path& path, const QueryLedger& ledger) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  nlohmann::ordered_json header;
  header["budget"] = ledger.budget();
  header["epsilon"] = ledger.epsilon();
  out << header.dump() << "\n";
  for (const auto& e : ledger.entries()) {
    nlohmann::ordered_json line;
    line["image_id"] = e.image_id;
    line["query_index"] = e.query_index;
    line["distance"] = e.distance;
    out << line.dump() << "\n";
  }
  if (!out) throw std::runtime_error("short write to " + path.string());
}

LedgerFile load_ledger(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string(), 0);
  LedgerFile file;
  std::string line;
  std::uint64_t offset = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty()) {
      nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded()) {
        throw ParseError(path.string() + ": malformed ledger line", offset);
      }
      if (!have_header) {
        file.budget = j.at("budget").get<int>();
        file.epsilon = j.at("epsilon").get<double>();
        have_header = true;
      } else {
        LedgerEntry e;
        e.image_id = j.at("image_id").get<std::int64_t>();
        e.query_index = j.at("query_index").get<std::uint64_t>();
        e.distance = j.at("distance").get<double>();
        file.entries.push_back(e);
      }
    }
    offset += line.size() + 1;
  }
  if (!have_header) throw ParseError(path.string() + ": empty ledger file", 0);
  return file;
}

}  // namespace uap
