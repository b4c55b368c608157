#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <vector>

#include "uap/errors.hpp"
#include "uap/io.hpp"
#include "uap/synth.hpp"
#include "uap/train.hpp"

using namespace uap;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  static int counter = 0;
  const fs::path dir =
      fs::temp_directory_path() / ("uap_io_tests_" + std::to_string(++counter));
  fs::create_directories(dir);
  return dir;
}

void write_bytes(const fs::path& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

std::vector<unsigned char> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// 2 images of 2x2 pixels, values chosen to be exact on the /255 grid.
std::vector<unsigned char> idx_image_fixture() {
  return {
      0x00, 0x00, 0x08, 0x03,  // image magic 2051
      0x00, 0x00, 0x00, 0x02,  // 2 images
      0x00, 0x00, 0x00, 0x02,  // 2 rows
      0x00, 0x00, 0x00, 0x02,  // 2 cols
      0,    51,   102,  153,   // image 0
      204,  255,  128,  64,    // image 1
  };
}

}  // namespace

TEST_CASE("a handcrafted image archive loads with /255 rescaling") {
  const fs::path dir = temp_dir();
  write_bytes(dir / "imgs.idx", idx_image_fixture());
  const Dataset d = load_idx_images(dir / "imgs.idx");
  CHECK(d.count == 2);
  CHECK(d.shape.height == 2);
  CHECK(d.shape.width == 2);
  CHECK(d.shape.channels == 1);
  REQUIRE(d.pixels.size() == 8);
  CHECK(d.pixels[0] == 0.0f);
  CHECK(d.pixels[1] == 51.0f / 255.0f);   // exactly 0.2f
  CHECK(d.pixels[2] == 102.0f / 255.0f);  // exactly 0.4f
  CHECK(d.pixels[5] == 1.0f);
  CHECK(d.pixels[6] == 128.0f / 255.0f);
}

TEST_CASE("image archive parse errors carry the first uninterpretable byte offset") {
  const fs::path dir = temp_dir();

  write_bytes(dir / "empty.idx", {});
  try {
    load_idx_images(dir / "empty.idx");
    FAIL("empty file should not parse");
  } catch (const ParseError& e) {
    CHECK(e.byte_offset() == 0);
  }

  auto bad_magic = idx_image_fixture();
  bad_magic[3] = 0x04;
  write_bytes(dir / "magic.idx", bad_magic);
  try {
    load_idx_images(dir / "magic.idx");
    FAIL("bad magic should not parse");
  } catch (const ParseError& e) {
    CHECK(e.byte_offset() == 0);
    CHECK(std::string(e.what()).find("magic") != std::string::npos);
  }

  auto truncated = idx_image_fixture();
  truncated.resize(20);  // header + 4 of 8 pixels
  write_bytes(dir / "trunc.idx", truncated);
  try {
    load_idx_images(dir / "trunc.idx");
    FAIL("truncated payload should not parse");
  } catch (const ParseError& e) {
    CHECK(e.byte_offset() == 16);  // payload start: that read cannot complete
  }

  auto trailing = idx_image_fixture();
  trailing.push_back(0xFF);
  write_bytes(dir / "trail.idx", trailing);
  try {
    load_idx_images(dir / "trail.idx");
    FAIL("trailing bytes should not parse");
  } catch (const ParseError& e) {
    CHECK(e.byte_offset() == 24);  // first byte past the declared payload
  }

  // A labels file fed to the image loader fails on the magic, not later.
  write_bytes(dir / "labels_as_images.idx", {0x00, 0x00, 0x08, 0x01, 0x00, 0x00, 0x00, 0x01, 7});
  CHECK_THROWS_AS(load_idx_images(dir / "labels_as_images.idx"), ParseError);
}

TEST_CASE("label archives round-trip and reject out-of-range values") {
  const fs::path dir = temp_dir();
  const std::vector<int> labels{0, 1, 9, 255, 3};
  write_idx_labels(dir / "labels.idx", labels);
  CHECK(load_idx_labels(dir / "labels.idx") == labels);
  CHECK_THROWS_AS(write_idx_labels(dir / "bad.idx", std::vector<int>{256}),
                  std::invalid_argument);
  CHECK_THROWS_AS(write_idx_labels(dir / "bad.idx", std::vector<int>{-1}),
                  std::invalid_argument);

  auto bytes = read_bytes(dir / "labels.idx");
  bytes[3] = 0x03;  // image magic on a label file
  write_bytes(dir / "swapped.idx", bytes);
  CHECK_THROWS_AS(load_idx_labels(dir / "swapped.idx"), ParseError);
}

TEST_CASE("image write -> read -> write is byte-identical") {
  const fs::path dir = temp_dir();
  PrototypeDataConfig config;
  config.count = 12;
  config.shape = {14, 14, 1};
  const Dataset d = make_prototype_dataset(config);  // quantized to /255 grid
  write_idx_images(dir / "a.idx", d);
  const Dataset reloaded = load_idx_images(dir / "a.idx");
  CHECK(reloaded.pixels == d.pixels);
  write_idx_images(dir / "b.idx", reloaded);
  CHECK(read_bytes(dir / "a.idx") == read_bytes(dir / "b.idx"));
}

TEST_CASE("raw float tensor archives round-trip bitwise") {
  const fs::path dir = temp_dir();
  const TensorShape shape{3, 2, 2};
  std::vector<float> values(2 * shape.size());
  for (std::size_t k = 0; k < values.size(); ++k)
    values[k] = static_cast<float>(k) / static_cast<float>(values.size());
  write_uapt(dir / "t.uapt", shape, 2, values);
  const Dataset d = load_uapt_dataset(dir / "t.uapt");
  CHECK(d.shape == shape);
  CHECK(d.count == 2);
  CHECK(d.pixels == values);
  write_uapt(dir / "t2.uapt", d.shape, d.count, d.pixels);
  CHECK(read_bytes(dir / "t.uapt") == read_bytes(dir / "t2.uapt"));

  // Out-of-range pixels are rejected as dataset images.
  write_uapt(dir / "neg.uapt", {1, 1, 1}, 1, std::vector<float>{-0.25f});
  CHECK_THROWS_AS(load_uapt_dataset(dir / "neg.uapt"), std::invalid_argument);

  // Unsupported version byte.
  auto bytes = read_bytes(dir / "t.uapt");
  bytes[4] = 2;
  write_bytes(dir / "v2.uapt", bytes);
  try {
    load_uapt_dataset(dir / "v2.uapt");
    FAIL("version 2 should not parse");
  } catch (const ParseError& e) {
    CHECK(e.byte_offset() == 4);
  }
}

TEST_CASE("second-format label archives round-trip through the u16 range") {
  const fs::path dir = temp_dir();
  const std::vector<int> labels{0, 65535, 12, 300};
  write_uapl_labels(dir / "l.uapl", labels);
  CHECK(load_uapl_labels(dir / "l.uapl") == labels);
  CHECK_THROWS_AS(write_uapl_labels(dir / "bad.uapl", std::vector<int>{65536}),
                  std::invalid_argument);
  CHECK_THROWS_AS(write_uapl_labels(dir / "bad.uapl", std::vector<int>{-2}),
                  std::invalid_argument);
}

TEST_CASE("saved perturbations never reload with a larger max-norm") {
  const fs::path dir = temp_dir();
  UniversalPerturbation p;
  p.shape = {2, 2, 1};
  p.epsilon = 0.3;
  // float(0.3) > 0.3 in double, so a naive narrowing would overshoot.
  p.values = {0.3, -0.3, 0.1, 0.25};
  write_perturbation(dir / "p.uapt", p);
  const UniversalPerturbation loaded = load_perturbation(dir / "p.uapt");
  CHECK(loaded.shape == p.shape);
  CHECK(loaded.epsilon <= 0.3);
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(std::abs(loaded.values[k]) <= std::abs(p.values[k]));
    CHECK(loaded.values[k] == doctest::Approx(p.values[k]).epsilon(1e-6));
  }

  // A two-tensor archive is not a perturbation.
  std::vector<float> two(8, 0.0f);
  write_uapt(dir / "two.uapt", {2, 2, 1}, 2, two);
  CHECK_THROWS_AS(load_perturbation(dir / "two.uapt"), ParseError);
}

TEST_CASE("model archives round-trip bitwise after one narrowing pass") {
  const fs::path dir = temp_dir();
  const FeedForwardModel model = init_model({6, {5, 4}, 3}, 21);
  write_model(dir / "m.nnw", model);
  const FeedForwardModel loaded = load_model(dir / "m.nnw");
  REQUIRE(loaded.layers.size() == 3);
  CHECK(loaded.layers[0].activation == Activation::Relu);
  CHECK(loaded.layers[2].activation == Activation::Identity);
  for (std::size_t l = 0; l < 3; ++l) {
    const auto& a = model.layers[l];
    const auto& b = loaded.layers[l];
    REQUIRE(a.weights.rows() == b.weights.rows());
    REQUIRE(a.weights.cols() == b.weights.cols());
    for (Eigen::Index i = 0; i < a.weights.rows(); ++i)
      for (Eigen::Index j = 0; j < a.weights.cols(); ++j)
        CHECK(b.weights(i, j) == static_cast<double>(static_cast<float>(a.weights(i, j))));
  }
  write_model(dir / "m2.nnw", loaded);
  CHECK(read_bytes(dir / "m.nnw") == read_bytes(dir / "m2.nnw"));

  // Corrupt activation tag.
  auto bytes = read_bytes(dir / "m.nnw");
  bytes[8] = 9;  // first layer's tag
  write_bytes(dir / "bad.nnw", bytes);
  try {
    load_model(dir / "bad.nnw");
    FAIL("unknown activation tag should not parse");
  } catch (const ParseError& e) {
    CHECK(e.byte_offset() == 8);
  }
}

TEST_CASE("archive format auto-detection inspects the magic bytes") {
  const fs::path dir = temp_dir();
  write_bytes(dir / "imgs.idx", idx_image_fixture());
  CHECK(load_images_auto(dir / "imgs.idx").count == 2);
  std::vector<float> values(4, 0.5f);
  write_uapt(dir / "imgs.uapt", {2, 2, 1}, 1, values);
  CHECK(load_images_auto(dir / "imgs.uapt").count == 1);
  write_idx_labels(dir / "l.idx", std::vector<int>{1, 2});
  write_uapl_labels(dir / "l.uapl", std::vector<int>{1, 2});
  CHECK(load_labels_auto(dir / "l.idx") == std::vector<int>{1, 2});
  CHECK(load_labels_auto(dir / "l.uapl") == std::vector<int>{1, 2});
}

TEST_CASE("query ledgers round-trip through their line-oriented file form") {
  const fs::path dir = temp_dir();
  QueryLedger ledger(2, 0.3);
  const std::vector<float> base{0.5f, 0.5f};
  ledger.record_query(4, std::vector<double>{0.625, 0.5}, base);
  ledger.record_query(9, std::vector<double>{0.5, 0.25}, base);
  ledger.record_query(4, std::vector<double>{0.5, 0.5}, base);
  write_ledger(dir / "ledger.jsonl", ledger);

  const LedgerFile loaded = load_ledger(dir / "ledger.jsonl");
  CHECK(loaded.budget == 2);
  CHECK(loaded.epsilon == 0.3);
  REQUIRE(loaded.entries.size() == 3);
  CHECK(loaded.entries[0].image_id == 4);
  CHECK(loaded.entries[0].query_index == 0);
  CHECK(loaded.entries[0].distance == 0.125);
  CHECK(loaded.entries[1].image_id == 9);
  CHECK(loaded.entries[1].distance == 0.25);
  CHECK(loaded.entries[2].image_id == 4);
  CHECK(loaded.entries[2].distance == 0.0);

  const AuditSummary audit = audit_ledger(loaded.budget, loaded.epsilon, loaded.entries);
  CHECK(audit.budget_violations == 0);
  CHECK(audit.distance_violations == 0);

  std::ofstream(dir / "empty.jsonl").close();
  CHECK_THROWS_AS(load_ledger(dir / "empty.jsonl"), ParseError);
  std::ofstream bad(dir / "bad.jsonl");
  bad << "{\"budget\": 2, \"epsilon\": 0.3}\nnot json\n";
  bad.close();
  CHECK_THROWS_AS(load_ledger(dir / "bad.jsonl"), ParseError);
}
