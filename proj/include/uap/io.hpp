#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "uap/dataset.hpp"
#include "uap/ledger.hpp"
#include "uap/oracle.hpp"
#include "uap/tensor.hpp"

namespace uap {

// IDX (classic MNIST layout, big-endian): magic 0x00000803 images /
// 0x00000801 labels. Pixels are unsigned bytes rescaled to [0,1] by /255.
Dataset load_idx_images(const std::filesystem::path& path);
std::vector<int> load_idx_labels(const std::filesystem::path& path);
void write_idx_images(const std::filesystem::path& path, const Dataset& data);
void write_idx_labels(const std::filesystem::path& path, std::span<const int> labels);

// Raw float32 tensor archive: magic "UAPT", version u8=1, u32 LE H, W, C, N,
// then N*H*W*C float32 LE in canonical order. Labels: "UAPL", version u8=1,
// u32 LE N, then N u16 LE labels.
Dataset load_uapt_dataset(const std::filesystem::path& path);
void write_uapt(const std::filesystem::path& path, const TensorShape& shape, int count,
                std::span<const float> values);
std::vector<int> load_uapl_labels(const std::filesystem::path& path);
void write_uapl_labels(const std::filesystem::path& path, std::span<const int> labels);

// Perturbations ride the UAPT format with N=1. Stored float32 values are
// nudged toward zero when the narrowing cast would overshoot the double, so
// a saved perturbation never reloads with a larger l-infinity norm.
void write_perturbation(const std::filesystem::path& path, const UniversalPerturbation& p);
UniversalPerturbation load_perturbation(const std::filesystem::path& path);

// Model weights: magic "NNW1", u32 layer count, per layer u8 activation tag
// (0=identity, 1=relu), u32 rows, u32 cols, rows*cols float32 weights
// row-major, cols float32 biases; little-endian throughout.
FeedForwardModel load_model(const std::filesystem::path& path);
void write_model(const std::filesystem::path& path, const FeedForwardModel& model);

// Format auto-detection by magic, for CLI --dataset/--labels arguments.
Dataset load_images_auto(const std::filesystem::path& path);
std::vector<int> load_labels_auto(const std::filesystem::path& path);

// Ledger persistence: one JSON object per line; first line carries the
// budget and epsilon, each further line one query entry.
void write_ledger(const std::filesystem::path& path, const QueryLedger& ledger);
struct LedgerFile {
  int budget = 0;
  double epsilon = 0.0;
  std::vector<LedgerEntry> entries;
};
LedgerFile load_ledger(const std::filesystem::path& path);

}  // namespace uap
