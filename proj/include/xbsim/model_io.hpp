#pragma once

// Model manifests, weight blobs and dataset readers.
//
// Model manifest (JSON):
//   {
//     "format": "xbsim-model", "version": 1,
//     "input_size": 128,
//     "layers": [
//       {"name": "fc1", "kind": "dense", "shape": [128, 64], "weights": "fc1.bin",
//        "full_precision": false},
//       {"name": "bn1", "kind": "threshold", "thresholds": [3, -1, ...],
//        "negate": [false, true, ...]},
//       {"name": "bn2", "kind": "threshold",
//        "batchnorm": {"gamma": [...], "beta": [...], "mean": [...], "var": [...], "eps": 1e-5}},
//       {"name": "act", "kind": "sign"},
//       {"name": "c1", "kind": "conv", "shape": [3, 3, 1, 8], "input": [8, 8, 1],
//        "stride": 1, "pad": 1, "weights": "c1.bin"},
//       {"name": "q1", "kind": "dense", "shape": [64, 16], "weights": "q1.bin",
//        "weight_bits": 4, "activation_bits": 4, "requant_shift": 2}
//     ]
//   }
// Weight paths are relative to the manifest. Blobs are raw little-endian
// int8, row-major over "shape": values in {-1,+1} for binary layers,
// two's-complement integers for multi-bit layers. Conv shapes are
// [kernel_h, kernel_w, in_c, out_c], which flattens to the im2col matrix.

#include <filesystem>
#include <string>

#include "xbsim/pipeline.hpp"

namespace xbsim::io {

pipeline::Model load_model(const std::filesystem::path& manifest);

// Writes <dir>/<stem>.json plus one <stem>.<layer>.bin blob per weighted layer.
std::filesystem::path save_model(const pipeline::Model& model, const std::filesystem::path& dir,
                                 const std::string& stem);

// CSV rows "label,f1,f2,...". Blank lines and lines starting with '#' are
// skipped.
pipeline::Dataset load_csv_dataset(const std::filesystem::path& path);
void save_csv_dataset(const pipeline::Dataset& data, const std::filesystem::path& path);

// IDX image file (ubyte, magic 0x00000803 or 0x00000802) with a matching
// IDX label file (ubyte, magic 0x00000801). Pixel bytes become features.
pipeline::Dataset load_idx_dataset(const std::filesystem::path& images,
                                   const std::filesystem::path& labels);

// CSV when labels is empty, IDX otherwise.
pipeline::Dataset load_dataset(const std::filesystem::path& path,
                               const std::filesystem::path& labels = {});

}  // namespace xbsim::io
