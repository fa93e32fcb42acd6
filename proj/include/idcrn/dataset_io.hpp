#pragma once

#include <filesystem>
#include <string>

#include "idcrn/graph.hpp"

namespace idcrn {

// Bundle directory layout:
//   meta          "N <int>", "D <int>", "C <int>" and optionally "dtype f32|f64"
//                 (dtype of features.bin, default f32), one key per line
//   features.bin  row-major N x D little-endian reals, or
//   features.csv  N lines of D comma-separated reals
//   edges.csv     "u,v" per line, one undirected edge each
//   labels.csv    one integer per line (optional)
struct BundleWriteOptions {
  bool binary_features = false;  // write features.bin (f64) instead of features.csv
};

Graph load_bundle(const std::filesystem::path& dir);
void save_bundle(const Graph& g, const std::filesystem::path& dir, const BundleWriteOptions& options = {});

/// Converts a public benchmark dump into the bundle layout. Recognized inputs:
///   <name>_feat.npy, <name>_adj.npy (dense) or <name>_edges.npy / <name>_edge.npy,
///   <name>_label.npy
/// or the text layout
///   <name>.txt (whitespace-separated features), <name>_label.txt, <name>_graph.txt
/// searched in src, src/data, src/graph and src/<name>. Returns the graph written.
Graph convert_public_bundle(const std::filesystem::path& src, const std::string& name,
                            const std::filesystem::path& dst);

namespace npy {

struct Array {
  std::vector<Index> shape;
  std::vector<double> data;  // row-major, converted to double
};

/// Reads a C-order .npy file holding bool, (u)int8/16/32/64 or float32/64.
Array read(const std::filesystem::path& path);

/// Writes a 1-D or 2-D float64 or int64 array (used by tests and fixtures).
void write(const std::filesystem::path& path, const std::vector<Index>& shape, const std::vector<double>& data,
           bool as_int64 = false);

}  // namespace npy

}  // namespace idcrn
