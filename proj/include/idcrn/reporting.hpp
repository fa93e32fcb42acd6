#pragma once

#include <filesystem>
#include <vector>

#include "idcrn/types.hpp"

namespace idcrn {

inline constexpr Index kHeatmapMaxPixels = 2048;

struct HeatmapSpec {
  Matrix similarity;         // N x N, rows and columns already permuted by order
  std::vector<Index> order;  // order[r] = node shown at row r
};

/// Nodes sorted by label (stable, so ties keep node order).
std::vector<Index> label_order(const Labels& labels);

/// Cosine self-similarity of z reordered by label_order(labels).
HeatmapSpec similarity_matrix(const Matrix& z, const Labels& labels);

/// Block-mean reduction of an N x N matrix to at most max_pixels per side.
Matrix downsample(const Matrix& m, Index max_pixels = kHeatmapMaxPixels);

/// Writes out_path as a PNG (-1 blue, 0 white, +1 red) and the raw permuted
/// matrix next to it with a .csv extension. Returns the matrix and order that were drawn.
HeatmapSpec similarity_heatmap(const Matrix& z, const Labels& labels, const std::filesystem::path& out_path);

/// Header "z0,...,z{d-1},label" followed by one row per node.
void dump_embeddings(const Matrix& z, const Labels& labels, const std::filesystem::path& path);

struct EmbeddingTable {
  Matrix z;
  Labels labels;
};

EmbeddingTable read_embeddings(const std::filesystem::path& path);

/// Comma-separated matrix, shortest round-trip formatting.
void write_matrix_csv(const Matrix& m, const std::filesystem::path& path);
Matrix read_matrix_csv(const std::filesystem::path& path);

}  // namespace idcrn
