#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fcp/featuremap.hpp"
#include "fcp/mask.hpp"
#include "fcp/tensor.hpp"

namespace fcp::io {

// Little-endian binary primitives shared by the feature and checkpoint formats.
void write_u32(std::ostream& out, std::uint32_t v);
std::uint32_t read_u32(std::istream& in, const std::string& what);
void write_f32(std::ostream& out, float v);
float read_f32(std::istream& in, const std::string& what);
void write_f64(std::ostream& out, double v);
double read_f64(std::istream& in, const std::string& what);
void write_matrix_f64(std::ostream& out, const Matrix& m);
void read_matrix_f64(std::istream& in, Matrix& m, const std::string& what);

/// Tensor container: "FCPF" | version | ndim | dims | float32 payload in
/// row-major order. Values are narrowed to float32 on write.
void save_tensor(const std::string& path, const Matrix& values,
                 const std::vector<int>& dims);
Matrix load_tensor(const std::string& path, std::vector<int>& dims);

void save_feature_map(const std::string& path, const FeatureMap& fm);
FeatureMap load_feature_map(const std::string& path);

/// Binary (P5) PGM with maxval 255; pixels >= 128 are foreground.
void save_mask_pgm(const std::string& path, const Mask& mask);
Mask load_mask_pgm(const std::string& path);

}  // namespace fcp::io
