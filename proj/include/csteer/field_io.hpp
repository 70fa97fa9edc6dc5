#pragma once

#include <iosfwd>
#include <string>

#include "csteer/grid.hpp"

namespace csteer {

// Text layout:
//   # csteer-field v1
//   # dims=2 extents=32,32 spacing=1,1 channels=1 p=2 q=0 blade_order=bitmask
//   i0,i1,channel,b0,b1,b2,b3
//   0,0,0,<2^n coefficients>
// One row per (point, channel), points in linear-index order. Blade column bj
// holds the coefficient of the blade whose bitmask is j (b3 = e12).
//
// Binary layout (little-endian): "CSTF", u32 version, u32 dims, u32 extents[dims],
// f64 spacing[dims], u32 channels, u32 p, u32 q, then f64 coefficients in
// (point, channel, blade) order.

void write_field_csv(std::ostream& os, const MultivectorField<double>& field);
MultivectorField<double> read_field_csv(std::istream& is);

void write_field_binary(std::ostream& os, const MultivectorField<double>& field);
MultivectorField<double> read_field_binary(std::istream& is);

/// Picks the format from the extension: ".csv" is text, anything else binary.
void save_field(const std::string& path, const MultivectorField<double>& field);
MultivectorField<double> load_field(const std::string& path);

}  // namespace csteer
