#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "denselp/model.h"

namespace denselp {

// 8-bit RGB image ingestion: PPM (P6) or PNG (8-bit gray/RGB/RGBA,
// non-interlaced). Positions are pixel units from the top-left corner.
FeatureField load_image(const std::string& path);

void save_ppm(const std::string& path, int width, int height,
              const std::vector<std::uint8_t>& rgb);

// Binary unary file: magic "UNR1", little-endian u32 n, u32 m, then n*m
// little-endian 32-bit floats, pixel-major. Also used for saved LabelScores.
Mat load_unaries(const std::string& path, int expected_n = -1, int expected_m = -1);
void save_unaries(const std::string& path, const Mat& unaries);

// Fixed 256-entry render palette (the bit-reversal colormap).
void label_palette(int label, std::uint8_t rgb[3]);
void save_label_ppm(const std::string& path, const LabelScores& integral, int width, int height);
void save_label_idx(const std::string& path, const LabelScores& integral);

// Synthetic desk-scale instance: checkerboard-plus-noise unaries over a
// color-gradient image, so runs need no dataset download.
struct Fixture {
    FeatureField image;
    Mat unaries;
};
Fixture make_fixture(int width, int height, int labels, std::uint64_t seed);

// The kernels used by fixture-driven runs when no config overrides them.
std::vector<GaussianKernel> fixture_kernels();

} // namespace denselp
