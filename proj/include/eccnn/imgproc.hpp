#pragma once

#include <vector>

namespace eccnn {

// Normalized 1-D Gaussian taps, radius ceil(3 sigma).
std::vector<double> gaussian_kernel(double sigma);

// Separable Gaussian blur of an h x w row-major plane, replicated border.
std::vector<double> gaussian_blur(const std::vector<double>& in, int h, int w, double sigma);

}  // namespace eccnn
