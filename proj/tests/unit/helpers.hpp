#pragma once

#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "eccnn/random.hpp"
#include "eccnn/tensor.hpp"

namespace testing_util {

using eccnn::Real;
using eccnn::Shape;
using eccnn::Tensor;

// Seeds used by tests are offset so they never coincide with defaults.
inline constexpr std::uint64_t kTestSeedOffset = 1000000;

inline double tol(double f64, double f32) { return eccnn::kPrecisionBits == 64 ? f64 : f32; }

inline Tensor random_tensor(Shape s, std::uint64_t seed, double lo = -1, double hi = 1,
                            bool requires_grad = false) {
  eccnn::Rng rng(kTestSeedOffset + seed);
  std::vector<Real> v(s.numel());
  for (auto& x : v) x = static_cast<Real>(rng.uniform(lo, hi));
  return Tensor::from_data(s, std::move(v), requires_grad);
}

// Small integers keep every product and partial sum exactly representable.
inline Tensor integer_tensor(Shape s, std::uint64_t seed, int lo = -3, int hi = 3) {
  eccnn::Rng rng(kTestSeedOffset + seed);
  std::vector<Real> v(s.numel());
  for (auto& x : v) x = static_cast<Real>(lo + static_cast<int>(rng.uniform_int(hi - lo + 1)));
  return Tensor::from_data(s, std::move(v));
}

inline std::vector<Real> values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.numel(); ++i)
    m = std::max(m, std::abs(static_cast<double>(a.data()[i]) - b.data()[i]));
  return m;
}

// Fresh scratch directory per test, removed on destruction.
class TempDir {
 public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    path_ = std::filesystem::temp_directory_path() /
            ("eccnn_test_" + std::string(info->test_suite_name()) + "_" + info->name() + "_" +
             std::to_string(eccnn::kPrecisionBits));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing_util
