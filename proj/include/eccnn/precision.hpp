#pragma once

// Floating-point mode is a build-wide setting. The library is compiled twice,
// once per mode, and each build lives in its own inline namespace so both can
// be linked into the same executable.

#ifndef ECCNN_USE_DOUBLE
#define ECCNN_USE_DOUBLE 0
#endif

#if ECCNN_USE_DOUBLE
#define ECCNN_PRECISION_NS f64
#else
#define ECCNN_PRECISION_NS f32
#endif

#define ECCNN_BEGIN_NAMESPACE \
  namespace eccnn {           \
  inline namespace ECCNN_PRECISION_NS {
#define ECCNN_END_NAMESPACE \
  }                         \
  }

ECCNN_BEGIN_NAMESPACE

#if ECCNN_USE_DOUBLE
using Real = double;
#else
using Real = float;
#endif

inline constexpr int kPrecisionBits = static_cast<int>(sizeof(Real) * 8);

ECCNN_END_NAMESPACE
