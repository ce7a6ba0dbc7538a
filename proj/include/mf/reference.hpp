#pragma once

// Serial, straightforward versions of the parallel kernels in tensorops.
// Kept for tests and the benchmark; not used on any production path.

#include "mf/tensorops.hpp"

namespace mf::reference {

// Direct per-output-pixel sum over every (input channel, tap).
ImageTensor conv2d(const ImageTensor& input, const ConvKernel& k);

// Non-separable evaluation: each output pixel sums its full 2x2 (bilinear) or
// 4x4 (bicubic) neighbourhood with product weights. Post-filters included.
ImageTensor resample(const ImageTensor& x, ResampleMethod method, std::size_t out_height,
                     std::size_t out_width);

ImageTensor mean_pool(const ImageTensor& x, std::size_t factor);

}  // namespace mf::reference
