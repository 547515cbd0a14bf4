// Copyright 2026 The SINet Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "sinet/autograd.hpp"
#include "sinet/tensor.hpp"

namespace sinet {

enum class Mode { Train, Eval };

/// Convolution operands. weight is (M, C/g, k, k) with odd k; bias is (M).
struct ConvParams {
  Var weight;
  std::optional<Var> bias;
  int stride = 1;
  int padding = 0;
  int groups = 1;
};

/// Output extent of a convolution along one spatial axis.
std::size_t conv_out_extent(std::size_t in, int kernel, int stride,
                            int padding);

/// Grouped 2-D convolution, NCHW. Output group j reads only input group j.
/// Implemented as per-group im2col + GEMM; the GEMM multiply-accumulates
/// (padding taps included) are reported to the active MaddCounter.
Var conv2d(const Var& input, const ConvParams& p);

/// min(max(x, 0), 6). Gradient is 1 strictly inside (0, 6), else 0.
Var relu6(const Var& x);
Var sigmoid(const Var& x);
/// Row-wise softmax of an N x K matrix.
Var softmax(const Var& x);

struct BatchNormState {
  Tensor running_mean;
  Tensor running_var;
  double momentum = 0.1;
  double eps = 1e-5;

  BatchNormState() = default;
  explicit BatchNormState(std::size_t channels)
      : running_mean(Shape{channels}, 0.0), running_var(Shape{channels}, 1.0) {}
};

/// Per-channel batch normalization for NCHW input. Train mode normalizes
/// with batch statistics (biased variance) and updates the running stats
/// (unbiased variance); eval mode uses the running stats.
Var batchnorm2d(const Var& x, const Var& gamma, const Var& beta,
                BatchNormState& state, Mode mode);

/// N x C x H x W -> N x C, mean over spatial positions.
Var global_avg_pool(const Var& x);

/// x (N x D) * w (D x E) + b (E).
Var fully_connected(const Var& x, const Var& w,
                    const std::optional<Var>& b = std::nullopt);

/// Concatenate along axis 1 (channels); all other extents must agree.
Var concat_channels(std::span<const Var> xs);
Var concat_channels(std::initializer_list<Var> xs);
/// Split axis 1 into `groups` equal contiguous slices.
std::vector<Var> split_channels(const Var& x, std::size_t groups);

Var add(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
/// Scales every element of sample n of x by alpha[n]; alpha is N x 1.
Var scale_rows(const Var& x, const Var& alpha);

Var sum(const Var& x);
/// sum(x * weights) for a constant weights tensor of the same shape.
Var weighted_sum(const Var& x, const Tensor& weights);

/// Mean softmax cross-entropy of N x K logits against integer labels.
Var softmax_cross_entropy(const Var& logits, std::span<const int> labels);

/// Thread-confined tally of forward multiply-accumulates in conv2d and
/// fully_connected.
class MaddCounter {
 public:
  std::uint64_t madds() const { return madds_; }
  void reset() { madds_ = 0; }
  void add(std::uint64_t n) { madds_ += n; }

 private:
  std::uint64_t madds_ = 0;
};

/// Installs a counter on the calling thread for the scope's lifetime.
class MaddCountScope {
 public:
  explicit MaddCountScope(MaddCounter& counter);
  ~MaddCountScope();
  MaddCountScope(const MaddCountScope&) = delete;
  MaddCountScope& operator=(const MaddCountScope&) = delete;

 private:
  MaddCounter* previous_;
};

}  // namespace sinet
