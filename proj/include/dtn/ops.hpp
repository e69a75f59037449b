#pragma once

#include <cstddef>
#include <vector>

#include "dtn/rng.hpp"
#include "dtn/tensor.hpp"

// Differentiable primitives. Every op validates shapes up front, computes the
// forward value eagerly and registers a closure on the tape that accumulates
// d(loss)/d(input) from d(loss)/d(output).
namespace dtn::ops {

// out = x * weight + bias (bias broadcast across rows).
// x: [B x D_in], weight: [D_in x D_out], bias: [D_out].
Tensor affine(Tape& tape, const Tensor& x, const Tensor& weight, const Tensor& bias);

// Elementwise max(x, slope * x); subgradient at 0 takes the positive branch.
Tensor leaky_relu(Tape& tape, const Tensor& x, double slope);

// Row-wise x / ||x||. Rows with norm <= 1e-12 raise DegenerateInputError.
Tensor l2_normalize(Tape& tape, const Tensor& x);

// Inverted dropout: training=true zeroes entries with probability rate and
// scales survivors by 1/(1-rate); training=false is the identity.
Tensor dropout(Tape& tape, const Tensor& x, double rate, bool training, SeededRng& rng);

// Mean over the batch of -log softmax(temperature * scores)[label].
// Softmax uses max-subtraction. Gradients reach scores and temperature.
Tensor scaled_cross_entropy(Tape& tape, const Tensor& scores, const Tensor& temperature,
                            const std::vector<int>& labels);

Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);

// Sum of all entries -> scalar.
Tensor sum(Tape& tape, const Tensor& x);

// Each row of x repeated `times` consecutive rows: out[i*times + t] = x[i].
Tensor repeat_rows(Tape& tape, const Tensor& x, std::size_t times);

// The whole row block stacked `times` times: out[j*rows + i] = x[i].
Tensor tile_rows(Tape& tape, const Tensor& x, std::size_t times);

// Rows of a followed by rows of b; column counts must match.
Tensor concat_rows(Tape& tape, const Tensor& a, const Tensor& b);

// out[s] = mean of rows i with segment_ids[i] == s. Every segment in
// [0, n_segments) must be non-empty.
Tensor segment_mean(Tape& tape, const Tensor& x, const std::vector<std::size_t>& segment_ids,
                    std::size_t n_segments);

// out = a * b^T. a: [Q x C], b: [N x C] -> [Q x N].
Tensor matmul_nt(Tape& tape, const Tensor& a, const Tensor& b);

}  // namespace dtn::ops
