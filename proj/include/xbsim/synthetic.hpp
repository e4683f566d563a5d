#pragma once

// Synthetic workloads: random binary tensors and a teacher-labelled toy BNN.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "xbsim/bnn_core.hpp"
#include "xbsim/pipeline.hpp"
#include "xbsim/rng.hpp"

namespace xbsim::synthetic {

// Each element is +1 with probability p_plus.
bnn::BinaryTensor random_binary(bnn::Shape shape, Rng& rng, double p_plus = 0.5);
std::vector<std::int8_t> random_signs(std::size_t n, Rng& rng, double p_plus = 0.5);

struct ToyModelSpec {
  std::size_t inputs = 128;
  std::size_t hidden = 64;
  std::size_t classes = 10;
};

// dense(inputs -> hidden), folded batch-norm threshold, dense(hidden -> classes).
pipeline::Model make_toy_model(const ToyModelSpec& spec, std::uint64_t seed);

// +/-1 inputs labelled by the model's ideal software forward pass. Labels
// are roughly balanced across classes and every kept sample wins by at
// least min_margin.
pipeline::Dataset make_teacher_dataset(const pipeline::Model& model, std::size_t count,
                                       std::uint64_t seed, double min_margin = 2.0);

}  // namespace xbsim::synthetic
