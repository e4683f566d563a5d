#include "xbsim/synthetic.hpp"

#include <algorithm>

namespace xbsim::synthetic {

std::vector<std::int8_t> random_signs(std::size_t n, Rng& rng, double p_plus) {
  std::vector<std::int8_t> v(n);
  for (auto& x : v) x = rng.uniform() < p_plus ? 1 : -1;
  return v;
}

bnn::BinaryTensor random_binary(bnn::Shape shape, Rng& rng, double p_plus) {
  const auto count = bnn::shape_elements(shape);
  return bnn::BinaryTensor(std::move(shape), random_signs(count, rng, p_plus));
}

pipeline::Model make_toy_model(const ToyModelSpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  pipeline::Model model;
  model.input_size = spec.inputs;

  pipeline::LayerSpec fc1;
  fc1.name = "fc1";
  fc1.kind = pipeline::LayerKind::dense;
  fc1.weights = random_binary({spec.inputs, spec.hidden}, rng);
  model.layers.push_back(std::move(fc1));

  std::vector<double> gamma(spec.hidden);
  std::vector<double> beta(spec.hidden);
  std::vector<double> mean(spec.hidden);
  std::vector<double> var(spec.hidden);
  for (std::size_t i = 0; i < spec.hidden; ++i) {
    gamma[i] = rng.uniform(0.5, 1.5) * (rng.uniform() < 0.8 ? 1.0 : -1.0);
    beta[i] = rng.uniform(-0.3, 0.3);
    mean[i] = rng.uniform(-4.0, 4.0);
    var[i] = rng.uniform(4.0, 40.0);
  }
  pipeline::LayerSpec bn;
  bn.name = "bn1";
  bn.kind = pipeline::LayerKind::threshold;
  bn.thresholds = pipeline::fold_batchnorm(gamma, beta, mean, var, 1e-5);
  model.layers.push_back(std::move(bn));

  pipeline::LayerSpec fc2;
  fc2.name = "fc2";
  fc2.kind = pipeline::LayerKind::dense;
  fc2.weights = random_binary({spec.hidden, spec.classes}, rng);
  model.layers.push_back(std::move(fc2));
  return model;
}

pipeline::Dataset make_teacher_dataset(const pipeline::Model& model, std::size_t count,
                                       std::uint64_t seed, double min_margin) {
  pipeline::EngineConfig ideal;
  ideal.nonidealities = false;
  ideal.adc.mode = pipeline::AdcBitsMode::full;
  const pipeline::Network teacher(model, ideal);
  const std::size_t classes = model.layers.back().output_size();

  Rng rng(seed);
  pipeline::Dataset data;
  data.feature_size = model.input_size;
  const std::size_t per_class = (count + classes - 1) / std::max<std::size_t>(classes, 1);
  std::vector<std::size_t> seen(classes, 0);
  const std::size_t budget = 2000 * count + 1000;
  for (std::size_t attempt = 0; attempt < budget && data.size() < count; ++attempt) {
    const auto signs = random_signs(model.input_size, rng);
    std::vector<double> x(signs.begin(), signs.end());
    const auto out = teacher.forward(x).output;
    const int label = pipeline::argmax(out);
    std::vector<double> sorted = out;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    const double margin = sorted.size() > 1 ? sorted[0] - sorted[1] : min_margin;
    // Past half of the budget, accept any class so that skewed teachers terminate.
    const bool relaxed = attempt > budget / 2;
    if (margin < min_margin) continue;
    if (!relaxed && seen[static_cast<std::size_t>(label)] >= per_class) continue;
    ++seen[static_cast<std::size_t>(label)];
    data.features.push_back(std::move(x));
    data.labels.push_back(label);
  }
  return data;
}

}  // namespace xbsim::synthetic
