#pragma once

// AdamW: Adam moment estimates with bias correction plus decoupled
// (multiplicative) weight decay.

#include <missformer/model.hpp>
#include <missformer/tensor.hpp>

#include <vector>

namespace missformer {

struct AdamWConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;

  void validate() const;  // throws std::invalid_argument
};

class AdamW {
 public:
  AdamW(std::vector<NamedParam> params, AdamWConfig config);

  // One update from the gradients currently held by the parameters.
  // Missing or non-finite gradients abort with a diagnostic naming the
  // parameter; parameters are re-checked finite by the update itself.
  void step();
  void zero_grad();
  long step_count() const { return step_count_; }

 private:
  std::vector<NamedParam> params_;  // aliases the model's tensors
  AdamWConfig config_;
  std::vector<DenseMatrix<double>> m_;  // first moments
  std::vector<DenseMatrix<double>> v_;  // second moments
  long step_count_ = 0;
};

}  // namespace missformer
