#include <missformer/optimizer.hpp>

#include <cmath>
#include <stdexcept>

namespace missformer {

void AdamWConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw std::invalid_argument("learning_rate must be positive and finite");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw std::invalid_argument("beta1 must lie in [0,1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw std::invalid_argument("beta2 must lie in [0,1)");
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("weight_decay must be non-negative");
}

AdamW::AdamW(std::vector<NamedParam> params, AdamWConfig config)
    : params_(std::move(params)), config_(config) {
  config_.validate();
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& p : params_) {
    m_.push_back(DenseMatrix<double>::Zero(p.tensor.rows(), p.tensor.cols()));
    v_.push_back(DenseMatrix<double>::Zero(p.tensor.rows(), p.tensor.cols()));
  }
}

void AdamW::step() {
  ++step_count_;
  const double t = static_cast<double>(step_count_);
  const double bias1 = 1.0 - std::pow(config_.beta1, t);
  const double bias2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = params_[i].tensor;
    if (!p.has_grad())
      throw std::runtime_error("optimizer step without a gradient for '" + params_[i].name + "'");
    const DenseMatrix<double>& g = p.grad();
    if (!g.allFinite())
      throw std::runtime_error("non-finite gradient for '" + params_[i].name + "'");

    m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * g;
    v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * g.cwiseProduct(g);
    const DenseMatrix<double> m_hat = m_[i] / bias1;
    const DenseMatrix<double> v_hat = v_[i] / bias2;

    DenseMatrix<double> updated =
        p.value() * (1.0 - config_.learning_rate * config_.weight_decay) -
        config_.learning_rate *
            (m_hat.array() / (v_hat.array().sqrt() + config_.eps)).matrix();
    p.update_value(std::move(updated));  // re-validates finiteness
  }
}

void AdamW::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

}  // namespace missformer
