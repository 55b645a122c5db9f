#include "textkg/optim.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace textkg {

void AdamState::init(const std::vector<Tensor>& params) {
  step = 0;
  m.clear();
  v.clear();
  m.reserve(params.size());
  v.reserve(params.size());
  for (const auto& p : params) {
    m.emplace_back(p.size(), 0.0);
    v.emplace_back(p.size(), 0.0);
  }
}

void adam_step(std::vector<Tensor>& params, const std::vector<bool>& apply_decay, AdamState& st,
               double lr) {
  if (st.m.size() != params.size() || st.v.size() != params.size())
    throw std::invalid_argument("adam_step: state sized for " + std::to_string(st.m.size()) +
                                " parameters, got " + std::to_string(params.size()));
  if (apply_decay.size() != params.size())
    throw std::invalid_argument("adam_step: decay flags do not match parameter count");
  if (!(lr >= 0.0)) throw std::invalid_argument("adam_step: negative or NaN learning rate");

  st.step += 1;
  double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
  double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));

  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i].raw();
    const auto& g = params[i].grad();
    if (st.m[i].size() != p.size())
      throw std::invalid_argument("adam_step: parameter " + std::to_string(i) +
                                  " changed size since init");
    double wd = apply_decay[i] ? st.weight_decay : 0.0;
    auto& mi = st.m[i];
    auto& vi = st.v[i];
    for (std::size_t e = 0; e < p.size(); ++e) {
      double ge = g[e];
      if (std::isnan(ge))
        throw std::runtime_error("adam_step: NaN gradient in parameter " + std::to_string(i));
      ge += wd * p[e];
      mi[e] = st.beta1 * mi[e] + (1.0 - st.beta1) * ge;
      vi[e] = st.beta2 * vi[e] + (1.0 - st.beta2) * ge * ge;
      double mhat = mi[e] / bc1;
      double vhat = vi[e] / bc2;
      p[e] -= lr * mhat / (std::sqrt(vhat) + st.epsilon);
    }
  }
}

double lr_at(const LrSchedule& s, std::size_t step) {
  if (s.total_steps == 0) throw std::invalid_argument("lr_at: schedule with zero total steps");
  if (step > s.total_steps)
    throw std::invalid_argument("lr_at: step " + std::to_string(step) + " beyond total " +
                                std::to_string(s.total_steps));
  auto warm = static_cast<std::size_t>(
      std::ceil(s.warmup_fraction * static_cast<double>(s.total_steps)));
  if (warm == 0) warm = 1;
  if (step < warm)
    return s.base_lr * (static_cast<double>(step) / static_cast<double>(warm));
  if (s.total_steps == warm) return (step == warm) ? s.base_lr : 0.0;
  return s.base_lr * (static_cast<double>(s.total_steps - step) /
                      static_cast<double>(s.total_steps - warm));
}

}  // namespace textkg
