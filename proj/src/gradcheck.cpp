#include "resmatch/gradcheck.hpp"

#include <cmath>

namespace resmatch {

const GradCheckEntry* GradCheckReport::worst() const {
  const GradCheckEntry* w = nullptr;
  for (const auto& e : entries)
    if (!w || e.max_rel_err > w->max_rel_err) w = &e;
  return w;
}

namespace {

double eval_loss(const std::function<Tape::Id(Tape&)>& build_loss) {
  Tape t(false);
  Tape::Id loss = build_loss(t);
  return t.val(loss).data[0];
}

}  // namespace

GradCheckReport grad_check(const std::function<Tape::Id(Tape&)>& build_loss,
                           const std::vector<std::pair<std::string, Param*>>& params, double tolerance,
                           double fd_step, const std::function<void()>& after_backward) {
  GradCheckReport report;
  report.tolerance = tolerance;

  for (auto& [name, p] : params) p->zero_grad();
  {
    Tape t(true);
    Tape::Id loss = build_loss(t);
    if (!std::isfinite(t.val(loss).data[0])) throw NumericError("grad_check: non-finite loss at base point");
    t.backward(loss);
  }
  if (after_backward) after_backward();

  std::vector<Tensor2> analytic;
  analytic.reserve(params.size());
  for (auto& [name, p] : params) analytic.push_back(p->grad);

  report.pass = true;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Param* p = params[pi].second;
    GradCheckEntry entry;
    entry.name = params[pi].first;
    for (std::size_t e = 0; e < p->value.data.size(); ++e) {
      const double saved = p->value.data[e];
      p->value.data[e] = saved + fd_step;
      const double lp = eval_loss(build_loss);
      p->value.data[e] = saved - fd_step;
      const double lm = eval_loss(build_loss);
      p->value.data[e] = saved;
      if (!std::isfinite(lp) || !std::isfinite(lm))
        throw NumericError("grad_check: non-finite loss while probing " + entry.name);
      const double fd = (lp - lm) / (2.0 * fd_step);
      const double an = analytic[pi].data[e];
      const double denom = std::max({1.0, std::fabs(an), std::fabs(fd)});
      entry.max_rel_err = std::max(entry.max_rel_err, std::fabs(an - fd) / denom);
    }
    entry.pass = entry.max_rel_err <= tolerance;
    report.pass = report.pass && entry.pass;
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace resmatch
