#include "lsf/field.hpp"

#include <algorithm>

namespace lsf {

ExtrapolatedField::ExtrapolatedField(PsfSnapshot snap) : snap_(std::move(snap)) {
  snap_.validate();
  scale_ = snap_.curr->max_value();
  if (snap_.prev) scale_ = std::max(scale_, snap_.prev->max_value());
}

double ExtrapolatedField::value(const Vec3& q, double t) const { return extrapolate_h(snap_, q, t); }

FieldGradient ExtrapolatedField::gradient(const Vec3& q, double t) const {
  FieldGradient g0 = gradient_xy(*snap_.curr, q);
  if (!snap_.prev || t == snap_.t0()) return g0;
  const FieldGradient gm1 = gradient_xy(*snap_.prev, q);
  const double s = (t - snap_.t0()) / (snap_.t0() - snap_.prev->timestamp);
  g0.d += s * (g0.d - gm1.d);
  g0.one_sided = g0.one_sided || gm1.one_sided;
  return g0;
}

double ExtrapolatedField::time_derivative(const Vec3& q, double) const { return h_time_derivative(snap_, q); }

bool ExtrapolatedField::contains(const Vec3& q) const { return in_domain(snap_.curr->spec, q.x(), q.y()); }

StackSequenceField::StackSequenceField(std::vector<std::shared_ptr<const PsfStack>> stacks)
    : stacks_(std::move(stacks)) {
  if (stacks_.empty()) throw ArgumentError("stack sequence is empty");
  for (std::size_t k = 0; k < stacks_.size(); ++k) {
    if (!stacks_[k]) throw ArgumentError("stack sequence has a null entry");
    if (!(stacks_[k]->spec == stacks_.front()->spec)) throw ArgumentError("stack sequence mixes grid geometries");
    if (k > 0 && !(stacks_[k]->timestamp > stacks_[k - 1]->timestamp))
      throw ArgumentError("stack sequence times must increase");
    scale_ = std::max(scale_, stacks_[k]->max_value());
  }
}

StackSequenceField::Bracket StackSequenceField::bracket(double t) const {
  if (t <= stacks_.front()->timestamp) return {0, 0, 0.0};
  if (t >= stacks_.back()->timestamp) return {stacks_.size() - 1, stacks_.size() - 1, 0.0};
  auto it = std::upper_bound(stacks_.begin(), stacks_.end(), t,
                             [](double v, const auto& s) { return v < s->timestamp; });
  const std::size_t hi = static_cast<std::size_t>(it - stacks_.begin());
  const std::size_t lo = hi - 1;
  const double w = (t - stacks_[lo]->timestamp) / (stacks_[hi]->timestamp - stacks_[lo]->timestamp);
  if (w == 0.0) return {lo, lo, 0.0};
  return {lo, hi, w};
}

double StackSequenceField::value(const Vec3& q, double t) const {
  const Bracket b = bracket(t);
  const double v0 = sample_trilinear(*stacks_[b.lo], q);
  if (b.lo == b.hi) return v0;
  return v0 + b.w * (sample_trilinear(*stacks_[b.hi], q) - v0);
}

FieldGradient StackSequenceField::gradient(const Vec3& q, double t) const {
  const Bracket b = bracket(t);
  FieldGradient g = gradient_xy(*stacks_[b.lo], q);
  if (b.lo == b.hi) return g;
  const FieldGradient g1 = gradient_xy(*stacks_[b.hi], q);
  g.d += b.w * (g1.d - g.d);
  g.one_sided = g.one_sided || g1.one_sided;
  return g;
}

double StackSequenceField::time_derivative(const Vec3& q, double t) const {
  const Bracket b = bracket(t);
  std::size_t lo = b.lo, hi = b.hi;
  if (lo == hi) {
    if (stacks_.size() < 2) return 0.0;
    if (hi + 1 < stacks_.size()) ++hi;
    else --lo;
  }
  return (sample_trilinear(*stacks_[hi], q) - sample_trilinear(*stacks_[lo], q)) /
         (stacks_[hi]->timestamp - stacks_[lo]->timestamp);
}

bool StackSequenceField::contains(const Vec3& q) const {
  return in_domain(stacks_.front()->spec, q.x(), q.y());
}

}  // namespace lsf
