#pragma once

#include <memory>
#include <vector>

#include "lsf/poisson.hpp"

namespace lsf {

/// Time-varying safety function h(q, t) with spatial gradient (incl. theta).
class SafetyField {
 public:
  virtual ~SafetyField() = default;

  virtual double value(const Vec3& q, double t) const = 0;
  virtual FieldGradient gradient(const Vec3& q, double t) const = 0;
  virtual double time_derivative(const Vec3& q, double t) const = 0;
  virtual bool contains(const Vec3& q) const = 0;
  /// Largest field value, used to scale penalties.
  virtual double scale() const = 0;
  virtual const GridSpec& domain() const = 0;
};

/// First-order temporal extrapolation of a PSF snapshot.
class ExtrapolatedField final : public SafetyField {
 public:
  explicit ExtrapolatedField(PsfSnapshot snap);

  double value(const Vec3& q, double t) const override;
  FieldGradient gradient(const Vec3& q, double t) const override;
  double time_derivative(const Vec3& q, double t) const override;
  bool contains(const Vec3& q) const override;
  double scale() const override { return scale_; }
  const GridSpec& domain() const override { return snap_.curr->spec; }

  const PsfSnapshot& snapshot() const { return snap_; }

 private:
  PsfSnapshot snap_;
  double scale_;
};

/// Exact fields known at a sequence of times (clairvoyant setting). Values between
/// two stamps are linearly interpolated; outside the range the end fields hold.
class StackSequenceField final : public SafetyField {
 public:
  explicit StackSequenceField(std::vector<std::shared_ptr<const PsfStack>> stacks);

  double value(const Vec3& q, double t) const override;
  FieldGradient gradient(const Vec3& q, double t) const override;
  double time_derivative(const Vec3& q, double t) const override;
  bool contains(const Vec3& q) const override;
  double scale() const override { return scale_; }
  const GridSpec& domain() const override { return stacks_.front()->spec; }

 private:
  struct Bracket {
    std::size_t lo, hi;
    double w;
  };
  Bracket bracket(double t) const;

  std::vector<std::shared_ptr<const PsfStack>> stacks_;
  double scale_ = 0.0;
};

}  // namespace lsf
