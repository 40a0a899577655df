#pragma once

#include <stdexcept>

namespace y2aec::trainer {

/// Plateau learning-rate schedule: after every `patience` consecutive
/// epochs without validation improvement the rate is multiplied by
/// `factor`; when a decay takes it below `floor`, training stops.
class LrSchedule {
 public:
  LrSchedule(double lr0, double factor, int patience, double floor)
      : lr_(lr0), factor_(factor), patience_(patience), floor_(floor) {
    if (lr0 <= 0 || factor <= 0 || factor >= 1 || patience < 1 || floor <= 0)
      throw std::invalid_argument("LrSchedule: bad constants");
  }

  double lr() const { return lr_; }

  /// Registers the epoch that just finished. Returns false when the rate
  /// has dropped below the floor and training must stop.
  bool on_epoch(bool improved) {
    if (improved) {
      since_improve_ = 0;
      return true;
    }
    ++since_improve_;
    if (since_improve_ % patience_ == 0) {
      lr_ *= factor_;
      if (lr_ < floor_) return false;
    }
    return true;
  }

 private:
  double lr_;
  double factor_;
  int patience_;
  double floor_;
  int since_improve_ = 0;
};

}  // namespace y2aec::trainer
