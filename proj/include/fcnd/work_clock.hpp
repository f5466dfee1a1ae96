#pragma once

#include <cstdint>
#include <limits>

namespace fcnd {

/// Deterministic time base.
///
/// Every budget, time limit and trajectory time stamp in the library is
/// expressed in work-seconds: a fixed number of counted solver operations
/// (simplex pivots weighted by basis size, shortest-path searches, ...).
/// Runs with identical inputs and seeds therefore make identical decisions
/// and write identical files, independent of machine load or thread
/// scheduling.
class WorkClock {
 public:
  /// Work units per work-second. One unit is roughly one touched matrix
  /// entry in a pivot. A current desktop core processes about 1.4e8 units
  /// per second, so one work-second takes roughly 0.1 s of real time.
  static constexpr double kUnitsPerSecond = 1.5e7;

  WorkClock() = default;
  explicit WorkClock(double start_seconds) : units_(start_seconds * kUnitsPerSecond) {}

  void charge(double units) { units_ += units; }
  double units() const { return units_; }
  double seconds() const { return units_ / kUnitsPerSecond; }

  /// Advances to `seconds` if the clock is behind it. Used when parallel
  /// branches join: the joined clock reads the slowest branch.
  void advance_to(double seconds) {
    if (seconds * kUnitsPerSecond > units_) units_ = seconds * kUnitsPerSecond;
  }

  static double units_for(double seconds) {
    return seconds >= std::numeric_limits<double>::max() / kUnitsPerSecond
               ? std::numeric_limits<double>::infinity()
               : seconds * kUnitsPerSecond;
  }

 private:
  double units_ = 0.0;
};

/// Absolute deadline on a WorkClock.
struct Deadline {
  double at_seconds = std::numeric_limits<double>::infinity();

  static Deadline after(const WorkClock& clock, double seconds) {
    return Deadline{clock.seconds() + seconds};
  }
  bool expired(const WorkClock& clock) const { return clock.seconds() >= at_seconds; }
  double remaining(const WorkClock& clock) const {
    const double r = at_seconds - clock.seconds();
    return r > 0.0 ? r : 0.0;
  }
  Deadline min(const Deadline& other) const {
    return Deadline{at_seconds < other.at_seconds ? at_seconds : other.at_seconds};
  }
};

}  // namespace fcnd
