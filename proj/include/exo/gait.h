#ifndef EXO_GAIT_H_
#define EXO_GAIT_H_

#include <Eigen/Core>
#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "exo/lip.h"
#include "exo/spline.h"

namespace exo {

inline constexpr int kNumJoints = 12;
inline constexpr int kLegJoints = 6;

// Joint order per leg: hip yaw, hip roll, hip pitch, knee, ankle pitch,
// ankle roll. q1..q6 is the left leg, q7..q12 the right leg.
using JointVector = Eigen::Matrix<double, kNumJoints, 1>;

enum class GaitPhase { kSingleLeft, kSingleRight, kDouble };

std::string_view PhaseName(GaitPhase phase);
std::optional<GaitPhase> ParsePhase(std::string_view name);

struct GaitSample {
  double t = 0.0;
  JointVector q = JointVector::Zero();
  Eigen::Vector3d com = Eigen::Vector3d::Zero();
  Vec2 cop = Vec2::Zero();
  GaitPhase phase = GaitPhase::kDouble;
};

// Maximal run of rows sharing one phase label: rows [first, last] spanning
// [start, end] seconds. A single-support segment owns its first row, so the
// preceding double-support segment ends at that row's time.
struct PhaseSegment {
  GaitPhase kind;
  std::size_t first;
  std::size_t last;
  double start;
  double end;
};

// Raised for malformed gaits. `row` is the 1-based file line when the gait
// came from a file (the header is line 1), the sample index otherwise, and
// 0 when the problem is not tied to a row.
class GaitError : public std::runtime_error {
 public:
  GaitError(const std::string& what, std::size_t row = 0);
  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

class InfeasibleGaitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Time-sampled nominal gait in the support-foot frame of its (first)
// single-support phase. Immutable once constructed.
class NominalGait {
 public:
  static constexpr std::size_t kMinSamplesPerStep = 100;

  explicit NominalGait(std::vector<GaitSample> samples);

  const std::vector<GaitSample>& samples() const { return samples_; }
  const std::vector<PhaseSegment>& phases() const { return phases_; }
  double duration() const { return samples_.back().t - samples_.front().t; }
  double start_time() const { return samples_.front().t; }
  double sample_period() const { return period_; }
  double com_height() const { return samples_.front().com.z(); }

  int num_single_support() const;
  // The `step_index`-th single-support segment; throws std::out_of_range.
  const PhaseSegment& single_support(int step_index) const;
  // Double-support segment immediately before the first single support.
  std::optional<PhaseSegment> leading_double_support() const;

  // CoM reference channel (spline) and its time derivative.
  LipState StateAt(double t) const;
  Vec2 ComAt(double t) const;
  // CoP reference, linear between samples.
  Vec2 CopAt(double t) const;

  LipState initial_state() const { return StateAt(start_time()); }
  LipState final_state() const { return StateAt(samples_.back().t); }

  // Landing position of the swing foot in this gait's frame, i.e. the
  // offset d for which the step hand-off map
  //   c' = (c_x - d_x, -(c_y - d_y)),  cdot' = (cdot_x, -cdot_y)
  // sends final_state() onto initial_state().
  Vec2 NextFoothold() const;

  // Reflection about the sagittal plane: y negated, legs swapped (roll and
  // yaw negated), left and right support labels exchanged.
  NominalGait Mirrored() const;

  // Swing-leg joint trajectory of a single-support segment, one row per
  // sample, expressed as (times, positions) with positions in R^6.
  void SwingTrajectory(int step_index, std::vector<double>* times,
                       std::vector<Eigen::VectorXd>* positions) const;

 private:
  std::vector<GaitSample> samples_;
  std::vector<PhaseSegment> phases_;
  double period_ = 0.0;
  UniformCubicSpline com_x_;
  UniformCubicSpline com_y_;
};

// Joint indices of the leg that swings during `phase` (single support only).
int SwingLegOffset(GaitPhase phase);

// Step hand-off: re-express a state in the next support-foot frame.
LipState ToNextStepFrame(const LipState& state, const Vec2& foothold);
// Inverse of ToNextStepFrame.
LipState FromNextStepFrame(const LipState& state, const Vec2& foothold);

// Position of the trailing foot during the leading double support: the
// previous stance foot, at (-d_x, d_y) for next foothold d.
Vec2 RearFoot(const Vec2& foothold);

// Stance-foot rectangle for a single-support phase. `foot` describes the
// left-support case; right support uses its mirror image.
SupportPolygon StanceFoot(const SupportPolygon& foot, GaitPhase phase);

// Bounding box of the stance foot and the trailing foot. It over-approximates
// the convex hull of the two rectangles at its two free corners.
SupportPolygon DoubleSupportPolygon(const SupportPolygon& stance,
                                    const Vec2& foothold);

// Checks that the CoP reference stays inside the active polygon at every
// sample, with at least `margin_fraction` of the half extents to spare.
// Returns the index of the first violating sample, or nullopt.
std::optional<std::size_t> FindCopViolation(const NominalGait& gait,
                                            const SupportPolygon& foot,
                                            double margin_fraction);

struct SyntheticGaitOptions {
  double step_length = 0.70;       // m, forward distance between footholds
  double step_duration = 0.90;     // s, double + single support
  double step_width = 0.30;        // m, lateral distance between feet
  double double_support_fraction = 0.20;
  double sample_period = 1e-3;     // s, upper bound; refined to >= 200/step
  double knee_lift = 0.50;         // rad, peak swing knee flexion
  double leg_length = 0.90;        // m, maps step length to hip swing
  double max_froude = 1.0;         // walking limit v^2 / (g c_z)
};

// One periodic step (leading double support, then left single support) in
// the stance-foot frame. The CoM channel is the exact LIP response to a
// piecewise-linear CoP reference; the initial state is the unique one whose
// end-of-step state maps back onto it under ToNextStepFrame. The swing leg
// moves at constant joint-space speed.
NominalGait GenerateSyntheticGait(const SyntheticGaitOptions& options,
                                  const PendulumParams& params,
                                  const SupportPolygon& foot);

NominalGait LoadGait(std::istream& in);
NominalGait LoadGaitFile(const std::string& path);
void SaveGait(const NominalGait& gait, std::ostream& out);
void SaveGaitFile(const NominalGait& gait, const std::string& path);

}  // namespace exo

#endif  // EXO_GAIT_H_
