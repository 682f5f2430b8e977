#pragma once

namespace smsim {

// Empirical constants measured by the calibration battery (tools/calibrate).
// universal_m bounds the truncated-paraproduct ratios used in the scale
// thresholds s_beta; constant_k covers the interpolation constants in the
// graph-norm and form comparison displays.  Regenerate with
//   smsim-calibrate
// and paste the printed block here.
inline constexpr double universal_m = 0.5;
inline constexpr double constant_k = 2.0;
inline constexpr char calibration_id[] = "uncalibrated";

}  // namespace smsim
