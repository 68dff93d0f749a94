#pragma once

// Default tolerances. Every operation that uses one of these also accepts an
// override through its options struct.

namespace nahmkn::defaults {

// lie-core
inline constexpr double kAlgebraTol = 1e-12;   // trace / skew-Hermitian checks
inline constexpr double kGroupTol = 1e-10;     // det = 1, unitarity
inline constexpr double kBranchTol = 1e-8;     // distance of an eigenvalue to the cut

// nahm-flow
inline constexpr double kStep = 1.0 / 1024.0;
inline constexpr double kMaxStep = 1.0 / 16.0;
inline constexpr double kBlowupThreshold = 1e6;
inline constexpr double kResolutionLimit = 1.0;  // max step * |P| before a step is rejected
inline constexpr double kResidualTol = 1e-3;     // finite-difference Nahm residual

// moduli-map
inline constexpr double kNewtonTol = 1e-9;
inline constexpr double kNewtonTarget = 1e-13;
inline constexpr int kNewtonMaxIter = 100;
inline constexpr double kFdStep = 1e-5;
inline constexpr double kFdStepInverse = 1e-4;

// kempf-ness
inline constexpr double kKnTol = 1e-8;
inline constexpr int kKnMaxIter = 500;
inline constexpr double kKnFdStep = 1e-3;

}  // namespace nahmkn::defaults
