#pragma once

// Conventions shared by every module. Quadratures are x=(a+a†)/√2,
// p=-i(a-a†)/√2 with [x,p]=i (ħ=1), ordered (x1,p1,...,xn,pn).

namespace qlmi::constants {

inline constexpr double kVacuumVariance = 0.5;

// EPR variance var((xa-xb)/√2)+var((pa+pb)/√2) of the two-mode vacuum.
// A pair is entangled iff its EPR variance is below this bound. The spin-unit
// criterion var(JyI-JyII)+var(JzI-JzII) < |JxI|+|JxII| maps onto it through
// xA=Jy/√|Jx|, with the oppositely polarized ensemble taking pA=-Jz/√|Jx|.
inline constexpr double kEprBound = 1.0;
// Values within rounding of the bound are not counted as entangled.
inline constexpr double kEprMargin = 1e-12;

inline constexpr double kSymmetryTolerance = 1e-12;
inline constexpr double kPhysicalityTolerance = 1e-9;
inline constexpr double kSymplecticTolerance = 1e-10;
inline constexpr double kSingularVariance = 1e-14;

// Master equation d·Γ/2·(AρA† - A†Aρ + H.c.) gives each jump channel the rate
// dΓ and damps the atomic amplitudes as exp(-dΓ t/2). Matching the pulse maps,
// which decay as exp(-γs T), fixes γs = dΓ/2.
inline constexpr double kSwapRatePerJumpRate = 0.5;

// Validity flags (advisory, never errors).
inline constexpr double kMinLarmorCycles = 50.0;      // Ω·T
inline constexpr double kMinDetuningOverWidth = 10.0;  // |Δ|/γ

// Physical constants (CODATA 2018, SI).
inline constexpr double kHbar = 1.054571817e-34;
inline constexpr double kBoltzmann = 1.380649e-23;
inline constexpr double kPi = 3.14159265358979323846;

}  // namespace qlmi::constants
