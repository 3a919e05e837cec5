#pragma once

// Iterative eigensolver toolkit for bound-state coupling constants: the
// Green's-operator power scheme, its 2x2 subspace-accelerated variant,
// lambda(eps) sweeps with interpolation-based inversion, and smoothness-
// based pseudoconvergence detection, all validated against a dense
// brute-force oracle.

#include "waxman/errors.hpp"
#include "waxman/format.hpp"
#include "waxman/green.hpp"
#include "waxman/linalg.hpp"
#include "waxman/model.hpp"
#include "waxman/solver.hpp"
#include "waxman/sweep.hpp"

namespace waxman {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace waxman
