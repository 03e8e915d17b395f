#pragma once

// Umbrella header: finite models of unstable multi-level subsystems coupled
// to decay continua, their effective non-Hermitian Hamiltonians, and the
// machinery to validate them against exact unitary evolution.

#include "config.hpp"
#include "csv.hpp"
#include "diagnostics.hpp"
#include "effective.hpp"
#include "evolution.hpp"
#include "friedrichs_lee.hpp"
#include "grid.hpp"
#include "linalg.hpp"
#include "model.hpp"
#include "random_models.hpp"
#include "runner.hpp"
#include "self_energy.hpp"
#include "symmetry.hpp"
