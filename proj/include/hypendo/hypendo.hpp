#pragma once

// Everything except the command-line layer.
#include "hypendo/error.hpp"
#include "hypendo/int_matrix.hpp"
#include "hypendo/measures.hpp"
#include "hypendo/models.hpp"
#include "hypendo/orbits.hpp"
#include "hypendo/point.hpp"
#include "hypendo/potential.hpp"
#include "hypendo/stable_structure.hpp"
#include "hypendo/thermo.hpp"
