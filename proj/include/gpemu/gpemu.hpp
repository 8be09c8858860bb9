#pragma once

// Gaussian-process emulator toolkit: power-exponential kriging models fitted
// by profile-likelihood maximization with a genetic algorithm, pluggable
// dense linear-algebra backends, maximin Latin hypercube designs, and a
// benchmark harness with timing/SSPE reporting.

#include "gpemu/backend.hpp"
#include "gpemu/bench.hpp"
#include "gpemu/core.hpp"
#include "gpemu/correlation.hpp"
#include "gpemu/errors.hpp"
#include "gpemu/experiment.hpp"
#include "gpemu/likelihood.hpp"
#include "gpemu/matrix.hpp"
#include "gpemu/optimizer.hpp"
#include "gpemu/predictor.hpp"
