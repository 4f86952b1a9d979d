#pragma once

// Umbrella header: signal recovery under random cyclic shifts and Gaussian
// noise from moment inversion, expectation-maximization and non-convex least
// squares, with the associated information-theoretic bounds, spiked-model
// predictions and the experiment harness.

#include "mra/bounds.hpp"
#include "mra/em.hpp"
#include "mra/experiments.hpp"
#include "mra/fft.hpp"
#include "mra/io.hpp"
#include "mra/ls.hpp"
#include "mra/model.hpp"
#include "mra/moments.hpp"
#include "mra/parallel.hpp"
#include "mra/rng.hpp"
#include "mra/signal.hpp"
#include "mra/simplex.hpp"
#include "mra/spectral.hpp"
#include "mra/spiked.hpp"
