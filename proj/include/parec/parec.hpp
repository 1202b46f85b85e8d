#pragma once

// Umbrella header for the photoacoustic compressed-sensing reconstruction
// library: forward model, sparsifying basis, SL0/BP/IR solvers, metrics and
// the experiment runner.

#include "parec/errors.hpp"
#include "parec/experiment.hpp"
#include "parec/forward_model.hpp"
#include "parec/grid.hpp"
#include "parec/io.hpp"
#include "parec/metrics.hpp"
#include "parec/operators.hpp"
#include "parec/phantom.hpp"
#include "parec/projector.hpp"
#include "parec/sensors.hpp"
#include "parec/solvers.hpp"
#include "parec/wavelet.hpp"
