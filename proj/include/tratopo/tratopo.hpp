#pragma once

// Umbrella header.

#include "tratopo/dataset.hpp"
#include "tratopo/errors.hpp"
#include "tratopo/experiment.hpp"
#include "tratopo/gcn.hpp"
#include "tratopo/graph.hpp"
#include "tratopo/inference.hpp"
#include "tratopo/labels.hpp"
#include "tratopo/linkpred.hpp"
#include "tratopo/matrix.hpp"
#include "tratopo/paths.hpp"
#include "tratopo/perturb.hpp"
#include "tratopo/rng.hpp"
