#pragma once

#include "stoflow/core.hpp"
#include "stoflow/corpus.hpp"
#include "stoflow/experiment.hpp"
#include "stoflow/forms.hpp"
#include "stoflow/parallel.hpp"
#include "stoflow/quadrature.hpp"
#include "stoflow/rng.hpp"
#include "stoflow/sde.hpp"
#include "stoflow/stochastic.hpp"
#include "stoflow/torus.hpp"
#include "stoflow/verifier.hpp"
