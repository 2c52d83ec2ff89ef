#pragma once

#include "ppdiv/chernoff.hpp"
#include "ppdiv/disintegration.hpp"
#include "ppdiv/divergence.hpp"
#include "ppdiv/error.hpp"
#include "ppdiv/expression.hpp"
#include "ppdiv/extended_value.hpp"
#include "ppdiv/likelihood.hpp"
#include "ppdiv/measure.hpp"
#include "ppdiv/pair_integral.hpp"
#include "ppdiv/parallel.hpp"
#include "ppdiv/poisson_kernel.hpp"
#include "ppdiv/quadrature.hpp"
#include "ppdiv/rng.hpp"
#include "ppdiv/sampler.hpp"
