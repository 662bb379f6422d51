#pragma once

#include "puma/analysis.hpp"
#include "puma/channel.hpp"
#include "puma/config.hpp"
#include "puma/coupling.hpp"
#include "puma/error.hpp"
#include "puma/experiment.hpp"
#include "puma/modulation.hpp"
#include "puma/montecarlo.hpp"
#include "puma/quadrature.hpp"
#include "puma/random.hpp"
#include "puma/receiver.hpp"
#include "puma/specfun.hpp"
