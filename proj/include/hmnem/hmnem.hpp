#pragma once

#include "hmnem/commands.hpp"
#include "hmnem/dataset.hpp"
#include "hmnem/diagnostics.hpp"
#include "hmnem/errors.hpp"
#include "hmnem/graph.hpp"
#include "hmnem/io.hpp"
#include "hmnem/likelihood.hpp"
#include "hmnem/numeric.hpp"
#include "hmnem/rng.hpp"
#include "hmnem/sampler.hpp"
#include "hmnem/simulator.hpp"
#include "hmnem/transition.hpp"
#include "hmnem/version.hpp"
