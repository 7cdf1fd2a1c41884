#pragma once

#include "binspike/analysis.hpp"
#include "binspike/baselines.hpp"
#include "binspike/codebook.hpp"
#include "binspike/decoder.hpp"
#include "binspike/errors.hpp"
#include "binspike/fusion.hpp"
#include "binspike/io.hpp"
#include "binspike/metrics.hpp"
#include "binspike/model.hpp"
#include "binspike/rng.hpp"
#include "binspike/sweep.hpp"
