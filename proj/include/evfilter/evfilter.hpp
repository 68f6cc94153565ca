#pragma once

// Umbrella header.

#include "evfilter/algorithm.hpp"
#include "evfilter/error.hpp"
#include "evfilter/evaluation.hpp"
#include "evfilter/event.hpp"
#include "evfilter/filters.hpp"
#include "evfilter/noise.hpp"
#include "evfilter/region_grid.hpp"
#include "evfilter/rng.hpp"
#include "evfilter/stream_io.hpp"
#include "evfilter/synth.hpp"
