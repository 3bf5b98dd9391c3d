#pragma once

#include "bitmap.hpp"
#include "cache.hpp"
#include "cover.hpp"
#include "coverage_graph.hpp"
#include "errors.hpp"
#include "io.hpp"
#include "parallel.hpp"
#include "permutation.hpp"
#include "poisson.hpp"
#include "rng.hpp"
#include "threshold.hpp"
