#pragma once

#include "eigenspline/bernoulli.hpp"
#include "eigenspline/bounds.hpp"
#include "eigenspline/cache_io.hpp"
#include "eigenspline/data_io.hpp"
#include "eigenspline/eigensys.hpp"
#include "eigenspline/error.hpp"
#include "eigenspline/fit_io.hpp"
#include "eigenspline/gml.hpp"
#include "eigenspline/kernel.hpp"
#include "eigenspline/rng.hpp"
#include "eigenspline/simbench.hpp"
#include "eigenspline/simd.hpp"
#include "eigenspline/solvers.hpp"
#include "eigenspline/version.hpp"
