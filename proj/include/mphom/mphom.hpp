#pragma once

#include "mphom/dual.hpp"
#include "mphom/optics.hpp"
#include "mphom/trig.hpp"
#include "mphom/coincidence.hpp"
#include "mphom/parallel.hpp"
#include "mphom/quadrature.hpp"
#include "mphom/fisher.hpp"
#include "mphom/sampler.hpp"
#include "mphom/record_io.hpp"
#include "mphom/estimator.hpp"
