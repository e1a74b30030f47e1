#pragma once

#include "entropic/analytic.hpp"
#include "entropic/entropy.hpp"
#include "entropic/eval.hpp"
#include "entropic/io.hpp"
#include "entropic/numeric.hpp"
#include "entropic/process.hpp"
#include "entropic/sampler.hpp"
#include "entropic/schedule.hpp"
