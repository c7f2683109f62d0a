#pragma once

#include "credal/box.hpp"
#include "credal/error.hpp"
#include "credal/io.hpp"
#include "credal/likelihood.hpp"
#include "credal/metrics.hpp"
#include "credal/numeric.hpp"
#include "credal/spider.hpp"
#include "credal/synth.hpp"
#include "credal/types.hpp"
#include "credal/uncertainty.hpp"
