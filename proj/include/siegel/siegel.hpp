#pragma once

#include "siegel/arithmetic.hpp"
#include "siegel/error.hpp"
#include "siegel/fit.hpp"
#include "siegel/herman.hpp"
#include "siegel/io.hpp"
#include "siegel/linearizer.hpp"
#include "siegel/literal.hpp"
#include "siegel/search.hpp"
