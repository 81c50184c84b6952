#ifndef CVNOISE_CVNOISE_HPP
#define CVNOISE_CVNOISE_HPP

#include "analysis.hpp"
#include "elements.hpp"
#include "errors.hpp"
#include "network.hpp"
#include "scenario.hpp"
#include "sideband.hpp"
#include "verify.hpp"

#endif
