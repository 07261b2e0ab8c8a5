#pragma once

#include "config.hpp"
#include "expfamily.hpp"
#include "io.hpp"
#include "julia.hpp"
#include "operator.hpp"
#include "oracle.hpp"
#include "parallel.hpp"
#include "pressure.hpp"
#include "quadrature.hpp"
#include "randomdriver.hpp"
#include "rng.hpp"
#include "settings.hpp"
#include "verify.hpp"
