#pragma once

#include "nahmkn/config.hpp"
#include "nahmkn/counterexample.hpp"
#include "nahmkn/errors.hpp"
#include "nahmkn/estimates.hpp"
#include "nahmkn/io.hpp"
#include "nahmkn/kempf_ness.hpp"
#include "nahmkn/lie.hpp"
#include "nahmkn/moduli_map.hpp"
#include "nahmkn/nahm_flow.hpp"
#include "nahmkn/polynomial.hpp"
#include "nahmkn/quadrature.hpp"
#include "nahmkn/rng.hpp"
