// SPDX-License-Identifier: Apache-2.0
/**
 * @file hjm2f.hpp
 * @brief Umbrella header for the two-factor forward-price toolkit
 */

#pragma once

#include "hjm2f/efficient_estimator.hpp"
#include "hjm2f/errors.hpp"
#include "hjm2f/market_data.hpp"
#include "hjm2f/mc_harness.hpp"
#include "hjm2f/model_core.hpp"
#include "hjm2f/nonparam_vol.hpp"
#include "hjm2f/numerics.hpp"
#include "hjm2f/parallel.hpp"
#include "hjm2f/qv_estimators.hpp"
#include "hjm2f/simulator.hpp"
#include "hjm2f/stats.hpp"
