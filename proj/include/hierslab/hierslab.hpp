#pragma once

#include "hierslab/error.hpp"
#include "hierslab/csv.hpp"
#include "hierslab/math.hpp"
#include "hierslab/rng.hpp"
#include "hierslab/data_model.hpp"
#include "hierslab/components.hpp"
#include "hierslab/prior.hpp"
#include "hierslab/chain_state.hpp"
#include "hierslab/conditionals.hpp"
#include "hierslab/gibbs.hpp"
#include "hierslab/summary.hpp"
#include "hierslab/posterior_io.hpp"
#include "hierslab/parallel.hpp"
#include "hierslab/evaluation.hpp"
#include "hierslab/simulation.hpp"
