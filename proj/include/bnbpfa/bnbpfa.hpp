#pragma once

#include "bnbpfa/bnb_process.hpp"
#include "bnbpfa/chain.hpp"
#include "bnbpfa/config.hpp"
#include "bnbpfa/corpus_io.hpp"
#include "bnbpfa/count_matrix.hpp"
#include "bnbpfa/csv.hpp"
#include "bnbpfa/error.hpp"
#include "bnbpfa/evaluation.hpp"
#include "bnbpfa/hyper.hpp"
#include "bnbpfa/parallel.hpp"
#include "bnbpfa/pfa_model.hpp"
#include "bnbpfa/r_update.hpp"
#include "bnbpfa/rng.hpp"
#include "bnbpfa/samplers.hpp"
#include "bnbpfa/special_math.hpp"
#include "bnbpfa/state_io.hpp"
