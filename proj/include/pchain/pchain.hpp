#pragma once

#include "pchain/constants.hpp"
#include "pchain/couplings.hpp"
#include "pchain/errors.hpp"
#include "pchain/fidelity_model.hpp"
#include "pchain/microscopic_oracle.hpp"
#include "pchain/oracle_suite.hpp"
#include "pchain/quadrature.hpp"
#include "pchain/spin_chain.hpp"
#include "pchain/sweep.hpp"
#include "pchain/table1.hpp"
#include "pchain/trap_model.hpp"
