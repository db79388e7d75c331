#pragma once

#include "kfr/core.hpp"
#include "kfr/rules.hpp"
#include "kfr/lexicon.hpp"
#include "kfr/arithmetic.hpp"
#include "kfr/symbolic.hpp"
#include "kfr/logic.hpp"
#include "kfr/dataset.hpp"
#include "kfr/stats.hpp"
#include "kfr/transfer.hpp"
#include "kfr/interp.hpp"
