#pragma once

#include "mkge/alignment.hpp"
#include "mkge/config.hpp"
#include "mkge/evaluator.hpp"
#include "mkge/kg.hpp"
#include "mkge/knowledge.hpp"
#include "mkge/linalg.hpp"
#include "mkge/model.hpp"
#include "mkge/rng.hpp"
#include "mkge/serialize.hpp"
#include "mkge/trainer.hpp"
#include "mkge/twa.hpp"
#include "mkge/types.hpp"
