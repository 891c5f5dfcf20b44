#pragma once

#define FORESTLEARN_VERSION "0.1.0"

#include "forestlearn/bayes_measure.hpp"
#include "forestlearn/dataframe.hpp"
#include "forestlearn/errors.hpp"
#include "forestlearn/forest.hpp"
#include "forestlearn/forest_learn.hpp"
#include "forestlearn/mi_estimators.hpp"
#include "forestlearn/model.hpp"
#include "forestlearn/parallel.hpp"
#include "forestlearn/random.hpp"
#include "forestlearn/range_coder.hpp"
#include "forestlearn/rational.hpp"
#include "forestlearn/simulator.hpp"
#include "forestlearn/universal_code.hpp"
