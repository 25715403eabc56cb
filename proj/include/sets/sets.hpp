#pragma once

#include "sets/blackbox.hpp"
#include "sets/cfgen.hpp"
#include "sets/dataset.hpp"
#include "sets/error.hpp"
#include "sets/eval/baseline.hpp"
#include "sets/eval/iforest.hpp"
#include "sets/eval/lof.hpp"
#include "sets/eval/matrix_profile.hpp"
#include "sets/eval/ocsvm.hpp"
#include "sets/eval/plausibility.hpp"
#include "sets/eval/proximity.hpp"
#include "sets/eval/report.hpp"
#include "sets/matrix.hpp"
#include "sets/mining.hpp"
#include "sets/store.hpp"
#include "sets/synthetic.hpp"
