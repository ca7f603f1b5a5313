#pragma once

#include "tsdshap/analysis.hpp"
#include "tsdshap/baselines.hpp"
#include "tsdshap/classifier.hpp"
#include "tsdshap/io.hpp"
#include "tsdshap/pca.hpp"
#include "tsdshap/report.hpp"
#include "tsdshap/selection.hpp"
#include "tsdshap/shapley.hpp"
#include "tsdshap/types.hpp"
