#pragma once

#include "censrank/core.hpp"
#include "censrank/estimators.hpp"
#include "censrank/harness.hpp"
#include "censrank/losses.hpp"
#include "censrank/metrics.hpp"
#include "censrank/model.hpp"
#include "censrank/neural.hpp"
#include "censrank/pipeline.hpp"
#include "censrank/report.hpp"
