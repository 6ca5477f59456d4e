#pragma once

#include "porelab/harness/config.hpp"
#include "porelab/harness/probe_runs.hpp"
#include "porelab/harness/rates.hpp"
#include "porelab/harness/sweep.hpp"
#include "porelab/io/checkpoint.hpp"
