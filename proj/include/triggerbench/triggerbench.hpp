#pragma once

#include "triggerbench/clock.hpp"
#include "triggerbench/compute.hpp"
#include "triggerbench/costmodel.hpp"
#include "triggerbench/error.hpp"
#include "triggerbench/event_log.hpp"
#include "triggerbench/harness.hpp"
#include "triggerbench/indicator.hpp"
#include "triggerbench/orchestrator.hpp"
#include "triggerbench/payload.hpp"
#include "triggerbench/simkernel.hpp"
#include "triggerbench/staging.hpp"
#include "triggerbench/workload.hpp"
