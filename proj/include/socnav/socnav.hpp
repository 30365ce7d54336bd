#pragma once

#include "socnav/errors.hpp"
#include "socnav/geometry.hpp"
#include "socnav/ingest.hpp"
#include "socnav/json_io.hpp"
#include "socnav/metrics.hpp"
#include "socnav/model.hpp"
#include "socnav/parallel.hpp"
#include "socnav/report.hpp"
#include "socnav/scenarios.hpp"
#include "socnav/simulator.hpp"
