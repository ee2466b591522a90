#pragma once

#include "dla/baselines.hpp"
#include "dla/detections_io.hpp"
#include "dla/geometry.hpp"
#include "dla/metrics.hpp"
#include "dla/page_model.hpp"
#include "dla/pipeline.hpp"
#include "dla/proposals.hpp"
#include "dla/report.hpp"
