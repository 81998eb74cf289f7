#pragma once

#include "sensorqc/bench.hpp"
#include "sensorqc/calibration.hpp"
#include "sensorqc/config.hpp"
#include "sensorqc/detection.hpp"
#include "sensorqc/errors.hpp"
#include "sensorqc/humidity.hpp"
#include "sensorqc/iir.hpp"
#include "sensorqc/io.hpp"
#include "sensorqc/kalman.hpp"
#include "sensorqc/metrics.hpp"
#include "sensorqc/model.hpp"
#include "sensorqc/noise.hpp"
#include "sensorqc/pipeline.hpp"
#include "sensorqc/sampling.hpp"
#include "sensorqc/series.hpp"
#include "sensorqc/synthetic.hpp"
