#pragma once

#include "rslam/angle_delay.hpp"
#include "rslam/channel.hpp"
#include "rslam/config.hpp"
#include "rslam/core.hpp"
#include "rslam/fft.hpp"
#include "rslam/geometry.hpp"
#include "rslam/ingest.hpp"
#include "rslam/lsm.hpp"
#include "rslam/map.hpp"
#include "rslam/matrix_io.hpp"
#include "rslam/pipeline.hpp"
#include "rslam/pose.hpp"
#include "rslam/preprocess.hpp"
#include "rslam/sim.hpp"
#include "rslam/track.hpp"
