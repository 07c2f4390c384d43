#pragma once

#include "abtrack/abduction.hpp"
#include "abtrack/abduction_oracle.hpp"
#include "abtrack/anticipation.hpp"
#include "abtrack/assignment.hpp"
#include "abtrack/domain.hpp"
#include "abtrack/facts.hpp"
#include "abtrack/geometry.hpp"
#include "abtrack/io.hpp"
#include "abtrack/metrics.hpp"
#include "abtrack/motion.hpp"
#include "abtrack/run.hpp"
#include "abtrack/synth.hpp"
#include "abtrack/tracker.hpp"
