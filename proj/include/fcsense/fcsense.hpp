// Copyright 2026 The fcsense Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef FCSENSE__FCSENSE_HPP_
#define FCSENSE__FCSENSE_HPP_

#include "fcsense/calibration.hpp"
#include "fcsense/commands.hpp"
#include "fcsense/config.hpp"
#include "fcsense/error.hpp"
#include "fcsense/estimation.hpp"
#include "fcsense/grasp_sim.hpp"
#include "fcsense/persistence.hpp"
#include "fcsense/random.hpp"
#include "fcsense/replay.hpp"
#include "fcsense/sensor_model.hpp"
#include "fcsense/telemetry.hpp"

#endif  // FCSENSE__FCSENSE_HPP_
