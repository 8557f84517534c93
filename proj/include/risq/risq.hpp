// SPDX-License-Identifier: Apache-2.0
//
// risq: learned joint active/passive beamforming for RIS-assisted MISO downlink
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include "baseline.hpp"
#include "channel.hpp"
#include "checkpoint.hpp"
#include "config_file.hpp"
#include "dataset.hpp"
#include "errors.hpp"
#include "experiment.hpp"
#include "io.hpp"
#include "linkmath.hpp"
#include "network.hpp"
#include "quantizer.hpp"
#include "rng.hpp"
#include "system_config.hpp"
#include "trainer.hpp"
