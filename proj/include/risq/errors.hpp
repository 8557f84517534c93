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

#include <stdexcept>
#include <string>

namespace risq {

// Malformed configuration, shape mismatch or inconsistent input.
struct validation_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Argument outside the mathematical domain of an operation.
struct domain_error : std::domain_error {
    using std::domain_error::domain_error;
};

// Input for which no direction/solution is defined (all-zero precoder, zero channel).
struct degenerate_input_error : domain_error {
    using domain_error::domain_error;
};

// Rank-deficient or badly conditioned matrix.
struct conditioning_error : domain_error {
    using domain_error::domain_error;
};

// Unreadable or unwritable file, or a file that does not parse.
struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Enumeration larger than the configured budget.
struct budget_error : std::length_error {
    using std::length_error::length_error;
};

namespace detail {

inline void require(bool ok, const std::string &msg)
{
    if (!ok)
        throw validation_error(msg);
}

} // namespace detail
} // namespace risq
