// Copyright 2026 The tclab Authors
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

#pragma once

#include <string>
#include <vector>

#include "tracecorona/scenario.hpp"

// Scheme-by-requirement comparison built from scenario reports.
namespace tc::cli {

struct MatrixRow {
  std::string scheme;
  std::string relay;
  std::string relay_twoway;
  std::string fake_claim;
  std::string linkability;
  std::string latency;
};

// Rows sorted by scheme name; one row per scheme present in `reports`.
std::vector<MatrixRow> comparison_matrix(const std::vector<ScenarioReport>& reports);
std::string render_matrix(const std::vector<MatrixRow>& rows);
std::string render_payload_table(const std::vector<ScenarioReport>& reports);

}  // namespace tc::cli
