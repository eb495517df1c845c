// Copyright 2026 The cmaze Authors
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


#ifndef CMAZE_TRAJECTORY_IO_H_
#define CMAZE_TRAJECTORY_IO_H_

#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cmaze/cmaes.h"
#include "cmaze/motor.h"
#include "cmaze/pipeline.h"

// Delimited text and line-delimited JSON writers for experiment artifacts.
//
// Trajectory CSV columns, one row per control tick:
//   t,beta,gamma,theta,theta_dot,ring,rho,rho_dot,spin,
//   ux,uy,motor_ux,motor_uy,tick,iterations,cost,fallback,transit
// State columns are the true full state; the last four are solver
// telemetry.

namespace cmaze {

inline constexpr char kTrajectoryHeader[] =
    "t,beta,gamma,theta,theta_dot,ring,rho,rho_dot,spin,"
    "ux,uy,motor_ux,motor_uy,tick,iterations,cost,fallback,transit";

void WriteTrajectoryCsv(std::ostream& out, const EpisodeRecord& record,
                        double dt);

// t,beta,gamma,ux,uy,next_beta,next_gamma
void WriteExcitationCsv(std::ostream& out, const ExcitationDataset& data);

// generation,evaluations,f_best,sigma,mean_0,...
void WriteCmaEsHistoryCsv(std::ostream& out, const CmaEsResult& result);

// {seed, solved, wall_ticks, total_s, per_ring_s, transitions, aborted}
nlohmann::json EpisodeSummaryJson(const EpisodeRecord& record, double dt);

// One {stage, ring, mean_s, std_s, n} record per ring.
std::vector<nlohmann::json> StageSummaryRecords(const StageSummary& summary);

// Aligned text table of stage summaries.
std::string SummaryTable(const std::vector<StageSummary>& stages);

// Writes `text` to `path`, creating parent directories. Throws
// std::runtime_error on failure.
void WriteFile(const std::string& path, const std::string& text);

}  // namespace cmaze

#endif  // CMAZE_TRAJECTORY_IO_H_
