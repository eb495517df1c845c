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


#include "cmaze/trajectory_io.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace cmaze {

namespace {

// shortest text that reads back to the same double
std::string Num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void WriteTrajectoryCsv(std::ostream& out, const EpisodeRecord& record,
                        double dt) {
  out << kTrajectoryHeader << '\n';
  for (const auto& t : record.ticks) {
    const FullState& s = t.full;
    out << Num(t.tick * dt) << ',' << Num(s.beta) << ',' << Num(s.gamma) << ','
        << Num(s.theta) << ',' << Num(s.theta_dot) << ',' << s.ring.value << ','
        << Num(s.rho) << ',' << Num(s.rho_dot) << ',' << Num(s.spin) << ','
        << Num(t.command.ux) << ',' << Num(t.command.uy) << ','
        << Num(t.motor.ux) << ',' << Num(t.motor.uy) << ',' << t.tick << ','
        << t.iterations << ',' << Num(t.cost) << ',' << int{t.fallback} << ','
        << int{t.transit} << '\n';
  }
}

void WriteExcitationCsv(std::ostream& out, const ExcitationDataset& data) {
  out << "t,beta,gamma,ux,uy,next_beta,next_gamma\n";
  for (const auto& s : data.samples) {
    out << Num(s.t) << ',' << Num(s.angles.beta) << ',' << Num(s.angles.gamma)
        << ',' << Num(s.command.ux) << ',' << Num(s.command.uy) << ','
        << Num(s.next.beta) << ',' << Num(s.next.gamma) << '\n';
  }
}

void WriteCmaEsHistoryCsv(std::ostream& out, const CmaEsResult& result) {
  out << "generation,evaluations,f_best,sigma";
  const auto n = result.x_best.size();
  for (Eigen::Index i = 0; i < n; ++i) out << ",mean_" << i;
  out << '\n';
  for (const auto& g : result.history) {
    out << g.generation << ',' << g.evaluations << ',' << Num(g.f_best) << ','
        << Num(g.sigma);
    for (Eigen::Index i = 0; i < g.mean.size(); ++i) out << ',' << Num(g.mean(i));
    out << '\n';
  }
}

nlohmann::json EpisodeSummaryJson(const EpisodeRecord& record, double dt) {
  const auto times = PerRingTimes(record, dt);
  return {{"seed", record.seed},
          {"solved", record.solved},
          {"wall_ticks", record.wall_ticks},
          {"total_s", record.wall_ticks * dt},
          {"per_ring_s", std::vector<double>(times.begin(), times.end())},
          {"transitions", record.transitions.size()},
          {"aborted", record.aborted}};
}

std::vector<nlohmann::json> StageSummaryRecords(const StageSummary& summary) {
  std::vector<nlohmann::json> out;
  for (const auto& r : summary.rings) {
    out.push_back({{"stage", summary.label},
                   {"ring", r.ring},
                   {"mean_s", r.mean_s},
                   {"std_s", r.std_s},
                   {"n", r.n}});
  }
  return out;
}

std::string SummaryTable(const std::vector<StageSummary>& stages) {
  std::ostringstream os;
  os << std::left << std::setw(12) << "stage";
  for (int r = 0; r < kNumRings; ++r) {
    os << std::right << std::setw(16) << ("ring " + std::to_string(r + 1));
  }
  os << std::setw(10) << "solved" << std::setw(12) << "total_s" << '\n';
  os << std::fixed << std::setprecision(2);
  for (const auto& s : stages) {
    os << std::left << std::setw(12) << s.label << std::right;
    for (const auto& r : s.rings) {
      std::ostringstream cell;
      cell << std::fixed << std::setprecision(2) << r.mean_s << " +- " << r.std_s;
      os << std::setw(16) << cell.str();
    }
    os << std::setw(10)
       << (std::to_string(s.solved) + "/" + std::to_string(s.episodes))
       << std::setw(12) << s.mean_total_s << '\n';
  }
  return os.str();
}

void WriteFile(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace cmaze
