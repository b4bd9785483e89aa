#pragma once

// Plain-text experiment outputs.
//
// Summary (recodmd-summary v1): '#'-prefixed key=value lines echoing the
// configuration, then site-derived metadata, then a tab-separated table
//   method  control  N  M  h  site  mean_rmse  pooled_rmse  windows
// with one row for the model and one per available baseline (NT, DT).
//
// Windows (recodmd-windows v1): one tab-separated row per window placement
//   index  window_start  validation_start  status  points  rmse  rmse_nt  rmse_dt  reason
// where skipped windows carry status "skipped", "NA" scores and the reason.

#include <iosfwd>
#include <string>
#include <vector>

#include "recodmd/pipeline.hpp"

namespace recodmd {

/// Configuration echo lines ("# key=value"), in output order.
std::vector<std::string> config_echo(const ExperimentConfig& config);

void write_summary(std::ostream& os, const ExperimentReport& report);
void write_windows(std::ostream& os, const ExperimentReport& report);

/// Night-by-night forecast table (recodmd-forecast v1): date, step, slot,
/// predicted NEE and, where known, the observed value.
void write_forecast(std::ostream& os, const Matrix& forecast, const std::vector<Date>& dates,
                    const std::vector<NightRecord>* truth = nullptr);

}  // namespace recodmd
