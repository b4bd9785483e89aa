#pragma once

// Sliding-window respiration forecasting. Each window trains a DMD or DMDc
// model on M consecutive nights of NEE (the state is the night's half-hourly
// NEE vector, optionally delay-embedded N nights deep) and forecasts the next
// h nights, scoring RMSE against the measured nighttime NEE. Baseline
// respiration columns, when present, are scored on exactly the same points.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "recodmd/dmd.hpp"
#include "recodmd/dmdc.hpp"
#include "recodmd/fluxnet.hpp"

namespace recodmd {

enum class Method { Dmd, Dmdc };

/// Which night's driver values accompany the transition from night t to t+1.
/// Target pairs it with night t+1 (the night being predicted), so forecasts
/// consume the forecast period's drivers; Source pairs it with night t.
enum class ControlAlignment { Target, Source };

enum class Normalization { MinMax, None };

std::string to_string(Method m);
std::string to_string(ControlAlignment a);
std::string to_string(Normalization n);
Method parse_method(const std::string& text);
ControlAlignment parse_alignment(const std::string& text);
Normalization parse_normalization(const std::string& text);

struct ExperimentConfig {
    Method method = Method::Dmdc;
    std::vector<std::string> control_drivers{"tair"};
    Index embed_dim = 1;
    std::size_t train_nights = 5;
    std::size_t forecast_nights = 1;
    std::size_t window_step = 1;
    std::size_t gap_tolerance = 0;  // rejected nights allowed between window nights
    std::optional<Index> rank_p;
    std::optional<Index> rank_r;
    double energy_threshold = 0.99;
    Index spectrum_embed_dim = 8;  // Hankel depth for the site mode count
    int qc_threshold = 2;
    double min_quality_fraction = 0.8;
    std::optional<std::size_t> night_length;
    bool seasonal = true;
    int last_years = 0;  // 0 keeps every year
    ControlAlignment alignment = ControlAlignment::Target;
    Normalization normalization = Normalization::MinMax;
    bool reconstruction_mode = false;  // score the fit on its own training nights
    unsigned threads = 1;

    /// Throws ConfigError on inconsistent settings.
    void validate() const;
    /// "DMD", "DMDc", "DMD-TDE" or "DMDc-TDE".
    std::string method_label() const;
    /// Driver names joined by '+', or "-" without control.
    std::string control_label() const;
};

/// Five training nights, next-night validation.
ExperimentConfig preset_table1();
/// Two weeks of training, two weeks of validation.
ExperimentConfig preset_table2();

struct PreparedNights {
    std::vector<NightRecord> nights;  // harmonized, filtered, date-ordered
    std::size_t night_length = 0;
    Index mode_count = 0;             // Hankel dominant count over the prepared nights
    std::vector<std::string> stages;  // human-readable filter log
};

/// Night extraction, seasonal/year filtering, harmonization and the site
/// mode count. Throws EmptyExperiment naming the filter that removed every night.
PreparedNights prepare_nights(const ExperimentConfig& config, const SiteSeries& site);

/// Fitted model plus everything needed to forecast after its training window.
struct TrainedModel {
    Method method = Method::Dmdc;
    std::vector<std::string> drivers;
    Index embed_dim = 1;
    std::size_t night_length = 0;
    ControlAlignment alignment = ControlAlignment::Target;
    Normalization normalization = Normalization::MinMax;
    std::vector<NormalizationParams> normalization_params;
    std::optional<DmdModel> dmd;
    std::optional<DmdcModel> dmdc;
    std::vector<Vector> recent_states;    // last embed_dim training nights
    std::vector<Vector> recent_controls;  // their normalized control vectors
    Date last_training_date;
};

/// Concatenated (normalized) driver vectors of one night.
Vector control_vector(const NightRecord& night, std::span<const NormalizationParams> params,
                      std::span<const std::string> drivers, Normalization normalization);

/// Fits on `training` (M consecutive nights). `mode_count` supplies the
/// default output rank when config.rank_r is unset.
TrainedModel fit_window(const ExperimentConfig& config, std::span<const NightRecord> training,
                        std::optional<Index> mode_count = std::nullopt);

/// Forecasts `horizon` nights after the training window. `future` supplies the
/// driver values of those nights (ignored for DMD). Result is night_length x horizon.
Matrix forecast_window(const TrainedModel& model, std::span<const NightRecord> future,
                       std::size_t horizon);

/// Closed-loop replay from the first embed_dim training nights over the
/// training controls; column j predicts training night embed_dim + j.
Matrix reconstruct_window(const TrainedModel& model, std::span<const NightRecord> training,
                          std::size_t horizon);

struct WindowResult {
    std::size_t index = 0;
    Date window_start;
    Date validation_start;
    std::optional<std::string> skipped_reason;
    double rmse = 0.0;
    std::optional<double> rmse_nt;
    std::optional<double> rmse_dt;
    std::size_t n_validation_points = 0;
    double sum_sq = 0.0;
    std::optional<double> sum_sq_nt;
    std::optional<double> sum_sq_dt;
    Matrix forecast;  // night_length x h

    bool scored() const { return !skipped_reason.has_value(); }
};

/// One window over `slice` = M training nights followed by h validation
/// nights (only the M training nights in reconstruction mode). Contiguity and
/// numerical problems produce a skipped result, never an exception.
WindowResult run_window(const ExperimentConfig& config, std::span<const NightRecord> slice,
                        std::optional<Index> mode_count = std::nullopt);

struct MethodSummary {
    std::string method;
    std::string control;
    double mean_rmse = 0.0;    // mean of per-window RMSE
    double pooled_rmse = 0.0;  // RMSE over all validation points
    std::size_t windows = 0;
};

struct ExperimentReport {
    ExperimentConfig config;
    std::string site_id;
    std::size_t night_length = 0;
    Index mode_count = 0;
    std::size_t prepared_nights = 0;
    std::vector<WindowResult> windows;
    MethodSummary model;
    std::optional<MethodSummary> nt;
    std::optional<MethodSummary> dt;
    std::size_t scored = 0;
    std::size_t skipped = 0;
};

/// Slides the window over the prepared nights. Throws EmptyExperiment when
/// no window can be scored.
ExperimentReport run_experiment(const ExperimentConfig& config, const SiteSeries& site);

/// Root mean square difference over all aligned points of the night vectors.
double rmse(std::span<const Vector> predicted, std::span<const Vector> actual);

/// Daytime respiration estimates from a night-trained DMDc model.
struct DaytimeEstimate {
    Matrix values;  // night_length x days
    bool calibrated = false;
    std::string note = "uncalibrated: no daytime ground truth";
};

/// Runs the trained night-to-night map with daytime control vectors (one
/// column per day, already resampled to the model's control layout) in place
/// of nighttime ones.
DaytimeEstimate daytime_extrapolate(const DmdcModel& model, const Vector& initial_state,
                                    const Matrix& day_controls);

/// Control column for a day: each driver resampled to night_length points
/// and normalized with the model's parameters, stacked like control_vector.
Vector day_control_vector(const TrainedModel& model, const DayRecord& day);

}  // namespace recodmd
