#include "recodmd/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <thread>

#include "recodmd/embedding.hpp"
#include "recodmd/error.hpp"

namespace recodmd {

std::string to_string(Method m) {
    return m == Method::Dmd ? "dmd" : "dmdc";
}

std::string to_string(ControlAlignment a) {
    return a == ControlAlignment::Target ? "target" : "source";
}

std::string to_string(Normalization n) {
    return n == Normalization::MinMax ? "minmax" : "none";
}

Method parse_method(const std::string& text) {
    std::string t = text;
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
    if (t == "dmd") return Method::Dmd;
    if (t == "dmdc" || t == "dmdc-tde") return Method::Dmdc;
    throw Error(ErrorKind::ConfigError, "unknown method '" + text + "' (use dmd, dmdc or dmdc-tde)");
}

ControlAlignment parse_alignment(const std::string& text) {
    if (text == "target") return ControlAlignment::Target;
    if (text == "source") return ControlAlignment::Source;
    throw Error(ErrorKind::ConfigError, "unknown control alignment '" + text + "' (use target or source)");
}

Normalization parse_normalization(const std::string& text) {
    if (text == "minmax") return Normalization::MinMax;
    if (text == "none") return Normalization::None;
    throw Error(ErrorKind::ConfigError, "unknown normalization '" + text + "' (use minmax or none)");
}

void ExperimentConfig::validate() const {
    auto fail = [](const std::string& msg) { throw Error(ErrorKind::ConfigError, msg); };
    if (embed_dim < 1) fail("embedding dimension must be >= 1");
    if (train_nights < static_cast<std::size_t>(embed_dim) + 1) {
        fail("train_nights (" + std::to_string(train_nights) + ") must be at least embed_dim + 1 (" +
             std::to_string(embed_dim + 1) + ")");
    }
    if (forecast_nights < 1) fail("forecast_nights must be >= 1");
    if (window_step < 1) fail("window_step must be >= 1");
    if (method == Method::Dmd && !control_drivers.empty()) {
        fail("DMD takes no control drivers; drop --control or use dmdc");
    }
    if (method == Method::Dmdc && control_drivers.empty()) {
        fail("DMDc needs at least one control driver");
    }
    if (reconstruction_mode && forecast_nights > train_nights - static_cast<std::size_t>(embed_dim)) {
        fail("reconstruction horizon exceeds train_nights - embed_dim");
    }
    if (!(energy_threshold > 0.0 && energy_threshold <= 1.0)) fail("energy threshold must lie in (0, 1]");
    if (!(min_quality_fraction >= 0.0 && min_quality_fraction <= 1.0)) {
        fail("minimum quality fraction must lie in [0, 1]");
    }
    if (spectrum_embed_dim < 1) fail("spectrum embedding dimension must be >= 1");
    if (rank_p && *rank_p < 1) fail("rank p must be >= 1");
    if (rank_r && *rank_r < 1) fail("rank r must be >= 1");
    if (rank_p && rank_r && *rank_r > *rank_p) fail("rank r must not exceed rank p");
    if (last_years < 0) fail("last_years must be >= 0");
    if (night_length && *night_length < 1) fail("night length must be >= 1");
}

std::string ExperimentConfig::method_label() const {
    std::string label = method == Method::Dmd ? "DMD" : "DMDc";
    if (embed_dim > 1) label += "-TDE";
    return label;
}

std::string ExperimentConfig::control_label() const {
    if (control_drivers.empty()) return "-";
    std::string out;
    for (const auto& d : control_drivers) {
        if (!out.empty()) out += '+';
        out += d;
    }
    return out;
}

ExperimentConfig preset_table1() {
    ExperimentConfig c;
    c.train_nights = 5;
    c.forecast_nights = 1;
    c.embed_dim = 1;
    return c;
}

ExperimentConfig preset_table2() {
    ExperimentConfig c;
    c.train_nights = 14;
    c.forecast_nights = 14;
    c.embed_dim = 1;
    return c;
}

PreparedNights prepare_nights(const ExperimentConfig& config, const SiteSeries& site) {
    PreparedNights out;
    const auto night_records = std::count(site.night.begin(), site.night.end(), std::uint8_t{1});
    if (night_records == 0) {
        throw Error(ErrorKind::EmptyExperiment, "night flag: no record of site " + site.site_id +
                                                    " is marked as night");
    }
    const auto candidates = segment_nights(site, config.qc_threshold, 0.0).size();
    auto nights = segment_nights(site, config.qc_threshold, config.min_quality_fraction);
    out.stages.push_back("candidate nights: " + std::to_string(candidates));
    out.stages.push_back("after QC acceptance: " + std::to_string(nights.size()));
    if (nights.empty()) {
        throw Error(ErrorKind::EmptyExperiment,
                    "QC acceptance (qc < " + std::to_string(config.qc_threshold) + " on at least " +
                        std::to_string(config.min_quality_fraction) + " of each night) removed all " +
                        std::to_string(candidates) + " candidate nights");
    }
    if (config.seasonal) {
        const std::size_t before = nights.size();
        nights = seasonal_filter(std::move(nights), site.hemisphere);
        out.stages.push_back("after seasonal filter: " + std::to_string(nights.size()));
        if (nights.empty()) {
            throw Error(ErrorKind::EmptyExperiment,
                        std::string("seasonal filter (") +
                            (site.hemisphere == Hemisphere::North ? "May-September" : "January-April") +
                            ", " + to_string(site.hemisphere) + ") removed all " +
                            std::to_string(before) + " accepted nights");
        }
    }
    if (config.last_years > 0) {
        int last = static_cast<int>(nights.back().date.year());
        for (const auto& n : nights) last = std::max(last, static_cast<int>(n.date.year()));
        const std::size_t before = nights.size();
        std::erase_if(nights, [&](const NightRecord& n) {
            return static_cast<int>(n.date.year()) <= last - config.last_years;
        });
        out.stages.push_back("after year filter: " + std::to_string(nights.size()));
        if (nights.empty()) {
            throw Error(ErrorKind::EmptyExperiment, "year filter (last " + std::to_string(config.last_years) +
                                                        " years) removed all " + std::to_string(before) +
                                                        " nights");
        }
    }
    out.night_length = config.night_length.value_or(shortest_night(nights));
    nights = harmonize_nights(std::move(nights), out.night_length);
    out.stages.push_back("after harmonization to " + std::to_string(out.night_length) +
                         " half-hours: " + std::to_string(nights.size()));

    std::vector<Vector> series;
    series.reserve(nights.size());
    for (const auto& n : nights) series.push_back(n.nee);
    const Index depth = std::min<Index>(config.spectrum_embed_dim, static_cast<Index>(series.size()));
    out.mode_count = hankel_spectrum(build_hankel(series, depth), config.energy_threshold).dominant_count;
    out.nights = std::move(nights);
    return out;
}

Vector control_vector(const NightRecord& night, std::span<const NormalizationParams> params,
                      std::span<const std::string> drivers, Normalization normalization) {
    const auto n = night.nee.size();
    Vector out(n * static_cast<Index>(drivers.size()));
    for (std::size_t d = 0; d < drivers.size(); ++d) {
        const auto it = night.drivers.find(drivers[d]);
        if (it == night.drivers.end()) {
            throw Error(ErrorKind::ConfigError, "driver '" + drivers[d] + "' not available on night " +
                                                    format_date(night.date));
        }
        if (it->second.size() != n) {
            throw Error(ErrorKind::InvalidShape, "driver '" + drivers[d] + "' length differs from NEE");
        }
        const Vector v = normalization == Normalization::MinMax ? params[d].apply(it->second) : it->second;
        out.segment(static_cast<Index>(d) * n, n) = v;
    }
    return out;
}

namespace {

std::vector<Vector> night_states(std::span<const NightRecord> nights) {
    std::vector<Vector> out;
    out.reserve(nights.size());
    for (const auto& n : nights) out.push_back(n.nee);
    return out;
}

std::vector<Vector> night_controls(const TrainedModel& m, std::span<const NightRecord> nights) {
    std::vector<Vector> out;
    out.reserve(nights.size());
    for (const auto& n : nights) {
        if (static_cast<std::size_t>(n.nee.size()) != m.night_length) {
            throw Error(ErrorKind::InvalidShape, "night " + format_date(n.date) + " has " +
                                                     std::to_string(n.nee.size()) +
                                                     " half-hours, model expects " +
                                                     std::to_string(m.night_length));
        }
        out.push_back(control_vector(n, m.normalization_params, m.drivers, m.normalization));
    }
    return out;
}

// Control paired with the transition out of night t, given the per-night
// control vectors u[0..]. Index t refers to u; Target shifts by one.
const Vector& paired_control(const std::vector<Vector>& u, std::size_t t, ControlAlignment a) {
    return a == ControlAlignment::Target ? u[t + 1] : u[t];
}

// Closed-loop forecast of `horizon` nights from the stack states[0..N-1].
// `u` holds per-night control vectors aligned with the stack: u[0] belongs to
// states[0]; it must extend `horizon` nights past the stack for Target
// alignment and horizon - 1 nights for Source.
Matrix forecast_from(const TrainedModel& m, const std::vector<Vector>& stack, const std::vector<Vector>& u,
                     std::size_t horizon) {
    const auto n_embed = static_cast<std::size_t>(m.embed_dim);
    const auto block = static_cast<Index>(m.night_length);
    const Vector x0 = stack_blocks(stack, 0, n_embed);
    Matrix out(block, static_cast<Index>(horizon));

    if (m.method == Method::Dmd) {
        const DmdModel& dm = *m.dmd;
        for (std::size_t s = 1; s <= horizon; ++s) {
            const Vector full = predict_dmd_from(dm, x0, static_cast<long>(s) + 1).state;
            out.col(static_cast<Index>(s) - 1) = full.tail(block);
        }
        return out;
    }

    const DmdcModel& dc = *m.dmdc;
    std::vector<Vector> c;  // paired controls, c[t] for t = 0 .. N + horizon - 2
    const std::size_t needed = n_embed + horizon - 1;
    c.reserve(needed);
    for (std::size_t t = 0; t < needed; ++t) c.push_back(paired_control(u, t, m.alignment));
    Matrix controls(dc.control_dim, static_cast<Index>(horizon));
    for (std::size_t s = 0; s < horizon; ++s) {
        controls.col(static_cast<Index>(s)) = stack_blocks(c, s, n_embed);
    }
    const Matrix full = forecast_dmdc(dc, x0, controls);
    for (std::size_t s = 0; s < horizon; ++s) {
        out.col(static_cast<Index>(s)) = full.col(static_cast<Index>(s)).tail(block);
    }
    return out;
}

}  // namespace

TrainedModel fit_window(const ExperimentConfig& config, std::span<const NightRecord> training,
                        std::optional<Index> mode_count) {
    config.validate();
    if (training.size() < static_cast<std::size_t>(config.embed_dim) + 1 || training.size() < 2) {
        throw Error(ErrorKind::InsufficientData, "training window has " + std::to_string(training.size()) +
                                                     " nights, needs at least " +
                                                     std::to_string(config.embed_dim + 1));
    }
    TrainedModel m;
    m.method = config.method;
    m.drivers = config.control_drivers;
    m.embed_dim = config.embed_dim;
    m.night_length = static_cast<std::size_t>(training.front().nee.size());
    m.alignment = config.alignment;
    m.normalization = config.normalization;
    m.last_training_date = training.back().date;

    const std::vector<Vector> states = night_states(training);
    for (const auto& s : states) {
        if (static_cast<std::size_t>(s.size()) != m.night_length) {
            throw Error(ErrorKind::InvalidShape, "training nights differ in length");
        }
    }
    const auto n_embed = static_cast<std::size_t>(config.embed_dim);
    m.recent_states.assign(states.end() - static_cast<std::ptrdiff_t>(n_embed), states.end());

    const auto cols = static_cast<Index>(training.size()) - config.embed_dim;
    const Index state_rows = static_cast<Index>(m.night_length) * config.embed_dim;

    if (config.method == Method::Dmd) {
        const SnapshotSet snaps = embed_snapshots(states, {}, config.embed_dim);
        std::optional<Index> rank = config.rank_r;
        if (!rank && mode_count) {
            rank = std::min({*mode_count, state_rows, cols});
        }
        m.dmd = fit_dmd(snaps, rank);
        return m;
    }

    for (const auto& d : m.drivers) {
        m.normalization_params.push_back(fit_normalization(training, d));
    }
    const std::vector<Vector> u = night_controls(m, training);
    std::vector<Vector> c;
    c.reserve(u.size());
    for (std::size_t t = 0; t < u.size(); ++t) {
        // The last paired control needs the night after the window; it never
        // enters X because embed_snapshots stops one column short.
        c.push_back(t + 1 < u.size() ? paired_control(u, t, m.alignment) : u[t]);
    }
    const SnapshotSet snaps = embed_snapshots(states, c, config.embed_dim);

    std::optional<Index> p = config.rank_p;
    std::optional<Index> r = config.rank_r;
    if (!r && mode_count) {
        Matrix omega(snaps.x.rows() + snaps.control->rows(), snaps.x.cols());
        omega << snaps.x, *snaps.control;
        const Index p_eff = p.value_or(effective_rank(svd(omega).s));
        r = std::min({*mode_count, p_eff, state_rows, cols});
    }
    m.dmdc = fit_dmdc(snaps, p, r);
    m.recent_controls.assign(u.end() - static_cast<std::ptrdiff_t>(n_embed), u.end());
    return m;
}

Matrix forecast_window(const TrainedModel& model, std::span<const NightRecord> future,
                       std::size_t horizon) {
    if (horizon < 1) throw Error(ErrorKind::InvalidInput, "forecast horizon must be >= 1");
    if (model.recent_states.size() != static_cast<std::size_t>(model.embed_dim)) {
        throw Error(ErrorKind::InvalidShape, "model carries " + std::to_string(model.recent_states.size()) +
                                                 " recent states, expected " +
                                                 std::to_string(model.embed_dim));
    }
    std::vector<Vector> u;
    if (model.method == Method::Dmdc) {
        const std::size_t needed = model.alignment == ControlAlignment::Target ? horizon : horizon - 1;
        if (future.size() < needed) {
            throw Error(ErrorKind::InsufficientData, "forecast of " + std::to_string(horizon) +
                                                         " nights needs drivers for " +
                                                         std::to_string(needed) + " future nights, got " +
                                                         std::to_string(future.size()));
        }
        u = model.recent_controls;
        const auto fut = night_controls(model, future.first(needed));
        u.insert(u.end(), fut.begin(), fut.end());
        if (model.alignment == ControlAlignment::Source) u.push_back(u.back());
    }
    return forecast_from(model, model.recent_states, u, horizon);
}

Matrix reconstruct_window(const TrainedModel& model, std::span<const NightRecord> training,
                          std::size_t horizon) {
    const auto n_embed = static_cast<std::size_t>(model.embed_dim);
    if (horizon < 1 || n_embed + horizon > training.size()) {
        throw Error(ErrorKind::InvalidInput, "reconstruction horizon out of range");
    }
    const std::vector<Vector> states = night_states(training.first(n_embed));
    std::vector<Vector> u;
    if (model.method == Method::Dmdc) {
        u = night_controls(model, training.first(std::min(training.size(), n_embed + horizon)));
        if (u.size() < n_embed + horizon) u.push_back(u.back());
    }
    return forecast_from(model, states, u, horizon);
}

double rmse(std::span<const Vector> predicted, std::span<const Vector> actual) {
    if (predicted.size() != actual.size()) {
        throw Error(ErrorKind::InvalidInput, "rmse inputs differ in night count");
    }
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        if (predicted[i].size() != actual[i].size()) {
            throw Error(ErrorKind::InvalidInput, "rmse inputs differ in length at night " + std::to_string(i));
        }
        sum += (predicted[i] - actual[i]).squaredNorm();
        count += static_cast<std::size_t>(predicted[i].size());
    }
    if (count == 0) throw Error(ErrorKind::InvalidInput, "rmse needs at least one point");
    return std::sqrt(sum / static_cast<double>(count));
}

namespace {

std::optional<std::string> contiguity_problem(std::span<const NightRecord> slice, std::size_t gap_tolerance) {
    for (std::size_t i = 1; i < slice.size(); ++i) {
        const long gap = days_between(slice[i - 1].date, slice[i].date);
        if (gap < 1 || static_cast<std::size_t>(gap) > gap_tolerance + 1) {
            return "nights not contiguous: " + std::to_string(gap) + " days between " +
                   format_date(slice[i - 1].date) + " and " + format_date(slice[i].date);
        }
    }
    return std::nullopt;
}

struct Scores {
    double sum_sq = 0.0;
    std::optional<double> sum_nt;
    std::optional<double> sum_dt;
    std::size_t points = 0;
};

// Validation points: measured good-quality NEE where every present baseline
// is also defined, so model and baselines share one point set.
Scores score(const Matrix& forecast, std::span<const NightRecord> truth) {
    Scores s;
    const bool has_nt = truth.front().reco_nt.has_value();
    const bool has_dt = truth.front().reco_dt.has_value();
    if (has_nt) s.sum_nt = 0.0;
    if (has_dt) s.sum_dt = 0.0;
    for (std::size_t k = 0; k < truth.size(); ++k) {
        const NightRecord& n = truth[k];
        for (Index i = 0; i < n.nee.size(); ++i) {
            if (!n.observed[static_cast<std::size_t>(i)]) continue;
            if (has_nt && (!n.reco_nt || std::isnan((*n.reco_nt)(i)))) continue;
            if (has_dt && (!n.reco_dt || std::isnan((*n.reco_dt)(i)))) continue;
            const double y = n.nee(i);
            const double e = forecast(i, static_cast<Index>(k)) - y;
            s.sum_sq += e * e;
            if (has_nt) *s.sum_nt += std::pow((*n.reco_nt)(i) - y, 2);
            if (has_dt) *s.sum_dt += std::pow((*n.reco_dt)(i) - y, 2);
            ++s.points;
        }
    }
    return s;
}

}  // namespace

WindowResult run_window(const ExperimentConfig& config, std::span<const NightRecord> slice,
                        std::optional<Index> mode_count) {
    config.validate();
    WindowResult w;
    const std::size_t m = config.train_nights;
    const std::size_t h = config.forecast_nights;
    const std::size_t needed = config.reconstruction_mode ? m : m + h;
    if (slice.size() < needed) {
        w.skipped_reason = "window holds " + std::to_string(slice.size()) + " nights, needs " + std::to_string(needed);
        if (!slice.empty()) w.window_start = slice.front().date;
        return w;
    }
    slice = slice.first(needed);
    w.window_start = slice.front().date;
    const auto training = slice.first(m);
    const auto truth = config.reconstruction_mode
                           ? training.subspan(static_cast<std::size_t>(config.embed_dim), h)
                           : slice.subspan(m, h);
    w.validation_start = truth.front().date;

    if (auto problem = contiguity_problem(slice, config.gap_tolerance)) {
        w.skipped_reason = std::move(problem);
        return w;
    }
    try {
        const TrainedModel model = fit_window(config, training, mode_count);
        w.forecast = config.reconstruction_mode ? reconstruct_window(model, training, h)
                                                : forecast_window(model, slice.subspan(m), h);
    } catch (const Error& e) {
        w.skipped_reason = e.what();
        return w;
    }
    if (!w.forecast.allFinite()) {
        w.skipped_reason = "forecast diverged to non-finite values";
        return w;
    }
    const Scores s = score(w.forecast, truth);
    if (s.points == 0) {
        w.skipped_reason = "no validation points with good-quality NEE";
        return w;
    }
    const auto pts = static_cast<double>(s.points);
    w.n_validation_points = s.points;
    w.sum_sq = s.sum_sq;
    w.rmse = std::sqrt(s.sum_sq / pts);
    w.sum_sq_nt = s.sum_nt;
    w.sum_sq_dt = s.sum_dt;
    if (s.sum_nt) w.rmse_nt = std::sqrt(*s.sum_nt / pts);
    if (s.sum_dt) w.rmse_dt = std::sqrt(*s.sum_dt / pts);
    return w;
}

namespace {

MethodSummary summarize(const std::string& method, const std::string& control,
                        const std::vector<WindowResult>& windows,
                        std::optional<double> WindowResult::*rmse_field,
                        std::optional<double> WindowResult::*sum_field) {
    MethodSummary out{method, control};
    double total = 0.0;
    double sum_sq = 0.0;
    std::size_t points = 0;
    for (const auto& w : windows) {
        if (!w.scored()) continue;
        const double r = rmse_field ? *(w.*rmse_field) : w.rmse;
        total += r;
        sum_sq += sum_field ? *(w.*sum_field) : w.sum_sq;
        points += w.n_validation_points;
        ++out.windows;
    }
    if (out.windows > 0) {
        out.mean_rmse = total / static_cast<double>(out.windows);
        out.pooled_rmse = std::sqrt(sum_sq / static_cast<double>(points));
    }
    return out;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config, const SiteSeries& site) {
    config.validate();
    PreparedNights prepared = prepare_nights(config, site);
    const auto& nights = prepared.nights;

    ExperimentReport report;
    report.config = config;
    report.site_id = site.site_id;
    report.night_length = prepared.night_length;
    report.mode_count = prepared.mode_count;
    report.prepared_nights = nights.size();

    const std::size_t span_len =
        config.reconstruction_mode ? config.train_nights : config.train_nights + config.forecast_nights;
    std::vector<std::size_t> starts;
    for (std::size_t i = 0; i + span_len <= nights.size(); i += config.window_step) starts.push_back(i);
    if (starts.empty()) {
        throw Error(ErrorKind::EmptyExperiment, "window length " + std::to_string(span_len) + " exceeds the " +
                                                    std::to_string(nights.size()) + " prepared nights");
    }

    const std::optional<Index> modes = prepared.mode_count;
    report.windows.resize(starts.size());
    auto evaluate = [&](std::size_t k) {
        WindowResult w = run_window(config, std::span(nights).subspan(starts[k], span_len), modes);
        w.index = k;
        report.windows[k] = std::move(w);
    };
    const unsigned threads = std::max(1u, std::min<unsigned>(config.threads, static_cast<unsigned>(starts.size())));
    if (threads == 1) {
        for (std::size_t k = 0; k < starts.size(); ++k) evaluate(k);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back([&] {
                for (std::size_t k = next++; k < starts.size(); k = next++) evaluate(k);
            });
        }
    }

    for (const auto& w : report.windows) (w.scored() ? report.scored : report.skipped)++;
    if (report.scored == 0) {
        std::string reason = report.windows.front().skipped_reason.value_or("unknown");
        throw Error(ErrorKind::EmptyExperiment, "no window could be scored out of " +
                                                    std::to_string(report.windows.size()) +
                                                    "; first reason: " + reason);
    }
    report.model = summarize(config.method_label(), config.control_label(), report.windows, nullptr, nullptr);
    const WindowResult* first_scored = nullptr;
    for (const auto& w : report.windows) {
        if (w.scored()) {
            first_scored = &w;
            break;
        }
    }
    if (first_scored->rmse_nt) {
        report.nt = summarize("NT", "-", report.windows, &WindowResult::rmse_nt, &WindowResult::sum_sq_nt);
    }
    if (first_scored->rmse_dt) {
        report.dt = summarize("DT", "-", report.windows, &WindowResult::rmse_dt, &WindowResult::sum_sq_dt);
    }
    return report;
}

DaytimeEstimate daytime_extrapolate(const DmdcModel& model, const Vector& initial_state,
                                    const Matrix& day_controls) {
    DaytimeEstimate out;
    out.values = forecast_dmdc(model, initial_state, day_controls);
    return out;
}

Vector day_control_vector(const TrainedModel& model, const DayRecord& day) {
    const auto n = static_cast<Index>(model.night_length);
    Vector out(n * static_cast<Index>(model.drivers.size()));
    for (std::size_t d = 0; d < model.drivers.size(); ++d) {
        const auto it = day.drivers.find(model.drivers[d]);
        if (it == day.drivers.end()) {
            throw Error(ErrorKind::ConfigError, "driver '" + model.drivers[d] + "' missing on day " +
                                                    format_date(day.date));
        }
        Vector v = resample_linear(it->second, n);
        if (model.normalization == Normalization::MinMax) v = model.normalization_params[d].apply(v);
        out.segment(static_cast<Index>(d) * n, n) = v;
    }
    return out;
}

}  // namespace recodmd
