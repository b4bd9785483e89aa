#include "recodmd/report.hpp"

#include <ostream>

#include "recodmd/text.hpp"

namespace recodmd {

namespace {

std::string opt_rank(const std::optional<Index>& r) {
    return r ? std::to_string(*r) : "auto";
}

std::string opt_score(const std::optional<double>& v) {
    return v ? format_double(*v) : "NA";
}

void summary_row(std::ostream& os, const MethodSummary& s, const ExperimentReport& r) {
    const auto& c = r.config;
    os << s.method << '\t' << s.control << '\t' << c.embed_dim << '\t' << c.train_nights << '\t'
       << c.forecast_nights << '\t' << r.site_id << '\t' << format_double(s.mean_rmse) << '\t'
       << format_double(s.pooled_rmse) << '\t' << s.windows << '\n';
}

}  // namespace

std::vector<std::string> config_echo(const ExperimentConfig& c) {
    return {
        "# method=" + c.method_label(),
        "# control=" + c.control_label(),
        "# embed_dim=" + std::to_string(c.embed_dim),
        "# train_nights=" + std::to_string(c.train_nights),
        "# forecast_nights=" + std::to_string(c.forecast_nights),
        "# window_step=" + std::to_string(c.window_step),
        "# gap_tolerance=" + std::to_string(c.gap_tolerance),
        "# rank_p=" + opt_rank(c.rank_p),
        "# rank_r=" + opt_rank(c.rank_r),
        "# energy_threshold=" + format_double(c.energy_threshold),
        "# spectrum_embed_dim=" + std::to_string(c.spectrum_embed_dim),
        "# qc_threshold=" + std::to_string(c.qc_threshold),
        "# min_quality_fraction=" + format_double(c.min_quality_fraction),
        "# night_length=" + (c.night_length ? std::to_string(*c.night_length) : std::string("auto")),
        "# seasonal=" + std::string(c.seasonal ? "on" : "off"),
        "# last_years=" + std::to_string(c.last_years),
        "# control_alignment=" + to_string(c.alignment),
        "# normalization=" + to_string(c.normalization),
        "# mode=" + std::string(c.reconstruction_mode ? "reconstruction" : "forecast"),
    };
}

void write_summary(std::ostream& os, const ExperimentReport& r) {
    os << "# recodmd-summary v1\n";
    for (const auto& line : config_echo(r.config)) os << line << '\n';
    os << "# site=" << r.site_id << '\n';
    os << "# prepared_nights=" << r.prepared_nights << '\n';
    os << "# night_length_used=" << r.night_length << '\n';
    os << "# site_mode_count=" << r.mode_count << '\n';
    os << "# windows_scored=" << r.scored << '\n';
    os << "# windows_skipped=" << r.skipped << '\n';
    os << "method\tcontrol\tN\tM\th\tsite\tmean_rmse\tpooled_rmse\twindows\n";
    summary_row(os, r.model, r);
    if (r.nt) summary_row(os, *r.nt, r);
    if (r.dt) summary_row(os, *r.dt, r);
}

void write_windows(std::ostream& os, const ExperimentReport& r) {
    os << "# recodmd-windows v1\n";
    os << "# site=" << r.site_id << '\n';
    os << "index\twindow_start\tvalidation_start\tstatus\tpoints\trmse\trmse_nt\trmse_dt\treason\n";
    for (const auto& w : r.windows) {
        os << w.index << '\t' << format_date(w.window_start) << '\t';
        if (w.scored()) {
            os << format_date(w.validation_start) << "\tscored\t" << w.n_validation_points << '\t'
               << format_double(w.rmse) << '\t' << opt_score(w.rmse_nt) << '\t' << opt_score(w.rmse_dt)
               << "\t-\n";
        } else {
            std::string reason = *w.skipped_reason;
            for (char& ch : reason) {
                if (ch == '\t' || ch == '\n') ch = ' ';
            }
            os << (w.validation_start.ok() ? format_date(w.validation_start) : std::string("-"))
               << "\tskipped\t0\tNA\tNA\tNA\t" << reason << '\n';
        }
    }
}

void write_forecast(std::ostream& os, const Matrix& forecast, const std::vector<Date>& dates,
                    const std::vector<NightRecord>* truth) {
    os << "# recodmd-forecast v1\n";
    os << "date\tstep\tslot\tpredicted_nee\tobserved_nee\n";
    for (Index k = 0; k < forecast.cols(); ++k) {
        const auto ku = static_cast<std::size_t>(k);
        const std::string date = ku < dates.size() ? format_date(dates[ku]) : "-";
        for (Index i = 0; i < forecast.rows(); ++i) {
            os << date << '\t' << (k + 1) << '\t' << (i + 1) << '\t' << format_double(forecast(i, k)) << '\t';
            if (truth && ku < truth->size() && (*truth)[ku].observed[static_cast<std::size_t>(i)]) {
                os << format_double((*truth)[ku].nee(i));
            } else {
                os << "NA";
            }
            os << '\n';
        }
    }
}

}  // namespace recodmd
