#include <gtest/gtest.h>

#include <sstream>

#include "oracles.hpp"
#include "recodmd/error.hpp"
#include "recodmd/pipeline.hpp"
#include "recodmd/report.hpp"
#include "recodmd/synthetic.hpp"

using namespace recodmd;

namespace {

SiteSeries lti_site(int days, double noise, std::uint64_t seed = 5) {
    SyntheticSiteSpec spec;
    spec.kind = SyntheticKind::Lti;
    spec.site_id = "SYN-LTI";
    spec.days = days;
    spec.lti.noise_sd = noise;
    return generate_synthetic_site(spec, seed);
}

ExperimentConfig lti_config() {
    ExperimentConfig c;
    c.method = Method::Dmdc;
    c.control_drivers = {"tair"};
    c.normalization = Normalization::None;
    c.seasonal = false;
    c.train_nights = 20;
    c.forecast_nights = 2;
    c.rank_r = 8;
    return c;
}

const SiteSeries& lloyd_taylor_site() {
    static const SiteSeries site = generate_synthetic_site(SyntheticSiteSpec{}, 1);
    return site;
}

NightRecord constant_night(Date d, double level) {
    NightRecord n;
    n.date = d;
    n.nee = Vector::Constant(6, level);
    n.observed.assign(6, 1);
    n.drivers["tair"] = Vector::Constant(6, 10.0);
    n.quality_fraction = 1.0;
    n.raw_length = 6;
    return n;
}

Date ymd(int y, unsigned m, unsigned d) {
    return Date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
}

template <typename F>
ErrorKind error_kind(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no error raised";
    return ErrorKind::InvalidInput;
}

}  // namespace

TEST(Config, PresetsAndLabels) {
    const ExperimentConfig t1 = preset_table1();
    EXPECT_EQ(t1.train_nights, 5u);
    EXPECT_EQ(t1.forecast_nights, 1u);
    ExperimentConfig t2 = preset_table2();
    EXPECT_EQ(t2.train_nights, 14u);
    EXPECT_EQ(t2.forecast_nights, 14u);
    EXPECT_EQ(t2.method_label(), "DMDc");
    t2.embed_dim = 6;
    EXPECT_EQ(t2.method_label(), "DMDc-TDE");
    EXPECT_EQ(t2.control_label(), "tair");
    t2.control_drivers = {"tair", "swc"};
    EXPECT_EQ(t2.control_label(), "tair+swc");
}

TEST(Config, InconsistentSettingsAreRejected) {
    ExperimentConfig c;
    c.method = Method::Dmd;
    EXPECT_EQ(error_kind([&] { c.validate(); }), ErrorKind::ConfigError);
    c = ExperimentConfig{};
    c.embed_dim = 5;
    EXPECT_EQ(error_kind([&] { c.validate(); }), ErrorKind::ConfigError);
    c = ExperimentConfig{};
    c.rank_p = 2;
    c.rank_r = 3;
    EXPECT_EQ(error_kind([&] { c.validate(); }), ErrorKind::ConfigError);
    EXPECT_EQ(error_kind([] { parse_method("svd"); }), ErrorKind::ConfigError);
    EXPECT_EQ(parse_method("dmdc-tde"), Method::Dmdc);
}

TEST(Rmse, Arithmetic) {
    const std::vector<Vector> a{(Vector(2) << 1, 2).finished()};
    const std::vector<Vector> b{(Vector(2) << 2, 4).finished()};
    EXPECT_NEAR(rmse(a, b), std::sqrt(2.5), 1e-15);
    EXPECT_EQ(rmse(a, a), 0.0);
    const std::vector<Vector> c{(Vector(2) << 1.5, 2.5).finished()};
    EXPECT_NEAR(rmse(a, c), 0.5, 1e-15);
    const std::vector<Vector> d{Vector::Zero(3)};
    EXPECT_EQ(error_kind([&] { rmse(a, d); }), ErrorKind::InvalidInput);
}

TEST(Window, ExactLtiForecast) {
    const SiteSeries site = lti_site(60, 0.0);
    const ExperimentReport r = run_experiment(lti_config(), site);
    EXPECT_GT(r.scored, 30u);
    EXPECT_EQ(r.night_length, 8u);
    for (const auto& w : r.windows) {
        ASSERT_TRUE(w.scored()) << *w.skipped_reason;
        EXPECT_LT(w.rmse, 1e-6);
    }
}

TEST(Window, ConstantNightsDmdIsExact) {
    std::vector<NightRecord> nights;
    for (unsigned d = 1; d <= 7; ++d) nights.push_back(constant_night(ymd(2014, 6, d), 2.5));
    ExperimentConfig c;
    c.method = Method::Dmd;
    c.control_drivers.clear();
    c.train_nights = 5;
    c.forecast_nights = 2;
    const WindowResult w = run_window(c, nights);
    ASSERT_TRUE(w.scored());
    EXPECT_NEAR(w.rmse, 0.0, 1e-12);
    EXPECT_EQ(w.n_validation_points, 12u);
}

TEST(Window, GapInsideSliceIsSkipped) {
    std::vector<NightRecord> nights;
    for (unsigned d : {1u, 2u, 3u, 5u, 6u, 7u}) nights.push_back(constant_night(ymd(2014, 6, d), 1.0));
    ExperimentConfig c;
    c.method = Method::Dmd;
    c.control_drivers.clear();
    const WindowResult w = run_window(c, nights);
    EXPECT_FALSE(w.scored());
    c.gap_tolerance = 1;
    EXPECT_TRUE(run_window(c, nights).scored());
}

TEST(Window, ReconstructionModeScoresTrainingReplay) {
    const SiteSeries site = lti_site(40, 0.01);
    ExperimentConfig c = lti_config();
    c.reconstruction_mode = true;
    c.forecast_nights = 3;
    const PreparedNights p = prepare_nights(c, site);
    const auto slice = std::span(p.nights).first(c.train_nights);
    const WindowResult w = run_window(c, slice, p.mode_count);
    ASSERT_TRUE(w.scored());

    const TrainedModel m = fit_window(c, slice, p.mode_count);
    const Matrix rec = reconstruct_window(m, slice, 3);
    std::vector<double> pred, truth;
    for (Index j = 0; j < 3; ++j) {
        const NightRecord& n = slice[static_cast<std::size_t>(j) + 1];
        for (Index i = 0; i < rec.rows(); ++i) {
            if (!n.observed[static_cast<std::size_t>(i)]) continue;
            pred.push_back(rec(i, j));
            truth.push_back(n.nee(i));
        }
    }
    EXPECT_NEAR(w.rmse, oracle::rmse(pred, truth), 1e-12);
    EXPECT_LT(w.rmse, 0.1);
}

TEST(Window, ForecastNeedsFutureDrivers) {
    const SiteSeries site = lti_site(30, 0.0);
    const ExperimentConfig c = lti_config();
    const PreparedNights p = prepare_nights(c, site);
    const TrainedModel m = fit_window(c, std::span(p.nights).first(20));
    EXPECT_EQ(error_kind([&] { forecast_window(m, {}, 1); }), ErrorKind::InsufficientData);
    const Matrix fc = forecast_window(m, std::span(p.nights).subspan(20, 2), 2);
    EXPECT_LT((fc.col(1) - p.nights[21].nee).norm(), 1e-6);
}

TEST(Experiment, WindowCountMatchesEnumeration) {
    const ExperimentConfig c = preset_table1();
    const ExperimentReport r = run_experiment(c, lloyd_taylor_site());
    const PreparedNights p = prepare_nights(c, lloyd_taylor_site());

    // Oracle: every start position of M+h consecutive accepted nights, valid
    // when the calendar days are consecutive.
    const std::size_t span = c.train_nights + c.forecast_nights;
    std::size_t placements = 0, valid = 0;
    for (std::size_t i = 0; i + span <= p.nights.size(); ++i) {
        ++placements;
        bool ok = true;
        for (std::size_t k = i + 1; k < i + span; ++k) {
            const auto prev = std::chrono::sys_days{p.nights[k - 1].date};
            const auto next = std::chrono::sys_days{p.nights[k].date};
            ok = ok && (next - prev).count() == 1;
        }
        valid += ok ? 1 : 0;
    }
    EXPECT_EQ(p.nights.size(), 306u);  // May-September of two years
    EXPECT_EQ(r.windows.size(), placements);
    EXPECT_EQ(r.scored, valid);
    EXPECT_EQ(r.skipped, placements - valid);
    EXPECT_EQ(placements, 301u);
    EXPECT_EQ(valid, 296u);
}

TEST(Experiment, BaselinesScoredOnSamePoints) {
    const ExperimentConfig c = preset_table1();
    const ExperimentReport r = run_experiment(c, lloyd_taylor_site());
    const PreparedNights p = prepare_nights(c, lloyd_taylor_site());
    const WindowResult& w = r.windows[10];
    ASSERT_TRUE(w.scored());
    const NightRecord& v = p.nights[10 + c.train_nights];
    std::vector<double> nt, dt, truth;
    for (Index i = 0; i < v.nee.size(); ++i) {
        if (!v.observed[static_cast<std::size_t>(i)]) continue;
        nt.push_back((*v.reco_nt)(i));
        dt.push_back((*v.reco_dt)(i));
        truth.push_back(v.nee(i));
    }
    EXPECT_EQ(w.n_validation_points, truth.size());
    ASSERT_TRUE(w.rmse_nt.has_value());
    EXPECT_NEAR(*w.rmse_nt, oracle::rmse(nt, truth), 1e-12);
    EXPECT_NEAR(*w.rmse_dt, oracle::rmse(dt, truth), 1e-12);

    double mean = 0.0;
    double pooled = 0.0;
    std::size_t points = 0;
    for (const auto& x : r.windows) {
        if (!x.scored()) continue;
        mean += x.rmse;
        pooled += x.sum_sq;
        points += x.n_validation_points;
    }
    EXPECT_NEAR(r.model.mean_rmse, mean / static_cast<double>(r.scored), 1e-12);
    EXPECT_NEAR(r.model.pooled_rmse, std::sqrt(pooled / static_cast<double>(points)), 1e-12);
}

TEST(Experiment, ControlImprovesOnTemperatureDrivenSite) {
    ExperimentConfig c = preset_table1();
    const double dmdc = run_experiment(c, lloyd_taylor_site()).model.mean_rmse;
    c.method = Method::Dmd;
    c.control_drivers.clear();
    const double dmd = run_experiment(c, lloyd_taylor_site()).model.mean_rmse;
    EXPECT_LE(dmdc, dmd);
}

TEST(Experiment, DeterministicAndThreadIndependent) {
    ExperimentConfig c = preset_table2();
    c.embed_dim = 4;
    auto render = [&](const ExperimentConfig& cfg) {
        const SiteSeries s = generate_synthetic_site(SyntheticSiteSpec{}, 3);
        const ExperimentReport r = run_experiment(cfg, s);
        std::ostringstream os;
        write_summary(os, r);
        write_windows(os, r);
        return os.str();
    };
    const std::string a = render(c);
    EXPECT_EQ(a, render(c));
    c.threads = 3;
    EXPECT_EQ(a, render(c));
}

TEST(Experiment, EmptySeasonNamesTheFilter) {
    SyntheticSiteSpec spec;
    spec.days = 60;
    spec.start = ymd(2014, 10, 15);
    const SiteSeries s = generate_synthetic_site(spec, 2);
    try {
        run_experiment(preset_table1(), s);
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::EmptyExperiment);
        EXPECT_NE(std::string(e.what()).find("seasonal filter"), std::string::npos);
    }
    SiteSeries dark = s;
    std::fill(dark.night.begin(), dark.night.end(), std::uint8_t{0});
    EXPECT_EQ(error_kind([&] { run_experiment(preset_table1(), dark); }), ErrorKind::EmptyExperiment);
}

TEST(Experiment, LastYearsKeepsFinalSeason) {
    ExperimentConfig c = preset_table1();
    c.last_years = 1;
    const PreparedNights p = prepare_nights(c, lloyd_taylor_site());
    EXPECT_EQ(p.nights.size(), 153u);
    EXPECT_EQ(static_cast<int>(p.nights.front().date.year()), 2015);
}

TEST(Experiment, TimeDelayEmbeddingRuns) {
    ExperimentConfig c = preset_table2();
    c.embed_dim = 6;
    const ExperimentReport r = run_experiment(c, lloyd_taylor_site());
    EXPECT_GT(r.scored, 20u);
    for (const auto& w : r.windows) {
        if (w.scored()) EXPECT_EQ(w.forecast.cols(), 14);
    }
}

TEST(Daytime, SubstitutionIdentityAndZeroModel) {
    const SiteSeries site = lti_site(40, 0.0);
    const ExperimentConfig c = lti_config();
    const PreparedNights p = prepare_nights(c, site);
    const TrainedModel m = fit_window(c, std::span(p.nights).first(20));
    const Vector u = control_vector(p.nights[20], m.normalization_params, m.drivers, m.normalization);
    const DaytimeEstimate e = daytime_extrapolate(*m.dmdc, m.recent_states.back(), u);
    const Matrix fc = forecast_window(m, std::span(p.nights).subspan(20, 1), 1);
    EXPECT_LT((e.values.col(0) - fc.col(0)).norm(), 1e-12);
    EXPECT_FALSE(e.calibrated);
    EXPECT_NE(e.note.find("uncalibrated"), std::string::npos);

    DmdcModel zero = *m.dmdc;
    zero.a_tilde.setZero();
    zero.b_tilde.setZero();
    EXPECT_EQ(daytime_extrapolate(zero, m.recent_states.back(), u).values.norm(), 0.0);
}

TEST(Daytime, TracksGeneratedRespiration) {
    const SiteSeries& site = lloyd_taylor_site();
    ExperimentConfig c = preset_table2();
    const PreparedNights p = prepare_nights(c, site);
    const auto days = segment_days(site);
    const auto& truth = site.drivers.at("reco_true");

    std::vector<double> estimated, generated;
    for (std::size_t i = 0; i + c.train_nights <= p.nights.size(); i += 3) {
        const auto training = std::span(p.nights).subspan(i, c.train_nights);
        const Date last = training.back().date;
        if ((std::chrono::sys_days{last} - std::chrono::sys_days{training.front().date}).count() !=
            static_cast<long>(c.train_nights) - 1) {
            continue;
        }
        const auto day = std::find_if(days.begin(), days.end(), [&](const DayRecord& d) {
            return d.date == add_days(last, 1);
        });
        if (day == days.end()) continue;
        const TrainedModel m = fit_window(c, training, p.mode_count);
        const DaytimeEstimate e = daytime_extrapolate(*m.dmdc, m.recent_states.back(), day_control_vector(m, *day));
        estimated.push_back(e.values.mean());
        double sum = 0.0;
        for (std::size_t k = 0; k < day->length; ++k) sum += truth[day->first_record + k];
        generated.push_back(sum / static_cast<double>(day->length));
    }
    ASSERT_GT(estimated.size(), 20u);
    EXPECT_GT(oracle::pearson(estimated, generated), 0.9);
}

TEST(Synthetic, LloydTaylorReferenceIdentity) {
    LloydTaylorSpec p;
    p.r_ref = 1.0;
    p.e0 = 308.56;
    p.t_ref = 15.0;
    p.t0 = -46.02;
    EXPECT_EQ(lloyd_taylor(15.0, p), 1.0);
    EXPECT_GT(lloyd_taylor(20.0, p), 1.0);
}

TEST(Synthetic, SeededOutputIsReproducible) {
    std::ostringstream a, b, c;
    write_site_stream(a, generate_synthetic_site(SyntheticSiteSpec{}, 7));
    write_site_stream(b, generate_synthetic_site(SyntheticSiteSpec{}, 7));
    write_site_stream(c, generate_synthetic_site(SyntheticSiteSpec{}, 8));
    EXPECT_EQ(a.str(), b.str());
    EXPECT_NE(a.str(), c.str());
}

TEST(Synthetic, InvalidSpecIsConfigError) {
    SyntheticSiteSpec spec;
    spec.days = 1;
    EXPECT_EQ(error_kind([&] { generate_synthetic_site(spec, 1); }), ErrorKind::ConfigError);
    spec = SyntheticSiteSpec{};
    spec.lloyd_taylor.t0 = 20.0;
    EXPECT_EQ(error_kind([&] { generate_synthetic_site(spec, 1); }), ErrorKind::ConfigError);
    EXPECT_EQ(error_kind([] { generate_sinusoids(4, 10); }), ErrorKind::ConfigError);
}

TEST(Synthetic, NoiseScalesWithNightRms) {
    SyntheticSiteSpec spec;
    spec.days = 120;
    spec.start = ymd(2014, 5, 1);
    spec.lloyd_taylor.noise_fraction = 0.05;
    const SiteSeries s = generate_synthetic_site(spec, 4);
    const auto& truth = s.drivers.at("reco_true");
    double sq = 0.0, err = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!s.night[i]) continue;
        sq += truth[i] * truth[i];
        err += (s.nee[i] - truth[i]) * (s.nee[i] - truth[i]);
        ++n;
    }
    const double ratio = std::sqrt(err / static_cast<double>(n)) / std::sqrt(sq / static_cast<double>(n));
    EXPECT_NEAR(ratio, 0.05, 0.005);
}
