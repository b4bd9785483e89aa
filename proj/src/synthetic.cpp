#include "recodmd/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "recodmd/error.hpp"

namespace recodmd {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_spec(const SyntheticSiteSpec& spec) {
    auto fail = [](const std::string& msg) { throw Error(ErrorKind::ConfigError, msg); };
    if (spec.days < 2) fail("synthetic site needs at least 2 days");
    if (spec.climate.anomaly_ar <= -1.0 || spec.climate.anomaly_ar >= 1.0) {
        fail("anomaly autocorrelation must lie in (-1, 1)");
    }
    if (spec.climate.anomaly_sd < 0 || spec.climate.halfhour_noise_sd < 0 ||
        spec.climate.swc_anomaly_sd < 0) {
        fail("noise standard deviations must be non-negative");
    }
    if (spec.kind == SyntheticKind::Lti) {
        const auto& s = spec.lti;
        const auto n = static_cast<Index>(s.night_length);
        if (s.night_length < 1 || s.night_length > 40) fail("LTI night length must be in [1, 40]");
        if (s.night_start_hour < 12 || s.night_start_hour > 23) {
            fail("LTI night must start between 12:00 and 23:00");
        }
        if (s.noise_sd < 0) fail("LTI noise sd must be non-negative");
        if (s.a.size() && (s.a.rows() != n || s.a.cols() != n)) fail("LTI A must be night_length square");
        if (s.b.size() && (s.b.rows() != n || s.b.cols() != n)) fail("LTI B must be night_length square");
        if (!s.a.size() && !(s.spectral_radius > 0.0 && s.spectral_radius < 1.0)) {
            fail("LTI spectral radius must lie in (0, 1)");
        }
    } else {
        const auto& p = spec.lloyd_taylor;
        if (p.r_ref <= 0 || p.e0 <= 0) fail("Lloyd-Taylor R_ref and E0 must be positive");
        if (p.t_ref <= p.t0) fail("Lloyd-Taylor T_ref must exceed T0");
        if (p.noise_fraction < 0) fail("noise fraction must be non-negative");
        if (std::abs(p.latitude) >= 66.0) fail("latitude must be within the polar circles");
        if (p.bad_qc_fraction < 0 || p.bad_qc_fraction > 1) fail("bad QC fraction must lie in [0, 1]");
    }
}

// Daily weather anomalies, AR(1), interpolated linearly between local noons.
class DailyAnomaly {
public:
    DailyAnomaly(int days, double sd, double ar, std::mt19937_64& rng) : values_(static_cast<std::size_t>(days) + 2) {
        std::normal_distribution<double> z(0.0, 1.0);
        const double innov = sd * std::sqrt(1.0 - ar * ar);
        double a = sd * z(rng);
        for (auto& v : values_) {
            v = a;
            a = ar * a + innov * z(rng);
        }
    }

    // `t_days` counts days since the start, noon of day d at d + 0.5.
    double at(double t_days) const {
        const double pos = std::clamp(t_days - 0.5, 0.0, static_cast<double>(values_.size() - 1));
        const auto lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, values_.size() - 1);
        const double w = pos - static_cast<double>(lo);
        return (1.0 - w) * values_[lo] + w * values_[hi];
    }

private:
    std::vector<double> values_;
};

struct DaylightWindow {
    double sunrise;
    double sunset;
};

DaylightWindow daylight(int doy, double latitude_deg) {
    const double decl = 23.44 * std::numbers::pi / 180.0 * std::sin(kTwoPi * (284.0 + doy) / 365.0);
    const double lat = latitude_deg * std::numbers::pi / 180.0;
    const double c = std::clamp(-std::tan(lat) * std::tan(decl), -1.0, 1.0);
    const double half_day_hours = std::acos(c) * 180.0 / std::numbers::pi / 15.0;
    return {12.0 - half_day_hours, 12.0 + half_day_hours};
}

Matrix random_matrix(Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> z(0.0, 1.0);
    Matrix m(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) m(i, j) = z(rng);
    return m;
}

}  // namespace

double lloyd_taylor(double temperature, const LloydTaylorSpec& p) {
    return p.r_ref * std::exp(p.e0 * (1.0 / (p.t_ref - p.t0) - 1.0 / (temperature - p.t0)));
}

SiteSeries generate_synthetic_site(const SyntheticSiteSpec& spec, std::uint64_t seed) {
    check_spec(spec);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    const ClimateSpec& cl = spec.climate;
    const DailyAnomaly t_anom(spec.days, cl.anomaly_sd, cl.anomaly_ar, rng);
    const DailyAnomaly swc_anom(spec.days, cl.swc_anomaly_sd, cl.anomaly_ar, rng);
    const double season_sign = spec.hemisphere == Hemisphere::North ? 1.0 : -1.0;

    const std::size_t records = static_cast<std::size_t>(spec.days) * 48;
    SiteSeries s;
    s.site_id = spec.site_id;
    s.hemisphere = spec.hemisphere;
    s.timestamps.resize(records);
    s.nee.resize(records);
    s.nee_qc.assign(records, 0);
    s.night.resize(records);
    auto& tair = s.drivers["tair"];
    auto& swc = s.drivers["swc"];
    tair.resize(records);
    swc.resize(records);

    const Timestamp t0 = make_timestamp(spec.start, 0, 0);
    for (std::size_t i = 0; i < records; ++i) {
        const Timestamp t{t0.minutes + static_cast<std::int64_t>(i) * kHalfHour};
        s.timestamps[i] = t;
        const double t_days = static_cast<double>(i) / 48.0;
        const double hour = hour_of_day(t);
        const int doy = day_of_year(date_of(t));
        const double season = -season_sign * std::cos(kTwoPi * (doy - 15) / 365.0);
        tair[i] = cl.t_mean + cl.season_amp * season +
                  cl.diurnal_amp * std::sin(kTwoPi * (hour - 9.0) / 24.0) + t_anom.at(t_days) +
                  cl.halfhour_noise_sd * z(rng);
        swc[i] = cl.swc_mean - cl.swc_amp * season + swc_anom.at(t_days) + 0.1 * z(rng);
    }

    if (spec.kind == SyntheticKind::Lti) {
        const LtiSpec& ls = spec.lti;
        const auto n = static_cast<Index>(ls.night_length);
        Matrix a = ls.a;
        if (!a.size()) {
            a = random_matrix(n, rng);
            const double rho = Eigen::EigenSolver<Matrix>(a, false).eigenvalues().cwiseAbs().maxCoeff();
            a *= ls.spectral_radius / rho;
        }
        Matrix b = ls.b.size() ? ls.b : Matrix(ls.b_scale * random_matrix(n, rng));

        // Night k occupies [night_start_hour, +night_length half-hours) of day k.
        const std::size_t start_slot = static_cast<std::size_t>(ls.night_start_hour) * 2;
        Vector state = Vector::Zero(n);
        bool first = true;
        for (int d = 0; d < spec.days; ++d) {
            const std::size_t base = static_cast<std::size_t>(d) * 48 + start_slot;
            if (base + ls.night_length > records) break;
            Vector u(n);
            for (Index j = 0; j < n; ++j) u(j) = tair[base + static_cast<std::size_t>(j)];
            if (first) {
                for (Index j = 0; j < n; ++j) state(j) = 1.0 + 0.5 * z(rng);
                first = false;
            } else {
                state = a * state + b * u;
            }
            for (Index j = 0; j < n; ++j) {
                const std::size_t r = base + static_cast<std::size_t>(j);
                s.night[r] = 1;
                s.nee[r] = state(j) + ls.noise_sd * z(rng);
            }
        }
        for (std::size_t i = 0; i < records; ++i) {
            if (!s.night[i]) s.nee[i] = -2.0 + 0.1 * std::sin(static_cast<double>(i));
        }
        return s;
    }

    const LloydTaylorSpec& p = spec.lloyd_taylor;
    std::vector<double> reco(records);
    double night_sq = 0.0;
    std::size_t night_n = 0;
    for (std::size_t i = 0; i < records; ++i) {
        const Timestamp t = s.timestamps[i];
        const double hour = hour_of_day(t) + 0.25;  // interval midpoint
        const DaylightWindow dw = daylight(day_of_year(date_of(t)), p.latitude);
        s.night[i] = (hour < dw.sunrise || hour >= dw.sunset) ? 1 : 0;
        reco[i] = lloyd_taylor(tair[i], p);
        if (s.night[i]) {
            night_sq += reco[i] * reco[i];
            ++night_n;
        }
    }
    const double sigma = p.noise_fraction * std::sqrt(night_sq / static_cast<double>(std::max<std::size_t>(night_n, 1)));

    LloydTaylorSpec nt = p;
    nt.e0 *= 0.9;
    nt.r_ref *= 1.05;
    LloydTaylorSpec dt = p;
    dt.e0 *= 1.1;
    dt.r_ref *= 0.95;
    s.reco_nt.emplace(records);
    s.reco_dt.emplace(records);
    auto& truth = s.drivers["reco_true"];
    truth = reco;

    for (std::size_t i = 0; i < records; ++i) {
        const double hour = hour_of_day(s.timestamps[i]) + 0.25;
        const DaylightWindow dw = daylight(day_of_year(date_of(s.timestamps[i])), p.latitude);
        double gpp = 0.0;
        if (!s.night[i]) gpp = p.gpp_max * std::sin(std::numbers::pi * (hour - dw.sunrise) / (dw.sunset - dw.sunrise));
        s.nee[i] = reco[i] - std::max(gpp, 0.0) + sigma * z(rng);
        (*s.reco_nt)[i] = lloyd_taylor(tair[i], nt);
        (*s.reco_dt)[i] = lloyd_taylor(tair[i], dt);
        if (p.bad_qc_fraction > 0.0 && unif(rng) < p.bad_qc_fraction) s.nee_qc[i] = 2;
    }
    return s;
}

std::vector<double> generate_sinusoids(int count, std::size_t length) {
    if (count < 1 || count > 3) {
        throw Error(ErrorKind::ConfigError, "sinusoid count must be 1, 2 or 3");
    }
    constexpr double freq[3] = {0.7071067811865476, 0.3464101615137755, 1.0164004118038380};
    constexpr double amp[3] = {1.0, 0.8, 0.6};
    constexpr double phase[3] = {0.3, 1.1, 2.0};
    std::vector<double> out(length, 0.0);
    for (std::size_t i = 0; i < length; ++i) {
        for (int k = 0; k < count; ++k) {
            out[i] += amp[k] * std::sin(freq[k] * static_cast<double>(i) + phase[k]);
        }
    }
    return out;
}

}  // namespace recodmd
