#pragma once

// Deterministic synthetic flux sites used for testing and for exercising the
// CLI without licensed tower data. Two truth laws are available:
//
//  * Lti: nightly NEE vectors follow x[k+1] = A x[k] + B u[k+1] exactly (plus
//    optional white noise), with u the night's air-temperature vector. Nights
//    occupy a fixed clock window so the state dimension is constant.
//  * LloydTaylor: respiration R(T) = R_ref exp(E0 (1/(T_ref-T0) - 1/(T-T0)))
//    driven by a seasonal + diurnal + weather-anomaly temperature series, with
//    night flags from a solar daylength model.

#include <cstdint>
#include <string>
#include <vector>

#include "recodmd/fluxnet.hpp"

namespace recodmd {

enum class SyntheticKind { Lti, LloydTaylor };

struct ClimateSpec {
    double t_mean = 10.0;           // annual mean air temperature, degC
    double season_amp = 9.0;        // half the summer-winter contrast
    double diurnal_amp = 5.0;
    double anomaly_sd = 2.5;        // day-to-day weather anomaly
    double anomaly_ar = 0.7;        // lag-1 autocorrelation of the anomaly
    double halfhour_noise_sd = 0.3;
    double swc_mean = 30.0;         // soil water content, %
    double swc_amp = 8.0;
    double swc_anomaly_sd = 2.0;
};

struct LtiSpec {
    Matrix a;  // night_length x night_length; drawn at random when empty
    Matrix b;  // night_length x night_length; drawn at random when empty
    double spectral_radius = 0.8;
    double b_scale = 0.05;
    double noise_sd = 0.0;
    int night_start_hour = 22;
    std::size_t night_length = 8;
};

struct LloydTaylorSpec {
    double r_ref = 2.5;    // umol CO2 m-2 s-1 at t_ref
    double e0 = 308.56;    // K
    double t_ref = 15.0;   // degC
    double t0 = -46.02;    // degC
    double noise_fraction = 0.05;  // observation noise sd / RMS of nighttime respiration
    double latitude = 50.0;
    double gpp_max = 15.0;
    double bad_qc_fraction = 0.0;  // share of records flagged QC = 2
};

struct SyntheticSiteSpec {
    std::string site_id = "SYN-LT";
    SyntheticKind kind = SyntheticKind::LloydTaylor;
    Hemisphere hemisphere = Hemisphere::North;
    Date start{std::chrono::year{2014}, std::chrono::January, std::chrono::day{1}};
    int days = 730;
    ClimateSpec climate;
    LtiSpec lti;
    LloydTaylorSpec lloyd_taylor;
};

double lloyd_taylor(double temperature, const LloydTaylorSpec& p);

/// Throws ConfigError for an invalid spec. Identical spec and seed give
/// identical output.
SiteSeries generate_synthetic_site(const SyntheticSiteSpec& spec, std::uint64_t seed);

/// Sum of `count` (1..3) unit-scale sinusoids at fixed, mutually
/// incommensurate frequencies.
std::vector<double> generate_sinusoids(int count, std::size_t length);

}  // namespace recodmd
