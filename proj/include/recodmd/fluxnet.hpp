#pragma once

// Half-hourly eddy-covariance files in FLUXNET2015 layout: header row,
// delimiter-separated values, -9999 as the missing sentinel and timestamps
// as YYYYMMDDHHMM. Column names are bound through a ColumnMap so other
// datasets can be read without code changes.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "recodmd/linalg.hpp"
#include "recodmd/timestamp.hpp"

namespace recodmd {

enum class Hemisphere { North, South };

std::string to_string(Hemisphere h);
Hemisphere parse_hemisphere(const std::string& text);

inline constexpr double kMissingSentinel = -9999.0;

struct ColumnMap {
    std::string timestamp = "TIMESTAMP_START";
    std::string nee = "NEE_VUT_REF";
    std::string nee_qc = "NEE_VUT_REF_QC";
    std::string night = "NIGHT";
    std::string reco_nt = "RECO_NT_VUT_REF";  // optional baseline column
    std::string reco_dt = "RECO_DT_VUT_REF";  // optional baseline column
    std::map<std::string, std::string> drivers{{"tair", "TA_F"}, {"swc", "SWC_F_MDS_1"}};

    /// Binds a logical field (timestamp, nee, nee_qc, night, reco_nt,
    /// reco_dt, or any driver name) to a column. An empty column name
    /// removes a driver binding.
    void bind(const std::string& logical, const std::string& column);
};

/// Columnar half-hourly records. Missing reals are NaN, a missing QC flag is -1.
struct SiteSeries {
    std::string site_id;
    Hemisphere hemisphere = Hemisphere::North;
    std::vector<Timestamp> timestamps;
    std::vector<double> nee;
    std::vector<int> nee_qc;
    std::vector<std::uint8_t> night;
    std::map<std::string, std::vector<double>> drivers;
    std::optional<std::vector<double>> reco_nt;
    std::optional<std::vector<double>> reco_dt;

    std::size_t size() const { return timestamps.size(); }
    /// Strictly increasing timestamps and equal column lengths; throws ParseError.
    void validate() const;
};

struct ParseOptions {
    ColumnMap columns;
    char delimiter = ',';
    std::string site_id;  // inferred from a "# site=" line or the file name when empty
    Hemisphere hemisphere = Hemisphere::North;
};

/// Rows that were skipped or had unreadable values, as "line N: reason".
struct ParseDiagnostics {
    std::vector<std::string> messages;
};

SiteSeries parse_site_file(const std::filesystem::path& path, const ParseOptions& options,
                           ParseDiagnostics* diagnostics = nullptr);
SiteSeries parse_site_stream(std::istream& in, const ParseOptions& options,
                             ParseDiagnostics* diagnostics = nullptr);

/// Writes the layout parse_site_stream reads, using shortest round-trip
/// number formatting and -9999 for missing values.
void write_site_stream(std::ostream& out, const SiteSeries& series,
                       const ColumnMap& columns = ColumnMap{}, char delimiter = ',');

/// One accepted night. Vectors are aligned half-hour by half-hour.
struct NightRecord {
    Date date;                               // calendar day on which the night starts
    Vector nee;                              // gap-filled, finite
    std::vector<std::uint8_t> observed;      // 1 where NEE was measured with good QC
    std::map<std::string, Vector> drivers;   // gap-filled; NaN only if a driver is absent all night
    std::optional<Vector> reco_nt;           // NaN where missing
    std::optional<Vector> reco_dt;
    double quality_fraction = 0.0;
    std::size_t first_record = 0;  // index of the first half-hour in the SiteSeries
    std::size_t raw_length = 0;    // half-hours before harmonization
};

struct NightOptions {
    int qc_threshold = 2;
    double min_quality_fraction = 0.8;
    std::optional<std::size_t> night_length;  // defaults to the shortest accepted night
};

/// Groups contiguous night=1 runs, drops runs cut by the start or end of the
/// record, applies the QC acceptance rule and gap-fills by linear
/// interpolation. Nights keep their natural length.
std::vector<NightRecord> segment_nights(const SiteSeries& series, int qc_threshold = 2,
                                        double min_quality_fraction = 0.8);

/// Center-trims every night to `night_length` samples; shorter nights are
/// dropped. Throws ConfigError when no night is long enough.
std::vector<NightRecord> harmonize_nights(std::vector<NightRecord> nights, std::size_t night_length);

/// Length of the shortest night, or 0 for an empty set.
std::size_t shortest_night(std::span<const NightRecord> nights);

/// segment_nights followed by harmonize_nights.
std::vector<NightRecord> extract_nights(const SiteSeries& series, const NightOptions& options = {});

/// Keeps nights starting in May-September (north) or January-April (south).
std::vector<NightRecord> seasonal_filter(std::vector<NightRecord> nights, Hemisphere hemisphere);
bool in_season(Date date, Hemisphere hemisphere);

/// Daytime run between two nights, dated by the calendar day it falls on.
struct DayRecord {
    Date date;
    std::map<std::string, Vector> drivers;  // gap-filled
    std::size_t first_record = 0;
    std::size_t length = 0;
};

std::vector<DayRecord> segment_days(const SiteSeries& series);

/// Linear resampling of `values` onto `n` equally spaced points spanning the same interval.
Vector resample_linear(const Vector& values, Index n);

/// Min-max scaling parameters for one driver.
struct NormalizationParams {
    std::string driver;
    double min = 0.0;
    double max = 0.0;

    /// (v - min) / (max - min); all zeros when max == min. Not clipped.
    Vector apply(const Vector& values) const;
    Vector invert(const Vector& values) const;
};

NormalizationParams fit_normalization(std::span<const NightRecord> nights, const std::string& driver);

/// Fills NaN entries by linear interpolation, holding the nearest value at the
/// ends. Returns the number of filled entries; an all-NaN input is left as is.
std::size_t fill_gaps_linear(std::span<double> values);

}  // namespace recodmd
