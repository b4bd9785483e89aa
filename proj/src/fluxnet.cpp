#include "recodmd/fluxnet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

#include "recodmd/error.hpp"
#include "recodmd/text.hpp"

namespace recodmd {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool is_sentinel(double v) {
    return v == kMissingSentinel;
}

std::string infer_site_id(const std::filesystem::path& path) {
    const std::string stem = path.stem().string();
    // FLX_<SITE>_FLUXNET2015_...
    if (stem.rfind("FLX_", 0) == 0) {
        const auto end = stem.find('_', 4);
        return stem.substr(4, end == std::string::npos ? std::string::npos : end - 4);
    }
    return stem;
}

std::string line_ref(std::size_t line) {
    return "line " + std::to_string(line);
}

Vector to_vector(const std::vector<double>& src, std::size_t first, std::size_t len) {
    Vector v(static_cast<Index>(len));
    for (std::size_t i = 0; i < len; ++i) v(static_cast<Index>(i)) = src[first + i];
    return v;
}

Vector gap_filled(const std::vector<double>& src, std::size_t first, std::size_t len) {
    Vector v = to_vector(src, first, len);
    fill_gaps_linear(std::span<double>(v.data(), static_cast<std::size_t>(v.size())));
    return v;
}

struct Run {
    std::size_t first;
    std::size_t length;
};

// Maximal runs of records with night == flag and 30-minute spacing. Runs that
// touch the ends of the record or a time gap are incomplete and left out.
std::vector<Run> find_runs(const SiteSeries& s, std::uint8_t flag) {
    std::vector<Run> runs;
    const std::size_t n = s.size();
    auto contiguous = [&](std::size_t i) {  // record i follows i-1 without a gap
        return s.timestamps[i].minutes - s.timestamps[i - 1].minutes == kHalfHour;
    };
    std::size_t i = 0;
    while (i < n) {
        if (s.night[i] != flag) {
            ++i;
            continue;
        }
        std::size_t j = i + 1;
        while (j < n && s.night[j] == flag && contiguous(j)) ++j;
        const bool starts_clean = i > 0 && contiguous(i);
        const bool ends_clean = j < n && contiguous(j);
        if (starts_clean && ends_clean) runs.push_back({i, j - i});
        i = j;
    }
    return runs;
}

}  // namespace

std::string to_string(Hemisphere h) {
    return h == Hemisphere::North ? "north" : "south";
}

Hemisphere parse_hemisphere(const std::string& text) {
    if (text == "north" || text == "N" || text == "n") return Hemisphere::North;
    if (text == "south" || text == "S" || text == "s") return Hemisphere::South;
    throw Error(ErrorKind::ConfigError, "unknown hemisphere '" + text + "' (use north or south)");
}

void ColumnMap::bind(const std::string& logical, const std::string& column) {
    if (logical == "timestamp") timestamp = column;
    else if (logical == "nee") nee = column;
    else if (logical == "nee_qc") nee_qc = column;
    else if (logical == "night") night = column;
    else if (logical == "reco_nt") reco_nt = column;
    else if (logical == "reco_dt") reco_dt = column;
    else if (column.empty()) drivers.erase(logical);
    else drivers[logical] = column;
}

void SiteSeries::validate() const {
    const std::size_t n = timestamps.size();
    bool ok = nee.size() == n && nee_qc.size() == n && night.size() == n;
    for (const auto& [name, col] : drivers) ok = ok && col.size() == n;
    if (reco_nt) ok = ok && reco_nt->size() == n;
    if (reco_dt) ok = ok && reco_dt->size() == n;
    if (!ok) throw Error(ErrorKind::ParseError, "site columns have unequal lengths");
    for (std::size_t i = 1; i < n; ++i) {
        if (timestamps[i] <= timestamps[i - 1]) {
            throw Error(ErrorKind::ParseError, "timestamps not strictly increasing at record " +
                                                   std::to_string(i) + " (" +
                                                   format_timestamp(timestamps[i]) + ")");
        }
    }
}

SiteSeries parse_site_file(const std::filesystem::path& path, const ParseOptions& options,
                           ParseDiagnostics* diagnostics) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::InvalidInput, "cannot open site file " + path.string());
    }
    ParseOptions opts = options;
    SiteSeries s = parse_site_stream(in, opts, diagnostics);
    if (s.site_id.empty()) s.site_id = infer_site_id(path);
    return s;
}

SiteSeries parse_site_stream(std::istream& in, const ParseOptions& options,
                             ParseDiagnostics* diagnostics) {
    const ColumnMap& cm = options.columns;
    const char delim = options.delimiter;
    auto report = [&](std::string msg) {
        if (diagnostics) diagnostics->messages.push_back(std::move(msg));
    };

    SiteSeries s;
    s.site_id = options.site_id;
    s.hemisphere = options.hemisphere;

    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view t = trim(line);
        if (t.empty()) continue;
        if (t.front() == '#') {
            constexpr std::string_view key = "# site=";
            if (s.site_id.empty() && t.rfind(key, 0) == 0) s.site_id = std::string(t.substr(key.size()));
            continue;
        }
        for (auto f : split(t, delim)) header.emplace_back(f);
        break;
    }
    if (header.empty()) {
        throw Error(ErrorKind::SchemaError, "file has no header row");
    }

    auto find_col = [&](const std::string& name) -> std::optional<std::size_t> {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) return std::nullopt;
        return static_cast<std::size_t>(it - header.begin());
    };
    auto require_col = [&](const std::string& logical, const std::string& name) {
        const auto idx = find_col(name);
        if (!idx) {
            throw Error(ErrorKind::SchemaError, "column '" + name + "' (bound to " + logical +
                                                    ") not found in header");
        }
        return *idx;
    };

    const std::size_t c_ts = require_col("timestamp", cm.timestamp);
    const std::size_t c_nee = require_col("nee", cm.nee);
    const std::size_t c_qc = require_col("nee_qc", cm.nee_qc);
    const std::size_t c_night = require_col("night", cm.night);
    std::vector<std::pair<std::string, std::size_t>> c_drivers;
    for (const auto& [name, col] : cm.drivers) {
        c_drivers.emplace_back(name, require_col(name, col));
        s.drivers[name];
    }
    const auto c_nt = find_col(cm.reco_nt);
    const auto c_dt = find_col(cm.reco_dt);
    if (c_nt) s.reco_nt.emplace();
    if (c_dt) s.reco_dt.emplace();

    auto read_real = [&](std::string_view field, std::size_t ln, const std::string& what) {
        const auto v = parse_double(field);
        if (!v) {
            report(line_ref(ln) + ": unreadable " + what + " value '" + std::string(field) + "'");
            return kNaN;
        }
        if (is_sentinel(*v)) return kNaN;
        if (!std::isfinite(*v)) {
            report(line_ref(ln) + ": non-finite " + what + " value");
            return kNaN;
        }
        return *v;
    };

    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto fields = split(t, delim);
        if (fields.size() != header.size()) {
            report(line_ref(line_no) + ": expected " + std::to_string(header.size()) +
                   " fields, got " + std::to_string(fields.size()) + "; row skipped");
            continue;
        }
        const auto ts = parse_timestamp(fields[c_ts]);
        if (!ts) {
            throw Error(ErrorKind::ParseError, line_ref(line_no) + ": unparsable timestamp '" +
                                                   std::string(fields[c_ts]) + "'");
        }
        if (!s.timestamps.empty() && *ts <= s.timestamps.back()) {
            throw Error(ErrorKind::ParseError, line_ref(line_no) + ": timestamp " +
                                                   std::string(fields[c_ts]) +
                                                   " is not after the previous record");
        }
        s.timestamps.push_back(*ts);
        s.nee.push_back(read_real(fields[c_nee], line_no, "NEE"));

        const double qc = read_real(fields[c_qc], line_no, "QC");
        s.nee_qc.push_back(std::isnan(qc) ? -1 : static_cast<int>(std::lround(qc)));

        const double night = read_real(fields[c_night], line_no, "night");
        s.night.push_back(!std::isnan(night) && night != 0.0 ? 1 : 0);

        for (const auto& [name, idx] : c_drivers) {
            s.drivers[name].push_back(read_real(fields[idx], line_no, name));
        }
        if (c_nt) s.reco_nt->push_back(read_real(fields[*c_nt], line_no, "reco_nt"));
        if (c_dt) s.reco_dt->push_back(read_real(fields[*c_dt], line_no, "reco_dt"));
    }
    s.validate();
    return s;
}

void write_site_stream(std::ostream& out, const SiteSeries& s, const ColumnMap& cm, char delim) {
    auto real = [](double v) { return std::isnan(v) ? std::string("-9999") : format_double(v); };

    if (!s.site_id.empty()) out << "# site=" << s.site_id << '\n';
    out << cm.timestamp << delim << "TIMESTAMP_END" << delim << cm.nee << delim << cm.nee_qc
        << delim << cm.night;
    for (const auto& [name, col] : s.drivers) {
        const auto it = cm.drivers.find(name);
        out << delim << (it != cm.drivers.end() ? it->second : name);
    }
    if (s.reco_nt) out << delim << cm.reco_nt;
    if (s.reco_dt) out << delim << cm.reco_dt;
    out << '\n';

    for (std::size_t i = 0; i < s.size(); ++i) {
        out << format_timestamp(s.timestamps[i]) << delim
            << format_timestamp(Timestamp{s.timestamps[i].minutes + kHalfHour}) << delim
            << real(s.nee[i]) << delim << (s.nee_qc[i] < 0 ? -9999 : s.nee_qc[i]) << delim
            << static_cast<int>(s.night[i]);
        for (const auto& [name, col] : s.drivers) out << delim << real(col[i]);
        if (s.reco_nt) out << delim << real((*s.reco_nt)[i]);
        if (s.reco_dt) out << delim << real((*s.reco_dt)[i]);
        out << '\n';
    }
}

std::size_t fill_gaps_linear(std::span<double> v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> known;
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isnan(v[i])) known.push_back(i);
    }
    if (known.empty() || known.size() == n) return 0;

    std::size_t filled = 0;
    for (std::size_t i = 0; i < known.front(); ++i, ++filled) v[i] = v[known.front()];
    for (std::size_t i = known.back() + 1; i < n; ++i, ++filled) v[i] = v[known.back()];
    for (std::size_t k = 0; k + 1 < known.size(); ++k) {
        const std::size_t a = known[k];
        const std::size_t b = known[k + 1];
        for (std::size_t i = a + 1; i < b; ++i, ++filled) {
            const double w = static_cast<double>(i - a) / static_cast<double>(b - a);
            v[i] = (1.0 - w) * v[a] + w * v[b];
        }
    }
    return filled;
}

std::vector<NightRecord> segment_nights(const SiteSeries& s, int qc_threshold,
                                        double min_quality_fraction) {
    std::vector<NightRecord> out;
    for (const Run& run : find_runs(s, 1)) {
        NightRecord night;
        night.date = date_of(s.timestamps[run.first]);
        night.first_record = run.first;
        night.raw_length = run.length;
        night.observed.resize(run.length);

        std::vector<double> nee(run.length);
        std::size_t good = 0;
        for (std::size_t i = 0; i < run.length; ++i) {
            const std::size_t r = run.first + i;
            const bool ok = !std::isnan(s.nee[r]) && s.nee_qc[r] >= 0 && s.nee_qc[r] < qc_threshold;
            night.observed[i] = ok ? 1 : 0;
            nee[i] = ok ? s.nee[r] : kNaN;
            good += ok ? 1 : 0;
        }
        night.quality_fraction = static_cast<double>(good) / static_cast<double>(run.length);
        if (good == 0 || night.quality_fraction < min_quality_fraction) continue;

        fill_gaps_linear(nee);
        night.nee = Eigen::Map<const Vector>(nee.data(), static_cast<Index>(nee.size()));
        for (const auto& [name, col] : s.drivers) {
            night.drivers[name] = gap_filled(col, run.first, run.length);
        }
        if (s.reco_nt) night.reco_nt = to_vector(*s.reco_nt, run.first, run.length);
        if (s.reco_dt) night.reco_dt = to_vector(*s.reco_dt, run.first, run.length);
        out.push_back(std::move(night));
    }
    return out;
}

std::size_t shortest_night(std::span<const NightRecord> nights) {
    if (nights.empty()) return 0;
    std::size_t best = std::numeric_limits<std::size_t>::max();
    for (const auto& n : nights) best = std::min(best, static_cast<std::size_t>(n.nee.size()));
    return best;
}

std::vector<NightRecord> harmonize_nights(std::vector<NightRecord> nights, std::size_t night_length) {
    if (night_length == 0) {
        throw Error(ErrorKind::ConfigError, "night length must be >= 1");
    }
    std::vector<NightRecord> out;
    for (auto& n : nights) {
        const auto len = static_cast<std::size_t>(n.nee.size());
        if (len < night_length) continue;
        const auto off = static_cast<Index>((len - night_length) / 2);
        const auto keep = static_cast<Index>(night_length);
        n.nee = n.nee.segment(off, keep).eval();
        n.observed = std::vector<std::uint8_t>(n.observed.begin() + off, n.observed.begin() + off + keep);
        for (auto& [name, v] : n.drivers) v = v.segment(off, keep).eval();
        if (n.reco_nt) n.reco_nt = n.reco_nt->segment(off, keep).eval();
        if (n.reco_dt) n.reco_dt = n.reco_dt->segment(off, keep).eval();
        out.push_back(std::move(n));
    }
    if (out.empty() && !nights.empty()) {
        throw Error(ErrorKind::ConfigError, "night length " + std::to_string(night_length) +
                                                " exceeds every accepted night (longest is " +
                                                std::to_string(std::max_element(nights.begin(), nights.end(),
                                                    [](const auto& a, const auto& b) {
                                                        return a.raw_length < b.raw_length;
                                                    })->raw_length) +
                                                ")");
    }
    return out;
}

std::vector<NightRecord> extract_nights(const SiteSeries& series, const NightOptions& options) {
    auto nights = segment_nights(series, options.qc_threshold, options.min_quality_fraction);
    if (nights.empty()) return nights;
    const std::size_t len = options.night_length.value_or(shortest_night(nights));
    return harmonize_nights(std::move(nights), len);
}

bool in_season(Date date, Hemisphere hemisphere) {
    const unsigned m = static_cast<unsigned>(date.month());
    return hemisphere == Hemisphere::North ? (m >= 5 && m <= 9) : (m >= 1 && m <= 4);
}

std::vector<NightRecord> seasonal_filter(std::vector<NightRecord> nights, Hemisphere hemisphere) {
    std::erase_if(nights, [&](const NightRecord& n) { return !in_season(n.date, hemisphere); });
    return nights;
}

std::vector<DayRecord> segment_days(const SiteSeries& s) {
    std::vector<DayRecord> out;
    for (const Run& run : find_runs(s, 0)) {
        DayRecord day;
        day.date = date_of(s.timestamps[run.first]);
        day.first_record = run.first;
        day.length = run.length;
        for (const auto& [name, col] : s.drivers) day.drivers[name] = gap_filled(col, run.first, run.length);
        out.push_back(std::move(day));
    }
    return out;
}

Vector resample_linear(const Vector& values, Index n) {
    if (n < 1 || values.size() < 1) {
        throw Error(ErrorKind::InvalidInput, "resampling needs a non-empty source and n >= 1");
    }
    const Index len = values.size();
    Vector out(n);
    if (len == 1) {
        out.setConstant(values(0));
        return out;
    }
    if (n == 1) {
        // Single target point sits at the middle of the interval.
        const double pos = 0.5 * static_cast<double>(len - 1);
        const auto lo = static_cast<Index>(std::floor(pos));
        const Index hi = std::min(lo + 1, len - 1);
        const double w = pos - static_cast<double>(lo);
        out(0) = (1.0 - w) * values(lo) + w * values(hi);
        return out;
    }
    for (Index i = 0; i < n; ++i) {
        const double pos = static_cast<double>(i) * static_cast<double>(len - 1) / static_cast<double>(n - 1);
        const Index lo = std::min(static_cast<Index>(std::floor(pos)), len - 1);
        const Index hi = std::min(lo + 1, len - 1);
        const double w = pos - static_cast<double>(lo);
        out(i) = (1.0 - w) * values(lo) + w * values(hi);
    }
    return out;
}

Vector NormalizationParams::apply(const Vector& values) const {
    const double span = max - min;
    if (span == 0.0) return Vector::Zero(values.size());
    return (values.array() - min) / span;
}

Vector NormalizationParams::invert(const Vector& values) const {
    return values.array() * (max - min) + min;
}

NormalizationParams fit_normalization(std::span<const NightRecord> nights, const std::string& driver) {
    if (nights.empty()) {
        throw Error(ErrorKind::InsufficientData, "no nights to fit normalization for " + driver);
    }
    NormalizationParams p;
    p.driver = driver;
    p.min = std::numeric_limits<double>::infinity();
    p.max = -std::numeric_limits<double>::infinity();
    for (const auto& n : nights) {
        const auto it = n.drivers.find(driver);
        if (it == n.drivers.end()) {
            throw Error(ErrorKind::ConfigError, "driver '" + driver + "' missing on night " +
                                                    format_date(n.date));
        }
        for (double v : it->second) {
            if (std::isnan(v)) continue;
            p.min = std::min(p.min, v);
            p.max = std::max(p.max, v);
        }
    }
    if (p.min > p.max) {
        throw Error(ErrorKind::InsufficientData, "driver '" + driver + "' has no finite values");
    }
    return p;
}

}  // namespace recodmd
