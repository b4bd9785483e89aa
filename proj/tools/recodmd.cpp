// recodmd: command-line front end for the respiration DMD/DMDc toolkit.
//
// Exit codes: 0 success, 1 empty or degenerate result, 2 usage or data error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>

#include "recodmd/embedding.hpp"
#include "recodmd/error.hpp"
#include "recodmd/model_io.hpp"
#include "recodmd/pipeline.hpp"
#include "recodmd/report.hpp"
#include "recodmd/synthetic.hpp"
#include "recodmd/text.hpp"

namespace fs = std::filesystem;
using namespace recodmd;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitEmpty = 1;
constexpr int kExitUsage = 2;

struct SiteArgs {
    std::string data;
    std::string data_dir;
    std::vector<std::string> bindings;
    std::string delimiter = ",";
    std::string hemisphere = "north";
    std::string site_id;

    void add(CLI::App* app) {
        app->add_option("--data", data, "Half-hourly site file (required)");
        app->add_option("--data-dir", data_dir, "Directory for relative input paths")->envname("RECODMD_DATA_DIR");
        app->add_option("--bind", bindings, "Column binding logical=COLUMN (repeatable)")->default_str("");
        app->add_option("--delimiter", delimiter, "Field delimiter");
        app->add_option("--hemisphere", hemisphere, "Site hemisphere: north or south");
        app->add_option("--site-id", site_id, "Site identifier (default: from file)");
    }

    fs::path resolve(const std::string& path) const {
        fs::path p(path);
        if (!data_dir.empty() && p.is_relative() && !fs::exists(p)) return fs::path(data_dir) / p;
        return p;
    }

    ParseOptions parse_options() const {
        ParseOptions o;
        if (delimiter.size() != 1) throw Error(ErrorKind::ConfigError, "delimiter must be one character");
        o.delimiter = delimiter == "\\t" ? '\t' : delimiter.front();
        o.hemisphere = parse_hemisphere(hemisphere);
        o.site_id = site_id;
        for (const auto& b : bindings) {
            const auto eq = b.find('=');
            if (eq == std::string::npos) throw Error(ErrorKind::ConfigError, "binding '" + b + "' is not logical=COLUMN");
            o.columns.bind(b.substr(0, eq), b.substr(eq + 1));
        }
        return o;
    }

    SiteSeries load() const {
        ParseDiagnostics diag;
        SiteSeries s = parse_site_file(resolve(data), parse_options(), &diag);
        for (const auto& m : diag.messages) std::cerr << "warning: " << m << '\n';
        return s;
    }
};

struct ExperimentArgs {
    std::string preset = "none";
    std::string method = "dmdc";
    std::vector<std::string> control{"tair"};
    int embed_dim = 1;
    int train_nights = 5;
    int forecast_nights = 1;
    int window_step = 1;
    int gap_tolerance = 0;
    int rank_p = 0;
    int rank_r = 0;
    double energy = 0.99;
    int spectrum_embed_dim = 8;
    int qc_threshold = 2;
    double min_quality = 0.8;
    int night_length = 0;
    bool no_season = false;
    int last_years = 0;
    std::string alignment = "target";
    std::string normalization = "minmax";
    bool reconstruction = false;
    int threads = 1;

    CLI::Option* o_control = nullptr;
    CLI::Option* o_embed = nullptr;
    CLI::Option* o_train = nullptr;
    CLI::Option* o_forecast = nullptr;

    void add(CLI::App* app, bool with_preset) {
        if (with_preset) {
            app->add_option("--preset", preset, "Protocol preset: none, table1 (M=5, h=1) or table2 (M=14, h=14)")
                ->check(CLI::IsMember({"none", "table1", "table2"}));
        }
        app->add_option("--method", method, "dmd, dmdc or dmdc-tde");
        o_control = app->add_option("--control", control, "Control driver(s), comma separated")->delimiter(',');
        o_embed = app->add_option("--embed-dim", embed_dim, "Delay embedding dimension N (1 = none)");
        o_train = app->add_option("--train-nights", train_nights, "Training nights M");
        o_forecast = app->add_option("--forecast-nights", forecast_nights, "Forecast nights h");
        app->add_option("--window-step", window_step, "Nights between window starts");
        app->add_option("--gap-tolerance", gap_tolerance, "Rejected nights tolerated inside a window");
        app->add_option("--rank-p", rank_p, "Input-space truncation p (0 = auto)");
        app->add_option("--rank-r", rank_r, "Output-space truncation r (0 = site mode count)");
        app->add_option("--energy", energy, "Energy threshold for the site mode count");
        app->add_option("--spectrum-embed-dim", spectrum_embed_dim, "Hankel depth for the site mode count");
        app->add_option("--qc-threshold", qc_threshold, "Records with QC below this are good");
        app->add_option("--min-quality", min_quality, "Minimum good fraction per night");
        app->add_option("--night-length", night_length, "Half-hours per night vector (0 = shortest night)");
        app->add_flag("--no-season", no_season, "Keep nights from every month");
        app->add_option("--last-years", last_years, "Keep only the last K years (0 = all)");
        app->add_option("--control-alignment", alignment, "Driver night paired with a transition: target or source");
        app->add_option("--normalization", normalization, "Control normalization: minmax or none");
        app->add_flag("--reconstruction", reconstruction, "Score on the training nights instead of forecasting");
        app->add_option("--threads", threads, "Worker threads for window evaluation");
    }

    ExperimentConfig build() const {
        ExperimentConfig c = preset == "table2" ? preset_table2() : preset_table1();
        const bool preset_given = preset != "none";
        auto given = [](const CLI::Option* o) { return o != nullptr && o->count() > 0; };
        c.method = parse_method(method);
        const bool control_given = given(o_control);
        if (c.method == Method::Dmd) {
            if (control_given) throw Error(ErrorKind::ConfigError, "--control conflicts with --method dmd");
            c.control_drivers.clear();
        } else {
            c.control_drivers = control;
        }
        if (!preset_given || given(o_embed)) c.embed_dim = embed_dim;
        if (!preset_given || given(o_train)) c.train_nights = static_cast<std::size_t>(train_nights);
        if (!preset_given || given(o_forecast)) c.forecast_nights = static_cast<std::size_t>(forecast_nights);
        if (method == "dmdc-tde" && c.embed_dim < 2) {
            throw Error(ErrorKind::ConfigError, "dmdc-tde needs --embed-dim of at least 2");
        }
        if (train_nights < 1 || forecast_nights < 1 || window_step < 1 || gap_tolerance < 0 || threads < 1) {
            throw Error(ErrorKind::ConfigError, "night counts, step and threads must be positive");
        }
        c.window_step = static_cast<std::size_t>(window_step);
        c.gap_tolerance = static_cast<std::size_t>(gap_tolerance);
        if (rank_p > 0) c.rank_p = rank_p;
        if (rank_r > 0) c.rank_r = rank_r;
        c.energy_threshold = energy;
        c.spectrum_embed_dim = spectrum_embed_dim;
        c.qc_threshold = qc_threshold;
        c.min_quality_fraction = min_quality;
        if (night_length > 0) c.night_length = static_cast<std::size_t>(night_length);
        c.seasonal = !no_season;
        c.last_years = last_years;
        c.alignment = parse_alignment(alignment);
        c.normalization = parse_normalization(normalization);
        c.reconstruction_mode = reconstruction;
        c.threads = static_cast<unsigned>(threads);
        c.validate();
        return c;
    }
};

std::string render(const auto& writer) {
    std::ostringstream os;
    writer(os);
    return os.str();
}

int run_spectrum(const SiteArgs& site, const std::string& format, const std::string& series_name,
                 int embed_dim, double energy, const std::string& out, const ExperimentArgs& ex) {
    HankelMatrix h;
    if (format == "series") {
        std::ifstream in(site.resolve(site.data));
        if (!in) throw Error(ErrorKind::InvalidInput, "cannot open series file " + site.data);
        std::vector<double> values;
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const auto t = trim(line);
            if (t.empty() || t.front() == '#') continue;
            const auto v = parse_double(t);
            if (!v) throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": not a number");
            values.push_back(*v);
        }
        h = build_hankel(values, embed_dim);
    } else {
        const SiteSeries s = site.load();
        ExperimentConfig cfg = ex.build();
        const PreparedNights prepared = prepare_nights(cfg, s);
        std::vector<Vector> blocks;
        for (const auto& n : prepared.nights) {
            if (series_name == "nee") {
                blocks.push_back(n.nee);
            } else {
                const auto it = n.drivers.find(series_name);
                if (it == n.drivers.end()) throw Error(ErrorKind::ConfigError, "unknown series '" + series_name + "'");
                blocks.push_back(it->second);
            }
        }
        h = build_hankel(blocks, embed_dim);
    }
    const SingularSpectrum spec = hankel_spectrum(h, energy);
    write_file_atomic(out, render([&](std::ostream& os) { write_spectrum(os, spec); }));
    std::cout << "hankel " << h.data.rows() << "x" << h.data.cols() << '\n';
    std::cout << "dominant_count: " << spec.dominant_count << '\n';
    return kExitOk;
}

// Training window starting at `start` (or the first contiguous window).
std::span<const NightRecord> pick_training(const ExperimentConfig& cfg, const std::vector<NightRecord>& nights,
                                           const std::string& start) {
    const std::size_t m = cfg.train_nights;
    for (std::size_t i = 0; i + m <= nights.size(); ++i) {
        if (!start.empty()) {
            const auto d = parse_date(start);
            if (!d) throw Error(ErrorKind::ConfigError, "bad --start-date '" + start + "' (YYYY-MM-DD)");
            if (nights[i].date != *d) continue;
        }
        bool contiguous = true;
        for (std::size_t k = i + 1; k < i + m; ++k) {
            const long gap = days_between(nights[k - 1].date, nights[k].date);
            contiguous = contiguous && gap >= 1 && static_cast<std::size_t>(gap) <= cfg.gap_tolerance + 1;
        }
        if (contiguous) return std::span(nights).subspan(i, m);
        if (!start.empty()) throw Error(ErrorKind::InsufficientData, "nights after " + start + " are not contiguous");
    }
    throw Error(ErrorKind::EmptyExperiment, "no " + std::to_string(m) + " contiguous accepted nights" +
                                                (start.empty() ? std::string() : " starting " + start));
}

int run_fit(const SiteArgs& site, const ExperimentArgs& ex, const std::string& start, const std::string& out) {
    const ExperimentConfig cfg = ex.build();
    const SiteSeries s = site.load();
    const PreparedNights prepared = prepare_nights(cfg, s);
    const auto training = pick_training(cfg, prepared.nights, start);
    const TrainedModel model = fit_window(cfg, training, prepared.mode_count);
    save_model(model, out);
    std::cout << "trained " << cfg.method_label() << " on " << training.size() << " nights "
              << format_date(training.front().date) << " .. " << format_date(training.back().date)
              << " (night_length " << model.night_length << ")\n";
    return kExitOk;
}

int run_forecast(const SiteArgs& site, const std::string& model_path, int nights, const std::string& initial,
                 const std::string& out, int qc_threshold, double min_quality) {
    if (nights < 1) throw Error(ErrorKind::ConfigError, "--nights must be >= 1");
    TrainedModel model = load_model(site.resolve(model_path));
    if (!initial.empty()) {
        std::ifstream in(site.resolve(initial));
        if (!in) throw Error(ErrorKind::InvalidInput, "cannot open initial state " + initial);
        std::vector<double> values;
        std::string tok;
        while (in >> tok) {
            const auto v = parse_double(tok);
            if (!v) throw Error(ErrorKind::ParseError, "initial state holds a non-number '" + tok + "'");
            values.push_back(*v);
        }
        const auto expected = model.night_length * static_cast<std::size_t>(model.embed_dim);
        if (values.size() != expected) {
            throw Error(ErrorKind::InvalidShape, "initial state has " + std::to_string(values.size()) +
                                                     " values; model state is " + std::to_string(model.embed_dim) +
                                                     " x " + std::to_string(model.night_length) + " = " +
                                                     std::to_string(expected));
        }
        for (std::size_t b = 0; b < model.recent_states.size(); ++b) {
            model.recent_states[b] = Eigen::Map<const Vector>(values.data() + b * model.night_length,
                                                               static_cast<Index>(model.night_length));
        }
    }

    const SiteSeries s = site.load();
    auto all = segment_nights(s, qc_threshold, min_quality);
    std::erase_if(all, [&](const NightRecord& n) { return days_between(model.last_training_date, n.date) < 1; });
    const std::size_t longest = std::accumulate(all.begin(), all.end(), std::size_t{0},
                                                [](std::size_t a, const NightRecord& n) { return std::max(a, n.raw_length); });
    if (!all.empty() && longest < model.night_length) {
        throw Error(ErrorKind::InvalidShape, "data nights hold at most " + std::to_string(longest) +
                                                 " half-hours; model state needs " + std::to_string(model.night_length));
    }
    std::vector<NightRecord> future = all.empty() ? all : harmonize_nights(std::move(all), model.night_length);
    if (future.size() > static_cast<std::size_t>(nights)) future.resize(static_cast<std::size_t>(nights));

    const Matrix fc = forecast_window(model, future, static_cast<std::size_t>(nights));
    std::vector<Date> dates;
    for (const auto& n : future) dates.push_back(n.date);
    write_file_atomic(out, render([&](std::ostream& os) { write_forecast(os, fc, dates, &future); }));
    std::cout << "forecast " << nights << " night(s) after " << format_date(model.last_training_date) << '\n';
    return kExitOk;
}

int run_experiment_cmd(const SiteArgs& site, const ExperimentArgs& ex, const std::string& out_dir) {
    const ExperimentConfig cfg = ex.build();
    const SiteSeries s = site.load();
    const ExperimentReport report = run_experiment(cfg, s);
    fs::create_directories(out_dir);
    write_file_atomic(fs::path(out_dir) / "summary.tsv", render([&](std::ostream& os) { write_summary(os, report); }));
    write_file_atomic(fs::path(out_dir) / "windows.tsv", render([&](std::ostream& os) { write_windows(os, report); }));
    std::cout << render([&](std::ostream& os) { write_summary(os, report); });
    if (report.skipped > 0) {
        std::cerr << "note: " << report.skipped << " window placement(s) skipped; reasons in windows.tsv\n";
    }
    return kExitOk;
}

struct SynthArgs {
    std::string kind = "lloyd-taylor";
    std::uint64_t seed = 1;
    std::string out;
    int days = 730;
    std::string start = "2014-01-01";
    std::string site_id;
    std::string hemisphere = "north";
    double noise = 0.05;
    double latitude = 50.0;
    int night_length = 8;
    double bad_qc = 0.0;
    int sinusoids = 3;
    int length = 400;
};

int run_synth(const SynthArgs& a) {
    if (a.kind == "sinusoids") {
        const auto values = generate_sinusoids(a.sinusoids, static_cast<std::size_t>(a.length));
        write_file_atomic(a.out, render([&](std::ostream& os) {
                              os << "# recodmd-series v1\n";
                              for (double v : values) os << format_double(v) << '\n';
                          }));
        std::cout << "wrote " << values.size() << " samples\n";
        return kExitOk;
    }
    SyntheticSiteSpec spec;
    if (a.kind == "lti") {
        spec.kind = SyntheticKind::Lti;
        spec.site_id = "SYN-LTI";
        spec.lti.noise_sd = a.noise;
        spec.lti.night_length = static_cast<std::size_t>(a.night_length);
    } else if (a.kind == "lloyd-taylor") {
        spec.kind = SyntheticKind::LloydTaylor;
        spec.lloyd_taylor.noise_fraction = a.noise;
        spec.lloyd_taylor.latitude = a.latitude;
        spec.lloyd_taylor.bad_qc_fraction = a.bad_qc;
    } else {
        throw Error(ErrorKind::ConfigError, "unknown synthetic kind '" + a.kind + "'");
    }
    if (!a.site_id.empty()) spec.site_id = a.site_id;
    spec.hemisphere = parse_hemisphere(a.hemisphere);
    spec.days = a.days;
    const auto start = parse_date(a.start);
    if (!start) throw Error(ErrorKind::ConfigError, "bad --start '" + a.start + "' (YYYY-MM-DD)");
    spec.start = *start;
    const SiteSeries s = generate_synthetic_site(spec, a.seed);
    write_file_atomic(a.out, render([&](std::ostream& os) { write_site_stream(os, s); }));
    std::cout << "wrote " << s.size() << " half-hourly records for " << s.site_id << '\n';
    return kExitOk;
}

// Keys from a config file fill only the options the command line left unset.
void apply_config(CLI::App* sub, const std::string& path) {
    if (path.empty()) return;
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::ConfigError, "cannot open config file '" + path + "'");
    for (const CLI::ConfigItem& item : CLI::ConfigINI().from_config(in)) {
        if (item.name == "++" || item.name == "--") continue;  // section markers
        if (!item.parents.empty() && item.parents.front() != sub->get_name()) continue;
        CLI::Option* opt = sub->get_option_no_throw("--" + item.name);
        if (opt == nullptr || item.name == "config") {
            throw Error(ErrorKind::ConfigError, "unknown key '" + item.name + "' in " + path);
        }
        if (opt->count() > 0) continue;
        for (const auto& v : item.inputs) opt->add_result(v);
        opt->run_callback();
    }
}

void require_option(const CLI::App* sub, const std::string& name) {
    if (sub->get_option(name)->count() == 0) {
        throw Error(ErrorKind::ConfigError, name + " is required (command line or --config)");
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"recodmd - ecosystem respiration forecasting with DMD / DMDc", "recodmd"};
    app.option_defaults()->always_capture_default();
    app.require_subcommand(1);
    app.get_formatter()->column_width(36);

    // spectrum
    auto* spectrum = app.add_subcommand("spectrum", "Hankel singular-value spectrum and dominant mode count");
    spectrum->option_defaults()->always_capture_default();
    SiteArgs spectrum_site;
    ExperimentArgs spectrum_ex;
    std::string spectrum_format = "site";
    std::string spectrum_series = "nee";
    int spectrum_embed = 12;
    double spectrum_energy = kDefaultEnergyThreshold;
    std::string spectrum_out = "spectrum.txt";
    std::string spectrum_config;
    spectrum->add_option("--config", spectrum_config, "key=value configuration file");
    spectrum_site.add(spectrum);
    spectrum->add_option("--format", spectrum_format, "Input format: site or series (one value per line)")
        ->check(CLI::IsMember({"site", "series"}));
    spectrum->add_option("--series", spectrum_series, "Night series for site input: nee or a driver name");
    spectrum->add_option("--hankel-dim", spectrum_embed, "Hankel embedding dimension N");
    spectrum->add_option("--hankel-energy", spectrum_energy, "Energy threshold for the dominant count");
    spectrum->add_option("--out", spectrum_out, "Spectrum output file");
    spectrum->add_option("--qc-threshold", spectrum_ex.qc_threshold, "Records with QC below this are good");
    spectrum->add_option("--min-quality", spectrum_ex.min_quality, "Minimum good fraction per night");
    spectrum->add_flag("--no-season", spectrum_ex.no_season, "Keep nights from every month");

    // fit
    auto* fit = app.add_subcommand("fit", "Train one model on a window of nights and save it");
    fit->option_defaults()->always_capture_default();
    SiteArgs fit_site;
    ExperimentArgs fit_ex;
    std::string fit_start;
    std::string fit_out = "model.json";
    std::string fit_config;
    fit->add_option("--config", fit_config, "key=value configuration file");
    fit_site.add(fit);
    fit_ex.add(fit, true);
    fit->add_option("--start-date", fit_start, "First training night YYYY-MM-DD (default: first window)");
    fit->add_option("--out", fit_out, "Model output file");

    // forecast
    auto* forecast = app.add_subcommand("forecast", "Forecast the nights after a saved model's training window");
    forecast->option_defaults()->always_capture_default();
    SiteArgs fc_site;
    std::string fc_model;
    int fc_nights = 1;
    std::string fc_initial;
    std::string fc_out = "forecast.tsv";
    int fc_qc = 2;
    double fc_min_quality = 0.8;
    std::string forecast_config;
    forecast->add_option("--config", forecast_config, "key=value configuration file");
    fc_site.add(forecast);
    forecast->add_option("--model", fc_model, "Model file written by fit (required)");
    forecast->add_option("--nights", fc_nights, "Nights to forecast");
    forecast->add_option("--initial-state", fc_initial, "Override the initial state (whitespace-separated values)");
    forecast->add_option("--out", fc_out, "Forecast output file");
    forecast->add_option("--qc-threshold", fc_qc, "Records with QC below this are good");
    forecast->add_option("--min-quality", fc_min_quality, "Minimum good fraction per night");

    // experiment
    auto* experiment = app.add_subcommand("experiment", "Sliding-window forecast experiment with RMSE report");
    experiment->option_defaults()->always_capture_default();
    SiteArgs ex_site;
    ExperimentArgs ex_args;
    std::string ex_out = "report";
    std::string experiment_config;
    experiment->add_option("--config", experiment_config, "key=value configuration file");
    ex_site.add(experiment);
    ex_args.add(experiment, true);
    experiment->add_option("--out-dir", ex_out, "Directory for summary.tsv and windows.tsv");

    // synth
    auto* synth = app.add_subcommand("synth", "Write a deterministic synthetic site or test series");
    synth->option_defaults()->always_capture_default();
    SynthArgs sy;
    synth->add_option("--kind", sy.kind, "lloyd-taylor, lti or sinusoids")
        ->check(CLI::IsMember({"lloyd-taylor", "lti", "sinusoids"}));
    synth->add_option("--seed", sy.seed, "Random seed");
    synth->add_option("--out", sy.out, "Output file")->required();
    synth->add_option("--days", sy.days, "Days of half-hourly records");
    synth->add_option("--start", sy.start, "First day YYYY-MM-DD");
    synth->add_option("--site-id", sy.site_id, "Site identifier (default per kind)");
    synth->add_option("--hemisphere", sy.hemisphere, "north or south");
    synth->add_option("--noise", sy.noise, "Noise: fraction of nighttime RMS (lloyd-taylor) or sd (lti)");
    synth->add_option("--latitude", sy.latitude, "Latitude for the daylength model");
    synth->add_option("--night-length", sy.night_length, "Half-hours per night (lti)");
    synth->add_option("--bad-qc", sy.bad_qc, "Fraction of records flagged QC=2 (lloyd-taylor)");
    synth->add_option("--sinusoids", sy.sinusoids, "Number of sinusoids (sinusoids kind)");
    synth->add_option("--length", sy.length, "Series length (sinusoids kind)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*spectrum) apply_config(spectrum, spectrum_config);
        if (*fit) apply_config(fit, fit_config);
        if (*forecast) apply_config(forecast, forecast_config);
        if (*experiment) apply_config(experiment, experiment_config);
        for (CLI::App* sub : {spectrum, fit, forecast, experiment}) {
            if (*sub) require_option(sub, "--data");
        }
        if (*forecast) require_option(forecast, "--model");

        if (*spectrum) {
            return run_spectrum(spectrum_site, spectrum_format, spectrum_series, spectrum_embed, spectrum_energy,
                                spectrum_out, spectrum_ex);
        }
        if (*fit) return run_fit(fit_site, fit_ex, fit_start, fit_out);
        if (*forecast) return run_forecast(fc_site, fc_model, fc_nights, fc_initial, fc_out, fc_qc, fc_min_quality);
        if (*experiment) return run_experiment_cmd(ex_site, ex_args, ex_out);
        if (*synth) return run_synth(sy);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.kind() == ErrorKind::EmptyExperiment ? kExitEmpty : kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}
