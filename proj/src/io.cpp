#include "wvb/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

namespace wvb {

using nlohmann::json;

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    fields.push_back(cur);
    return fields;
}

double parse_double(const std::string& s, const std::string& where) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw IoError(where + ": cannot parse number '" + s + "'");
    }
}

void check_keys(const json& obj, const std::string& prefix, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError(prefix.empty() ? "<root>" : prefix, "expected a JSON object");
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw ConfigError(prefix.empty() ? key : prefix + "." + key, "unknown field");
    }
}

template <typename T>
void read_field(const json& obj, const char* key, const std::string& prefix, T& out) {
    if (!obj.contains(key)) return;
    const std::string field = prefix.empty() ? key : prefix + "." + key;
    const json& v = obj.at(key);
    if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError(field, "expected a boolean");
        out = v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
        if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
            throw ConfigError(field, "expected a non-negative integer");
        }
        out = v.get<std::uint64_t>();
    } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw ConfigError(field, "expected an integer");
        out = v.get<T>();
    } else {
        if (!v.is_number()) throw ConfigError(field, "expected a number");
        out = v.get<T>();
    }
}

}  // namespace

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

AnalysisOptions RunConfig::resolved_analysis() const {
    AnalysisOptions a = analysis;
    a.omega = experiment.protocol.omega;
    a.delta = experiment.protocol.delta;
    a.reconstruction.alpha = analysis_alpha.value_or(experiment.protocol.alpha);
    return a;
}

json to_json(const RunConfig& config) {
    const ExperimentConfig& e = config.experiment;
    json j;
    j["protocol"] = {{"alpha", e.protocol.alpha},
                     {"omega", e.protocol.omega},
                     {"delta", e.protocol.delta},
                     {"eta", e.protocol.eta}};
    j["chi_grid"] = e.chi_grid;
    j["bins_per_period"] = e.bins_per_period;
    j["counts_per_setting"] = e.counts_per_setting;
    j["seed"] = e.seed;
    j["datasets"] = {{"modulated", e.datasets.modulated},
                     {"empty_x", e.datasets.empty_x},
                     {"empty_y", e.datasets.empty_y},
                     {"path1_only", e.datasets.path1_only},
                     {"path2_only", e.datasets.path2_only}};
    j["noiseless"] = e.noiseless;
    j["background_per_bin"] = e.background_per_bin;
    j["detector_bin_s"] = e.detector_bin_s;
    const AnalysisOptions& a = config.analysis;
    j["analysis"] = {{"alpha", config.analysis_alpha ? json(*config.analysis_alpha) : json(nullptr)},
                     {"alpha_sys_rel", a.reconstruction.alpha_sys_rel},
                     {"p_min", a.reconstruction.p_min},
                     {"reference_chi", a.reconstruction.reference_chi},
                     {"eta_min", a.eta_min},
                     {"propagate_eta", a.propagate_eta},
                     {"rms_bound", config.rms_bound}};
    return j;
}

RunConfig run_config_from_json(const json& j) {
    RunConfig cfg;
    ExperimentConfig& e = cfg.experiment;
    check_keys(j, "",
               {"protocol", "chi_grid", "bins_per_period", "counts_per_setting", "seed", "datasets", "noiseless",
                "background_per_bin", "detector_bin_s", "analysis"});
    if (j.contains("protocol")) {
        const json& p = j.at("protocol");
        check_keys(p, "protocol", {"alpha", "omega", "delta", "eta"});
        read_field(p, "alpha", "protocol", e.protocol.alpha);
        read_field(p, "omega", "protocol", e.protocol.omega);
        read_field(p, "delta", "protocol", e.protocol.delta);
        read_field(p, "eta", "protocol", e.protocol.eta);
    }
    if (j.contains("chi_grid")) {
        const json& g = j.at("chi_grid");
        if (!g.is_array()) throw ConfigError("chi_grid", "expected an array of phases");
        e.chi_grid.clear();
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (!g[i].is_number()) throw ConfigError("chi_grid[" + std::to_string(i) + "]", "expected a number");
            e.chi_grid.push_back(g[i].get<double>());
        }
    }
    read_field(j, "bins_per_period", "", e.bins_per_period);
    read_field(j, "counts_per_setting", "", e.counts_per_setting);
    read_field(j, "seed", "", e.seed);
    read_field(j, "noiseless", "", e.noiseless);
    read_field(j, "background_per_bin", "", e.background_per_bin);
    read_field(j, "detector_bin_s", "", e.detector_bin_s);
    if (j.contains("datasets")) {
        const json& d = j.at("datasets");
        check_keys(d, "datasets", {"modulated", "empty_x", "empty_y", "path1_only", "path2_only"});
        read_field(d, "modulated", "datasets", e.datasets.modulated);
        read_field(d, "empty_x", "datasets", e.datasets.empty_x);
        read_field(d, "empty_y", "datasets", e.datasets.empty_y);
        read_field(d, "path1_only", "datasets", e.datasets.path1_only);
        read_field(d, "path2_only", "datasets", e.datasets.path2_only);
    }
    if (j.contains("analysis")) {
        const json& a = j.at("analysis");
        check_keys(a, "analysis",
                   {"alpha", "alpha_sys_rel", "p_min", "reference_chi", "eta_min", "propagate_eta", "rms_bound"});
        if (a.contains("alpha") && !a.at("alpha").is_null()) {
            double alpha = 0.0;
            read_field(a, "alpha", "analysis", alpha);
            if (!(alpha > 0.0)) throw ConfigError("analysis.alpha", "must be > 0");
            cfg.analysis_alpha = alpha;
        }
        read_field(a, "alpha_sys_rel", "analysis", cfg.analysis.reconstruction.alpha_sys_rel);
        read_field(a, "p_min", "analysis", cfg.analysis.reconstruction.p_min);
        read_field(a, "reference_chi", "analysis", cfg.analysis.reconstruction.reference_chi);
        read_field(a, "eta_min", "analysis", cfg.analysis.eta_min);
        read_field(a, "propagate_eta", "analysis", cfg.analysis.propagate_eta);
        read_field(a, "rms_bound", "analysis", cfg.rms_bound);
        if (!(cfg.analysis.reconstruction.alpha_sys_rel >= 0.0))
            throw ConfigError("analysis.alpha_sys_rel", "must be >= 0");
        if (!(cfg.analysis.reconstruction.p_min >= 0.0)) throw ConfigError("analysis.p_min", "must be >= 0");
        if (!(cfg.rms_bound > 0.0)) throw ConfigError("analysis.rms_bound", "must be > 0");
    }
    e.validate();
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& err) {
        throw ConfigError("<syntax>", path.string() + ": " + err.what());
    }
    if (j.is_object() && j.contains("config") && j.contains("tool_version")) return run_config_from_json(j.at("config"));
    return run_config_from_json(j);
}

void write_datasets_csv(std::ostream& os, std::span<const BinnedCounts> data) {
    os << kDatasetHeader << '\n';
    for (const BinnedCounts& d : data) {
        for (std::size_t b = 0; b < d.counts.size(); ++b) {
            os << format_double(d.chi) << ',' << to_string(d.channel) << ',' << format_double(d.bin_centers[b]) << ','
               << format_double(d.counts[b]) << ',' << format_double(d.exposure) << '\n';
        }
    }
}

std::vector<BinnedCounts> read_datasets_csv(std::istream& is, const std::string& source) {
    std::string line;
    if (!std::getline(is, line)) throw IoError(source + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kDatasetHeader) throw IoError(source + ": unexpected header '" + line + "'");

    std::vector<BinnedCounts> out;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const std::string where = source + ":" + std::to_string(lineno);
        const auto f = split_csv_line(line);
        if (f.size() != 5) throw IoError(where + ": expected 5 fields");
        const double chi = parse_double(f[0], where);
        const auto channel = channel_from_string(f[1]);
        if (!channel) throw IoError(where + ": unknown channel '" + f[1] + "'");
        const double t = parse_double(f[2], where);
        const double counts = parse_double(f[3], where);
        const double exposure = parse_double(f[4], where);
        if (counts < 0.0) throw IoError(where + ": negative counts");

        if (out.empty() || out.back().chi != chi || out.back().channel != *channel) {
            BinnedCounts bc;
            bc.chi = chi;
            bc.channel = *channel;
            bc.exposure = exposure;
            out.push_back(std::move(bc));
        }
        BinnedCounts& cur = out.back();
        if (!cur.bin_centers.empty() && !(t > cur.bin_centers.back())) {
            throw IoError(where + ": bin centers must be strictly increasing");
        }
        cur.bin_centers.push_back(t);
        cur.counts.push_back(counts);
    }
    return out;
}

std::vector<BinnedCounts> read_dataset_dir(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw IoError(dir.string() + ": not a directory");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<BinnedCounts> all;
    for (const auto& f : files) {
        std::ifstream in(f);
        if (!in) throw IoError(f.string() + ": cannot open");
        std::string header;
        std::getline(in, header);
        if (!header.empty() && header.back() == '\r') header.pop_back();
        if (header != kDatasetHeader) continue;
        in.seekg(0);
        auto part = read_datasets_csv(in, f.string());
        std::move(part.begin(), part.end(), std::back_inserter(all));
    }
    return all;
}

void write_weak_values_csv(std::ostream& os, std::span<const WeakValueEstimate> wv) {
    os << kWeakValuesHeader << '\n';
    for (const auto& w : wv) {
        os << format_double(w.chi) << ',' << format_double(w.re) << ',' << format_double(w.im) << ','
           << format_double(w.sigma_re) << ',' << format_double(w.sigma_im) << ',' << (w.excluded ? 1 : 0) << '\n';
    }
}

std::vector<WeakValueEstimate> read_weak_values_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != kWeakValuesHeader) throw IoError("weak_values.csv: unexpected header");
    std::vector<WeakValueEstimate> out;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::string where = "weak_values.csv:" + std::to_string(lineno);
        const auto f = split_csv_line(line);
        if (f.size() != 6) throw IoError(where + ": expected 6 fields");
        WeakValueEstimate w;
        w.chi = parse_double(f[0], where);
        w.re = parse_double(f[1], where);
        w.im = parse_double(f[2], where);
        w.sigma_re = parse_double(f[3], where);
        w.sigma_im = parse_double(f[4], where);
        w.excluded = f[5] == "1";
        w.stat_re = w.sigma_re;
        w.stat_im = w.sigma_im;
        out.push_back(w);
    }
    return out;
}

void write_postselection_csv(std::ostream& os, std::span<const PostselectionPoint> px,
                             std::span<const PostselectionPoint> py) {
    os << "chi_rad,p_x,sigma_p_x,p_y,sigma_p_y\n";
    for (std::size_t i = 0; i < px.size() && i < py.size(); ++i) {
        os << format_double(px[i].chi) << ',' << format_double(px[i].p) << ',' << format_double(px[i].sigma) << ','
           << format_double(py[i].p) << ',' << format_double(py[i].sigma) << '\n';
    }
}

void read_postselection_csv(std::istream& is, std::vector<PostselectionPoint>& px,
                            std::vector<PostselectionPoint>& py) {
    std::string line;
    if (!std::getline(is, line) || line != "chi_rad,p_x,sigma_p_x,p_y,sigma_p_y") {
        throw IoError("postselection.csv: unexpected header");
    }
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::string where = "postselection.csv:" + std::to_string(lineno);
        const auto f = split_csv_line(line);
        if (f.size() != 5) throw IoError(where + ": expected 5 fields");
        const double chi = parse_double(f[0], where);
        px.push_back({chi, parse_double(f[1], where), parse_double(f[2], where)});
        py.push_back({chi, parse_double(f[3], where), parse_double(f[4], where)});
    }
}

void write_fits_csv(std::ostream& os, std::span<const ChiFit> raw, std::span<const ChiFit> corrected) {
    os << "chi_rad,series,offset,amplitude,phase,sigma_offset,sigma_amplitude,sigma_phase,reduced_chi2,valid\n";
    auto emit = [&](std::span<const ChiFit> fits, const char* series) {
        for (const auto& f : fits) {
            const bool valid = f.fit.points > 0;
            os << format_double(f.chi) << ',' << series << ',' << format_double(f.fit.offset) << ','
               << format_double(f.fit.amplitude) << ',' << format_double(f.fit.phase) << ','
               << format_double(f.fit.sigma_offset()) << ',' << format_double(f.fit.sigma_amplitude()) << ','
               << format_double(f.fit.sigma_phase()) << ',' << format_double(f.fit.reduced_chi2) << ','
               << (valid ? 1 : 0) << '\n';
        }
    };
    emit(raw, "raw");
    emit(corrected, "corrected");
}

void write_corrected_csv(std::ostream& os, std::span<const TimeSeries> series) {
    os << "chi_rad,bin_center_s,intensity,sigma,exposure\n";
    for (const auto& s : series) {
        for (std::size_t b = 0; b < s.t.size(); ++b) {
            os << format_double(s.chi) << ',' << format_double(s.t[b]) << ',' << format_double(s.values[b]) << ','
               << format_double(s.sigmas[b]) << ',' << format_double(s.exposure) << '\n';
        }
    }
}

void write_commutator_csv(std::ostream& os, const CommutatorReport& report) {
    os << kCommutatorHeader << '\n';
    const double nan = std::nan("");
    for (const auto& r : report.rows) {
        os << format_double(r.chi) << ',' << format_double(r.excluded ? nan : r.lhs) << ','
           << format_double(r.excluded ? nan : r.sigma_lhs) << ',' << format_double(r.rhs) << ','
           << format_double(r.sigma_rhs) << ',' << format_double(r.theory) << '\n';
    }
}

void write_theory_curve_csv(std::ostream& os, std::size_t points) {
    os << "chi_rad,theory\n";
    for (std::size_t i = 0; i < points; ++i) {
        const double chi = points > 1 ? kTwoPi * static_cast<double>(i) / static_cast<double>(points - 1) : 0.0;
        os << format_double(chi) << ',' << format_double(std::sin(chi)) << '\n';
    }
}

json to_json(const VisibilityEstimate& v) {
    return {{"eta", v.eta}, {"sigma_eta", v.sigma_eta}, {"phase_offset", v.phase_offset},
            {"scale", v.scale}, {"clamped", v.clamped}};
}

VisibilityEstimate visibility_from_json(const json& j) {
    VisibilityEstimate v;
    v.eta = j.at("eta").get<double>();
    v.sigma_eta = j.at("sigma_eta").get<double>();
    v.phase_offset = j.value("phase_offset", 0.0);
    v.scale = j.value("scale", 0.0);
    v.clamped = j.value("clamped", false);
    return v;
}

json to_json(const CommutatorReport& report) {
    json rows = json::array();
    for (const auto& r : report.rows) {
        json row;
        row["chi"] = r.chi;
        row["lhs"] = r.excluded ? json(nullptr) : json(r.lhs);
        row["sigma_lhs"] = r.excluded ? json(nullptr) : json(r.sigma_lhs);
        row["rhs"] = r.rhs;
        row["sigma_rhs"] = r.sigma_rhs;
        row["theory"] = r.theory;
        row["excluded"] = r.excluded;
        rows.push_back(row);
    }
    return {{"rows", rows},
            {"summary",
             {{"rms_residual", report.summary.rms_residual},
              {"max_abs_residual", report.summary.max_abs_residual},
              {"n_excluded", report.summary.n_excluded}}}};
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError(tmp.string() + ": cannot open for writing");
        out << content;
        out.flush();
        if (!out) throw IoError(tmp.string() + ": write failed");
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw IoError(path.string() + ": rename failed: " + ec.message());
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path.string() + ": cannot open");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace wvb
