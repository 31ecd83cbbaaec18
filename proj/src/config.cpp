#include "coastflow/config.hpp"

#include "coastflow/errors.hpp"
#include "coastflow/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <set>
#include <sstream>

namespace coastflow {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

class KvReader {
public:
    KvReader(const std::string& text, std::string origin) : origin_(std::move(origin)) {
        std::istringstream is(text);
        std::string line, section;
        int lineno = 0;
        while (std::getline(is, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            line = trim(line);
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']')
                    throw ConfigError(origin_ + ":" + std::to_string(lineno) + ": malformed section");
                section = trim(line.substr(1, line.size() - 2));
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError(origin_ + ":" + std::to_string(lineno) +
                                  ": expected key = value");
            const std::string key = section + "." + trim(line.substr(0, eq));
            if (kv_.count(key))
                throw ConfigError(origin_ + ": duplicate key " + key);
            kv_[key] = trim(line.substr(eq + 1));
        }
    }

    std::string require(const std::string& key) {
        auto it = kv_.find(key);
        if (it == kv_.end()) throw ConfigError(origin_ + ": missing key " + key);
        used_.insert(key);
        return it->second;
    }

    bool has(const std::string& key) const { return kv_.count(key) > 0; }

    double req_double(const std::string& key) { return parse_double(key, require(key)); }

    double opt_double(const std::string& key, double fallback) {
        if (!has(key)) return fallback;
        return req_double(key);
    }

    Index req_index(const std::string& key) {
        const double v = req_double(key);
        if (v != std::floor(v))
            throw ConfigError(origin_ + ": " + key + " must be an integer");
        return static_cast<Index>(v);
    }

    std::uint64_t req_u64(const std::string& key) {
        const std::string s = require(key);
        char* end = nullptr;
        const auto v = std::strtoull(s.c_str(), &end, 10);
        if (end == s.c_str() || *end != '\0')
            throw ConfigError(origin_ + ": " + key + " must be an unsigned integer");
        return v;
    }

    std::vector<double> req_list(const std::string& key) {
        const std::string s = require(key);
        std::vector<double> out;
        if (trim(s).empty()) return out;
        std::istringstream is(s);
        std::string item;
        while (std::getline(is, item, ',')) out.push_back(parse_double(key, trim(item)));
        return out;
    }

    std::vector<double> opt_list(const std::string& key) {
        if (!has(key)) return {};
        return req_list(key);
    }

    std::string req_string(const std::string& key) { return require(key); }

    std::string opt_string(const std::string& key, const std::string& fallback) {
        if (!has(key)) return fallback;
        return require(key);
    }

    void finish() const {
        for (const auto& [key, value] : kv_)
            if (!used_.count(key)) throw ConfigError(origin_ + ": unknown key " + key);
    }

private:
    double parse_double(const std::string& key, const std::string& s) const {
        char* end = nullptr;
        const double v = std::strtod(s.c_str(), &end);
        if (end == s.c_str() || *end != '\0')
            throw ConfigError(origin_ + ": " + key + " is not a number ('" + s + "')");
        return v;
    }

    std::string origin_;
    std::map<std::string, std::string> kv_;
    std::set<std::string> used_;
};

} // namespace

FullConfig parse_config_text(const std::string& text, const std::string& origin) {
    KvReader r(text, origin);
    FullConfig c;

    c.grid.nx = r.req_index("grid.nx");
    c.grid.nz = r.req_index("grid.nz");
    c.grid.lx = r.req_double("grid.lx");
    c.grid.lz = r.req_double("grid.lz");
    c.grid.upland_elevation = r.req_double("grid.upland_elevation");
    c.grid.stream_elevation = r.req_double("grid.stream_elevation");

    c.fluid.mu = r.req_double("fluid.viscosity");
    c.fluid.rho_fresh = r.req_double("fluid.rho_fresh");
    c.fluid.rho_sea = r.req_double("fluid.rho_sea");
    c.fluid.g = r.req_double("fluid.gravity");
    c.fluid.eta = r.req_double("fluid.molar_density");
    c.fluid.c_sea = r.req_double("fluid.sea_salinity");

    c.retention.s_r = r.req_double("retention.residual_saturation");
    c.retention.alpha = r.req_double("retention.alpha");
    c.retention.m = r.req_double("retention.m");

    c.transport.diff = r.req_double("transport.diffusion");

    c.forcing.upland_head = r.req_double("forcing.upland_head");
    c.forcing.mean_stage = r.req_double("forcing.mean_stage");
    const auto amps = r.opt_list("forcing.tide_amplitudes");
    const auto periods = r.opt_list("forcing.tide_periods");
    const auto phases = r.opt_list("forcing.tide_phases");
    if (amps.size() != periods.size() || amps.size() != phases.size())
        throw ConfigError(origin + ": forcing.tide_* lists must have equal lengths");
    for (size_t i = 0; i < amps.size(); ++i)
        c.forcing.tide.push_back({amps[i], periods[i], phases[i]});
    c.forcing.salinity_level = r.req_double("forcing.salinity_level");
    c.forcing.sample_step = r.opt_double("forcing.sample_step", 0.0);

    c.run.spin_up_duration = r.req_double("run.spin_up_duration");
    c.run.prediction_duration = r.req_double("run.prediction_duration");
    c.run.output_interval = r.req_double("run.output_interval");
    c.run.master_seed = r.req_u64("run.master_seed");

    c.run.solver.max_dt = r.req_double("solver.max_dt");
    c.run.solver.init_dt = r.req_double("solver.init_dt");
    c.run.solver.min_dt = r.req_double("solver.min_dt");
    c.run.solver.dt_growth = r.req_double("solver.dt_growth");
    c.run.solver.picard_tol = r.req_double("solver.picard_tol");
    c.run.solver.max_picard = static_cast<int>(r.req_index("solver.max_picard_iters"));
    c.run.solver.linear_tol = r.req_double("solver.linear_tol");

    c.cov.lx_corr = r.req_double("geostat.corr_len_x");
    c.cov.lz_corr = r.req_double("geostat.corr_len_z");
    c.cov.mean_logk = r.req_double("geostat.mean_logk");
    c.cov.std_logk = r.req_double("geostat.std_logk");
    c.cov.mean_phi = r.req_double("geostat.mean_phi");
    c.cov.std_phi = r.req_double("geostat.std_phi");
    c.energy_fraction = r.req_double("geostat.energy_fraction");

    c.n_realizations = r.req_index("ensemble.n_realizations");
    c.n_train = r.req_index("ensemble.n_train");
    c.truth_member = r.req_index("ensemble.truth_member");

    c.wells.x = r.req_list("wells.x");
    c.wells.z = r.req_list("wells.z");
    c.wells.obs_months = r.req_index("wells.obs_months");
    c.wells.sigma_head = r.req_double("wells.sigma_head");
    c.wells.sigma_salinity = r.req_double("wells.sigma_salinity");

    c.ufno.width = r.req_index("ufno.width");
    c.ufno.n_fourier = r.req_index("ufno.n_fourier");
    c.ufno.n_ufourier = r.req_index("ufno.n_ufourier");
    c.ufno.modes_z = r.req_index("ufno.modes_z");
    c.ufno.modes_x = r.req_index("ufno.modes_x");
    c.ufno.modes_t = r.req_index("ufno.modes_t");
    c.ufno.pad_z = r.req_index("ufno.pad_z");
    c.ufno.pad_x = r.req_index("ufno.pad_x");
    c.ufno.pad_t = r.req_index("ufno.pad_t");
    c.ufno.proj_hidden = r.req_index("ufno.proj_hidden");

    c.train.epochs = r.req_index("train.epochs");
    c.train.batch_size = r.req_index("train.batch_size");
    c.train.learning_rate = r.req_double("train.learning_rate");
    c.train.beta1 = r.req_double("train.beta1");
    c.train.beta2 = r.req_double("train.beta2");
    c.train.epsilon = r.req_double("train.epsilon");
    c.train.lambda_active = r.req_double("train.lambda_active");
    c.train.val_split = r.req_double("train.val_split");

    c.esmda.n_assim = r.req_index("esmda.n_assim");
    const auto alphas = r.req_list("esmda.alphas");
    c.esmda.alphas.assign(alphas.begin(), alphas.end());
    c.esmda.n_real = r.req_index("esmda.n_real");
    c.esmda.forward_model = r.opt_string("esmda.forward_model", "surrogate");

    c.n_clusters = r.req_index("analysis.n_clusters");
    c.out_dir = r.opt_string("output.out_dir", "out");

    r.finish();
    c.validate();
    return c;
}

FullConfig parse_config(const std::string& path) {
    return parse_config_text(io::read_text_file(path), path);
}

void FullConfig::validate() const {
    fluid.validate();
    retention.validate();
    transport.validate();
    run.validate();
    cov.validate();
    train.validate();
    esmda.validate();

    const GridSpec g = make_grid(); // validates grid geometry
    if (!(energy_fraction > 0.0 && energy_fraction <= 1.0))
        throw ConfigError("geostat.energy_fraction must be in (0, 1]");
    if (n_realizations < 2) throw ConfigError("ensemble.n_realizations must be >= 2");
    if (n_train < 2 || n_train >= n_realizations)
        throw ConfigError("ensemble.n_train must be in [2, n_realizations)");
    if (truth_member < 0 || truth_member >= n_realizations)
        throw ConfigError("ensemble.truth_member must index a realization");

    for (const auto& tc : forcing.tide)
        if (!(tc.period > 0.0)) throw ConfigError("forcing.tide_periods must be > 0");
    if (forcing.salinity_level < 0.0)
        throw ConfigError("forcing.salinity_level must be >= 0");
    if (forcing.salinity_level > fluid.c_sea)
        throw ConfigError("forcing.salinity_level must not exceed fluid.sea_salinity");
    if (forcing.sample_step < 0.0) throw ConfigError("forcing.sample_step must be >= 0");

    if (wells.x.empty()) throw ConfigError("wells.x must list at least one location");
    if (wells.x.size() != wells.z.size())
        throw ConfigError("wells.x and wells.z must have equal lengths");
    const sim::ActiveTopology topo = sim::ActiveTopology::build(g);
    sim::locate_wells(well_set(), g, topo); // throws for inactive wells
    if (wells.obs_months < 1 || wells.obs_months > run.n_outputs() - 1)
        throw ConfigError("wells.obs_months must be in [1, n_outputs - 1]");
    if (!(wells.sigma_head > 0.0)) throw ConfigError("wells.sigma_head must be > 0");
    if (!(wells.sigma_salinity > 0.0)) throw ConfigError("wells.sigma_salinity must be > 0");

    ufno.validate_for(grid.nz, grid.nx, run.n_outputs());
    if (n_clusters < 1) throw ConfigError("analysis.n_clusters must be >= 1");
    if (n_clusters > esmda.n_real)
        throw ConfigError("analysis.n_clusters must not exceed esmda.n_real");
}

BoundaryForcing FullConfig::make_forcing() const {
    double step = forcing.sample_step;
    if (step <= 0.0) {
        step = 1.0;
        for (const auto& tc : forcing.tide) step = std::min(step, tc.period / 32.0);
    }
    const double t0 = -run.spin_up_duration - 1.0;
    const double t1 = run.prediction_duration + 1.0;
    const Index n = static_cast<Index>(std::ceil((t1 - t0) / step)) + 1;
    Vector times(n);
    for (Index i = 0; i < n; ++i) times(i) = t0 + static_cast<double>(i) * step;
    return synth_tidal_forcing(forcing.mean_stage, forcing.tide, forcing.salinity_level,
                               forcing.upland_head, times);
}

sim::WellSet FullConfig::well_set() const {
    sim::WellSet w;
    w.x = wells.x;
    w.z = wells.z;
    return w;
}

std::vector<Index> FullConfig::obs_time_indices() const {
    std::vector<Index> idx(static_cast<size_t>(wells.obs_months));
    for (Index i = 0; i < wells.obs_months; ++i) idx[static_cast<size_t>(i)] = i + 1;
    return idx;
}

std::string serialize_config(const FullConfig& c) {
    std::ostringstream os;
    const auto f = [](double v) { return io::CsvWriter::format(v); };
    const auto list = [&](const std::vector<double>& v) {
        std::string s;
        for (size_t i = 0; i < v.size(); ++i) {
            if (i) s += ", ";
            s += f(v[i]);
        }
        return s;
    };
    std::vector<double> amps, periods, phases;
    for (const auto& tc : c.forcing.tide) {
        amps.push_back(tc.amplitude);
        periods.push_back(tc.period);
        phases.push_back(tc.phase);
    }
    os << "[grid]\n"
       << "nx = " << c.grid.nx << "\nnz = " << c.grid.nz << "\nlx = " << f(c.grid.lx)
       << "\nlz = " << f(c.grid.lz) << "\nupland_elevation = " << f(c.grid.upland_elevation)
       << "\nstream_elevation = " << f(c.grid.stream_elevation) << "\n\n";
    os << "[fluid]\n"
       << "viscosity = " << f(c.fluid.mu) << "\nrho_fresh = " << f(c.fluid.rho_fresh)
       << "\nrho_sea = " << f(c.fluid.rho_sea) << "\ngravity = " << f(c.fluid.g)
       << "\nmolar_density = " << f(c.fluid.eta) << "\nsea_salinity = " << f(c.fluid.c_sea)
       << "\n\n";
    os << "[retention]\n"
       << "residual_saturation = " << f(c.retention.s_r) << "\nalpha = " << f(c.retention.alpha)
       << "\nm = " << f(c.retention.m) << "\n\n";
    os << "[transport]\ndiffusion = " << f(c.transport.diff) << "\n\n";
    os << "[forcing]\n"
       << "upland_head = " << f(c.forcing.upland_head)
       << "\nmean_stage = " << f(c.forcing.mean_stage) << "\ntide_amplitudes = " << list(amps)
       << "\ntide_periods = " << list(periods) << "\ntide_phases = " << list(phases)
       << "\nsalinity_level = " << f(c.forcing.salinity_level)
       << "\nsample_step = " << f(c.forcing.sample_step) << "\n\n";
    os << "[run]\n"
       << "spin_up_duration = " << f(c.run.spin_up_duration)
       << "\nprediction_duration = " << f(c.run.prediction_duration)
       << "\noutput_interval = " << f(c.run.output_interval)
       << "\nmaster_seed = " << c.run.master_seed << "\n\n";
    os << "[solver]\n"
       << "max_dt = " << f(c.run.solver.max_dt) << "\ninit_dt = " << f(c.run.solver.init_dt)
       << "\nmin_dt = " << f(c.run.solver.min_dt) << "\ndt_growth = " << f(c.run.solver.dt_growth)
       << "\npicard_tol = " << f(c.run.solver.picard_tol)
       << "\nmax_picard_iters = " << c.run.solver.max_picard
       << "\nlinear_tol = " << f(c.run.solver.linear_tol) << "\n\n";
    os << "[geostat]\n"
       << "corr_len_x = " << f(c.cov.lx_corr) << "\ncorr_len_z = " << f(c.cov.lz_corr)
       << "\nmean_logk = " << f(c.cov.mean_logk) << "\nstd_logk = " << f(c.cov.std_logk)
       << "\nmean_phi = " << f(c.cov.mean_phi) << "\nstd_phi = " << f(c.cov.std_phi)
       << "\nenergy_fraction = " << f(c.energy_fraction) << "\n\n";
    os << "[ensemble]\n"
       << "n_realizations = " << c.n_realizations << "\nn_train = " << c.n_train
       << "\ntruth_member = " << c.truth_member << "\n\n";
    os << "[wells]\n"
       << "x = " << list(c.wells.x) << "\nz = " << list(c.wells.z)
       << "\nobs_months = " << c.wells.obs_months << "\nsigma_head = " << f(c.wells.sigma_head)
       << "\nsigma_salinity = " << f(c.wells.sigma_salinity) << "\n\n";
    os << "[ufno]\n"
       << "width = " << c.ufno.width << "\nn_fourier = " << c.ufno.n_fourier
       << "\nn_ufourier = " << c.ufno.n_ufourier << "\nmodes_z = " << c.ufno.modes_z
       << "\nmodes_x = " << c.ufno.modes_x << "\nmodes_t = " << c.ufno.modes_t
       << "\npad_z = " << c.ufno.pad_z << "\npad_x = " << c.ufno.pad_x
       << "\npad_t = " << c.ufno.pad_t << "\nproj_hidden = " << c.ufno.proj_hidden << "\n\n";
    os << "[train]\n"
       << "epochs = " << c.train.epochs << "\nbatch_size = " << c.train.batch_size
       << "\nlearning_rate = " << f(c.train.learning_rate) << "\nbeta1 = " << f(c.train.beta1)
       << "\nbeta2 = " << f(c.train.beta2) << "\nepsilon = " << f(c.train.epsilon)
       << "\nlambda_active = " << f(c.train.lambda_active)
       << "\nval_split = " << f(c.train.val_split) << "\n\n";
    os << "[esmda]\n"
       << "n_assim = " << c.esmda.n_assim << "\nalphas = " << list(std::vector<double>(
              c.esmda.alphas.begin(), c.esmda.alphas.end()))
       << "\nn_real = " << c.esmda.n_real << "\nforward_model = " << c.esmda.forward_model
       << "\n\n";
    os << "[analysis]\nn_clusters = " << c.n_clusters << "\n\n";
    os << "[output]\nout_dir = " << c.out_dir << "\n";
    return os.str();
}

} // namespace coastflow
